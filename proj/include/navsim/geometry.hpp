#pragma once

#include <Eigen/Dense>

#include <vector>

namespace navsim {

using Vec2 = Eigen::Vector2d;

/// z component of the 2D cross product a x b.
inline double cross2(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

/// Strictly convex planar polygon, vertices counter-clockwise.
///
/// Construction accepts the boundary in either winding, merges duplicate and
/// collinear vertices, and rejects anything that is not strictly convex with
/// at least 3 surviving vertices. Immutable afterwards.
class ConvexPolygon {
 public:
  explicit ConvexPolygon(std::vector<Vec2> vertices);

  const std::vector<Vec2>& vertices() const { return vertices_; }
  std::size_t size() const { return vertices_.size(); }

  /// True iff q is inside or on the boundary (boundary counts as inside).
  bool contains(const Vec2& q) const;

  double area() const;
  Vec2 centroid() const;

  /// Largest vertex distance from the local origin; cheap reject radius for
  /// footprints whose origin is the vehicle reference point.
  double radius_about_origin() const { return radius_; }

  /// Axis-aligned rectangle [-length/2, length/2] x [-width/2, width/2].
  static ConvexPolygon rectangle(double length, double width);

 private:
  std::vector<Vec2> vertices_;
  double radius_ = 0.0;
};

/// Minkowski sum of two convex polygons by the rotating edge-merge method,
/// linear in the total edge count. The caller negates one operand when
/// forming a collision configuration obstacle.
ConvexPolygon minkowski_sum(const ConvexPolygon& a, const ConvexPolygon& b);

/// Pointwise negation -P.
ConvexPolygon negated(const ConvexPolygon& p);

/// Rigid transform of the polygon: rotate by heading, then translate.
ConvexPolygon transformed(const ConvexPolygon& p, const Vec2& translation, double heading);

/// True iff the two polygons overlap or touch (separating-axis test).
bool intersects(const ConvexPolygon& a, const ConvexPolygon& b);

/// Euclidean distance between two convex polygons, 0 when they overlap.
double polygon_distance(const ConvexPolygon& a, const ConvexPolygon& b);

/// Euclidean distance from q to the polygon, 0 when q is inside.
double distance_to_point(const ConvexPolygon& p, const Vec2& q);

enum class TurnDirection { left, right };

/// Circular arc or straight segment on the road plane.
struct ArcOrLine {
  enum class Kind { arc, line };

  Kind kind = Kind::line;
  Vec2 start = Vec2::Zero();
  Vec2 end = Vec2::Zero();
  // Arc only.
  Vec2 center = Vec2::Zero();
  double radius = 0.0;
  TurnDirection direction = TurnDirection::left;

  bool is_arc() const { return kind == Kind::arc; }

  /// Swept angle from start to end following `direction`, in [0, 2*pi). Arc only.
  double central_angle() const;

  /// Arclength from start to end.
  double length() const;

  /// Position after travelling arclength s from start (extrapolates past end).
  Vec2 point_along(double s) const;

  /// Unit tangent at the start point, following the travel direction.
  Vec2 start_tangent() const;
};

/// Triangle area below this is treated as collinear; the corresponding circle
/// radius exceeds any road curvature of interest.
inline constexpr double kCollinearAreaTol = 1e-6;

/// Circumscribed circle through three distinct points, traversed p1 -> p3 via
/// p2. Collapses to a line when the triangle area is below kCollinearAreaTol.
ArcOrLine circle_through(const Vec2& p1, const Vec2& p2, const Vec2& p3);

/// Open polyline with arclength parameterization. Used for lane centerlines.
class Polyline {
 public:
  Polyline() = default;
  explicit Polyline(std::vector<Vec2> points);

  const std::vector<Vec2>& points() const { return points_; }
  double length() const { return cum_.empty() ? 0.0 : cum_.back(); }
  bool empty() const { return points_.empty(); }

  /// Position at arclength s, clamped to [0, length].
  Vec2 point_at(double s) const;

  /// Heading (radians) of the segment containing arclength s.
  double heading_at(double s) const;

  /// Closest point on the polyline; ties broken toward larger arclength.
  struct Projection {
    Vec2 point = Vec2::Zero();
    double arclength = 0.0;
    double distance = 0.0;
  };
  Projection closest(const Vec2& p) const;

 private:
  std::vector<Vec2> points_;
  std::vector<double> cum_;
};

}  // namespace navsim
