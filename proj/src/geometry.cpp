#include "navsim/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace navsim {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double wrap_positive(double angle) {
  double a = std::fmod(angle, kTwoPi);
  if (a < 0.0) a += kTwoPi;
  return a;
}

// Drops consecutive duplicates and collinear interior vertices.
std::vector<Vec2> clean_boundary(std::vector<Vec2> v) {
  std::vector<Vec2> out;
  out.reserve(v.size());
  for (const Vec2& p : v) {
    if (!p.allFinite()) throw std::invalid_argument("polygon vertex not finite");
    if (out.empty() || (p - out.back()).norm() > 1e-12) out.push_back(p);
  }
  while (out.size() > 1 && (out.front() - out.back()).norm() <= 1e-12) out.pop_back();

  // Remove vertices collinear with their neighbors.  Repeats until stable so
  // chains of collinear points collapse fully.
  bool changed = true;
  while (changed && out.size() >= 3) {
    changed = false;
    std::vector<Vec2> next;
    next.reserve(out.size());
    const std::size_t n = out.size();
    for (std::size_t i = 0; i < n; ++i) {
      const Vec2& prev = out[(i + n - 1) % n];
      const Vec2& cur = out[i];
      const Vec2& nxt = out[(i + 1) % n];
      const Vec2 e1 = cur - prev;
      const Vec2 e2 = nxt - cur;
      const double c = cross2(e1, e2);
      if (std::abs(c) <= 1e-9 * e1.norm() * e2.norm() && e1.dot(e2) > 0.0) {
        changed = true;
        continue;
      }
      next.push_back(cur);
    }
    out = std::move(next);
  }
  return out;
}

}  // namespace

ConvexPolygon::ConvexPolygon(std::vector<Vec2> vertices) {
  vertices_ = clean_boundary(std::move(vertices));
  if (vertices_.size() < 3) throw std::invalid_argument("polygon degenerate: fewer than 3 vertices");

  // Normalize to counter-clockwise.
  double twice_area = 0.0;
  for (std::size_t i = 0; i < vertices_.size(); ++i) {
    const Vec2& a = vertices_[i];
    const Vec2& b = vertices_[(i + 1) % vertices_.size()];
    twice_area += cross2(a, b);
  }
  if (twice_area < 0.0) std::reverse(vertices_.begin(), vertices_.end());

  for (std::size_t i = 0; i < vertices_.size(); ++i) {
    const std::size_t n = vertices_.size();
    const Vec2 e1 = vertices_[(i + 1) % n] - vertices_[i];
    const Vec2 e2 = vertices_[(i + 2) % n] - vertices_[(i + 1) % n];
    if (cross2(e1, e2) <= 0.0) throw std::invalid_argument("polygon not strictly convex");
  }
  for (const Vec2& v : vertices_) radius_ = std::max(radius_, v.norm());
}

bool ConvexPolygon::contains(const Vec2& q) const {
  const std::size_t n = vertices_.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& a = vertices_[i];
    const Vec2 e = vertices_[(i + 1) % n] - a;
    const double c = cross2(e, q - a);
    if (c < -1e-12 * (1.0 + e.norm() * (q - a).norm())) return false;
  }
  return true;
}

double ConvexPolygon::area() const {
  double twice = 0.0;
  for (std::size_t i = 0; i < vertices_.size(); ++i)
    twice += cross2(vertices_[i], vertices_[(i + 1) % vertices_.size()]);
  return 0.5 * twice;
}

Vec2 ConvexPolygon::centroid() const {
  Vec2 c = Vec2::Zero();
  double twice_area = 0.0;
  for (std::size_t i = 0; i < vertices_.size(); ++i) {
    const Vec2& a = vertices_[i];
    const Vec2& b = vertices_[(i + 1) % vertices_.size()];
    const double w = cross2(a, b);
    twice_area += w;
    c += w * (a + b);
  }
  return c / (3.0 * twice_area);
}

ConvexPolygon ConvexPolygon::rectangle(double length, double width) {
  const double hl = 0.5 * length;
  const double hw = 0.5 * width;
  return ConvexPolygon({{-hl, -hw}, {hl, -hw}, {hl, hw}, {-hl, hw}});
}

ConvexPolygon minkowski_sum(const ConvexPolygon& a, const ConvexPolygon& b) {
  const auto bottom_index = [](const std::vector<Vec2>& v) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < v.size(); ++i) {
      if (v[i].y() < v[best].y() - 1e-15 ||
          (std::abs(v[i].y() - v[best].y()) <= 1e-15 && v[i].x() < v[best].x()))
        best = i;
    }
    return best;
  };

  const std::vector<Vec2>& va = a.vertices();
  const std::vector<Vec2>& vb = b.vertices();
  const std::size_t n = va.size();
  const std::size_t m = vb.size();
  const std::size_t ia0 = bottom_index(va);
  const std::size_t ib0 = bottom_index(vb);

  std::vector<Vec2> out;
  out.reserve(n + m);
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < n || j < m) {
    out.push_back(va[(ia0 + i) % n] + vb[(ib0 + j) % m]);
    if (i >= n) {
      ++j;
    } else if (j >= m) {
      ++i;
    } else {
      const Vec2 ea = va[(ia0 + i + 1) % n] - va[(ia0 + i) % n];
      const Vec2 eb = vb[(ib0 + j + 1) % m] - vb[(ib0 + j) % m];
      const double c = cross2(ea, eb);
      if (c > 0.0) {
        ++i;
      } else if (c < 0.0) {
        ++j;
      } else {
        ++i;
        ++j;
      }
    }
  }
  return ConvexPolygon(std::move(out));
}

ConvexPolygon negated(const ConvexPolygon& p) {
  std::vector<Vec2> v;
  v.reserve(p.size());
  for (const Vec2& q : p.vertices()) v.push_back(-q);
  return ConvexPolygon(std::move(v));
}

ConvexPolygon transformed(const ConvexPolygon& p, const Vec2& translation, double heading) {
  const Eigen::Rotation2Dd rot(heading);
  std::vector<Vec2> v;
  v.reserve(p.size());
  for (const Vec2& q : p.vertices()) v.push_back(rot * q + translation);
  return ConvexPolygon(std::move(v));
}

namespace {

// Projects both polygons onto axis and reports the separation gap.
double axis_gap(const ConvexPolygon& a, const ConvexPolygon& b, const Vec2& axis) {
  double amin = std::numeric_limits<double>::infinity();
  double amax = -amin;
  for (const Vec2& v : a.vertices()) {
    const double d = axis.dot(v);
    amin = std::min(amin, d);
    amax = std::max(amax, d);
  }
  double bmin = std::numeric_limits<double>::infinity();
  double bmax = -bmin;
  for (const Vec2& v : b.vertices()) {
    const double d = axis.dot(v);
    bmin = std::min(bmin, d);
    bmax = std::max(bmax, d);
  }
  return std::max(bmin - amax, amin - bmax);
}

double point_segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 ab = b - a;
  const double len2 = ab.squaredNorm();
  const double t = len2 > 0.0 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
  return (p - (a + t * ab)).norm();
}

}  // namespace

bool intersects(const ConvexPolygon& a, const ConvexPolygon& b) {
  const auto separated_by_edges = [&](const ConvexPolygon& poly) {
    const std::size_t n = poly.size();
    for (std::size_t i = 0; i < n; ++i) {
      const Vec2 e = poly.vertices()[(i + 1) % n] - poly.vertices()[i];
      const Vec2 normal(-e.y(), e.x());
      if (axis_gap(a, b, normal.normalized()) > 1e-12) return true;
    }
    return false;
  };
  return !separated_by_edges(a) && !separated_by_edges(b);
}

double polygon_distance(const ConvexPolygon& a, const ConvexPolygon& b) {
  if (intersects(a, b)) return 0.0;
  double best = std::numeric_limits<double>::infinity();
  const auto scan = [&best](const ConvexPolygon& p, const ConvexPolygon& q) {
    const std::size_t n = q.size();
    for (const Vec2& v : p.vertices())
      for (std::size_t i = 0; i < n; ++i)
        best = std::min(best, point_segment_distance(v, q.vertices()[i], q.vertices()[(i + 1) % n]));
  };
  scan(a, b);
  scan(b, a);
  return best;
}

double distance_to_point(const ConvexPolygon& p, const Vec2& q) {
  if (p.contains(q)) return 0.0;
  double best = std::numeric_limits<double>::infinity();
  const std::size_t n = p.size();
  for (std::size_t i = 0; i < n; ++i)
    best = std::min(best, point_segment_distance(q, p.vertices()[i], p.vertices()[(i + 1) % n]));
  return best;
}

double ArcOrLine::central_angle() const {
  const double a0 = std::atan2(start.y() - center.y(), start.x() - center.x());
  const double a1 = std::atan2(end.y() - center.y(), end.x() - center.x());
  return direction == TurnDirection::left ? wrap_positive(a1 - a0) : wrap_positive(a0 - a1);
}

double ArcOrLine::length() const {
  if (!is_arc()) return (end - start).norm();
  return radius * central_angle();
}

Vec2 ArcOrLine::point_along(double s) const {
  if (!is_arc()) {
    const Vec2 d = end - start;
    const double len = d.norm();
    if (len <= 0.0) return start;
    return start + (s / len) * d;
  }
  const double sweep = (direction == TurnDirection::left ? 1.0 : -1.0) * s / radius;
  return center + Eigen::Rotation2Dd(sweep) * (start - center);
}

Vec2 ArcOrLine::start_tangent() const {
  if (!is_arc()) {
    const Vec2 d = end - start;
    const double len = d.norm();
    return len > 0.0 ? Vec2(d / len) : Vec2(1.0, 0.0);
  }
  const Vec2 rad = (start - center).normalized();
  return direction == TurnDirection::left ? Vec2(-rad.y(), rad.x()) : Vec2(rad.y(), -rad.x());
}

ArcOrLine circle_through(const Vec2& p1, const Vec2& p2, const Vec2& p3) {
  if ((p1 - p2).norm() < 1e-9 || (p2 - p3).norm() < 1e-9 || (p1 - p3).norm() < 1e-9)
    throw std::invalid_argument("circle_through requires three distinct points");

  ArcOrLine out;
  out.start = p1;
  out.end = p3;

  const double area = 0.5 * std::abs(cross2(p2 - p1, p3 - p1));
  if (area < kCollinearAreaTol) {
    out.kind = ArcOrLine::Kind::line;
    return out;
  }

  // Perpendicular bisector equations 2(p2-p1).c = |p2|^2-|p1|^2 etc.
  Eigen::Matrix2d lhs;
  lhs.row(0) = 2.0 * (p2 - p1).transpose();
  lhs.row(1) = 2.0 * (p3 - p2).transpose();
  Eigen::Vector2d rhs(p2.squaredNorm() - p1.squaredNorm(), p3.squaredNorm() - p2.squaredNorm());
  const Vec2 center = lhs.colPivHouseholderQr().solve(rhs);

  out.kind = ArcOrLine::Kind::arc;
  out.center = center;
  out.radius = (p1 - center).norm();
  out.direction = cross2(p2 - p1, p3 - p2) > 0.0 ? TurnDirection::left : TurnDirection::right;
  return out;
}

Polyline::Polyline(std::vector<Vec2> points) {
  for (const Vec2& p : points) {
    if (points_.empty() || (p - points_.back()).norm() > 1e-12) points_.push_back(p);
  }
  if (points_.size() < 2) throw std::invalid_argument("polyline needs at least 2 distinct points");
  cum_.resize(points_.size());
  cum_[0] = 0.0;
  for (std::size_t i = 1; i < points_.size(); ++i)
    cum_[i] = cum_[i - 1] + (points_[i] - points_[i - 1]).norm();
}

Vec2 Polyline::point_at(double s) const {
  const double clamped = std::clamp(s, 0.0, length());
  const auto it = std::upper_bound(cum_.begin(), cum_.end(), clamped);
  const std::size_t i = std::min<std::size_t>(std::distance(cum_.begin(), it), cum_.size() - 1);
  const std::size_t lo = i == 0 ? 0 : i - 1;
  const double seg_len = cum_[lo + 1 > cum_.size() - 1 ? lo : lo + 1] - cum_[lo];
  if (seg_len <= 0.0) return points_[lo];
  const double t = (clamped - cum_[lo]) / seg_len;
  return points_[lo] + t * (points_[lo + 1] - points_[lo]);
}

double Polyline::heading_at(double s) const {
  const double clamped = std::clamp(s, 0.0, length());
  std::size_t i = std::distance(cum_.begin(), std::upper_bound(cum_.begin(), cum_.end(), clamped));
  if (i >= points_.size()) i = points_.size() - 1;
  const std::size_t lo = i == 0 ? 0 : i - 1;
  const Vec2 d = points_[lo + 1] - points_[lo];
  return std::atan2(d.y(), d.x());
}

Polyline::Projection Polyline::closest(const Vec2& p) const {
  Projection best;
  double best_d2 = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < points_.size(); ++i) {
    const Vec2& a = points_[i];
    const Vec2 ab = points_[i + 1] - a;
    const double len2 = ab.squaredNorm();
    const double t = len2 > 0.0 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
    const Vec2 q = a + t * ab;
    const double d2 = (p - q).squaredNorm();
    const double s = cum_[i] + t * std::sqrt(len2);
    if (d2 < best_d2 - 1e-12 || (d2 <= best_d2 + 1e-12 && s > best.arclength)) {
      best_d2 = d2;
      best.point = q;
      best.arclength = s;
    }
  }
  best.distance = std::sqrt(best_d2);
  return best;
}

}  // namespace navsim
