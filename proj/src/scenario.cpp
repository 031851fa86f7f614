#include "navsim/scenario.hpp"

#include <algorithm>
#include <cstddef>
#include <fstream>
#include <sstream>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "navsim/vehicle.hpp"

namespace navsim {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& origin, const std::string& path,
                       const std::string& message) {
  throw ScenarioError(origin + ": " + path + ": " + message);
}

const char* type_name(const json& j) {
  switch (j.type()) {
    case json::value_t::null: return "null";
    case json::value_t::object: return "object";
    case json::value_t::array: return "array";
    case json::value_t::string: return "string";
    case json::value_t::boolean: return "boolean";
    default: return j.is_number() ? "number" : "value";
  }
}

/// Typed accessor over one JSON value that knows its path, so every error
/// names the field that caused it.
class Node {
 public:
  Node(const json& value, std::string path, const std::string& origin)
      : value_(&value), path_(std::move(path)), origin_(&origin) {}

  const std::string& path() const { return path_; }

  bool has(const char* key) const { return value_->is_object() && value_->contains(key); }

  Node at(const char* key) const {
    require_object();
    auto it = value_->find(key);
    if (it == value_->end()) fail(*origin_, path_, std::string("missing field '") + key + "'");
    return Node(*it, path_ + "." + key, *origin_);
  }

  std::optional<Node> find(const char* key) const {
    if (!has(key)) return std::nullopt;
    return at(key);
  }

  std::size_t size() const {
    require_array();
    return value_->size();
  }

  Node item(std::size_t i) const {
    require_array();
    return Node((*value_)[i], path_ + "[" + std::to_string(i) + "]", *origin_);
  }

  std::string as_string() const {
    if (!value_->is_string()) wrong_type("string");
    return value_->get<std::string>();
  }

  double as_double() const {
    if (!value_->is_number()) wrong_type("number");
    return value_->get<double>();
  }

  int as_int() const {
    if (!value_->is_number_integer()) wrong_type("integer");
    return value_->get<int>();
  }

  unsigned as_unsigned() const {
    if (!value_->is_number_unsigned() && !(value_->is_number_integer() && value_->get<long long>() >= 0))
      wrong_type("nonnegative integer");
    return static_cast<unsigned>(value_->get<unsigned long long>());
  }

  Vec2 as_vec2() const {
    if (!value_->is_array() || value_->size() != 2 || !(*value_)[0].is_number() ||
        !(*value_)[1].is_number())
      wrong_type("[x, y] pair");
    return Vec2((*value_)[0].get<double>(), (*value_)[1].get<double>());
  }

  std::vector<std::string> as_string_list() const {
    require_array();
    std::vector<std::string> out;
    out.reserve(value_->size());
    for (std::size_t i = 0; i < value_->size(); ++i) out.push_back(item(i).as_string());
    return out;
  }

  [[noreturn]] void error(const std::string& message) const { fail(*origin_, path_, message); }

 private:
  void require_object() const {
    if (!value_->is_object()) wrong_type("object");
  }
  void require_array() const {
    if (!value_->is_array()) wrong_type("array");
  }
  [[noreturn]] void wrong_type(const char* expected) const {
    fail(*origin_, path_, std::string("expected ") + expected + ", got " + type_name(*value_));
  }

  const json* value_;
  std::string path_;
  const std::string* origin_;
};

double positive(const Node& n, const char* what) {
  const double v = n.as_double();
  if (!(v > 0.0)) n.error(std::string(what) + " must be positive");
  return v;
}

double nonnegative(const Node& n, const char* what) {
  const double v = n.as_double();
  if (!(v >= 0.0)) n.error(std::string(what) + " must be nonnegative");
  return v;
}

IntersectionControl parse_control(const Node& n) {
  const std::string s = n.as_string();
  if (s == "none") return IntersectionControl::none;
  if (s == "stoplight") return IntersectionControl::stoplight;
  if (s == "all_way_stop") return IntersectionControl::all_way_stop;
  if (s == "yield") return IntersectionControl::yield;
  n.error("unknown control '" + s + "' (expected none, stoplight, all_way_stop, or yield)");
}

NeighborType parse_neighbor_type(const Node& n) {
  const std::string s = n.as_string();
  if (s == "vehicle") return NeighborType::vehicle;
  if (s == "pedestrian") return NeighborType::pedestrian;
  if (s == "cyclist") return NeighborType::cyclist;
  if (s == "obstruction") return NeighborType::obstruction;
  n.error("unknown neighbor type '" + s + "'");
}

Polyline parse_centerline(const Node& n) {
  std::vector<Vec2> points;
  points.reserve(n.size());
  for (std::size_t i = 0; i < n.size(); ++i) points.push_back(n.item(i).as_vec2());
  if (points.size() < 2) n.error("centerline needs at least 2 points");
  return Polyline(std::move(points));
}

struct MapIds {
  std::unordered_set<std::string> junctions;
  std::unordered_set<std::string> roads;
  std::unordered_set<std::string> lanes;
};

RoadGraph parse_map(const Node& m, MapIds& ids) {
  std::vector<Junction> junctions;
  const Node jlist = m.at("junctions");
  for (std::size_t i = 0; i < jlist.size(); ++i) {
    const Node jn = jlist.item(i);
    Junction junction;
    junction.id = jn.at("id").as_string();
    if (!ids.junctions.insert(junction.id).second)
      jn.error("duplicate junction id '" + junction.id + "'");
    junction.position = jn.at("position").as_vec2();
    if (auto c = jn.find("control")) junction.control = parse_control(*c);
    if (auto phases = jn.find("signals")) {
      for (std::size_t p = 0; p < phases->size(); ++p) {
        const Node pn = phases->item(p);
        SignalPhase phase;
        phase.green_roads = pn.at("green_roads").as_string_list();
        if (auto d = pn.find("duration")) phase.duration = positive(*d, "duration");
        if (auto a = pn.find("amber_tail")) phase.amber_tail = nonnegative(*a, "amber_tail");
        if (phase.amber_tail > phase.duration) pn.error("amber_tail longer than duration");
        junction.signal_phases.push_back(std::move(phase));
      }
    }
    if (junction.control == IntersectionControl::stoplight && junction.signal_phases.empty())
      jn.error("stoplight junction needs at least one signal phase");
    junctions.push_back(std::move(junction));
  }

  std::vector<Road> roads;
  const Node rlist = m.at("roads");
  for (std::size_t i = 0; i < rlist.size(); ++i) {
    const Node rn = rlist.item(i);
    Road road;
    road.id = rn.at("id").as_string();
    if (!ids.roads.insert(road.id).second) rn.error("duplicate road id '" + road.id + "'");
    road.from_junction = rn.at("from").as_string();
    road.to_junction = rn.at("to").as_string();
    for (const char* key : {"from", "to"}) {
      const std::string& ref = key[0] == 'f' ? road.from_junction : road.to_junction;
      if (!ids.junctions.count(ref)) rn.at(key).error("unknown junction '" + ref + "'");
    }
    const Node llist = rn.at("lanes");
    if (llist.size() == 0) rn.error("road needs at least one lane");
    for (std::size_t l = 0; l < llist.size(); ++l) {
      const Node ln = llist.item(l);
      Lane lane;
      lane.id = ln.at("id").as_string();
      if (!ids.lanes.insert(lane.id).second) ln.error("duplicate lane id '" + lane.id + "'");
      lane.centerline = parse_centerline(ln.at("centerline"));
      if (auto w = ln.find("width")) lane.width = positive(*w, "width");
      if (auto s = ln.find("speed_limit")) lane.speed_limit = positive(*s, "speed_limit");
      if (auto left = ln.find("left")) lane.left_lane = left->as_string();
      if (auto right = ln.find("right")) lane.right_lane = right->as_string();
      if (auto succ = ln.find("successors")) lane.successors = succ->as_string_list();
      try {
        lane.validate();
      } catch (const std::exception& e) {
        ln.error(e.what());
      }
      road.lanes.push_back(std::move(lane));
    }
    roads.push_back(std::move(road));
  }

  // Cross-references are checked before graph construction so the message
  // points at the field, not at a lookup deep inside the simulator.
  for (std::size_t i = 0; i < rlist.size(); ++i) {
    const Node llist = rlist.item(i).at("lanes");
    for (std::size_t l = 0; l < llist.size(); ++l) {
      const Node ln = llist.item(l);
      const Lane& lane = roads[i].lanes[l];
      if (!lane.left_lane.empty() && !ids.lanes.count(lane.left_lane))
        ln.at("left").error("unknown lane '" + lane.left_lane + "'");
      if (!lane.right_lane.empty() && !ids.lanes.count(lane.right_lane))
        ln.at("right").error("unknown lane '" + lane.right_lane + "'");
      for (const std::string& s : lane.successors)
        if (!ids.lanes.count(s)) ln.at("successors").error("unknown lane '" + s + "'");
    }
  }
  for (std::size_t i = 0; i < jlist.size(); ++i) {
    if (auto phases = jlist.item(i).find("signals")) {
      for (std::size_t p = 0; p < phases->size(); ++p) {
        const Node pn = phases->item(p);
        for (const std::string& r : junctions[i].signal_phases[p].green_roads)
          if (!ids.roads.count(r)) pn.at("green_roads").error("unknown road '" + r + "'");
      }
    }
  }

  return RoadGraph(std::move(junctions), std::move(roads));
}

AgentPhase parse_phase(const Node& n, const MapIds& ids) {
  AgentPhase phase;
  const Node kind = n.at("kind");
  const std::string k = kind.as_string();
  if (k == "stationary") {
    phase.kind = ScriptKind::stationary;
  } else if (k == "lane_follow") {
    phase.kind = ScriptKind::lane_follow;
    phase.lane = n.at("lane").as_string();
    if (!ids.lanes.count(phase.lane)) n.at("lane").error("unknown lane '" + phase.lane + "'");
    phase.speed = nonnegative(n.at("speed"), "speed");
    if (auto a = n.find("accel")) phase.accel = positive(*a, "accel");
  } else if (k == "velocity") {
    phase.kind = ScriptKind::velocity;
    phase.velocity = n.at("velocity").as_vec2();
  } else if (k == "waypoints") {
    phase.kind = ScriptKind::waypoints;
    const Node frames = n.at("keyframes");
    if (frames.size() == 0) frames.error("needs at least one keyframe");
    for (std::size_t i = 0; i < frames.size(); ++i) {
      const Node fn = frames.item(i);
      ScriptKeyframe frame;
      frame.t = nonnegative(fn.at("t"), "t");
      frame.position = fn.at("position").as_vec2();
      if (auto h = fn.find("heading")) frame.heading = h->as_double();
      if (!phase.keyframes.empty() && frame.t <= phase.keyframes.back().t)
        fn.at("t").error("keyframe times must be strictly increasing");
      phase.keyframes.push_back(frame);
    }
  } else {
    kind.error("unknown kind '" + k +
               "' (expected stationary, lane_follow, velocity, or waypoints)");
  }
  return phase;
}

double footprint_default(NeighborType type, bool length) {
  switch (type) {
    case NeighborType::vehicle: return length ? 4.4 : 1.8;
    case NeighborType::pedestrian: return 0.6;
    case NeighborType::cyclist: return length ? 1.8 : 0.6;
    case NeighborType::obstruction: return 1.0;
  }
  return 1.0;
}

AgentSpec parse_agent(const Node& n, const MapIds& ids,
                      std::unordered_set<std::string>& seen_ids) {
  AgentSpec agent;
  agent.id = n.at("id").as_string();
  if (!seen_ids.insert(agent.id).second) n.error("duplicate agent id '" + agent.id + "'");
  if (auto t = n.find("type")) agent.type = parse_neighbor_type(*t);
  agent.length = footprint_default(agent.type, true);
  agent.width = footprint_default(agent.type, false);
  if (auto l = n.find("length")) agent.length = positive(*l, "length");
  if (auto w = n.find("width")) agent.width = positive(*w, "width");
  agent.position = n.at("position").as_vec2();
  if (auto h = n.find("heading")) agent.heading = h->as_double();
  if (auto s = n.find("speed")) agent.speed = nonnegative(*s, "speed");
  agent.script = parse_phase(n.at("script"), ids);

  const auto trigger = n.find("trigger");
  const auto then = n.find("then");
  if (trigger.has_value() != then.has_value())
    n.error("'trigger' and 'then' must be set together");
  if (trigger) {
    bool any = false;
    if (auto t = trigger->find("time")) {
      agent.trigger_time = nonnegative(*t, "time");
      any = true;
    }
    if (auto g = trigger->find("ego_gap")) {
      agent.trigger_ego_gap = positive(*g, "ego_gap");
      any = true;
    }
    if (!any) trigger->error("needs 'time' or 'ego_gap'");
    agent.then = parse_phase(*then, ids);
  }
  return agent;
}

LanePosition parse_lane_position(const Node& n, const RoadGraph& graph, const MapIds& ids) {
  LanePosition pos;
  pos.lane_id = n.at("lane").as_string();
  if (!ids.lanes.count(pos.lane_id)) n.at("lane").error("unknown lane '" + pos.lane_id + "'");
  pos.arclength = nonnegative(n.at("arclength"), "arclength");
  const double length = graph.lane(pos.lane_id).centerline.length();
  if (pos.arclength > length) {
    std::ostringstream msg;
    msg << "arclength " << pos.arclength << " beyond lane end (" << length << ")";
    n.at("arclength").error(msg.str());
  }
  return pos;
}

void apply_planner_overrides(const Node& n, PlannerConfig& cfg) {
  if (auto v = n.find("tau")) cfg.tau = positive(*v, "tau");
  if (auto v = n.find("replan_period")) cfg.replan_period = positive(*v, "replan_period");
  if (auto v = n.find("physics_dt")) cfg.physics_dt = positive(*v, "physics_dt");
  if (auto v = n.find("trajectory_samples")) cfg.trajectory_samples = v->as_int();
  if (auto v = n.find("grid_speed_span")) cfg.grid_speed_span = positive(*v, "grid_speed_span");
  if (auto v = n.find("grid_steering_span"))
    cfg.grid_steering_span = positive(*v, "grid_steering_span");
  if (auto v = n.find("grid_size")) cfg.grid_size = v->as_int();
  if (auto v = n.find("prior_grid_size")) cfg.prior_grid_size = v->as_int();
  if (auto v = n.find("tau_fallback")) {
    cfg.tau_fallback.clear();
    for (std::size_t i = 0; i < v->size(); ++i)
      cfg.tau_fallback.push_back(positive(v->item(i), "tau_fallback entry"));
  }
  try {
    cfg.validate();
  } catch (const std::exception& e) {
    n.error(e.what());
  }
}

void apply_weight_overrides(const Node& n, CostWeights& weights) {
  const std::pair<const char*, double*> fields[] = {
      {"w_vel", &weights.w_vel},       {"w_drift", &weights.w_drift},
      {"w_prog", &weights.w_prog},     {"w_accel", &weights.w_accel},
      {"w_yawr", &weights.w_yawr},     {"w_lane", &weights.w_lane},
      {"w_mdist", &weights.w_mdist},   {"w_prox", &weights.w_prox},
      {"c_vehicle", &weights.c_vehicle}, {"c_cyclist", &weights.c_cyclist},
      {"c_pedestrian", &weights.c_pedestrian}, {"c_obstruction", &weights.c_obstruction}};
  for (const auto& [key, slot] : fields)
    if (auto v = n.find(key)) *slot = v->as_double();
  try {
    weights.validate();
  } catch (const std::exception& e) {
    n.error(e.what());
  }
}

std::pair<int, int> line_and_column(const std::string& text, std::size_t byte) {
  // The parser reports a 1-based byte position; count newlines before it.
  int line = 1;
  int column = 1;
  const std::size_t count = std::min(byte > 0 ? byte - 1 : 0, text.size());
  for (std::size_t i = 0; i < count; ++i) {
    if (text[i] == '\n') {
      ++line;
      column = 1;
    } else {
      ++column;
    }
  }
  return {line, column};
}

}  // namespace

std::string to_string(ScriptKind kind) {
  switch (kind) {
    case ScriptKind::stationary: return "stationary";
    case ScriptKind::lane_follow: return "lane_follow";
    case ScriptKind::velocity: return "velocity";
    case ScriptKind::waypoints: return "waypoints";
  }
  return "unknown";
}

Scenario parse_scenario_text(const std::string& text, const std::string& origin) {
  json root_json;
  try {
    root_json = json::parse(text);
  } catch (const json::parse_error& e) {
    const auto [line, column] = line_and_column(text, e.byte);
    std::ostringstream msg;
    msg << origin << ":" << line << ":" << column << ": " << e.what();
    throw ScenarioError(msg.str());
  }

  const Node root(root_json, "$", origin);
  Scenario scenario;
  if (auto name = root.find("name")) scenario.name = name->as_string();
  if (auto seed = root.find("seed")) scenario.seed = seed->as_unsigned();
  if (auto timeout = root.find("timeout")) scenario.timeout = positive(*timeout, "timeout");

  MapIds ids;
  try {
    scenario.map = parse_map(root.at("map"), ids);
  } catch (const ScenarioError&) {
    throw;
  } catch (const std::exception& e) {
    fail(origin, "$.map", e.what());
  }

  const Node ego = root.at("ego");
  if (auto v = ego.find("vehicle")) {
    scenario.ego.vehicle = v->as_string();
    try {
      vehicle_preset(scenario.ego.vehicle);
    } catch (const std::exception& e) {
      v->error(e.what());
    }
  }
  scenario.ego.start = parse_lane_position(ego.at("start"), scenario.map, ids);
  if (auto s = ego.find("speed")) scenario.ego.start_speed = nonnegative(*s, "speed");
  if (auto goals = ego.find("goals")) {
    for (std::size_t i = 0; i < goals->size(); ++i)
      scenario.ego.goals.push_back(parse_lane_position(goals->item(i), scenario.map, ids));
  }

  if (auto agents = root.find("agents")) {
    std::unordered_set<std::string> seen;
    for (std::size_t i = 0; i < agents->size(); ++i)
      scenario.agents.push_back(parse_agent(agents->item(i), ids, seen));
  }

  if (auto planner = root.find("planner")) apply_planner_overrides(*planner, scenario.planner);
  if (auto weights = root.find("weights")) apply_weight_overrides(*weights, scenario.weights);
  return scenario;
}

Scenario load_scenario_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ScenarioError("cannot open scenario file: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_scenario_text(buffer.str(), path);
}

}  // namespace navsim
