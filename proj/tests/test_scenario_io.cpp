#include <doctest.h>

#include <string>

#include <nlohmann/json.hpp>

#include "navsim/scenario.hpp"

using namespace navsim;
using nlohmann::json;

namespace {

/// Two-lane straight road with a plain junction at each end, one scripted
/// cyclist, and a short ego route. Variants mutate this and re-serialize.
json base_scenario() {
  return json::parse(R"({
    "name": "fixture",
    "seed": 7,
    "timeout": 30.0,
    "map": {
      "junctions": [
        {"id": "west", "position": [0, 0]},
        {"id": "east", "position": [200, 0]}
      ],
      "roads": [
        {"id": "main", "from": "west", "to": "east", "lanes": [
          {"id": "main.0", "width": 3.5, "speed_limit": 13.4,
           "centerline": [[0, 0], [200, 0]], "left": "main.1"},
          {"id": "main.1", "width": 3.5, "speed_limit": 13.4,
           "centerline": [[0, 3.5], [200, 3.5]], "right": "main.0"}
        ]}
      ]
    },
    "ego": {
      "vehicle": "hatchback",
      "start": {"lane": "main.0", "arclength": 5.0},
      "speed": 8.0,
      "goals": [{"lane": "main.0", "arclength": 190.0}]
    },
    "agents": [
      {"id": "bike", "type": "cyclist", "position": [40, -1.0], "heading": 0,
       "speed": 4.0, "script": {"kind": "lane_follow", "lane": "main.0", "speed": 4.0}}
    ]
  })");
}

Scenario parse(const json& j) { return parse_scenario_text(j.dump(2), "test.json"); }

std::string error_of(const json& j) {
  try {
    parse(j);
  } catch (const ScenarioError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_SUITE("scenario_io") {
  TEST_CASE("valid scenario parses with all fields bound") {
    const Scenario s = parse(base_scenario());
    CHECK(s.name == "fixture");
    CHECK(s.seed == 7);
    CHECK(s.timeout == doctest::Approx(30.0));
    CHECK(s.map.roads().size() == 1);
    CHECK(s.map.lane("main.1").right_lane == "main.0");
    CHECK(s.ego.vehicle == "hatchback");
    CHECK(s.ego.start.lane_id == "main.0");
    CHECK(s.ego.start_speed == doctest::Approx(8.0));
    REQUIRE(s.ego.goals.size() == 1);
    CHECK(s.ego.goals[0].arclength == doctest::Approx(190.0));
    REQUIRE(s.agents.size() == 1);
    CHECK(s.agents[0].type == NeighborType::cyclist);
    CHECK(s.agents[0].script.kind == ScriptKind::lane_follow);
    CHECK(s.agents[0].script.lane == "main.0");
    // Untouched knobs keep library defaults.
    CHECK(s.planner.tau == doctest::Approx(4.0));
    CHECK(s.weights.w_prog == doctest::Approx(2.0));
  }

  TEST_CASE("agent footprint defaults follow the type") {
    json j = base_scenario();
    j["agents"][0].erase("length");
    const Scenario s = parse(j);
    CHECK(s.agents[0].length == doctest::Approx(1.8));  // cyclist
    CHECK(s.agents[0].width == doctest::Approx(0.6));

    j["agents"][0]["type"] = "pedestrian";
    CHECK(parse(j).agents[0].length == doctest::Approx(0.6));
    j["agents"][0]["type"] = "vehicle";
    CHECK(parse(j).agents[0].length == doctest::Approx(4.4));
    j["agents"][0]["length"] = 12.0;
    CHECK(parse(j).agents[0].length == doctest::Approx(12.0));
  }

  TEST_CASE("syntax errors carry the line and column of the bad byte") {
    const std::string text = "{\n  \"name\": \"x\",\n  \"seed\": ,\n}";
    try {
      parse_scenario_text(text, "broken.json");
      FAIL("expected a parse error");
    } catch (const ScenarioError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("broken.json:3:") != std::string::npos);
    }
  }

  TEST_CASE("validation errors name the offending field") {
    json j = base_scenario();
    j["agents"][0]["script"]["lane"] = "ghost";
    CHECK(error_of(j).find("$.agents[0].script.lane") != std::string::npos);

    j = base_scenario();
    j["map"]["roads"][0]["lanes"][0]["left"] = "nowhere";
    CHECK(error_of(j).find("$.map.roads[0].lanes[0].left") != std::string::npos);

    j = base_scenario();
    j["ego"]["start"]["arclength"] = 500.0;
    const std::string msg = error_of(j);
    CHECK(msg.find("$.ego.start.arclength") != std::string::npos);
    CHECK(msg.find("beyond lane end") != std::string::npos);
  }

  TEST_CASE("duplicate ids are rejected") {
    json j = base_scenario();
    j["map"]["roads"][0]["lanes"][1]["id"] = "main.0";
    CHECK(error_of(j).find("duplicate lane id") != std::string::npos);

    j = base_scenario();
    j["agents"].push_back(j["agents"][0]);
    CHECK(error_of(j).find("duplicate agent id") != std::string::npos);
  }

  TEST_CASE("unknown references and enum values are rejected") {
    json j = base_scenario();
    j["map"]["roads"][0]["to"] = "mars";
    CHECK(error_of(j).find("unknown junction 'mars'") != std::string::npos);

    j = base_scenario();
    j["agents"][0]["type"] = "unicorn";
    CHECK(error_of(j).find("unknown neighbor type") != std::string::npos);

    j = base_scenario();
    j["agents"][0]["script"]["kind"] = "fly";
    CHECK(error_of(j).find("unknown kind 'fly'") != std::string::npos);

    j = base_scenario();
    j["ego"]["vehicle"] = "hovercraft";
    const std::string msg = error_of(j);
    CHECK(msg.find("$.ego.vehicle") != std::string::npos);
    CHECK(msg.find("unknown vehicle preset") != std::string::npos);
  }

  TEST_CASE("trigger and then must come as a pair") {
    json j = base_scenario();
    j["agents"][0]["trigger"] = {{"ego_gap", 20.0}};
    CHECK(error_of(j).find("'trigger' and 'then' must be set together") != std::string::npos);

    j["agents"][0]["then"] = {{"kind", "velocity"}, {"velocity", {0.0, 1.5}}};
    const Scenario s = parse(j);
    CHECK(s.agents[0].trigger_ego_gap == doctest::Approx(20.0));
    CHECK(s.agents[0].trigger_time < 0.0);
    REQUIRE(s.agents[0].then.has_value());
    CHECK(s.agents[0].then->kind == ScriptKind::velocity);
    CHECK(s.agents[0].then->velocity.y() == doctest::Approx(1.5));

    j["agents"][0]["trigger"] = json::object();
    CHECK(error_of(j).find("needs 'time' or 'ego_gap'") != std::string::npos);
  }

  TEST_CASE("waypoint keyframes must be strictly time ordered") {
    json j = base_scenario();
    j["agents"][0]["script"] = {
        {"kind", "waypoints"},
        {"keyframes", {{{"t", 0.0}, {"position", {0.0, 0.0}}},
                       {{"t", 2.0}, {"position", {5.0, 0.0}}},
                       {{"t", 2.0}, {"position", {9.0, 0.0}}}}}};
    const std::string msg = error_of(j);
    CHECK(msg.find("strictly increasing") != std::string::npos);
    CHECK(msg.find("keyframes[2].t") != std::string::npos);

    j["agents"][0]["script"]["keyframes"][2]["t"] = 4.0;
    const Scenario s = parse(j);
    CHECK(s.agents[0].script.keyframes.size() == 3);
  }

  TEST_CASE("stoplight junctions need phases and phases need known roads") {
    json j = base_scenario();
    j["map"]["junctions"][1]["control"] = "stoplight";
    CHECK(error_of(j).find("needs at least one signal phase") != std::string::npos);

    j["map"]["junctions"][1]["signals"] = {
        {{"green_roads", {"main"}}, {"duration", 8.0}, {"amber_tail", 2.0}}};
    const Scenario ok = parse(j);
    CHECK(ok.map.junction("east").control == IntersectionControl::stoplight);
    CHECK(ok.map.junction("east").signal_phases.size() == 1);

    j["map"]["junctions"][1]["signals"][0]["green_roads"] = {"side"};
    CHECK(error_of(j).find("unknown road 'side'") != std::string::npos);
  }

  TEST_CASE("planner and weight overrides apply and are validated") {
    json j = base_scenario();
    j["planner"] = {{"tau", 3.0}, {"trajectory_samples", 25}, {"tau_fallback", {3.0, 1.5, 0.5}}};
    j["weights"] = {{"w_prog", 4.0}, {"c_pedestrian", 9.0}};
    const Scenario s = parse(j);
    CHECK(s.planner.tau == doctest::Approx(3.0));
    CHECK(s.planner.trajectory_samples == 25);
    CHECK(s.planner.tau_fallback.size() == 3);
    CHECK(s.weights.w_prog == doctest::Approx(4.0));
    CHECK(s.weights.c_pedestrian == doctest::Approx(9.0));
    // Untouched members keep their defaults.
    CHECK(s.planner.grid_size == 9);
    CHECK(s.weights.w_vel == doctest::Approx(0.5));

    j["planner"]["grid_size"] = 8;
    CHECK(error_of(j).find("$.planner") != std::string::npos);

    j = base_scenario();
    j["weights"] = {{"c_pedestrian", 0.5}};
    CHECK(error_of(j).find("$.weights") != std::string::npos);
  }

  TEST_CASE("missing files and missing fields fail loudly") {
    CHECK_THROWS_WITH_AS(load_scenario_file("/nonexistent/path.json"),
                         doctest::Contains("cannot open"), ScenarioError);

    json j = base_scenario();
    j.erase("map");
    CHECK(error_of(j).find("missing field 'map'") != std::string::npos);

    j = base_scenario();
    j["ego"].erase("start");
    CHECK(error_of(j).find("missing field 'start'") != std::string::npos);
  }

  TEST_CASE("vehicle presets resolve by name") {
    CHECK(vehicle_preset("hatchback").name == "hatchback");
    CHECK(vehicle_preset("sports_car").wheelbase() > 0.0);
    CHECK(vehicle_preset("suv").mass > vehicle_preset("hatchback").mass);
    CHECK_THROWS_AS((void)vehicle_preset("tank"), std::invalid_argument);
  }
}
