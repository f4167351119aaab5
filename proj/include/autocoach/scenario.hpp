#pragma once

#include <fstream>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

namespace autocoach {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct UsageError : std::logic_error {
    using std::logic_error::logic_error;
};

enum class Task { overtaking, merging };

inline const char* to_string(Task t) { return t == Task::overtaking ? "overtaking" : "merging"; }

inline Task task_from_string(const std::string& s) {
    if (s == "overtaking") return Task::overtaking;
    if (s == "merging") return Task::merging;
    throw ConfigError("unknown task: " + s);
}

struct Rect {
    double x_min = 0, x_max = 0, y_min = 0, y_max = 0;
    bool contains(double x, double y) const {
        return x >= x_min && x <= x_max && y >= y_min && y <= y_max;
    }
};

// Road geometry and episode limits for one driving task. Lane i has its
// centerline at y = i * lane_width; lane 0 is the rightmost lane (the ramp in
// the merging task).
struct ScenarioConfig {
    Task task = Task::overtaking;
    int lane_count = 3;
    double lane_width = 3.5;    // m
    double road_length = 250.0; // m
    double merge_zone_start = 0.0;
    double merge_zone_end = 0.0;
    double v_limit = 15.0;      // m/s
    double dt = 0.1;            // s
    int max_steps = 300;
    Rect goal_region;

    double lane_center_y(int lane) const { return lane * lane_width; }
    double road_y_min() const { return -0.5 * lane_width; }
    double road_y_max() const { return (lane_count - 0.5) * lane_width; }

    void validate() const {
        if (lane_count < 2) throw ConfigError("lane_count must be >= 2");
        if (dt <= 0.0) throw ConfigError("dt must be positive");
        if (max_steps <= 0) throw ConfigError("max_steps must be positive");
        if (lane_width <= 0.0 || road_length <= 0.0) throw ConfigError("lane geometry must be positive");
        if (v_limit <= 0.0) throw ConfigError("v_limit must be positive");
        if (task == Task::merging) {
            if (merge_zone_start < 0.0 || merge_zone_end > road_length || merge_zone_start >= merge_zone_end)
                throw ConfigError("merge_zone must lie within the road");
        }
    }
};

inline ScenarioConfig default_overtaking_scenario() {
    ScenarioConfig s;
    s.task = Task::overtaking;
    s.lane_count = 3;
    s.lane_width = 3.5;
    s.road_length = 250.0;
    s.v_limit = 15.0;
    s.dt = 0.1;
    s.max_steps = 280;
    s.goal_region = Rect{240.0, 265.0, s.road_y_min(), s.road_y_max()};
    return s;
}

inline ScenarioConfig default_merging_scenario() {
    ScenarioConfig s;
    s.task = Task::merging;
    s.lane_count = 3; // lane 0 = ramp, lanes 1..2 = main road
    s.lane_width = 3.5;
    s.road_length = 250.0;
    s.merge_zone_start = 70.0;
    s.merge_zone_end = 160.0;
    s.v_limit = 12.0;
    s.dt = 0.1;
    s.max_steps = 300;
    s.goal_region = Rect{230.0, 265.0, 0.5 * s.lane_width, 1.5 * s.lane_width};  // target lane band
    return s;
}

inline ScenarioConfig default_scenario(Task t) {
    return t == Task::overtaking ? default_overtaking_scenario() : default_merging_scenario();
}

inline nlohmann::json to_json(const ScenarioConfig& s) {
    return nlohmann::json{
        {"task", to_string(s.task)},
        {"lane_count", s.lane_count},
        {"lane_width", s.lane_width},
        {"road_length", s.road_length},
        {"merge_zone", {s.merge_zone_start, s.merge_zone_end}},
        {"v_limit", s.v_limit},
        {"dt", s.dt},
        {"max_steps", s.max_steps},
        {"goal_region", {s.goal_region.x_min, s.goal_region.x_max, s.goal_region.y_min, s.goal_region.y_max}},
    };
}

inline ScenarioConfig scenario_from_json(const nlohmann::json& j) {
    ScenarioConfig s = default_scenario(task_from_string(j.at("task").get<std::string>()));
    if (j.contains("lane_count")) s.lane_count = j.at("lane_count").get<int>();
    if (j.contains("lane_width")) s.lane_width = j.at("lane_width").get<double>();
    if (j.contains("road_length")) s.road_length = j.at("road_length").get<double>();
    if (j.contains("merge_zone")) {
        s.merge_zone_start = j.at("merge_zone").at(0).get<double>();
        s.merge_zone_end = j.at("merge_zone").at(1).get<double>();
    }
    if (j.contains("v_limit")) s.v_limit = j.at("v_limit").get<double>();
    if (j.contains("dt")) s.dt = j.at("dt").get<double>();
    if (j.contains("max_steps")) s.max_steps = j.at("max_steps").get<int>();
    if (j.contains("goal_region")) {
        const auto& g = j.at("goal_region");
        s.goal_region = Rect{g.at(0).get<double>(), g.at(1).get<double>(), g.at(2).get<double>(), g.at(3).get<double>()};
    }
    s.validate();
    return s;
}

inline ScenarioConfig load_scenario_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open scenario config: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("invalid scenario config " + path + ": " + e.what());
    }
    return scenario_from_json(j);
}

}  // namespace autocoach
