#pragma once

#include <array>
#include <cstdint>
#include <string_view>

namespace autocoach::dsl {

// Environment variables visible to reward programs. All numeric; flags are
// 0/1. This schema is the single source of truth: the binder, the linter's
// range table, and the prompt templates all derive from it.
struct AccessibleVars {
    double v_ego = 0.0;             // m/s
    double v_limit = 0.0;           // m/s
    double dist_to_goal = 0.0;      // m
    double lane_offset = 0.0;       // m, signed
    double heading_error = 0.0;     // rad, signed
    double min_gap_sv = 100.0;      // m, padding distance when no SV
    double collision = 0.0;         // 0/1
    double success = 0.0;           // 0/1
    double timeout = 0.0;           // 0/1
    double lane_change_event = 0.0; // 0/1 this step
    double lane_change_times = 0.0; // cumulative count
    double n_sv = 0.0;              // count
    double step = 0.0;              // integer
    double max_steps = 0.0;         // integer
};

inline constexpr int kAccessibleVarCount = 14;

inline constexpr std::array<std::string_view, kAccessibleVarCount> kAccessibleVarNames = {
    "v_ego",        "v_limit",          "dist_to_goal",      "lane_offset", "heading_error",
    "min_gap_sv",   "collision",        "success",           "timeout",     "lane_change_event",
    "lane_change_times", "N_sv",        "step",              "max_steps",
};

inline double accessible_var_value(const AccessibleVars& v, int index) {
    switch (index) {
        case 0: return v.v_ego;
        case 1: return v.v_limit;
        case 2: return v.dist_to_goal;
        case 3: return v.lane_offset;
        case 4: return v.heading_error;
        case 5: return v.min_gap_sv;
        case 6: return v.collision;
        case 7: return v.success;
        case 8: return v.timeout;
        case 9: return v.lane_change_event;
        case 10: return v.lane_change_times;
        case 11: return v.n_sv;
        case 12: return v.step;
        case 13: return v.max_steps;
        default: return 0.0;
    }
}

inline int accessible_var_index(std::string_view name) {
    for (int i = 0; i < kAccessibleVarCount; ++i)
        if (kAccessibleVarNames[static_cast<std::size_t>(i)] == name) return i;
    return -1;
}

// Units and one-line meaning per variable, quoted by the prompt templates.
inline constexpr std::array<std::string_view, kAccessibleVarCount> kAccessibleVarDocs = {
    "current speed of the ego vehicle (m/s)",
    "speed limit of the road (m/s)",
    "Euclidean distance from the ego to the destination (m)",
    "signed lateral offset from the nearest lane centerline (m)",
    "signed heading error relative to the road axis (rad)",
    "distance to the nearest surrounding vehicle, 100 when none (m)",
    "1 if the ego collided this step, else 0",
    "1 if the ego reached the goal this step, else 0",
    "1 if the episode timed out this step, else 0",
    "1 if the ego crossed into another lane this step, else 0",
    "cumulative number of lane changes so far in this episode",
    "number of surrounding vehicles in the scenario",
    "current step index within the episode",
    "maximum number of steps per episode",
};

}  // namespace autocoach::dsl
