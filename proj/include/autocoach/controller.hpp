#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "autocoach/sim.hpp"

namespace autocoach {

inline constexpr int kWaypointChoices = 5;
inline constexpr int kSpeedLevels = 5;
inline constexpr int kLaneChangeChoices = 3;
inline constexpr double kWaypointSpacing = 5.0;

struct Waypoint {
    double x = 0.0;
    double y = 0.0;
    double psi_ref = 0.0;
};

struct DecodedAction {
    Waypoint waypoint;
    double v_ref = 0.0;
    int lane_change = 0;  // -1 left, 0 keep, +1 right
    bool lane_change_coerced = false;
};

struct ActionTriple {
    int waypoint_idx = 0;     // 0..4, nearest to farthest
    int speed_idx = 0;        // 0..4, v_ref = idx * v_limit / 4
    int lane_change_idx = 1;  // 0 left, 1 keep, 2 right
};

// The 5 route points nearest ahead of the ego, nearest first. When fewer
// than 5 remain the tail repeats the final route point.
inline std::array<Waypoint, kWaypointChoices> candidate_waypoints(const VehicleState& ego,
                                                                  const std::vector<Vec2>& route) {
    if (route.empty()) throw UsageError("candidate_waypoints: empty route");
    std::array<Waypoint, kWaypointChoices> out{};
    int filled = 0;
    for (const Vec2& p : route) {
        if (p.x <= ego.x + 1e-9) continue;
        out[static_cast<std::size_t>(filled++)] = Waypoint{p.x, p.y, 0.0};
        if (filled == kWaypointChoices) break;
    }
    const Waypoint last = filled > 0 ? out[static_cast<std::size_t>(filled - 1)]
                                     : Waypoint{route.back().x, route.back().y, 0.0};
    for (; filled < kWaypointChoices; ++filled) out[static_cast<std::size_t>(filled)] = last;
    return out;
}

// Maps the multi-discrete action onto a target waypoint, reference speed and
// lane-change decision. Infeasible lane changes are coerced to lane keeping
// and reported, never rejected.
inline DecodedAction decode(ActionTriple action, const Environment& env, const VehicleState& ego) {
    if (action.waypoint_idx < 0 || action.waypoint_idx >= kWaypointChoices ||
        action.speed_idx < 0 || action.speed_idx >= kSpeedLevels ||
        action.lane_change_idx < 0 || action.lane_change_idx >= kLaneChangeChoices)
        throw UsageError("decode: action index out of range");

    const ScenarioConfig& sc = env.scenario();
    DecodedAction out;
    out.v_ref = static_cast<double>(action.speed_idx) * sc.v_limit / 4.0;

    // Lane indices grow to the left, so a left change (-1) raises the index.
    const int requested = action.lane_change_idx - 1;  // -1 left, 0 keep, +1 right
    const int current = env.nearest_lane(ego.y);
    int target = current;
    if (requested != 0) {
        const int candidate = current - requested;
        if (env.lane_change_allowed(current, candidate, ego.x)) {
            target = candidate;
            out.lane_change = requested;
        } else {
            out.lane_change_coerced = true;
        }
    }

    const auto candidates = candidate_waypoints(ego, env.lane_route(target));
    out.waypoint = candidates[static_cast<std::size_t>(action.waypoint_idx)];
    return out;
}

// Pure-pursuit steering toward the decoded waypoint plus a proportional
// speed law. Output always within the control limits.
inline std::pair<double, double> track(const DecodedAction& decoded, const VehicleState& ego) {
    const double dx = decoded.waypoint.x - ego.x;
    const double dy = decoded.waypoint.y - ego.y;
    const double dist = std::hypot(dx, dy);
    const double c = std::cos(ego.psi), s = std::sin(ego.psi);
    const double lateral = -s * dx + c * dy;

    const double lookahead = std::max({5.0, 0.5 * ego.v, dist});
    const double curvature = 2.0 * lateral / (lookahead * lookahead);
    const double steer = std::clamp(std::atan(kWheelbase * curvature), -kSteerMax, kSteerMax);

    const double accel = std::clamp(1.0 * (decoded.v_ref - ego.v), kAccelMin, kAccelMax);
    return {accel, steer};
}

}  // namespace autocoach
