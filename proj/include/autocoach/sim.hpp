#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "autocoach/curriculum.hpp"
#include "autocoach/geometry.hpp"
#include "autocoach/reward/vars.hpp"
#include "autocoach/rng.hpp"
#include "autocoach/scenario.hpp"

namespace autocoach {

inline constexpr int kNObsMax = 4;         // SV rows in the observation
inline constexpr double kPadDistance = 100.0;
inline constexpr double kVehicleLength = 4.7;
inline constexpr double kVehicleWidth = 1.9;
inline constexpr double kWheelbase = 2.9;
inline constexpr double kAccelMin = -6.0;
inline constexpr double kAccelMax = 3.0;
inline constexpr double kSteerMax = 0.5;

struct VehicleState {
    double x = 0.0;
    double y = 0.0;
    double v = 0.0;
    double psi = 0.0;
    double length = kVehicleLength;
    double width = kVehicleWidth;

    OrientedRect footprint() const { return {{x, y}, psi, length, width}; }
};

struct StateMatrix {
    VehicleState ego;
    std::vector<VehicleState> svs;  // stable spawn order within an episode
};

enum class OutcomeKind { running, success, collision, timeout };

inline const char* to_string(OutcomeKind k) {
    switch (k) {
        case OutcomeKind::running: return "running";
        case OutcomeKind::success: return "success";
        case OutcomeKind::collision: return "collision";
        default: return "timeout";
    }
}

struct EpisodeOutcome {
    OutcomeKind kind = OutcomeKind::running;
    int step = 0;

    bool terminal() const { return kind != OutcomeKind::running; }
};

// Per-step measurements handed to the reward evaluator. lane_change_coerced
// is filled by the action-decode path, everything else by the environment.
struct StepEvents {
    bool lane_change_event = false;
    bool lane_change_coerced = false;
    dsl::AccessibleVars vars;
};

struct Observation {
    std::array<std::array<double, 4>, kNObsMax + 1> rows{};

    static constexpr int width() { return 4 * (kNObsMax + 1); }

    std::array<double, 4 * (kNObsMax + 1)> flatten() const {
        std::array<double, width()> out{};
        for (int r = 0; r <= kNObsMax; ++r)
            for (int c = 0; c < 4; ++c) out[static_cast<std::size_t>(4 * r + c)] = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
        return out;
    }
};

// ---------------------------------------------------------------------------
// Surrounding-vehicle behavior

struct SvStyle {
    double desired_speed = 10.0;  // m/s
    double time_headway = 1.5;    // s
    double politeness = 0.5;
    double spawn_speed = 8.0;     // m/s, tracked in constant_velocity mode
};

struct SvLeader {
    double gap = 1e9;  // bumper-to-bumper, m
    double v = 0.0;
};

struct SvNeighborhood {
    std::optional<SvLeader> lead;        // same lane, ahead
    bool left_exists = false;            // lane index + 1
    std::optional<SvLeader> lead_left;
    std::optional<SvLeader> follow_left; // gap measured behind
    bool right_exists = false;           // lane index - 1
    std::optional<SvLeader> lead_right;
    std::optional<SvLeader> follow_right;
};

struct SvCommand {
    double accel = 0.0;
    int lane_delta = 0;  // -1 right, 0 keep, +1 left (lane indices grow leftward)
};

namespace idm {

inline constexpr double kAccelMax = 1.8;
inline constexpr double kComfortBrake = 2.5;
inline constexpr double kMinGap = 2.0;
inline constexpr double kSensingRange = 60.0;
inline constexpr double kExponent = 4.0;

inline double accel(double v, double v_desired, const std::optional<SvLeader>& lead) {
    double a = kAccelMax * (1.0 - std::pow(v / std::max(v_desired, 0.1), kExponent));
    if (lead && lead->gap < kSensingRange) {
        const double dv = v - lead->v;
        const double s_star = kMinGap + v * 1.5 + v * dv / (2.0 * std::sqrt(kAccelMax * kComfortBrake));
        const double s = std::max(lead->gap, 0.1);
        a = kAccelMax * (1.0 - std::pow(v / std::max(v_desired, 0.1), kExponent) -
                         (s_star / s) * (s_star / s));
    }
    return std::clamp(a, -kComfortBrake * 2.0, kAccelMax);
}

inline double accel_with_headway(double v, const SvStyle& style, const std::optional<SvLeader>& lead) {
    double a = kAccelMax * (1.0 - std::pow(v / std::max(style.desired_speed, 0.1), kExponent));
    if (lead && lead->gap < kSensingRange) {
        const double dv = v - lead->v;
        const double s_star =
            kMinGap + v * style.time_headway + v * dv / (2.0 * std::sqrt(kAccelMax * kComfortBrake));
        const double s = std::max(lead->gap, 0.1);
        a -= kAccelMax * (s_star / s) * (s_star / s);
    }
    return std::clamp(a, -kComfortBrake * 2.0, kAccelMax);
}

}  // namespace idm

// Pure per-step SV decision. Stationary holds still, constant_velocity tracks
// its spawn speed in its spawn lane, interactive follows IDM with an
// incentive-based lane-change rule.
inline SvCommand sv_policy(MotionMode mode, const VehicleState& self, const SvStyle& style,
                           const SvNeighborhood& view, double dt) {
    SvCommand cmd;
    switch (mode) {
        case MotionMode::stationary:
            cmd.accel = std::clamp(-self.v / dt, idm::kComfortBrake * -2.0, 0.0);
            return cmd;
        case MotionMode::constant_velocity:
            cmd.accel = std::clamp(style.spawn_speed - self.v, -idm::kComfortBrake, idm::kAccelMax);
            return cmd;
        case MotionMode::interactive:
            break;
    }

    const double a_keep = idm::accel_with_headway(self.v, style, view.lead);
    cmd.accel = a_keep;

    // Lane-change incentive: move if the adjacent lane offers a clear
    // acceleration gain and the slot is safe for everyone involved.
    const double threshold = 0.15 + 0.35 * style.politeness;
    auto side_gain = [&](bool exists, const std::optional<SvLeader>& lead_side,
                         const std::optional<SvLeader>& follow_side) {
        if (!exists) return -1e9;
        if (follow_side && follow_side->gap < idm::kMinGap + follow_side->v * 0.9) return -1e9;
        if (lead_side && lead_side->gap < idm::kMinGap + self.v * 0.5) return -1e9;
        return idm::accel_with_headway(self.v, style, lead_side) - a_keep;
    };

    const double gain_left = side_gain(view.left_exists, view.lead_left, view.follow_left);
    const double gain_right = side_gain(view.right_exists, view.lead_right, view.follow_right);
    if (gain_left >= gain_right && gain_left > threshold) cmd.lane_delta = +1;
    else if (gain_right > gain_left && gain_right > threshold) cmd.lane_delta = -1;
    return cmd;
}

// ---------------------------------------------------------------------------
// Environment

class Environment {
public:
    Environment() = default;

    // Spawns the ego and the curriculum-defined SV population. Same
    // (scenario, curriculum, seed) always produces the same state.
    const StateMatrix& reset(const ScenarioConfig& scenario, CurriculumId curriculum, std::uint64_t seed) {
        scenario.validate();
        if (!CurriculumSet::contains(curriculum)) throw UsageError("reset: curriculum outside the set");
        scenario_ = scenario;
        curriculum_ = curriculum;
        step_index_ = 0;
        outcome_ = {};
        lane_change_times_ = 0;
        last_events_ = {};
        sv_agents_.clear();
        state_.svs.clear();

        Rng rng(derive_seed(seed, "env-reset"));

        const int ego_lane = scenario_.task == Task::overtaking ? scenario_.lane_count / 2 : 0;
        state_.ego = VehicleState{};
        state_.ego.x = rng.uniform(5.0, 20.0);
        state_.ego.y = scenario_.lane_center_y(ego_lane);
        state_.ego.v = rng.uniform(0.3, 0.5) * scenario_.v_limit;
        state_.ego.psi = 0.0;
        ego_lane_index_ = ego_lane;

        spawn_svs(rng);
        if (scenario_.task == Task::overtaking) {
            destination_ = {0.5 * (scenario_.goal_region.x_min + scenario_.goal_region.x_max),
                            scenario_.lane_center_y(scenario_.lane_count / 2)};
        } else {
            destination_ = {0.5 * (scenario_.goal_region.x_min + scenario_.goal_region.x_max),
                            scenario_.lane_center_y(1)};
        }
        return state_;
    }

    // Advances the world by one step under the given (already decoded) ego
    // control. Controls are clamped to the documented limits.
    std::pair<EpisodeOutcome, StepEvents> step(double accel, double steer) {
        if (outcome_.terminal()) throw UsageError("step called after terminal outcome");

        accel = std::clamp(accel, kAccelMin, kAccelMax);
        steer = std::clamp(steer, -kSteerMax, kSteerMax);
        const double dt = scenario_.dt;

        advance_svs(dt);

        // Kinematic bicycle, explicit Euler.
        VehicleState& ego = state_.ego;
        ego.x += ego.v * std::cos(ego.psi) * dt;
        ego.y += ego.v * std::sin(ego.psi) * dt;
        ego.psi = wrap_angle(ego.psi + ego.v / kWheelbase * std::tan(steer) * dt);
        ego.v = std::max(0.0, ego.v + accel * dt);

        ++step_index_;

        StepEvents ev;
        const int lane_now = nearest_lane(ego.y);
        if (lane_now != ego_lane_index_) {
            ev.lane_change_event = true;
            ++lane_change_times_;
            ego_lane_index_ = lane_now;
        }

        bool collided = off_road(ego);
        for (const VehicleState& sv : state_.svs) {
            if (collided) break;
            collided = check_collision(ego.footprint(), sv.footprint());
        }

        if (collided) {
            outcome_ = {OutcomeKind::collision, step_index_};
        } else if (scenario_.goal_region.contains(ego.x, ego.y) && std::abs(lane_offset(ego.y)) < 0.5) {
            outcome_ = {OutcomeKind::success, step_index_};
        } else if (step_index_ >= scenario_.max_steps) {
            outcome_ = {OutcomeKind::timeout, step_index_};
        } else {
            outcome_ = {OutcomeKind::running, step_index_};
        }

        fill_vars(ev);
        last_events_ = ev;
        return {outcome_, ev};
    }

    // Fixed-width observation: row 0 relative to the destination (with the
    // ego's absolute speed), then the nearest SVs, padded to kNObsMax rows.
    Observation observe() const {
        Observation obs;
        const VehicleState& ego = state_.ego;
        obs.rows[0] = {destination_.x - ego.x, destination_.y - ego.y, ego.v, wrap_angle(0.0 - ego.psi)};

        std::vector<int> order(state_.svs.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
        std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
            return sq_dist(state_.svs[static_cast<std::size_t>(a)], ego) < sq_dist(state_.svs[static_cast<std::size_t>(b)], ego);
        });

        for (int r = 0; r < kNObsMax; ++r) {
            if (r < static_cast<int>(order.size())) {
                const VehicleState& sv = state_.svs[static_cast<std::size_t>(order[static_cast<std::size_t>(r)])];
                obs.rows[static_cast<std::size_t>(r + 1)] = {sv.x - ego.x, sv.y - ego.y, sv.v - ego.v,
                                                             wrap_angle(sv.psi - ego.psi)};
            } else {
                obs.rows[static_cast<std::size_t>(r + 1)] = {kPadDistance, 0.0, 0.0, 0.0};
            }
        }
        return obs;
    }

    const StateMatrix& state() const { return state_; }
    const ScenarioConfig& scenario() const { return scenario_; }
    CurriculumId curriculum() const { return curriculum_; }
    EpisodeOutcome outcome() const { return outcome_; }
    int step_index() const { return step_index_; }
    int lane_change_times() const { return lane_change_times_; }
    Vec2 destination() const { return destination_; }
    const StepEvents& last_events() const { return last_events_; }

    int nearest_lane(double y) const {
        const int lane = static_cast<int>(std::lround(y / scenario_.lane_width));
        return std::clamp(lane, 0, scenario_.lane_count - 1);
    }

    double lane_offset(double y) const { return y - scenario_.lane_center_y(nearest_lane(y)); }

    // Centerline polyline of a lane sampled every 5 m. The ramp route ends at
    // the merge zone; main-road routes run past the goal region.
    std::vector<Vec2> lane_route(int lane) const {
        const bool ramp = scenario_.task == Task::merging && lane == 0;
        const double end_x = ramp ? scenario_.merge_zone_end : scenario_.road_length + 30.0;
        std::vector<Vec2> pts;
        for (double x = 0.0; x <= end_x + 1e-9; x += 5.0) pts.push_back({x, scenario_.lane_center_y(lane)});
        return pts;
    }

    // True when a lane change from `from` to `to` is drivable at position x.
    // The ramp is one-way: merging out of it is possible only inside the
    // merge zone, and it can never be entered from the main road.
    bool lane_change_allowed(int from, int to, double x) const {
        if (to < 0 || to >= scenario_.lane_count || to == from) return false;
        if (scenario_.task == Task::merging) {
            if (to == 0) return false;
            if (from == 0) return x >= scenario_.merge_zone_start && x <= scenario_.merge_zone_end;
        }
        return true;
    }

private:
    static double sq_dist(const VehicleState& a, const VehicleState& b) {
        const double dx = a.x - b.x, dy = a.y - b.y;
        return dx * dx + dy * dy;
    }

    bool off_road(const VehicleState& ego) const {
        for (const Vec2& c : ego.footprint().corners()) {
            double y_min = scenario_.road_y_min();
            if (scenario_.task == Task::merging && c.x > scenario_.merge_zone_end) {
                y_min = 0.5 * scenario_.lane_width;  // the ramp has ended
            }
            if (c.y < y_min || c.y > scenario_.road_y_max()) return true;
        }
        return false;
    }

    struct SvAgent {
        MotionMode mode = MotionMode::stationary;
        SvStyle style;
        int lane = 0;
        int target_lane = 0;
        double cooldown = 0.0;  // s until the next lane change may start
    };

    void spawn_svs(Rng& rng) {
        const int n = sv_count_for(scenario_.task, curriculum_.density_level());
        const MotionMode mode = curriculum_.mode();
        constexpr int kMaxAttempts = 400;

        for (int i = 0; i < n; ++i) {
            bool placed = false;
            for (int attempt = 0; attempt < kMaxAttempts && !placed; ++attempt) {
                VehicleState sv;
                int lane;
                if (scenario_.task == Task::overtaking) {
                    lane = i == 0 ? ego_lane_index_
                                  : static_cast<int>(rng.uniform_int(0, scenario_.lane_count - 1));
                    const double ahead = 28.0 + 26.0 * i;
                    sv.x = state_.ego.x + ahead + rng.uniform(-8.0, 12.0);
                } else {
                    lane = 1 + i % 2;
                    sv.x = rng.uniform(scenario_.merge_zone_start - 45.0, scenario_.merge_zone_end + 35.0);
                }
                sv.y = scenario_.lane_center_y(lane);
                sv.v = mode == MotionMode::stationary ? 0.0 : rng.uniform(0.35, 0.55) * scenario_.v_limit;
                sv.psi = 0.0;
                if (sv.x < 0.0 || sv.x > scenario_.road_length) continue;

                bool overlap = spawn_too_close(sv, state_.ego);
                for (const VehicleState& other : state_.svs) {
                    if (overlap) break;
                    overlap = spawn_too_close(sv, other);
                }
                if (overlap) continue;

                SvAgent agent;
                agent.mode = mode;
                agent.lane = agent.target_lane = lane;
                agent.style.desired_speed = rng.uniform(0.6, 1.0) * scenario_.v_limit;
                agent.style.time_headway = rng.uniform(1.0, 2.0);
                agent.style.politeness = rng.uniform(0.2, 0.8);
                agent.style.spawn_speed = sv.v;
                state_.svs.push_back(sv);
                sv_agents_.push_back(agent);
                placed = true;
            }
            if (!placed)
                throw ConfigError("could not place SV " + std::to_string(i) + " without overlap; road too short for density");
        }
    }

    static bool spawn_too_close(const VehicleState& a, const VehicleState& b) {
        // Same-lane spawns keep a bumper gap; other lanes only need no overlap.
        const double dy = std::abs(a.y - b.y);
        const double dx = std::abs(a.x - b.x);
        if (dy < 0.5) return dx < a.length + 8.0;
        return check_collision(a.footprint(), b.footprint());
    }

    SvNeighborhood build_view(std::size_t self_idx) const {
        const VehicleState& self = state_.svs[self_idx];
        const SvAgent& agent = sv_agents_[self_idx];
        SvNeighborhood view;

        const int min_lane = scenario_.task == Task::merging ? 1 : 0;  // SVs stay off the ramp
        view.left_exists = agent.lane + 1 < scenario_.lane_count;
        view.right_exists = agent.lane - 1 >= min_lane;

        auto consider = [&](const VehicleState& other, int other_lane) {
            const double gap = std::abs(other.x - self.x) - 0.5 * (other.length + self.length);
            const bool ahead = other.x > self.x;
            auto update = [&](std::optional<SvLeader>& slot) {
                if (!slot || gap < slot->gap) slot = SvLeader{std::max(gap, 0.0), other.v};
            };
            if (other_lane == agent.lane && ahead) update(view.lead);
            if (other_lane == agent.lane + 1) update(ahead ? view.lead_left : view.follow_left);
            if (other_lane == agent.lane - 1) update(ahead ? view.lead_right : view.follow_right);
        };

        for (std::size_t j = 0; j < state_.svs.size(); ++j) {
            if (j == self_idx) continue;
            consider(state_.svs[j], sv_agents_[j].lane);
        }
        consider(state_.ego, nearest_lane(state_.ego.y));
        return view;
    }

    void advance_svs(double dt) {
        std::vector<SvCommand> commands(sv_agents_.size());
        for (std::size_t i = 0; i < sv_agents_.size(); ++i) {
            const SvAgent& agent = sv_agents_[i];
            const bool changing = agent.lane != agent.target_lane ||
                                  std::abs(state_.svs[i].y - scenario_.lane_center_y(agent.lane)) > 1e-6;
            SvNeighborhood view = build_view(i);
            SvCommand cmd = sv_policy(agent.mode, state_.svs[i], agent.style, view, dt);
            if (changing || agent.cooldown > 0.0) cmd.lane_delta = 0;
            commands[i] = cmd;
        }

        constexpr double kLateralSpeed = 1.75;  // m/s, ~2 s per lane change
        for (std::size_t i = 0; i < sv_agents_.size(); ++i) {
            SvAgent& agent = sv_agents_[i];
            VehicleState& sv = state_.svs[i];
            if (commands[i].lane_delta != 0) {
                agent.target_lane = agent.lane + commands[i].lane_delta;
                agent.cooldown = 4.0;
            }
            agent.cooldown = std::max(0.0, agent.cooldown - dt);

            const double target_y = scenario_.lane_center_y(agent.target_lane);
            double vy = 0.0;
            if (std::abs(sv.y - target_y) > 1e-9) {
                const double dy = target_y - sv.y;
                vy = std::clamp(dy / dt, -kLateralSpeed, kLateralSpeed);
            }
            sv.x += sv.v * dt;
            sv.y += vy * dt;
            sv.v = std::max(0.0, sv.v + commands[i].accel * dt);
            sv.psi = (sv.v > 0.05 || std::abs(vy) > 1e-9) ? std::atan2(vy, std::max(sv.v, 0.5)) : 0.0;
            if (std::abs(sv.y - target_y) < 1e-6) {
                sv.y = target_y;
                agent.lane = agent.target_lane;
            }
        }
    }

    void fill_vars(StepEvents& ev) const {
        dsl::AccessibleVars& v = ev.vars;
        const VehicleState& ego = state_.ego;
        v.v_ego = ego.v;
        v.v_limit = scenario_.v_limit;
        v.dist_to_goal = (destination_ - Vec2{ego.x, ego.y}).norm();
        v.lane_offset = lane_offset(ego.y);
        v.heading_error = wrap_angle(ego.psi);
        double min_gap = kPadDistance;
        for (const VehicleState& sv : state_.svs)
            min_gap = std::min(min_gap, std::sqrt(sq_dist(sv, ego)));
        v.min_gap_sv = std::max(min_gap, 1e-6);
        v.collision = outcome_.kind == OutcomeKind::collision ? 1.0 : 0.0;
        v.success = outcome_.kind == OutcomeKind::success ? 1.0 : 0.0;
        v.timeout = outcome_.kind == OutcomeKind::timeout ? 1.0 : 0.0;
        v.lane_change_event = ev.lane_change_event ? 1.0 : 0.0;
        v.lane_change_times = lane_change_times_;
        v.n_sv = static_cast<double>(state_.svs.size());
        v.step = step_index_;
        v.max_steps = scenario_.max_steps;
    }

    ScenarioConfig scenario_;
    CurriculumId curriculum_;
    StateMatrix state_;
    std::vector<SvAgent> sv_agents_;
    EpisodeOutcome outcome_;
    StepEvents last_events_;
    Vec2 destination_;
    int step_index_ = 0;
    int ego_lane_index_ = 0;
    int lane_change_times_ = 0;
};

}  // namespace autocoach
