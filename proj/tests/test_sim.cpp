#include <catch2/catch_amalgamated.hpp>

#include "autocoach/controller.hpp"
#include "autocoach/sim.hpp"

using namespace autocoach;

namespace {

bool states_equal(const StateMatrix& a, const StateMatrix& b) {
    auto eq = [](const VehicleState& u, const VehicleState& v) {
        return u.x == v.x && u.y == v.y && u.v == v.v && u.psi == v.psi;
    };
    if (!eq(a.ego, b.ego) || a.svs.size() != b.svs.size()) return false;
    for (std::size_t i = 0; i < a.svs.size(); ++i)
        if (!eq(a.svs[i], b.svs[i])) return false;
    return true;
}

}  // namespace

TEST_CASE("reset spawns the density-mapped SV count") {
    Environment env;
    const auto merging = default_merging_scenario();
    REQUIRE(env.reset(merging, {1, 1}, 7).svs.size() == 2);
    REQUIRE(env.reset(merging, {2, 1}, 7).svs.size() == 4);
    REQUIRE(env.reset(merging, {3, 1}, 7).svs.size() == 8);

    const auto overtaking = default_overtaking_scenario();
    REQUIRE(env.reset(overtaking, {0, 0}, 3).svs.size() == 0);
    REQUIRE(env.reset(overtaking, {1, 2}, 3).svs.size() == 1);
    REQUIRE(env.reset(overtaking, {2, 2}, 3).svs.size() == 2);
    REQUIRE(env.reset(overtaking, {3, 2}, 3).svs.size() == 3);
}

TEST_CASE("reset is deterministic in (scenario, curriculum, seed)") {
    Environment a, b;
    const auto sc = default_merging_scenario();
    const StateMatrix& sa = a.reset(sc, {3, 2}, 1234);
    const StateMatrix& sb = b.reset(sc, {3, 2}, 1234);
    REQUIRE(states_equal(sa, sb));

    const StateMatrix& sc2 = b.reset(sc, {3, 2}, 1235);
    REQUIRE_FALSE(states_equal(sa, sc2));
}

TEST_CASE("empty density is one degenerate curriculum across motion modes") {
    Environment a, b, c;
    const auto sc = default_overtaking_scenario();
    const StateMatrix& s0 = a.reset(sc, {0, 0}, 99);
    const StateMatrix& s1 = b.reset(sc, {0, 1}, 99);
    const StateMatrix& s2 = c.reset(sc, {0, 2}, 99);
    REQUIRE(states_equal(s0, s1));
    REQUIRE(states_equal(s0, s2));
}

TEST_CASE("no SV spawns overlapping another vehicle") {
    Environment env;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const StateMatrix& s = env.reset(default_merging_scenario(), {3, 2}, seed);
        for (std::size_t i = 0; i < s.svs.size(); ++i) {
            REQUIRE_FALSE(check_collision(s.ego.footprint(), s.svs[i].footprint()));
            for (std::size_t j = i + 1; j < s.svs.size(); ++j)
                REQUIRE_FALSE(check_collision(s.svs[i].footprint(), s.svs[j].footprint()));
        }
    }
}

TEST_CASE("straight-line kinematics advance x by v*dt") {
    Environment env;
    auto sc = default_overtaking_scenario();
    env.reset(sc, {0, 0}, 1);
    // Zero accel cancels spawn speed effects: set up via a long brake first.
    // Instead check the increment directly from the current state.
    const double x0 = env.state().ego.x;
    const double v0 = env.state().ego.v;
    env.step(0.0, 0.0);
    REQUIRE(env.state().ego.x == Catch::Approx(x0 + v0 * sc.dt).margin(1e-12));
    REQUIRE(env.state().ego.v == Catch::Approx(v0).margin(1e-12));  // accel = 0 conserves speed
    REQUIRE(env.state().ego.psi == 0.0);                            // steer = 0 conserves heading
}

TEST_CASE("driving into the lead SV terminates as collision") {
    // Density low spawns the first SV stationary in the ego's lane; full
    // throttle straight ahead must end in an overlap.
    Environment env;
    auto sc = default_overtaking_scenario();
    sc.max_steps = 500;
    env.reset(sc, {1, 0}, 2);
    EpisodeOutcome out;
    for (int i = 0; i < 500; ++i) {
        auto [o, ev] = env.step(3.0, 0.0);
        out = o;
        if (out.terminal()) break;
    }
    REQUIRE(out.kind == OutcomeKind::collision);
    REQUIRE(check_collision(env.state().ego.footprint(), env.state().svs[0].footprint()));
}

TEST_CASE("step after terminal outcome is a usage error") {
    Environment env;
    auto sc = default_overtaking_scenario();
    sc.max_steps = 3;
    env.reset(sc, {0, 0}, 5);
    env.step(0.0, 0.0);
    env.step(0.0, 0.0);
    auto [out, ev] = env.step(0.0, 0.0);
    REQUIRE(out.kind == OutcomeKind::timeout);
    REQUIRE_THROWS_AS(env.step(0.0, 0.0), UsageError);
}

TEST_CASE("constant steer traces a closed circle") {
    // One full revolution of the bicycle model returns to the start within
    // integration tolerance. Angular rate w = v/L*tan(steer).
    Environment env;
    auto sc = default_overtaking_scenario();
    sc.max_steps = 100000;
    sc.road_length = 1e6;  // keep goal/timeout out of the way
    sc.goal_region = {9e5, 9.1e5, -100.0, 100.0};
    sc.lane_width = 1000.0;  // effectively no road edges
    env.reset(sc, {0, 0}, 11);

    const double steer = 0.2;
    const double v = env.state().ego.v;
    const double w = v / kWheelbase * std::tan(steer);
    const int steps = static_cast<int>(std::lround(2.0 * M_PI / (w * sc.dt)));
    const double x0 = env.state().ego.x, y0 = env.state().ego.y;

    for (int i = 0; i < steps; ++i) env.step(0.0, steer);

    // Explicit Euler drift is O(dt) per revolution of radius v/w.
    const double radius = v / w;
    const double tol = radius * w * sc.dt * 2.0 * M_PI;  // one-step arc error times step count
    REQUIRE(std::abs(env.state().ego.x - x0) < tol);
    REQUIRE(std::abs(env.state().ego.y - y0) < tol);
}

TEST_CASE("observation row 0 is destination-relative with absolute speed") {
    Environment env;
    const auto sc = default_overtaking_scenario();
    env.reset(sc, {0, 0}, 21);
    const Observation obs = env.observe();
    const VehicleState& ego = env.state().ego;
    REQUIRE(obs.rows[0][0] == Catch::Approx(env.destination().x - ego.x));
    REQUIRE(obs.rows[0][1] == Catch::Approx(env.destination().y - ego.y));
    REQUIRE(obs.rows[0][2] == ego.v);
    REQUIRE(obs.rows[0][3] == Catch::Approx(-ego.psi));
}

TEST_CASE("observation pads absent SV rows with the sentinel") {
    Environment env;
    env.reset(default_overtaking_scenario(), {1, 1}, 33);  // 1 SV, N_obs_max = 4
    const Observation obs = env.observe();
    for (int r = 2; r <= kNObsMax; ++r) {
        REQUIRE(obs.rows[static_cast<std::size_t>(r)][0] == kPadDistance);
        REQUIRE(obs.rows[static_cast<std::size_t>(r)][1] == 0.0);
        REQUIRE(obs.rows[static_cast<std::size_t>(r)][2] == 0.0);
        REQUIRE(obs.rows[static_cast<std::size_t>(r)][3] == 0.0);
    }
}

TEST_CASE("observation keeps the nearest SVs, sorted") {
    // 8 SVs (merging high): only the 4 nearest appear, ordered by distance.
    Environment env;
    env.reset(default_merging_scenario(), {3, 1}, 17);
    const Observation obs = env.observe();
    const VehicleState& ego = env.state().ego;

    std::vector<double> dists;
    for (const auto& sv : env.state().svs) dists.push_back(std::hypot(sv.x - ego.x, sv.y - ego.y));
    std::sort(dists.begin(), dists.end());

    for (int r = 1; r <= kNObsMax; ++r) {
        const auto& row = obs.rows[static_cast<std::size_t>(r)];
        const double d = std::hypot(row[0], row[1]);
        REQUIRE(d == Catch::Approx(dists[static_cast<std::size_t>(r - 1)]));
    }
}

TEST_CASE("observation width is constant across densities") {
    Environment env;
    for (int density = 0; density <= 3; ++density) {
        env.reset(default_merging_scenario(), {density, 1}, 3);
        REQUIRE(env.observe().rows.size() == kNObsMax + 1);
    }
}

TEST_CASE("sv_policy stationary holds still") {
    VehicleState sv;
    sv.v = 0.0;
    const SvCommand cmd = sv_policy(MotionMode::stationary, sv, {}, {}, 0.1);
    REQUIRE(cmd.accel == 0.0);
    REQUIRE(cmd.lane_delta == 0);
}

TEST_CASE("sv_policy interactive free road follows the IDM free term") {
    // Hand evaluation: a = a_max * (1 - (v/v0)^4) with a_max = 1.8.
    VehicleState sv;
    sv.v = 6.0;
    SvStyle style;
    style.desired_speed = 12.0;
    const SvCommand cmd = sv_policy(MotionMode::interactive, sv, style, {}, 0.1);
    const double expected = 1.8 * (1.0 - std::pow(6.0 / 12.0, 4.0));  // = 1.8 * 0.9375
    REQUIRE(cmd.accel == Catch::Approx(expected).margin(1e-12));
    REQUIRE(expected == Catch::Approx(1.6875));
}

TEST_CASE("constant_velocity SVs never change lanes over a long rollout") {
    Environment env;
    auto sc = default_merging_scenario();
    sc.max_steps = 1000;
    env.reset(sc, {2, 1}, 13);
    std::vector<double> spawn_y;
    for (const auto& sv : env.state().svs) spawn_y.push_back(sv.y);
    for (int i = 0; i < 1000; ++i) {
        auto [out, ev] = env.step(0.0, 0.0);
        for (std::size_t k = 0; k < env.state().svs.size(); ++k)
            REQUIRE(env.state().svs[k].y == spawn_y[k]);
        if (out.terminal()) break;
    }
}

TEST_CASE("trajectories are bit-identical under a fixed control sequence") {
    auto rollout = [](std::uint64_t seed) {
        Environment env;
        env.reset(default_merging_scenario(), {3, 2}, seed);
        std::vector<double> trace;
        Rng ctl(derive_seed(seed, "controls"));
        for (int i = 0; i < 150; ++i) {
            auto [out, ev] = env.step(ctl.uniform(-2.0, 2.0), ctl.uniform(-0.2, 0.2));
            trace.push_back(env.state().ego.x);
            trace.push_back(env.state().ego.y);
            for (const auto& sv : env.state().svs) {
                trace.push_back(sv.x);
                trace.push_back(sv.y);
                trace.push_back(sv.v);
            }
            if (out.terminal()) break;
        }
        return trace;
    };
    REQUIRE(rollout(4242) == rollout(4242));
}

TEST_CASE("reward variables reflect the environment") {
    Environment env;
    const auto sc = default_merging_scenario();
    env.reset(sc, {1, 1}, 8);
    auto [out, ev] = env.step(0.0, 0.0);
    REQUIRE(ev.vars.v_limit == sc.v_limit);
    REQUIRE(ev.vars.n_sv == 2.0);
    REQUIRE(ev.vars.min_gap_sv > 0.0);
    REQUIRE(ev.vars.min_gap_sv < kPadDistance + 1e-9);
    REQUIRE(ev.vars.step == 1.0);
    REQUIRE(ev.vars.max_steps == sc.max_steps);
    REQUIRE(ev.vars.collision + ev.vars.success + ev.vars.timeout <= 1.0);

    Environment empty_env;
    empty_env.reset(default_overtaking_scenario(), {0, 0}, 8);
    auto [out2, ev2] = empty_env.step(0.0, 0.0);
    REQUIRE(ev2.vars.min_gap_sv == kPadDistance);
    REQUIRE(ev2.vars.n_sv == 0.0);
}
