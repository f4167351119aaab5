#include <catch2/catch_amalgamated.hpp>

#include "autocoach/geometry.hpp"
#include "autocoach/rng.hpp"

using namespace autocoach;

TEST_CASE("identical rectangles collide") {
    OrientedRect r{{3.0, -1.0}, 0.7, 4.0, 2.0};
    REQUIRE(check_collision(r, r));
}

TEST_CASE("axis-aligned rectangles separated on one axis do not collide") {
    OrientedRect a{{0.0, 0.0}, 0.0, 4.0, 2.0};
    OrientedRect b{{10.0, 0.0}, 0.0, 4.0, 2.0};  // gap of 6 on x
    REQUIRE_FALSE(check_collision(a, b));
    REQUIRE_FALSE(check_collision(b, a));

    OrientedRect c{{0.0, 2.01}, 0.0, 4.0, 2.0};  // just past touching on y
    REQUIRE_FALSE(check_collision(a, c));
    OrientedRect d{{0.0, 1.99}, 0.0, 4.0, 2.0};
    REQUIRE(check_collision(a, d));
}

TEST_CASE("collision test is symmetric") {
    Rng rng(101);
    for (int i = 0; i < 2000; ++i) {
        OrientedRect a{{rng.uniform(-4, 4), rng.uniform(-4, 4)}, rng.uniform(-M_PI, M_PI),
                       rng.uniform(0.5, 3.0), rng.uniform(0.5, 3.0)};
        OrientedRect b{{rng.uniform(-4, 4), rng.uniform(-4, 4)}, rng.uniform(-M_PI, M_PI),
                       rng.uniform(0.5, 3.0), rng.uniform(0.5, 3.0)};
        REQUIRE(check_collision(a, b) == check_collision(b, a));
    }
}

namespace {

// Dense point-sampling oracle: walks a grid over rectangle a and reports
// whether any sample falls inside b.
bool sampled_overlap(const OrientedRect& a, const OrientedRect& b, double cell) {
    const double c = std::cos(a.heading), s = std::sin(a.heading);
    for (double lx = -0.5 * a.length; lx <= 0.5 * a.length; lx += cell) {
        for (double ly = -0.5 * a.width; ly <= 0.5 * a.width; ly += cell) {
            const Vec2 p{a.center.x + lx * c - ly * s, a.center.y + lx * s + ly * c};
            if (contains_point(b, p)) return true;
        }
    }
    return false;
}

// Minimum SAT margin: how deep the projections overlap (negative = separated).
double sat_margin(const OrientedRect& a, const OrientedRect& b) {
    auto project = [](const OrientedRect& r, Vec2 axis, double& lo, double& hi) {
        const auto cs = r.corners();
        lo = hi = cs[0].dot(axis);
        for (int i = 1; i < 4; ++i) {
            lo = std::min(lo, cs[i].dot(axis));
            hi = std::max(hi, cs[i].dot(axis));
        }
    };
    const double ca = std::cos(a.heading), sa = std::sin(a.heading);
    const double cb = std::cos(b.heading), sb = std::sin(b.heading);
    const Vec2 axes[4] = {{ca, sa}, {-sa, ca}, {cb, sb}, {-sb, cb}};
    double margin = 1e18;
    for (const Vec2& axis : axes) {
        double alo, ahi, blo, bhi;
        project(a, axis, alo, ahi);
        project(b, axis, blo, bhi);
        margin = std::min(margin, std::min(ahi - blo, bhi - alo));
    }
    return margin;
}

}  // namespace

TEST_CASE("separating-axis result agrees with point-sampling oracle") {
    constexpr double kCell = 0.01;
    Rng rng(7);
    int tested = 0, disagreements_far_from_boundary = 0;
    for (int i = 0; i < 3000; ++i) {
        OrientedRect a{{0.0, 0.0}, rng.uniform(-M_PI, M_PI), rng.uniform(0.4, 2.0), rng.uniform(0.4, 2.0)};
        OrientedRect b{{rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0)}, rng.uniform(-M_PI, M_PI),
                       rng.uniform(0.4, 2.0), rng.uniform(0.4, 2.0)};
        const bool sat = check_collision(a, b);
        const bool sampled = sampled_overlap(a, b, kCell);
        ++tested;
        if (sat != sampled) {
            // Disagreement is only legitimate within one sampling cell of tangency.
            if (std::abs(sat_margin(a, b)) > kCell * M_SQRT2) ++disagreements_far_from_boundary;
        }
    }
    REQUIRE(tested == 3000);
    REQUIRE(disagreements_far_from_boundary == 0);
}

TEST_CASE("wrap_angle maps into (-pi, pi]") {
    REQUIRE(wrap_angle(0.0) == 0.0);
    REQUIRE(wrap_angle(M_PI) == Catch::Approx(M_PI));
    REQUIRE(wrap_angle(-M_PI) == Catch::Approx(M_PI));
    REQUIRE(wrap_angle(3.0 * M_PI) == Catch::Approx(M_PI));
    REQUIRE(wrap_angle(2.5 * M_PI) == Catch::Approx(0.5 * M_PI));
    REQUIRE(wrap_angle(-2.5 * M_PI) == Catch::Approx(-0.5 * M_PI));
}
