#pragma once

#include <array>
#include <cmath>

namespace autocoach {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    double dot(Vec2 o) const { return x * o.x + y * o.y; }
    double norm() const { return std::hypot(x, y); }
};

// Wraps an angle to (-pi, pi].
inline double wrap_angle(double a) {
    a = std::fmod(a, 2.0 * M_PI);
    if (a <= -M_PI) a += 2.0 * M_PI;
    if (a > M_PI) a -= 2.0 * M_PI;
    return a;
}

// Rectangle given by center, heading of its long axis, and full extents.
struct OrientedRect {
    Vec2 center;
    double heading = 0.0;
    double length = 1.0;
    double width = 1.0;

    std::array<Vec2, 4> corners() const {
        const double c = std::cos(heading), s = std::sin(heading);
        const Vec2 ax{c, s};          // along length
        const Vec2 ay{-s, c};         // along width
        const Vec2 hl = ax * (0.5 * length);
        const Vec2 hw = ay * (0.5 * width);
        return {center + hl + hw, center + hl - hw, center - hl - hw, center - hl + hw};
    }
};

namespace detail {

inline bool separated_on_axis(const OrientedRect& a, const OrientedRect& b, Vec2 axis) {
    auto project = [&](const OrientedRect& r, double& lo, double& hi) {
        const auto cs = r.corners();
        lo = hi = cs[0].dot(axis);
        for (int i = 1; i < 4; ++i) {
            const double p = cs[i].dot(axis);
            lo = std::min(lo, p);
            hi = std::max(hi, p);
        }
    };
    double alo, ahi, blo, bhi;
    project(a, alo, ahi);
    project(b, blo, bhi);
    return ahi < blo || bhi < alo;
}

}  // namespace detail

// Separating-axis intersection test for two oriented rectangles. Touching
// boundaries count as intersecting. Symmetric in its arguments.
inline bool check_collision(const OrientedRect& a, const OrientedRect& b) {
    const double ca = std::cos(a.heading), sa = std::sin(a.heading);
    const double cb = std::cos(b.heading), sb = std::sin(b.heading);
    const Vec2 axes[4] = {{ca, sa}, {-sa, ca}, {cb, sb}, {-sb, cb}};
    for (const Vec2& axis : axes) {
        if (detail::separated_on_axis(a, b, axis)) return false;
    }
    return true;
}

// Point-in-rectangle test in the rectangle's own frame.
inline bool contains_point(const OrientedRect& r, Vec2 p) {
    const double c = std::cos(r.heading), s = std::sin(r.heading);
    const Vec2 d = p - r.center;
    const double lx = d.x * c + d.y * s;
    const double ly = -d.x * s + d.y * c;
    return std::abs(lx) <= 0.5 * r.length && std::abs(ly) <= 0.5 * r.width;
}

}  // namespace autocoach
