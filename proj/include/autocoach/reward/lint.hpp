#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "autocoach/reward/ast.hpp"
#include "autocoach/scenario.hpp"

namespace autocoach::dsl {

enum class LintWarningKind {
    per_step_accumulation_dominates_completion,
    cumulative_counter_not_event_gated,
};

inline const char* to_string(LintWarningKind k) {
    return k == LintWarningKind::per_step_accumulation_dominates_completion
               ? "per_step_accumulation_dominates_completion"
               : "cumulative_counter_not_event_gated";
}

struct LintWarning {
    LintWarningKind kind;
    std::string component;
    std::string message;
};

namespace interval {

inline constexpr double kBig = 1e15;

struct Interval {
    double lo = 0.0;
    double hi = 0.0;

    bool is_zero() const { return lo == 0.0 && hi == 0.0; }
    double magnitude() const { return std::max(std::fabs(lo), std::fabs(hi)); }
};

inline double clamp_big(double x) {
    if (std::isnan(x)) return 0.0;
    return std::clamp(x, -kBig, kBig);
}

inline Interval make(double lo, double hi) { return {clamp_big(lo), clamp_big(hi)}; }

inline Interval hull(Interval a, Interval b) { return {std::min(a.lo, b.lo), std::max(a.hi, b.hi)}; }

inline Interval add(Interval a, Interval b) { return make(a.lo + b.lo, a.hi + b.hi); }
inline Interval sub(Interval a, Interval b) { return make(a.lo - b.hi, a.hi - b.lo); }
inline Interval neg(Interval a) { return {-a.hi, -a.lo}; }

inline Interval mul(Interval a, Interval b) {
    const double p[4] = {a.lo * b.lo, a.lo * b.hi, a.hi * b.lo, a.hi * b.hi};
    return make(std::min({p[0], p[1], p[2], p[3]}), std::max({p[0], p[1], p[2], p[3]}));
}

inline Interval div(Interval a, Interval b) {
    if (b.lo <= 0.0 && b.hi >= 0.0) {
        // Runtime maps x/0 to 0; anything near zero can blow up either way.
        return hull({0.0, 0.0}, {-kBig, kBig});
    }
    const double p[4] = {a.lo / b.lo, a.lo / b.hi, a.hi / b.lo, a.hi / b.hi};
    return make(std::min({p[0], p[1], p[2], p[3]}), std::max({p[0], p[1], p[2], p[3]}));
}

inline Interval compare(Interval a, Interval b, bool (*cmp)(double, double), bool (*cmp_neg)(double, double)) {
    if (cmp(a.hi, b.lo) && cmp(a.lo, b.hi) && cmp(a.hi, b.hi) && cmp(a.lo, b.lo)) return {1.0, 1.0};
    if (cmp_neg(a.lo, b.hi) && cmp_neg(a.hi, b.lo) && cmp_neg(a.lo, b.lo) && cmp_neg(a.hi, b.hi))
        return {0.0, 0.0};
    return {0.0, 1.0};
}

}  // namespace interval

// Documented value ranges of the accessible variables for a scenario. Flags
// are pinned per lint pass, everything else spans its physical range.
struct VarRanges {
    std::array<interval::Interval, kAccessibleVarCount> r{};

    static VarRanges for_scenario(const ScenarioConfig& sc) {
        VarRanges vr;
        auto set = [&](const char* name, double lo, double hi) {
            vr.r[static_cast<std::size_t>(accessible_var_index(name))] = interval::make(lo, hi);
        };
        set("v_ego", 0.0, 1.5 * sc.v_limit);
        set("v_limit", sc.v_limit, sc.v_limit);
        set("dist_to_goal", 0.0, sc.road_length + 50.0);
        set("lane_offset", -0.5 * sc.lane_width - 1.0, 0.5 * sc.lane_width + 1.0);
        set("heading_error", -M_PI, M_PI);
        set("min_gap_sv", 1e-6, 100.0);
        set("collision", 0.0, 1.0);
        set("success", 0.0, 1.0);
        set("timeout", 0.0, 1.0);
        set("lane_change_event", 0.0, 1.0);
        set("lane_change_times", 0.0, sc.max_steps);
        set("N_sv", 0.0, 8.0);
        set("step", 0.0, sc.max_steps);
        set("max_steps", sc.max_steps, sc.max_steps);
        return vr;
    }

    void pin(const char* name, double value) {
        r[static_cast<std::size_t>(accessible_var_index(name))] = {value, value};
    }
};

namespace detail {

inline interval::Interval bound_expr(const RewardProgram& p, int node, const VarRanges& vars,
                                     const std::vector<interval::Interval>& comps) {
    using namespace interval;
    const ExprNode& n = p.nodes[static_cast<std::size_t>(node)];
    auto child = [&](int i) { return bound_expr(p, n.child[i], vars, comps); };
    switch (n.kind) {
        case ExprKind::literal: return {n.literal, n.literal};
        case ExprKind::variable: return vars.r[static_cast<std::size_t>(n.var_index)];
        case ExprKind::component_ref: return comps[static_cast<std::size_t>(n.component_index)];
        case ExprKind::neg: return neg(child(0));
        case ExprKind::add: return add(child(0), child(1));
        case ExprKind::sub: return sub(child(0), child(1));
        case ExprKind::mul: return mul(child(0), child(1));
        case ExprKind::div: return div(child(0), child(1));
        case ExprKind::lt:
            return compare(child(0), child(1), [](double a, double b) { return a < b; },
                           [](double a, double b) { return a >= b; });
        case ExprKind::le:
            return compare(child(0), child(1), [](double a, double b) { return a <= b; },
                           [](double a, double b) { return a > b; });
        case ExprKind::gt:
            return compare(child(0), child(1), [](double a, double b) { return a > b; },
                           [](double a, double b) { return a <= b; });
        case ExprKind::ge:
            return compare(child(0), child(1), [](double a, double b) { return a >= b; },
                           [](double a, double b) { return a < b; });
        case ExprKind::eq: {
            const Interval a = child(0), b = child(1);
            if (a.lo == a.hi && b.lo == b.hi) return a.lo == b.lo ? Interval{1.0, 1.0} : Interval{0.0, 0.0};
            if (a.hi < b.lo || b.hi < a.lo) return {0.0, 0.0};
            return {0.0, 1.0};
        }
        case ExprKind::if_else: {
            const Interval c = child(0);
            if (c.is_zero()) return child(2);
            if (c.lo > 0.0 || c.hi < 0.0) return child(1);
            return hull(child(1), child(2));
        }
        case ExprKind::call:
            switch (n.builtin) {
                case Builtin::abs: {
                    const Interval a = child(0);
                    if (a.lo >= 0.0) return a;
                    if (a.hi <= 0.0) return neg(a);
                    return {0.0, a.magnitude()};
                }
                case Builtin::min: {
                    const Interval a = child(0), b = child(1);
                    return {std::min(a.lo, b.lo), std::min(a.hi, b.hi)};
                }
                case Builtin::max: {
                    const Interval a = child(0), b = child(1);
                    return {std::max(a.lo, b.lo), std::max(a.hi, b.hi)};
                }
                case Builtin::clip: {
                    const Interval x = child(0), lo = child(1), hi = child(2);
                    const Interval lower = {std::max(x.lo, lo.lo), std::max(x.hi, lo.hi)};
                    return {std::min(lower.lo, hi.lo), std::min(lower.hi, hi.hi)};
                }
                case Builtin::exp: return make(std::exp(std::min(child(0).lo, 700.0)), std::exp(std::min(child(0).hi, 700.0)));
                case Builtin::tanh: return {std::tanh(child(0).lo), std::tanh(child(0).hi)};
                case Builtin::sqrt: {
                    const Interval a = child(0);
                    return {std::sqrt(std::max(a.lo, 0.0)), std::sqrt(std::max(a.hi, 0.0))};
                }
            }
            return {-kBig, kBig};
    }
    return {-kBig, kBig};
}

inline std::vector<interval::Interval> bound_components(const RewardProgram& p, const VarRanges& vars) {
    std::vector<interval::Interval> comps;
    comps.reserve(p.components.size());
    for (const Component& c : p.components) comps.push_back(bound_expr(p, c.root, vars, comps));
    return comps;
}

inline bool references_var(const RewardProgram& p, int node, int var_index) {
    const ExprNode& n = p.nodes[static_cast<std::size_t>(node)];
    if (n.kind == ExprKind::variable && n.var_index == var_index) return true;
    if (n.kind == ExprKind::component_ref)
        return references_var(p, p.components[static_cast<std::size_t>(n.component_index)].root, var_index);
    for (int i = 0; i < n.child_count; ++i)
        if (references_var(p, n.child[i], var_index)) return true;
    return false;
}

inline std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

}  // namespace detail

// Interval-arithmetic screening for the two classic reward-design flaws:
// a per-step term whose accumulated bound exceeds the completion reward, and
// a cumulative counter used in a term that is not gated by its event flag.
inline std::vector<LintWarning> lint(const RewardProgram& program, const ScenarioConfig& scenario) {
    using interval::Interval;
    std::vector<LintWarning> warnings;

    // Running steps: all terminal flags pinned to zero.
    VarRanges running = VarRanges::for_scenario(scenario);
    running.pin("collision", 0.0);
    running.pin("success", 0.0);
    running.pin("timeout", 0.0);
    const auto run_bounds = detail::bound_components(program, running);
    const Interval run_total = detail::bound_expr(program, program.total_root, running, run_bounds);

    // Success step: how much terminal reward does completion actually add?
    VarRanges succ = running;
    succ.pin("success", 1.0);
    const auto succ_bounds = detail::bound_components(program, succ);
    const Interval succ_total = detail::bound_expr(program, program.total_root, succ, succ_bounds);
    const double completion_bonus = std::max(0.0, succ_total.hi - run_total.hi);

    for (std::size_t i = 0; i < program.components.size(); ++i) {
        const Interval b = run_bounds[i];
        if (b.is_zero()) continue;  // terminal- or event-gated at running steps
        const double accumulated = b.magnitude() * scenario.max_steps;
        if (accumulated > completion_bonus) {
            warnings.push_back(
                {LintWarningKind::per_step_accumulation_dominates_completion, program.components[i].name,
                 "component '" + program.components[i].name + "' can accumulate to " +
                     detail::fmt(accumulated) + " over " + std::to_string(scenario.max_steps) +
                     " steps, exceeding the completion reward bound of " + detail::fmt(completion_bonus)});
        }
    }

    // Counter misuse: lane_change_times contributing while lane_change_event=0.
    const int counter = accessible_var_index("lane_change_times");
    VarRanges no_event = running;
    no_event.pin("lane_change_event", 0.0);
    const auto no_event_bounds = detail::bound_components(program, no_event);
    for (std::size_t i = 0; i < program.components.size(); ++i) {
        if (!detail::references_var(program, program.components[i].root, counter)) continue;
        if (no_event_bounds[i].is_zero()) continue;  // vanishes without the event
        warnings.push_back({LintWarningKind::cumulative_counter_not_event_gated, program.components[i].name,
                            "component '" + program.components[i].name +
                                "' uses cumulative lane_change_times without gating on "
                                "lane_change_event; penalties should be event-triggered"});
    }
    return warnings;
}

}  // namespace autocoach::dsl
