#pragma once

// Test-only support for the reward DSL: an independently written tree-walk
// interpreter used as an oracle, and a grammar-driven program fuzzer. The
// oracle deliberately shares nothing with the compiled stack-machine path
// beyond the parsed AST and the documented semantics.

#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "autocoach/reward_dsl.hpp"
#include "autocoach/rng.hpp"

namespace dsl_test {

using namespace autocoach;
using dsl::AccessibleVars;
using dsl::RewardProgram;

struct OracleResult {
    bool ok = false;
    double total = 0.0;
    std::vector<double> components;
    bool div_by_zero = false;
    std::string error_kind;       // "" | "domain_sqrt" | "non_finite"
    std::string error_component;
};

class TreeWalkOracle {
public:
    explicit TreeWalkOracle(const RewardProgram& p) : p_(p) {}

    OracleResult run(const AccessibleVars& vars) {
        vars_ = &vars;
        OracleResult res;
        comp_values_.assign(p_.components.size(), 0.0);
        failed_ = false;
        div_by_zero_ = false;
        for (std::size_t i = 0; i < p_.components.size(); ++i) {
            where_ = p_.components[i].name;
            const double v = walk(p_.components[i].root);
            if (failed_) return fail_result(res);
            if (!std::isfinite(v)) {
                res.error_kind = "non_finite";
                res.error_component = where_;
                res.div_by_zero = div_by_zero_;
                return res;
            }
            comp_values_[i] = v;
        }
        where_ = "total";
        const double total = walk(p_.total_root);
        if (failed_) return fail_result(res);
        if (!std::isfinite(total)) {
            res.error_kind = "non_finite";
            res.error_component = "total";
            res.div_by_zero = div_by_zero_;
            return res;
        }
        res.ok = true;
        res.total = total;
        res.components = comp_values_;
        res.div_by_zero = div_by_zero_;
        return res;
    }

private:
    OracleResult fail_result(OracleResult res) {
        res.error_kind = error_kind_;
        res.error_component = error_component_;
        res.div_by_zero = div_by_zero_;
        return res;
    }

    double walk(int idx) {
        if (failed_) return 0.0;
        const dsl::ExprNode& n = p_.nodes[static_cast<std::size_t>(idx)];
        using dsl::ExprKind;
        switch (n.kind) {
            case ExprKind::literal: return n.literal;
            case ExprKind::variable: return dsl::accessible_var_value(*vars_, n.var_index);
            case ExprKind::component_ref: return comp_values_[static_cast<std::size_t>(n.component_index)];
            case ExprKind::neg: return -walk(n.child[0]);
            case ExprKind::add: {
                const double a = walk(n.child[0]);
                return a + walk(n.child[1]);
            }
            case ExprKind::sub: {
                const double a = walk(n.child[0]);
                return a - walk(n.child[1]);
            }
            case ExprKind::mul: {
                const double a = walk(n.child[0]);
                return a * walk(n.child[1]);
            }
            case ExprKind::div: {
                const double a = walk(n.child[0]);
                const double b = walk(n.child[1]);
                if (failed_) return 0.0;
                if (b == 0.0) {
                    div_by_zero_ = true;
                    return 0.0;
                }
                return a / b;
            }
            case ExprKind::lt: {
                const double a = walk(n.child[0]);
                return a < walk(n.child[1]) ? 1.0 : 0.0;
            }
            case ExprKind::le: {
                const double a = walk(n.child[0]);
                return a <= walk(n.child[1]) ? 1.0 : 0.0;
            }
            case ExprKind::gt: {
                const double a = walk(n.child[0]);
                return a > walk(n.child[1]) ? 1.0 : 0.0;
            }
            case ExprKind::ge: {
                const double a = walk(n.child[0]);
                return a >= walk(n.child[1]) ? 1.0 : 0.0;
            }
            case ExprKind::eq: {
                const double a = walk(n.child[0]);
                return a == walk(n.child[1]) ? 1.0 : 0.0;
            }
            case ExprKind::if_else:
                return walk(n.child[0]) != 0.0 ? walk(n.child[1]) : walk(n.child[2]);
            case ExprKind::call:
                switch (n.builtin) {
                    case dsl::Builtin::abs: return std::fabs(walk(n.child[0]));
                    case dsl::Builtin::min: {
                        const double a = walk(n.child[0]);
                        return std::fmin(a, walk(n.child[1]));
                    }
                    case dsl::Builtin::max: {
                        const double a = walk(n.child[0]);
                        return std::fmax(a, walk(n.child[1]));
                    }
                    case dsl::Builtin::clip: {
                        const double x = walk(n.child[0]);
                        const double lo = walk(n.child[1]);
                        const double hi = walk(n.child[2]);
                        return std::fmin(std::fmax(x, lo), hi);
                    }
                    case dsl::Builtin::exp: return std::exp(walk(n.child[0]));
                    case dsl::Builtin::tanh: return std::tanh(walk(n.child[0]));
                    case dsl::Builtin::sqrt: {
                        const double a = walk(n.child[0]);
                        if (a < 0.0) {
                            failed_ = true;
                            error_kind_ = "domain_sqrt";
                            error_component_ = where_;
                            return 0.0;
                        }
                        return std::sqrt(a);
                    }
                }
                return 0.0;
        }
        return 0.0;
    }

    const RewardProgram& p_;
    const AccessibleVars* vars_ = nullptr;
    std::vector<double> comp_values_;
    std::string where_;
    bool failed_ = false;
    bool div_by_zero_ = false;
    std::string error_kind_;
    std::string error_component_;
};

// ---------------------------------------------------------------------------
// Grammar-driven fuzzing

inline std::string random_number(Rng& rng) {
    switch (rng.uniform_int(0, 4)) {
        case 0: return std::to_string(rng.uniform_int(0, 20));
        case 1: {
            char buf[32];
            std::snprintf(buf, sizeof(buf), "%.3f", rng.uniform(0.0, 10.0));
            return buf;
        }
        case 2: {
            char buf[32];
            std::snprintf(buf, sizeof(buf), "%.1f", rng.uniform(0.0, 100.0));
            return buf;
        }
        case 3: return "0";
        default: {
            char buf[32];
            std::snprintf(buf, sizeof(buf), "%de-%d", int(rng.uniform_int(1, 9)), int(rng.uniform_int(0, 3)));
            return buf;
        }
    }
}

inline std::string random_expr(Rng& rng, int depth, int n_prev_components) {
    const bool leaf = depth <= 0 || rng.uniform() < 0.3;
    if (leaf) {
        const int pick = static_cast<int>(rng.uniform_int(0, n_prev_components > 0 ? 2 : 1));
        if (pick == 0) return random_number(rng);
        if (pick == 1) {
            const int v = static_cast<int>(rng.uniform_int(0, dsl::kAccessibleVarCount - 1));
            return std::string(dsl::kAccessibleVarNames[static_cast<std::size_t>(v)]);
        }
        return "comp" + std::to_string(rng.uniform_int(0, n_prev_components - 1));
    }
    switch (rng.uniform_int(0, 9)) {
        case 0:
        case 1:
            return "(" + random_expr(rng, depth - 1, n_prev_components) + " " +
                   std::vector<std::string>{"+", "-", "*", "/"}[static_cast<std::size_t>(rng.uniform_int(0, 3))] +
                   " " + random_expr(rng, depth - 1, n_prev_components) + ")";
        case 2:
            return "(-" + random_expr(rng, depth - 1, n_prev_components) + ")";
        case 3:
            return "(" + random_expr(rng, depth - 1, n_prev_components) + " " +
                   std::vector<std::string>{"<", "<=", ">", ">=", "=="}[static_cast<std::size_t>(rng.uniform_int(0, 4))] +
                   " " + random_expr(rng, depth - 1, n_prev_components) + ")";
        case 4:
            return "(if " + random_expr(rng, depth - 1, n_prev_components) + " then " +
                   random_expr(rng, depth - 1, n_prev_components) + " else " +
                   random_expr(rng, depth - 1, n_prev_components) + ")";
        case 5: {
            const char* fn[] = {"abs", "exp", "tanh", "sqrt"};
            return std::string(fn[rng.uniform_int(0, 3)]) + "(" +
                   random_expr(rng, depth - 1, n_prev_components) + ")";
        }
        case 6: {
            const char* fn[] = {"min", "max"};
            return std::string(fn[rng.uniform_int(0, 1)]) + "(" +
                   random_expr(rng, depth - 1, n_prev_components) + ", " +
                   random_expr(rng, depth - 1, n_prev_components) + ")";
        }
        case 7:
            return "clip(" + random_expr(rng, depth - 1, n_prev_components) + ", " +
                   random_expr(rng, depth - 1, n_prev_components) + ", " +
                   random_expr(rng, depth - 1, n_prev_components) + ")";
        default:
            return random_expr(rng, depth - 1, n_prev_components);
    }
}

inline std::string random_program(Rng& rng) {
    std::ostringstream os;
    const int n_components = static_cast<int>(rng.uniform_int(0, 6));
    for (int i = 0; i < n_components; ++i) {
        if (rng.uniform() < 0.2) os << "# comment " << i << "\n";
        os << "comp" << i << " = " << random_expr(rng, static_cast<int>(rng.uniform_int(1, 4)), i) << "\n";
        if (rng.uniform() < 0.15) os << "\n";
    }
    os << "total = " << random_expr(rng, static_cast<int>(rng.uniform_int(1, 4)), n_components) << "\n";
    return os.str();
}

inline AccessibleVars random_vars(Rng& rng) {
    AccessibleVars v;
    v.v_ego = rng.uniform(0.0, 20.0);
    v.v_limit = rng.uniform() < 0.05 ? 0.0 : rng.uniform(5.0, 20.0);  // exercise x/0
    v.dist_to_goal = rng.uniform(0.0, 300.0);
    v.lane_offset = rng.uniform(-2.0, 2.0);
    v.heading_error = rng.uniform(-M_PI, M_PI);
    v.min_gap_sv = rng.uniform(0.5, 100.0);
    v.collision = rng.bernoulli(0.1) ? 1.0 : 0.0;
    v.success = rng.bernoulli(0.1) ? 1.0 : 0.0;
    v.timeout = rng.bernoulli(0.1) ? 1.0 : 0.0;
    v.lane_change_event = rng.bernoulli(0.2) ? 1.0 : 0.0;
    v.lane_change_times = static_cast<double>(rng.uniform_int(0, 12));
    v.n_sv = static_cast<double>(rng.uniform_int(0, 8));
    v.step = static_cast<double>(rng.uniform_int(0, 300));
    v.max_steps = 300.0;
    return v;
}

// Compares the compiled interpreter against the oracle on one program and
// one assignment. Returns an empty string on agreement, a description on
// mismatch. Values must agree bit-for-bit.
inline std::string compare_once(const dsl::CompiledReward& compiled, TreeWalkOracle& oracle,
                                const AccessibleVars& vars) {
    const dsl::EvalResult main = compiled.evaluate(vars);
    const OracleResult ref = oracle.run(vars);

    auto bits = [](double x) { return std::bit_cast<std::uint64_t>(x); };

    if (main.ok() != ref.ok) return "ok-status mismatch";
    if (!main.ok()) {
        const std::string main_kind = dsl::to_string(main.error->kind);
        if (main_kind != ref.error_kind) return "error kind mismatch: " + main_kind + " vs " + ref.error_kind;
        if (main.error->component != ref.error_component)
            return "error component mismatch: " + main.error->component + " vs " + ref.error_component;
        return "";
    }
    if (bits(main.breakdown->total) != bits(ref.total)) return "total differs bitwise";
    if (main.breakdown->components.size() != ref.components.size()) return "component count differs";
    for (std::size_t i = 0; i < ref.components.size(); ++i)
        if (bits(main.breakdown->components[i].second) != bits(ref.components[i]))
            return "component " + main.breakdown->components[i].first + " differs bitwise";
    if (main.diagnostics.div_by_zero != ref.div_by_zero) return "div-by-zero diagnostic mismatch";
    return "";
}

}  // namespace dsl_test
