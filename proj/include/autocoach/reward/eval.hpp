#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "autocoach/reward/ast.hpp"

namespace autocoach::dsl {

enum class EvalErrorKind { domain_sqrt, non_finite };

inline const char* to_string(EvalErrorKind k) {
    return k == EvalErrorKind::domain_sqrt ? "domain_sqrt" : "non_finite";
}

struct EvalError {
    EvalErrorKind kind = EvalErrorKind::non_finite;
    std::string component;  // offending component, or "total"
    std::string message;
};

struct RewardBreakdown {
    double total = 0.0;
    std::vector<std::pair<std::string, double>> components;  // declaration order

    const double* component(const std::string& name) const {
        for (const auto& [n, v] : components)
            if (n == name) return &v;
        return nullptr;
    }
};

struct EvalDiagnostics {
    bool div_by_zero = false;
    std::vector<std::string> div_by_zero_components;
};

struct EvalResult {
    std::optional<RewardBreakdown> breakdown;
    std::optional<EvalError> error;
    EvalDiagnostics diagnostics;

    bool ok() const { return breakdown.has_value(); }
};

namespace detail {

enum class OpCode : std::uint8_t {
    push_lit,
    push_var,
    push_comp,
    neg,
    add,
    sub,
    mul,
    div,  // x/0 yields 0 with a diagnostic
    lt,
    le,
    gt,
    ge,
    eq,
    jz,   // pop cond, jump when cond == 0
    jmp,
    call_abs,
    call_min,
    call_max,
    call_clip,
    call_exp,
    call_tanh,
    call_sqrt,  // negative argument is an evaluation error
};

struct Op {
    OpCode code;
    double lit = 0.0;
    int idx = 0;  // variable slot, component slot, or jump target
};

inline void compile_expr(const RewardProgram& p, int node, std::vector<Op>& out) {
    const ExprNode& n = p.nodes[static_cast<std::size_t>(node)];
    switch (n.kind) {
        case ExprKind::literal: out.push_back({OpCode::push_lit, n.literal, 0}); return;
        case ExprKind::variable: out.push_back({OpCode::push_var, 0.0, n.var_index}); return;
        case ExprKind::component_ref: out.push_back({OpCode::push_comp, 0.0, n.component_index}); return;
        case ExprKind::if_else: {
            compile_expr(p, n.child[0], out);
            const std::size_t jz_at = out.size();
            out.push_back({OpCode::jz, 0.0, 0});
            compile_expr(p, n.child[1], out);
            const std::size_t jmp_at = out.size();
            out.push_back({OpCode::jmp, 0.0, 0});
            out[jz_at].idx = static_cast<int>(out.size());
            compile_expr(p, n.child[2], out);
            out[jmp_at].idx = static_cast<int>(out.size());
            return;
        }
        default: break;
    }
    for (int i = 0; i < n.child_count; ++i) compile_expr(p, n.child[i], out);
    switch (n.kind) {
        case ExprKind::neg: out.push_back({OpCode::neg, 0.0, 0}); break;
        case ExprKind::add: out.push_back({OpCode::add, 0.0, 0}); break;
        case ExprKind::sub: out.push_back({OpCode::sub, 0.0, 0}); break;
        case ExprKind::mul: out.push_back({OpCode::mul, 0.0, 0}); break;
        case ExprKind::div: out.push_back({OpCode::div, 0.0, 0}); break;
        case ExprKind::lt: out.push_back({OpCode::lt, 0.0, 0}); break;
        case ExprKind::le: out.push_back({OpCode::le, 0.0, 0}); break;
        case ExprKind::gt: out.push_back({OpCode::gt, 0.0, 0}); break;
        case ExprKind::ge: out.push_back({OpCode::ge, 0.0, 0}); break;
        case ExprKind::eq: out.push_back({OpCode::eq, 0.0, 0}); break;
        case ExprKind::call:
            switch (n.builtin) {
                case Builtin::abs: out.push_back({OpCode::call_abs, 0.0, 0}); break;
                case Builtin::min: out.push_back({OpCode::call_min, 0.0, 0}); break;
                case Builtin::max: out.push_back({OpCode::call_max, 0.0, 0}); break;
                case Builtin::clip: out.push_back({OpCode::call_clip, 0.0, 0}); break;
                case Builtin::exp: out.push_back({OpCode::call_exp, 0.0, 0}); break;
                case Builtin::tanh: out.push_back({OpCode::call_tanh, 0.0, 0}); break;
                case Builtin::sqrt: out.push_back({OpCode::call_sqrt, 0.0, 0}); break;
            }
            break;
        default: break;
    }
}

}  // namespace detail

// Stack-machine interpreter. A program is compiled once into flat op lists
// (one per component plus the total); evaluation is allocation-free and
// reentrant, O(node count) per call.
class CompiledReward {
public:
    explicit CompiledReward(const RewardProgram& program) : program_(program) {
        comp_code_.resize(program.components.size());
        for (std::size_t i = 0; i < program.components.size(); ++i)
            detail::compile_expr(program, program.components[i].root, comp_code_[i]);
        detail::compile_expr(program, program.total_root, total_code_);
    }

    const RewardProgram& program() const { return program_; }

    EvalResult evaluate(const AccessibleVars& vars) const {
        EvalResult result;
        std::vector<double> comp_values(comp_code_.size(), 0.0);
        RewardBreakdown breakdown;
        breakdown.components.reserve(comp_code_.size());

        for (std::size_t i = 0; i < comp_code_.size(); ++i) {
            const std::string& name = program_.components[i].name;
            double value = 0.0;
            if (!run(comp_code_[i], vars, comp_values, name, value, result)) return result;
            if (!std::isfinite(value)) {
                result.error = {EvalErrorKind::non_finite, name, "component '" + name + "' is not finite"};
                return result;
            }
            comp_values[i] = value;
            breakdown.components.emplace_back(name, value);
        }

        double total = 0.0;
        if (!run(total_code_, vars, comp_values, "total", total, result)) return result;
        if (!std::isfinite(total)) {
            result.error = {EvalErrorKind::non_finite, "total", "total is not finite"};
            return result;
        }
        breakdown.total = total;
        result.breakdown = std::move(breakdown);
        return result;
    }

private:
    bool run(const std::vector<detail::Op>& code, const AccessibleVars& vars,
             const std::vector<double>& comp_values, const std::string& where, double& out,
             EvalResult& result) const {
        double stack[3 * kMaxExprDepth + 8];
        int sp = 0;
        std::size_t pc = 0;
        using detail::OpCode;

        while (pc < code.size()) {
            const detail::Op& op = code[pc];
            switch (op.code) {
                case OpCode::push_lit: stack[sp++] = op.lit; break;
                case OpCode::push_var: stack[sp++] = accessible_var_value(vars, op.idx); break;
                case OpCode::push_comp: stack[sp++] = comp_values[static_cast<std::size_t>(op.idx)]; break;
                case OpCode::neg: stack[sp - 1] = -stack[sp - 1]; break;
                case OpCode::add: --sp; stack[sp - 1] += stack[sp]; break;
                case OpCode::sub: --sp; stack[sp - 1] -= stack[sp]; break;
                case OpCode::mul: --sp; stack[sp - 1] *= stack[sp]; break;
                case OpCode::div:
                    --sp;
                    if (stack[sp] == 0.0) {
                        stack[sp - 1] = 0.0;
                        if (!result.diagnostics.div_by_zero ||
                            result.diagnostics.div_by_zero_components.back() != where)
                            result.diagnostics.div_by_zero_components.push_back(where);
                        result.diagnostics.div_by_zero = true;
                    } else {
                        stack[sp - 1] /= stack[sp];
                    }
                    break;
                case OpCode::lt: --sp; stack[sp - 1] = stack[sp - 1] < stack[sp] ? 1.0 : 0.0; break;
                case OpCode::le: --sp; stack[sp - 1] = stack[sp - 1] <= stack[sp] ? 1.0 : 0.0; break;
                case OpCode::gt: --sp; stack[sp - 1] = stack[sp - 1] > stack[sp] ? 1.0 : 0.0; break;
                case OpCode::ge: --sp; stack[sp - 1] = stack[sp - 1] >= stack[sp] ? 1.0 : 0.0; break;
                case OpCode::eq: --sp; stack[sp - 1] = stack[sp - 1] == stack[sp] ? 1.0 : 0.0; break;
                case OpCode::jz:
                    --sp;
                    if (stack[sp] == 0.0) {
                        pc = static_cast<std::size_t>(op.idx);
                        continue;
                    }
                    break;
                case OpCode::jmp: pc = static_cast<std::size_t>(op.idx); continue;
                case OpCode::call_abs: stack[sp - 1] = std::fabs(stack[sp - 1]); break;
                case OpCode::call_min: --sp; stack[sp - 1] = std::fmin(stack[sp - 1], stack[sp]); break;
                case OpCode::call_max: --sp; stack[sp - 1] = std::fmax(stack[sp - 1], stack[sp]); break;
                case OpCode::call_clip:
                    sp -= 2;
                    stack[sp - 1] = std::fmin(std::fmax(stack[sp - 1], stack[sp]), stack[sp + 1]);
                    break;
                case OpCode::call_exp: stack[sp - 1] = std::exp(stack[sp - 1]); break;
                case OpCode::call_tanh: stack[sp - 1] = std::tanh(stack[sp - 1]); break;
                case OpCode::call_sqrt:
                    if (stack[sp - 1] < 0.0) {
                        result.error = {EvalErrorKind::domain_sqrt, where,
                                        "sqrt of negative value in '" + where + "'"};
                        return false;
                    }
                    stack[sp - 1] = std::sqrt(stack[sp - 1]);
                    break;
            }
            ++pc;
        }
        out = stack[0];
        return true;
    }

    RewardProgram program_;
    std::vector<std::vector<detail::Op>> comp_code_;
    std::vector<detail::Op> total_code_;
};

// One-shot convenience wrapper around CompiledReward.
inline EvalResult evaluate(const RewardProgram& program, const AccessibleVars& vars) {
    return CompiledReward(program).evaluate(vars);
}

}  // namespace autocoach::dsl
