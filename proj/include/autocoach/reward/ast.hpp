#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "autocoach/reward/vars.hpp"

namespace autocoach::dsl {

inline constexpr int kMaxExprDepth = 64;
inline constexpr int kMaxProgramNodes = 2048;

enum class ExprKind : std::uint8_t {
    literal,
    variable,       // AccessibleVars slot
    component_ref,  // earlier component, by declaration index
    neg,
    add,
    sub,
    mul,
    div,
    lt,
    le,
    gt,
    ge,
    eq,
    if_else,  // children: cond, then, else
    call,
};

enum class Builtin : std::uint8_t { abs, min, max, clip, exp, tanh, sqrt };

inline constexpr const char* kBuiltinNames[] = {"abs", "min", "max", "clip", "exp", "tanh", "sqrt"};

inline int builtin_arity(Builtin b) {
    switch (b) {
        case Builtin::min:
        case Builtin::max: return 2;
        case Builtin::clip: return 3;
        default: return 1;
    }
}

// Expression nodes live in a per-program pool; children are pool indices.
struct ExprNode {
    ExprKind kind = ExprKind::literal;
    double literal = 0.0;
    int var_index = -1;
    int component_index = -1;
    Builtin builtin = Builtin::abs;
    int child[3] = {-1, -1, -1};
    int child_count = 0;
};

struct Component {
    std::string name;
    int root = -1;
};

// A validated reward program: named components in declaration order plus the
// final total expression. Immutable after parse.
struct RewardProgram {
    std::vector<ExprNode> nodes;
    std::vector<Component> components;
    int total_root = -1;
    std::string source_text;
    std::uint64_t fingerprint = 0;

    int component_index(const std::string& name) const {
        for (std::size_t i = 0; i < components.size(); ++i)
            if (components[i].name == name) return static_cast<int>(i);
        return -1;
    }
};

}  // namespace autocoach::dsl
