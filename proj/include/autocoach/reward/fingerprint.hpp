#pragma once

#include <bit>
#include <cstdint>

#include "autocoach/reward/ast.hpp"
#include "autocoach/rng.hpp"

namespace autocoach::dsl {

namespace detail {

inline std::uint64_t hash_expr(const RewardProgram& p, int node, std::uint64_t h) {
    const ExprNode& n = p.nodes[static_cast<std::size_t>(node)];
    h = fnv1a64_u64(static_cast<std::uint64_t>(n.kind), h);
    switch (n.kind) {
        case ExprKind::literal:
            h = fnv1a64_u64(std::bit_cast<std::uint64_t>(n.literal), h);
            break;
        case ExprKind::variable:
            h = fnv1a64_u64(static_cast<std::uint64_t>(n.var_index), h);
            break;
        case ExprKind::component_ref:
            h = fnv1a64_u64(static_cast<std::uint64_t>(n.component_index), h);
            break;
        case ExprKind::call:
            h = fnv1a64_u64(static_cast<std::uint64_t>(n.builtin), h);
            break;
        default:
            break;
    }
    for (int i = 0; i < n.child_count; ++i) h = hash_expr(p, n.child[i], h);
    return h;
}

}  // namespace detail

// Content hash over the canonical AST: whitespace, comments, and redundant
// parentheses do not affect it; any semantic change does.
inline std::uint64_t fingerprint(const RewardProgram& p) {
    std::uint64_t h = fnv1a64("reward-program-v1");
    h = fnv1a64_u64(p.components.size(), h);
    for (const Component& c : p.components) {
        h = fnv1a64(c.name, h);
        h = detail::hash_expr(p, c.root, h);
    }
    h = detail::hash_expr(p, p.total_root, h);
    return h;
}

}  // namespace autocoach::dsl
