#pragma once

#include <cstdio>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "autocoach/curriculum.hpp"
#include "autocoach/llm/provider.hpp"
#include "autocoach/memory.hpp"
#include "autocoach/reward_dsl.hpp"
#include "autocoach/scenario.hpp"

namespace autocoach::llm {

struct PromptBundle {
    std::string system_text;
    std::string user_text;
    std::string output_schema;  // human-readable description of the expected reply shape
};

namespace detail {

inline std::string fmt1(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.1f", v);
    return buf;
}

inline std::string fmt4(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.4f", v);
    return buf;
}

}  // namespace detail

// Natural-language description of the training task: scenario geometry, the
// two-layer curriculum set, the reward-variable schema, and the learning
// objective. Pure function of the scenario.
inline std::string build_context_descriptor(const ScenarioConfig& sc) {
    std::ostringstream os;
    os << "## Training task\n";
    if (sc.task == Task::overtaking) {
        os << "Multi-lane overtaking: the ego vehicle starts in the middle of " << sc.lane_count
           << " lanes and must reach the end of a " << detail::fmt1(sc.road_length)
           << " m road, overtaking slower traffic ahead. ";
    } else {
        os << "On-ramp merging: the ego vehicle starts on a ramp (lane 0) that ends at x = "
           << detail::fmt1(sc.merge_zone_end) << " m and must merge into the main road between x = "
           << detail::fmt1(sc.merge_zone_start) << " m and x = " << detail::fmt1(sc.merge_zone_end)
           << " m, then reach the target lane near the end of a " << detail::fmt1(sc.road_length)
           << " m road. ";
    }
    os << "The speed limit is " << detail::fmt1(sc.v_limit) << " m/s, the control period is "
       << detail::fmt1(sc.dt * 1000.0) << " ms, and an episode times out after " << sc.max_steps
       << " steps. Episodes end in exactly one of: success, collision, timeout.\n\n";

    os << "## Two-layer curriculum set\n"
       << "A curriculum is a pair (density, motion_mode). Densities: ";
    for (int d = 0; d < kDensityLevels; ++d) {
        os << d << "=" << to_string(static_cast<Density>(d)) << " ("
           << sv_count_for(sc.task, static_cast<Density>(d)) << " surrounding vehicles)";
        os << (d + 1 < kDensityLevels ? ", " : ".\n");
    }
    os << "Motion modes: ";
    for (int m = 0; m < kMotionModes; ++m) {
        os << m << "=" << to_string(static_cast<MotionMode>(m));
        os << (m + 1 < kMotionModes ? ", " : ".\n");
    }
    os << "All " << CurriculumSet::size()
       << " (density, motion_mode) pairs are valid training curricula. Higher density and more "
          "reactive motion modes are harder.\n\n";

    os << "## Accessible reward variables\n"
          "Reward programs may reference exactly these variables:\n";
    for (int i = 0; i < dsl::kAccessibleVarCount; ++i)
        os << "- " << dsl::kAccessibleVarNames[static_cast<std::size_t>(i)] << ": "
           << dsl::kAccessibleVarDocs[static_cast<std::size_t>(i)] << "\n";
    os << "\n## Objective\n"
          "Train a reinforcement-learning driving policy that completes the task with a high "
          "success rate, avoiding collisions and timeouts, across increasing traffic densities.\n";
    return os.str();
}

inline std::string render_curriculum_history(const std::vector<CurriculumDecision>& decisions,
                                             std::size_t max_entries = 12) {
    if (decisions.empty()) return "(no curriculum decisions yet)\n";
    std::ostringstream os;
    const std::size_t start = decisions.size() > max_entries ? decisions.size() - max_entries : 0;
    for (std::size_t i = start; i < decisions.size(); ++i) {
        const CurriculumDecision& d = decisions[i];
        os << "episode " << d.episode << ": density=" << to_string(d.id.density_level())
           << " mode=" << to_string(d.id.mode()) << " (origin " << to_string(d.origin) << ")\n";
    }
    return os.str();
}

// Deterministic statistics digest handed to the reflection agents: outcome
// rates, reward component means, curriculum excerpt, and the active program
// with its lint findings.
inline std::string build_reflection_summary(const WindowStats& stats,
                                            const std::vector<CurriculumDecision>& decisions,
                                            const std::string& active_program_source,
                                            const std::vector<std::string>& lint_warnings) {
    std::ostringstream os;
    os << "## Last window (" << stats.count << " episodes)\n"
       << "success rate: " << detail::fmt1(stats.success_rate * 100.0) << "%\n"
       << "collision rate: " << detail::fmt1(stats.collision_rate * 100.0) << "%\n"
       << "timeout rate: " << detail::fmt1(stats.timeout_rate * 100.0) << "%\n"
       << "mean total reward: " << detail::fmt4(stats.mean_total_reward) << "\n";
    os << "mean reward components per episode:\n";
    for (const auto& [name, mean] : stats.component_means)
        os << "- " << name << ": " << detail::fmt4(mean) << "\n";
    os << "curriculum episodes in window:\n";
    for (const auto& [key, count] : stats.curriculum_counts) os << "- " << key << ": " << count << "\n";
    os << "\n## Curriculum history (most recent)\n" << render_curriculum_history(decisions);
    os << "\n## Active reward program\n```reward\n" << active_program_source << "\n```\n";
    if (lint_warnings.empty()) {
        os << "lint: no warnings\n";
    } else {
        os << "lint warnings:\n";
        for (const std::string& w : lint_warnings) os << "- " << w << "\n";
    }
    return os.str();
}

// ---------------------------------------------------------------------------
// Role charters and bundles

inline constexpr const char* kCurriculumTagFormat =
    "Reply with your reasoning, then finish with exactly one selection tag on its own line:\n"
    "<curriculum density=D mode=M/>\n"
    "where D is the density index and M the motion-mode index.";

inline PromptBundle curriculum_analysis_bundle(const std::string& context,
                                               const std::string& history_text,
                                               const std::string& previous_analysis,
                                               const std::string& reflection_feedback) {
    PromptBundle b;
    b.system_text = context +
                    "\nYou are the curriculum analysis agent. Using curriculum-learning principles "
                    "(progress from simple to complex, switch when the policy saturates), analyze "
                    "which aspects matter for the next training interval.";
    std::ostringstream os;
    os << "## Curriculum history\n" << history_text;
    if (!previous_analysis.empty()) os << "\n## Your previous analysis\n" << previous_analysis << "\n";
    if (!reflection_feedback.empty()) os << "\n## Reflection feedback\n" << reflection_feedback << "\n";
    os << "\nProvide key considerations and a recommendation basis for selecting the next "
          "training curriculum. Do not select a curriculum yourself.";
    b.user_text = os.str();
    b.output_schema = "free-form analysis text";
    return b;
}

inline PromptBundle curriculum_generation_bundle(const std::string& context,
                                                 const std::string& history_text,
                                                 const std::string& analysis,
                                                 const std::string& reflection_feedback,
                                                 const std::string& error_feedback = "") {
    PromptBundle b;
    b.system_text = context +
                    "\nYou are the curriculum generation agent. Select the single training "
                    "curriculum for the next interval, following curriculum-learning principles.";
    std::ostringstream os;
    os << "## Curriculum history\n" << history_text;
    if (!reflection_feedback.empty()) os << "\n## Reflection feedback\n" << reflection_feedback << "\n";
    os << "\n## Analysis agent output\n" << analysis << "\n";
    if (!error_feedback.empty())
        os << "\n## Your previous reply was rejected\n" << error_feedback
           << "\nReply again with a valid selection tag.\n";
    os << "\n## Output format\n" << kCurriculumTagFormat;
    b.user_text = os.str();
    b.output_schema = "prose + one <curriculum density=D mode=M/> tag";
    return b;
}

inline PromptBundle curriculum_reflection_bundle(const std::string& context,
                                                 const std::string& summary) {
    PromptBundle b;
    b.system_text = context +
                    "\nYou are the curriculum reflection agent. Summarize how well the recent "
                    "curriculum choices served policy training and what the next interval should "
                    "account for.";
    b.user_text = "## Training summary\n" + summary +
                  "\nWrite concise feedback for the curriculum analysis and generation agents.";
    b.output_schema = "free-form feedback text";
    return b;
}

inline constexpr const char* kRewardOutputFormat =
    "Reply with your reasoning, then exactly one fenced code block tagged `reward` containing the "
    "program. Example:\n"
    "```reward\n"
    "speed_r = 0.1 * v_ego / v_limit\n"
    "total = speed_r\n"
    "```";

inline std::string reward_grammar_section() {
    return std::string("The reward program language (EBNF):\n") + dsl::kGrammarEbnf +
           "\nRules: every statement defines a named component usable in later statements; the "
           "final statement must assign `total`; only the accessible variables, earlier component "
           "names, and numeric literals may be referenced; no loops, assignments inside "
           "expressions, or other functions. Comparisons yield 0/1. Division by zero yields 0.";
}

inline PromptBundle reward_analysis_bundle(const std::string& context,
                                           const std::string& active_program_source,
                                           const std::string& previous_analysis,
                                           const std::string& reflection_feedback) {
    PromptBundle b;
    b.system_text = context +
                    "\nYou are the reward analysis agent. Analyze what the reward function must "
                    "capture for the current training stage and give reference value ranges for "
                    "each proposed component.";
    std::ostringstream os;
    if (!active_program_source.empty())
        os << "## Current reward program\n```reward\n" << active_program_source << "\n```\n";
    if (!previous_analysis.empty()) os << "\n## Your previous analysis\n" << previous_analysis << "\n";
    if (!reflection_feedback.empty()) os << "\n## Reflection feedback\n" << reflection_feedback << "\n";
    os << "\nIdentify the key reward considerations (goal progress, safety margins to traffic, "
          "lane-change behavior, terminal bonuses/penalties) and a sensible magnitude range for "
          "each component. Per-step terms must not accumulate past the task-completion reward, and "
          "penalties on cumulative counters must be gated on their event flag. Do not write the "
          "program yourself.";
    b.user_text = os.str();
    b.output_schema = "free-form analysis text";
    return b;
}

inline PromptBundle reward_generation_bundle(const std::string& context,
                                             const std::string& active_program_source,
                                             const std::string& analysis,
                                             const std::string& reflection_feedback,
                                             const std::string& error_feedback = "") {
    PromptBundle b;
    b.system_text = context +
                    "\nYou are the reward generation agent. Emit a complete reward program in the "
                    "sandboxed reward language. Output both the total reward and every named "
                    "sub-reward component.\n\n" +
                    reward_grammar_section();
    std::ostringstream os;
    if (!active_program_source.empty())
        os << "## Previous reward program\n```reward\n" << active_program_source << "\n```\n";
    if (!reflection_feedback.empty()) os << "\n## Reflection feedback\n" << reflection_feedback << "\n";
    os << "\n## Analysis agent output\n" << analysis << "\n";
    if (!error_feedback.empty())
        os << "\n## Your previous reply was rejected\n" << error_feedback
           << "\nFix the problem and emit a corrected program.\n";
    os << "\n## Output format\n" << kRewardOutputFormat;
    b.user_text = os.str();
    b.output_schema = "prose + one ```reward fenced block";
    return b;
}

inline PromptBundle reward_reflection_bundle(const std::string& context, const std::string& summary) {
    PromptBundle b;
    b.system_text = context +
                    "\nYou are the reward reflection agent. Judge whether the active reward "
                    "function is steering training toward the objective, component by component, "
                    "and suggest concrete adjustments (add/remove components, retune coefficients).";
    b.user_text = "## Training summary\n" + summary +
                  "\nWrite concise feedback for the reward analysis and generation agents.";
    b.output_schema = "free-form feedback text";
    return b;
}

// ---------------------------------------------------------------------------
// Response extraction

enum class ExtractError { no_block, multiple_blocks };

struct ExtractResult {
    std::optional<std::string> source;
    std::optional<ExtractError> error;

    bool ok() const { return source.has_value(); }
};

// Pulls the contents of the single ```reward fenced block out of a response;
// surrounding prose is ignored.
inline ExtractResult extract_program_block(const std::string& response) {
    const std::string open_tag = "```reward";
    std::size_t first = response.find(open_tag);
    if (first == std::string::npos) return {std::nullopt, ExtractError::no_block};
    if (response.find(open_tag, first + open_tag.size()) != std::string::npos)
        return {std::nullopt, ExtractError::multiple_blocks};

    std::size_t body_start = first + open_tag.size();
    if (body_start < response.size() && response[body_start] == '\r') ++body_start;
    if (body_start < response.size() && response[body_start] == '\n') ++body_start;
    const std::size_t close = response.find("```", body_start);
    if (close == std::string::npos) return {std::nullopt, ExtractError::no_block};
    std::string body = response.substr(body_start, close - body_start);
    while (!body.empty() && (body.back() == '\n' || body.back() == '\r')) body.pop_back();
    return {body, std::nullopt};
}

}  // namespace autocoach::llm
