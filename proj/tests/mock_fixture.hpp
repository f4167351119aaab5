#pragma once

// Shared helpers for building mock-provider script directories and small
// RunConfigs used by the orchestrator tests and the acceptance suite.

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "autocoach/orchestrator.hpp"

namespace mock_fixture {

namespace fs = std::filesystem;
using namespace autocoach;

inline void write_role_file(const fs::path& mock_dir, const std::string& role, int index,
                            const std::string& body) {
    fs::create_directories(mock_dir / role);
    char name[16];
    std::snprintf(name, sizeof(name), "%03d.txt", index);
    std::ofstream out(mock_dir / role / name);
    out << body;
}

inline std::string curriculum_response(int density, int mode) {
    return "Given the training progress, the next interval should use this setting.\n<curriculum density=" +
           std::to_string(density) + " mode=" + std::to_string(mode) + "/>\n";
}

inline std::string reward_response(const std::string& program) {
    return "Reasoning about the task, this program balances progress and safety.\n```reward\n" + program +
           "```\n";
}

inline constexpr const char* kSimpleProgram =
    "speed_r = 0.2 * v_ego / v_limit\n"
    "success_r = 100 * success\n"
    "collision_p = -50 * collision\n"
    "total = speed_r + success_r + collision_p\n";

// Fills every role with one generic prose script plus the given curriculum
// and reward sequences.
inline void write_standard_scripts(const fs::path& mock_dir,
                                   const std::vector<std::pair<int, int>>& curricula,
                                   const std::vector<std::string>& reward_responses) {
    write_role_file(mock_dir, "curriculum_analysis", 0,
                    "Start simple and increase density once the policy is stable.");
    write_role_file(mock_dir, "curriculum_reflection", 0,
                    "Recent curricula look appropriate; escalate when success saturates.");
    write_role_file(mock_dir, "reward_analysis", 0,
                    "Reward progress toward the goal, penalize collisions strongly, keep per-step "
                    "terms small relative to the completion bonus.");
    write_role_file(mock_dir, "reward_reflection", 0,
                    "The reward trend is consistent with the objective; keep the structure.");
    for (std::size_t i = 0; i < curricula.size(); ++i)
        write_role_file(mock_dir, "curriculum_generation", static_cast<int>(i),
                        curriculum_response(curricula[i].first, curricula[i].second));
    for (std::size_t i = 0; i < reward_responses.size(); ++i)
        write_role_file(mock_dir, "reward_generation", static_cast<int>(i), reward_responses[i]);
}

// Short-episode overtaking scenario for cadence-focused runs.
inline ScenarioConfig tiny_scenario() {
    ScenarioConfig sc = default_overtaking_scenario();
    sc.max_steps = 40;
    return sc;
}

inline RunConfig tiny_run(const fs::path& out_dir, const fs::path& mock_dir, std::int64_t episodes,
                          int np, int nc, int nr) {
    RunConfig cfg;
    cfg.scenario = tiny_scenario();
    cfg.total_episodes = episodes;
    cfg.n_policy = np;
    cfg.n_curriculum = nc;
    cfg.n_reward = nr;
    cfg.seed = 7;
    cfg.use_mock = true;
    cfg.mock_dir = mock_dir.string();
    cfg.out_dir = out_dir.string();
    cfg.hyper.epochs = 3;  // cadence tests do not need long optimization
    return cfg;
}

inline std::vector<std::int64_t> decision_episodes(const MemoryStore& store) {
    std::vector<std::int64_t> out;
    for (const auto& d : store.decisions()) out.push_back(d.episode);
    return out;
}

inline std::vector<std::int64_t> reward_starts(const MemoryStore& store) {
    std::vector<std::int64_t> out;
    for (const auto& r : store.reward_history()) out.push_back(r.start_episode);
    return out;
}

inline std::vector<std::int64_t> metrics_update_episodes(const fs::path& run_dir) {
    std::vector<std::int64_t> out;
    std::ifstream in(run_dir / "metrics.csv");
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
        long long e = -1;
        if (std::sscanf(line.c_str(), "%lld,", &e) == 1) out.push_back(e);
    }
    return out;
}

inline std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

}  // namespace mock_fixture
