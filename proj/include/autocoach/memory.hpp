#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "autocoach/curriculum.hpp"
#include "autocoach/sim.hpp"

namespace autocoach {

namespace fs = std::filesystem;
using nlohmann::json;

struct EpisodeRecord {
    std::int64_t episode = 0;
    CurriculumId curriculum;
    OutcomeKind outcome = OutcomeKind::timeout;
    int steps = 0;
    double total_reward = 0.0;
    std::vector<std::pair<std::string, double>> component_sums;  // declaration order
    std::uint64_t reward_fingerprint = 0;
    std::uint64_t seed = 0;
};

struct RewardHistoryEntry {
    int generation = 0;
    std::string source;
    std::uint64_t fingerprint = 0;
    std::int64_t start_episode = 0;
    std::int64_t end_episode = -1;  // exclusive; -1 while active
    std::vector<std::string> lint_warnings;
    std::string analysis_text;
};

struct TranscriptRecord {
    std::int64_t seq = 0;
    std::string timestamp;
    std::string role;
    std::string system_prompt;
    std::string user_prompt;
    std::string response;
    std::string outcome;  // ok | transport_error | decode_error | ...
    std::int64_t episode = 0;
};

struct WindowStats {
    int count = 0;
    double success_rate = 0.0;
    double collision_rate = 0.0;
    double timeout_rate = 0.0;
    double mean_total_reward = 0.0;
    std::vector<std::pair<std::string, double>> component_means;  // first-seen order
    std::map<std::string, int> curriculum_counts;
};

namespace detail {

inline json episode_to_json(const EpisodeRecord& r) {
    json comps = json::object();
    json order = json::array();
    for (const auto& [name, sum] : r.component_sums) {
        comps[name] = sum;
        order.push_back(name);
    }
    return json{{"episode", r.episode},
                {"density", r.curriculum.density},
                {"motion_mode", r.curriculum.motion_mode},
                {"outcome", to_string(r.outcome)},
                {"steps", r.steps},
                {"total_reward", r.total_reward},
                {"components", comps},
                {"component_order", order},
                {"reward_fingerprint", r.reward_fingerprint},
                {"seed", r.seed}};
}

inline EpisodeRecord episode_from_json(const json& j) {
    EpisodeRecord r;
    r.episode = j.at("episode").get<std::int64_t>();
    r.curriculum = {j.at("density").get<int>(), j.at("motion_mode").get<int>()};
    const std::string k = j.at("outcome").get<std::string>();
    r.outcome = k == "success" ? OutcomeKind::success
               : k == "collision" ? OutcomeKind::collision
                                  : OutcomeKind::timeout;
    r.steps = j.at("steps").get<int>();
    r.total_reward = j.at("total_reward").get<double>();
    for (const auto& name : j.at("component_order"))
        r.component_sums.emplace_back(name.get<std::string>(),
                                      j.at("components").at(name.get<std::string>()).get<double>());
    r.reward_fingerprint = j.at("reward_fingerprint").get<std::uint64_t>();
    r.seed = j.at("seed").get<std::uint64_t>();
    return r;
}

inline json decision_to_json(const CurriculumDecision& d) {
    return json{{"episode", d.episode},
                {"density", d.id.density},
                {"motion_mode", d.id.motion_mode},
                {"llm_density", d.llm_choice.density},
                {"llm_motion_mode", d.llm_choice.motion_mode},
                {"origin", to_string(d.origin)},
                {"rationale", d.rationale}};
}

inline CurriculumDecision decision_from_json(const json& j) {
    CurriculumDecision d;
    d.episode = j.at("episode").get<std::int64_t>();
    d.id = {j.at("density").get<int>(), j.at("motion_mode").get<int>()};
    d.llm_choice = {j.at("llm_density").get<int>(), j.at("llm_motion_mode").get<int>()};
    d.origin = j.at("origin").get<std::string>() == "llm" ? CurriculumOrigin::llm : CurriculumOrigin::random;
    d.rationale = j.at("rationale").get<std::string>();
    return d;
}

inline json reward_entry_to_json(const RewardHistoryEntry& e) {
    return json{{"generation", e.generation},
                {"source", e.source},
                {"fingerprint", e.fingerprint},
                {"start_episode", e.start_episode},
                {"lint_warnings", e.lint_warnings},
                {"analysis", e.analysis_text}};
}

inline RewardHistoryEntry reward_entry_from_json(const json& j) {
    RewardHistoryEntry e;
    e.generation = j.at("generation").get<int>();
    e.source = j.at("source").get<std::string>();
    e.fingerprint = j.at("fingerprint").get<std::uint64_t>();
    e.start_episode = j.at("start_episode").get<std::int64_t>();
    for (const auto& w : j.at("lint_warnings")) e.lint_warnings.push_back(w.get<std::string>());
    e.analysis_text = j.at("analysis").get<std::string>();
    return e;
}

inline json transcript_to_json(const TranscriptRecord& t) {
    return json{{"seq", t.seq},          {"timestamp", t.timestamp}, {"role", t.role},
                {"system", t.system_prompt}, {"user", t.user_prompt},    {"response", t.response},
                {"outcome", t.outcome},  {"episode", t.episode}};
}

inline TranscriptRecord transcript_from_json(const json& j) {
    TranscriptRecord t;
    t.seq = j.at("seq").get<std::int64_t>();
    t.timestamp = j.at("timestamp").get<std::string>();
    t.role = j.at("role").get<std::string>();
    t.system_prompt = j.at("system").get<std::string>();
    t.user_prompt = j.at("user").get<std::string>();
    t.response = j.at("response").get<std::string>();
    t.outcome = j.at("outcome").get<std::string>();
    t.episode = j.at("episode").get<std::int64_t>();
    return t;
}

// Reads a JSONL file, dropping a torn trailing line with a warning. A bad
// line followed by further content is also truncated there, conservatively.
template <typename T>
std::vector<T> load_jsonl(const fs::path& path, T (*from)(const json&), std::vector<std::string>* warnings) {
    std::vector<T> out;
    std::ifstream in(path);
    if (!in) return out;
    std::string line;
    std::int64_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            out.push_back(from(json::parse(line)));
        } catch (const std::exception& e) {
            if (warnings)
                warnings->push_back(path.filename().string() + ": dropped record at line " +
                                    std::to_string(lineno) + " (" + e.what() + ")");
            break;
        }
    }
    return out;
}

}  // namespace detail

// Append-only JSONL persistence for one training run. Single writer; every
// append is flushed before returning so a crash loses at most the line being
// written.
class MemoryStore {
public:
    explicit MemoryStore(fs::path run_dir) : dir_(std::move(run_dir)) {
        fs::create_directories(dir_);
        fs::create_directories(dir_ / "checkpoints");
        open_streams();
        reload_tail_state();
    }

    const fs::path& dir() const { return dir_; }

    void append_episode(const EpisodeRecord& r) {
        if (last_episode_ && r.episode <= *last_episode_)
            throw UsageError("append_episode: index " + std::to_string(r.episode) +
                             " not greater than last " + std::to_string(*last_episode_));
        write_line(episodes_, detail::episode_to_json(r));
        last_episode_ = r.episode;
        episodes_cache_.push_back(r);
    }

    void append_decision(const CurriculumDecision& d) {
        write_line(curriculum_, detail::decision_to_json(d));
        decisions_cache_.push_back(d);
    }

    void append_reward_entry(const RewardHistoryEntry& e) {
        write_line(rewards_, detail::reward_entry_to_json(e));
        rewards_cache_.push_back(e);
    }

    void append_transcript(const TranscriptRecord& t) {
        write_line(transcripts_, detail::transcript_to_json(t));
        ++transcript_count_;
    }

    std::int64_t next_episode_index() const { return last_episode_ ? *last_episode_ + 1 : 0; }
    std::int64_t transcript_count() const { return transcript_count_; }
    const std::vector<EpisodeRecord>& episodes() const { return episodes_cache_; }
    const std::vector<CurriculumDecision>& decisions() const { return decisions_cache_; }

    // Reward history with derived [start, end) ranges.
    std::vector<RewardHistoryEntry> reward_history() const {
        std::vector<RewardHistoryEntry> out = rewards_cache_;
        for (std::size_t i = 0; i < out.size(); ++i)
            out[i].end_episode = i + 1 < out.size() ? out[i + 1].start_episode : -1;
        return out;
    }

    // Statistics over the most recent min(window, available) episodes.
    WindowStats window_stats(int window) const {
        if (episodes_cache_.empty()) throw UsageError("window_stats: empty store");
        const int n = std::min<int>(window, static_cast<int>(episodes_cache_.size()));
        WindowStats s;
        s.count = n;
        std::vector<std::string> comp_order;
        std::map<std::string, std::pair<double, int>> comp_acc;
        for (int i = static_cast<int>(episodes_cache_.size()) - n;
             i < static_cast<int>(episodes_cache_.size()); ++i) {
            const EpisodeRecord& r = episodes_cache_[static_cast<std::size_t>(i)];
            switch (r.outcome) {
                case OutcomeKind::success: s.success_rate += 1.0; break;
                case OutcomeKind::collision: s.collision_rate += 1.0; break;
                default: s.timeout_rate += 1.0; break;
            }
            s.mean_total_reward += r.total_reward;
            for (const auto& [name, sum] : r.component_sums) {
                auto it = comp_acc.find(name);
                if (it == comp_acc.end()) {
                    comp_order.push_back(name);
                    it = comp_acc.emplace(name, std::make_pair(0.0, 0)).first;
                }
                it->second.first += sum;
                it->second.second += 1;
            }
            ++s.curriculum_counts[std::string(to_string(r.curriculum.density_level())) + "/" +
                                  to_string(r.curriculum.mode())];
        }
        s.success_rate /= n;
        s.collision_rate /= n;
        s.timeout_rate /= n;
        s.mean_total_reward /= n;
        for (const std::string& name : comp_order) {
            const auto& [sum, cnt] = comp_acc[name];
            s.component_means.emplace_back(name, sum / cnt);
        }
        return s;
    }

    // Drops every record belonging to episode >= boundary. Used on resume to
    // rewind to the last checkpointed update boundary.
    void truncate_from(std::int64_t boundary) {
        close_streams();
        filter_file(dir_ / "episodes.jsonl", [&](const json& j) {
            return j.at("episode").get<std::int64_t>() < boundary;
        });
        filter_file(dir_ / "curriculum.jsonl", [&](const json& j) {
            return j.at("episode").get<std::int64_t>() < boundary;
        });
        filter_file(dir_ / "rewards.jsonl", [&](const json& j) {
            return j.at("start_episode").get<std::int64_t>() < boundary;
        });
        filter_file(dir_ / "transcripts.jsonl", [&](const json& j) {
            return j.at("episode").get<std::int64_t>() < boundary;
        });
        open_streams();
        reload_tail_state();
    }

    std::map<std::string, std::int64_t> transcript_counts_by_role() const {
        std::map<std::string, std::int64_t> counts;
        std::vector<std::string> warnings;
        for (const auto& t : detail::load_jsonl(dir_ / "transcripts.jsonl",
                                                detail::transcript_from_json, &warnings))
            ++counts[t.role];
        return counts;
    }

    const std::vector<std::string>& load_warnings() const { return load_warnings_; }

private:
    void open_streams() {
        episodes_.open(dir_ / "episodes.jsonl", std::ios::app);
        curriculum_.open(dir_ / "curriculum.jsonl", std::ios::app);
        rewards_.open(dir_ / "rewards.jsonl", std::ios::app);
        transcripts_.open(dir_ / "transcripts.jsonl", std::ios::app);
        if (!episodes_ || !curriculum_ || !rewards_ || !transcripts_)
            throw ConfigError("cannot open run streams under " + dir_.string());
    }

    void close_streams() {
        episodes_.close();
        curriculum_.close();
        rewards_.close();
        transcripts_.close();
    }

    void reload_tail_state() {
        load_warnings_.clear();
        episodes_cache_ =
            detail::load_jsonl(dir_ / "episodes.jsonl", detail::episode_from_json, &load_warnings_);
        decisions_cache_ =
            detail::load_jsonl(dir_ / "curriculum.jsonl", detail::decision_from_json, &load_warnings_);
        rewards_cache_ =
            detail::load_jsonl(dir_ / "rewards.jsonl", detail::reward_entry_from_json, &load_warnings_);
        const auto transcripts =
            detail::load_jsonl(dir_ / "transcripts.jsonl", detail::transcript_from_json, &load_warnings_);
        transcript_count_ = static_cast<std::int64_t>(transcripts.size());
        last_episode_.reset();
        if (!episodes_cache_.empty()) last_episode_ = episodes_cache_.back().episode;
        for (const std::string& w : load_warnings_) std::cerr << "[memory] " << w << "\n";
    }

    template <typename Pred>
    void filter_file(const fs::path& path, Pred keep) {
        if (!fs::exists(path)) return;
        std::ifstream in(path);
        std::vector<std::string> kept;
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            try {
                if (keep(json::parse(line))) kept.push_back(line);
            } catch (const std::exception&) {
                break;  // torn tail
            }
        }
        in.close();
        const fs::path tmp = path.string() + ".tmp";
        {
            std::ofstream out(tmp, std::ios::trunc);
            for (const std::string& l : kept) out << l << "\n";
        }
        fs::rename(tmp, path);
    }

    void write_line(std::ofstream& out, const json& j) {
        out << j.dump() << "\n";
        out.flush();
        if (!out) throw ConfigError("failed writing run stream under " + dir_.string());
    }

    fs::path dir_;
    std::ofstream episodes_, curriculum_, rewards_, transcripts_;
    std::optional<std::int64_t> last_episode_;
    std::int64_t transcript_count_ = 0;
    std::vector<EpisodeRecord> episodes_cache_;
    std::vector<CurriculumDecision> decisions_cache_;
    std::vector<RewardHistoryEntry> rewards_cache_;
    std::vector<std::string> load_warnings_;
};

}  // namespace autocoach
