#pragma once

#include <cctype>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "autocoach/rng.hpp"
#include "autocoach/scenario.hpp"

namespace autocoach {

inline constexpr int kDensityLevels = 4;   // empty, low, medium, high
inline constexpr int kMotionModes = 3;     // stationary, constant_velocity, interactive

enum class Density : int { empty = 0, low = 1, medium = 2, high = 3 };
enum class MotionMode : int { stationary = 0, constant_velocity = 1, interactive = 2 };

inline const char* to_string(Density d) {
    switch (d) {
        case Density::empty: return "empty";
        case Density::low: return "low";
        case Density::medium: return "medium";
        default: return "high";
    }
}

inline const char* to_string(MotionMode m) {
    switch (m) {
        case MotionMode::stationary: return "stationary";
        case MotionMode::constant_velocity: return "constant_velocity";
        default: return "interactive";
    }
}

inline std::optional<Density> density_from_string(const std::string& s) {
    for (int i = 0; i < kDensityLevels; ++i)
        if (s == to_string(static_cast<Density>(i))) return static_cast<Density>(i);
    return std::nullopt;
}

// Index into the two-layer curriculum set: traffic density x SV motion mode.
struct CurriculumId {
    int density = 0;
    int motion_mode = 0;

    bool operator==(const CurriculumId&) const = default;

    Density density_level() const { return static_cast<Density>(density); }
    MotionMode mode() const { return static_cast<MotionMode>(motion_mode); }
};

struct CurriculumSet {
    static constexpr int n_td_max = kDensityLevels - 1;
    static constexpr int n_mm_max = kMotionModes - 1;

    static bool contains(CurriculumId c) {
        return c.density >= 0 && c.density <= n_td_max && c.motion_mode >= 0 && c.motion_mode <= n_mm_max;
    }

    static int size() { return kDensityLevels * kMotionModes; }

    static std::vector<CurriculumId> members() {
        std::vector<CurriculumId> out;
        out.reserve(size());
        for (int i = 0; i < kDensityLevels; ++i)
            for (int j = 0; j < kMotionModes; ++j) out.push_back({i, j});
        return out;
    }

    static CurriculumId uniform(Rng& rng) {
        const int d = static_cast<int>(rng.uniform_int(0, n_td_max));
        const int m = static_cast<int>(rng.uniform_int(0, n_mm_max));
        return {d, m};
    }
};

// SV count per density for each task.
inline int sv_count_for(Task task, Density d) {
    static constexpr int merging[kDensityLevels] = {0, 2, 4, 8};
    static constexpr int overtaking[kDensityLevels] = {0, 1, 2, 3};
    const int i = static_cast<int>(d);
    return task == Task::merging ? merging[i] : overtaking[i];
}

inline constexpr int kMaxSvCount = 8;

// Linear decay from eps0 to 0, reaching 0 at decay_fraction of the planned
// episode budget and staying there.
struct EpsilonSchedule {
    double eps0 = 0.3;
    double decay_fraction = 0.8;
    std::int64_t total_episodes = 1;

    double at(std::int64_t episode) const {
        const double horizon = decay_fraction * static_cast<double>(total_episodes);
        if (horizon <= 0.0) return 0.0;
        const double frac = static_cast<double>(episode) / horizon;
        const double e = eps0 * (1.0 - frac);
        return e < 0.0 ? 0.0 : (e > 1.0 ? 1.0 : e);
    }
};

enum class CurriculumOrigin { llm, random };

inline const char* to_string(CurriculumOrigin o) { return o == CurriculumOrigin::llm ? "llm" : "random"; }

struct CurriculumDecision {
    std::int64_t episode = 0;
    CurriculumId id;          // deployed curriculum (after epsilon selection)
    CurriculumId llm_choice;  // what the generation agent picked
    CurriculumOrigin origin = CurriculumOrigin::llm;
    std::string rationale;
};

struct CurriculumHistory {
    std::vector<CurriculumDecision> decisions;

    void append(CurriculumDecision d) {
        if (!decisions.empty() && d.episode <= decisions.back().episode)
            throw UsageError("curriculum history episodes must be strictly increasing");
        decisions.push_back(std::move(d));
    }

    const CurriculumDecision* latest() const { return decisions.empty() ? nullptr : &decisions.back(); }
};

// Epsilon-curriculum selection: deploy the LLM choice with probability
// 1 - eps, a uniform member of the set with probability eps.
inline std::pair<CurriculumId, CurriculumOrigin> select_curriculum(CurriculumId c_llm, double eps, Rng& rng) {
    if (!CurriculumSet::contains(c_llm)) throw UsageError("select_curriculum: c_llm outside curriculum set");
    if (rng.uniform() < eps) return {CurriculumSet::uniform(rng), CurriculumOrigin::random};
    return {c_llm, CurriculumOrigin::llm};
}

enum class CurriculumDecodeError {
    missing_tag,
    duplicate_tag,
    non_integer_field,
    out_of_range,
};

inline const char* to_string(CurriculumDecodeError e) {
    switch (e) {
        case CurriculumDecodeError::missing_tag: return "missing_tag";
        case CurriculumDecodeError::duplicate_tag: return "duplicate_tag";
        case CurriculumDecodeError::non_integer_field: return "non_integer_field";
        default: return "out_of_range";
    }
}

struct CurriculumDecodeResult {
    std::optional<CurriculumId> id;
    std::optional<CurriculumDecodeError> error;

    bool ok() const { return id.has_value(); }
};

namespace detail {

inline bool parse_int_field(const std::string& text, std::size_t& pos, const std::string& key, int& out) {
    while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
    if (text.compare(pos, key.size(), key) != 0) return false;
    pos += key.size();
    const std::size_t start = pos;
    while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) ++pos;
    if (pos == start || pos - start > 9) return false;
    out = std::stoi(text.substr(start, pos - start));
    return true;
}

}  // namespace detail

// Extracts the machine-readable selection tag
//   <curriculum density=D mode=M/>
// from an agent response and validates membership in the curriculum set.
inline CurriculumDecodeResult decode_curriculum(const std::string& response) {
    constexpr const char* open = "<curriculum";
    std::size_t first = response.find(open);
    if (first == std::string::npos) return {std::nullopt, CurriculumDecodeError::missing_tag};
    if (response.find(open, first + 1) != std::string::npos)
        return {std::nullopt, CurriculumDecodeError::duplicate_tag};

    std::size_t pos = first + std::string(open).size();
    int density = -1, mode = -1;
    if (!detail::parse_int_field(response, pos, "density=", density))
        return {std::nullopt, CurriculumDecodeError::non_integer_field};
    if (!detail::parse_int_field(response, pos, "mode=", mode))
        return {std::nullopt, CurriculumDecodeError::non_integer_field};
    while (pos < response.size() && std::isspace(static_cast<unsigned char>(response[pos]))) ++pos;
    if (response.compare(pos, 2, "/>") != 0)
        return {std::nullopt, CurriculumDecodeError::non_integer_field};

    const CurriculumId id{density, mode};
    if (!CurriculumSet::contains(id)) return {std::nullopt, CurriculumDecodeError::out_of_range};
    return {id, std::nullopt};
}

}  // namespace autocoach
