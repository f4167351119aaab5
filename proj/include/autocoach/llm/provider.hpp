#pragma once

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <httplib.h>
#ifdef _res
#undef _res  // glibc resolv.h macro; collides with unrelated identifiers
#endif
#include <nlohmann/json.hpp>

#include "autocoach/scenario.hpp"

namespace autocoach::llm {

enum class AgentRole {
    curriculum_analysis,
    curriculum_generation,
    curriculum_reflection,
    reward_analysis,
    reward_generation,
    reward_reflection,
};

inline constexpr AgentRole kAllRoles[] = {
    AgentRole::curriculum_analysis, AgentRole::curriculum_generation, AgentRole::curriculum_reflection,
    AgentRole::reward_analysis,     AgentRole::reward_generation,     AgentRole::reward_reflection,
};

inline const char* to_string(AgentRole r) {
    switch (r) {
        case AgentRole::curriculum_analysis: return "curriculum_analysis";
        case AgentRole::curriculum_generation: return "curriculum_generation";
        case AgentRole::curriculum_reflection: return "curriculum_reflection";
        case AgentRole::reward_analysis: return "reward_analysis";
        case AgentRole::reward_generation: return "reward_generation";
        default: return "reward_reflection";
    }
}

struct ChatMessage {
    std::string role;  // "system" | "user"
    std::string content;
};

struct ProviderConfig {
    std::string endpoint = "http://localhost:8000/v1/chat/completions";
    std::string model = "gpt-4o";
    double temperature_generation = 0.2;
    double temperature_analysis = 0.0;
    int timeout_s = 60;
    int max_retries = 3;           // transport attempts per call
    int backoff_base_ms = 500;     // exponential
    std::string api_key_env = "AUTOCOACH_API_KEY";

    double temperature_for(AgentRole role) const {
        return (role == AgentRole::curriculum_generation || role == AgentRole::reward_generation)
                   ? temperature_generation
                   : temperature_analysis;
    }
};

struct ProviderReply {
    bool ok = false;
    std::string text;
    std::string error;
};

class Provider {
public:
    virtual ~Provider() = default;
    virtual ProviderReply complete(AgentRole role, const std::vector<ChatMessage>& messages) = 0;
    virtual bool deterministic() const { return false; }
};

// Chat-completion HTTP client (OpenAI-compatible JSON shape). The API key is
// read from the configured environment variable at call time.
class HttpProvider : public Provider {
public:
    explicit HttpProvider(ProviderConfig config) : config_(std::move(config)) {}

    ProviderReply complete(AgentRole role, const std::vector<ChatMessage>& messages) override {
        std::string base, path;
        if (!split_endpoint(config_.endpoint, base, path))
            return {false, "", "malformed endpoint: " + config_.endpoint};

        nlohmann::json body{{"model", config_.model},
                            {"temperature", config_.temperature_for(role)},
                            {"messages", nlohmann::json::array()}};
        for (const ChatMessage& m : messages)
            body["messages"].push_back({{"role", m.role}, {"content", m.content}});

        httplib::Client client(base);
        client.set_connection_timeout(config_.timeout_s);
        client.set_read_timeout(config_.timeout_s);
        httplib::Headers headers;
        if (const char* key = std::getenv(config_.api_key_env.c_str()))
            headers.emplace("Authorization", std::string("Bearer ") + key);

        const auto res = client.Post(path, headers, body.dump(), "application/json");
        if (!res) {
            std::ostringstream os;
            os << "transport error: " << httplib::to_string(res.error());
            return {false, "", os.str()};
        }
        if (res->status < 200 || res->status >= 300)
            return {false, "", "http status " + std::to_string(res->status) + ": " + res->body};
        try {
            const auto j = nlohmann::json::parse(res->body);
            return {true, j.at("choices").at(0).at("message").at("content").get<std::string>(), ""};
        } catch (const std::exception& e) {
            return {false, "", std::string("malformed completion body: ") + e.what()};
        }
    }

private:
    static bool split_endpoint(const std::string& url, std::string& base, std::string& path) {
        const auto scheme_end = url.find("://");
        if (scheme_end == std::string::npos) return false;
        const auto path_start = url.find('/', scheme_end + 3);
        if (path_start == std::string::npos) {
            base = url;
            path = "/";
        } else {
            base = url.substr(0, path_start);
            path = url.substr(path_start);
        }
        return true;
    }

    ProviderConfig config_;
};

// Deterministic scripted provider. Responses live in one subdirectory per
// role, consumed in sorted filename order; when a role runs out of scripts
// the last file is repeated, so short scripts drive long runs.
class MockProvider : public Provider {
public:
    explicit MockProvider(const std::filesystem::path& script_dir) : dir_(script_dir) {
        namespace fs = std::filesystem;
        if (!fs::is_directory(dir_)) throw ConfigError("mock script directory not found: " + dir_.string());
        for (AgentRole role : kAllRoles) {
            const fs::path role_dir = dir_ / to_string(role);
            auto& files = scripts_[to_string(role)];
            if (fs::is_directory(role_dir)) {
                for (const auto& entry : fs::directory_iterator(role_dir))
                    if (entry.is_regular_file()) files.push_back(entry.path());
                std::sort(files.begin(), files.end());
            }
        }
    }

    ProviderReply complete(AgentRole role, const std::vector<ChatMessage>&) override {
        const std::string key = to_string(role);
        const auto& files = scripts_.at(key);
        if (files.empty())
            return {false, "", "no mock scripts for role " + key + " under " + dir_.string()};
        const std::size_t idx = std::min(consumed_[key], files.size() - 1);
        ++consumed_[key];
        std::ifstream in(files[idx]);
        std::ostringstream body;
        body << in.rdbuf();
        return {true, body.str(), ""};
    }

    bool deterministic() const override { return true; }

    void set_consumed(const std::string& role, std::size_t n) { consumed_[role] = n; }
    std::size_t consumed(const std::string& role) const {
        const auto it = consumed_.find(role);
        return it == consumed_.end() ? 0 : it->second;
    }

private:
    std::filesystem::path dir_;
    std::map<std::string, std::vector<std::filesystem::path>> scripts_;
    std::map<std::string, std::size_t> consumed_;
};

}  // namespace autocoach::llm
