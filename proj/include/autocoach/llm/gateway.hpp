#pragma once

#include <chrono>
#include <functional>
#include <memory>
#include <string>
#include <thread>

#include "autocoach/llm/prompts.hpp"
#include "autocoach/llm/provider.hpp"
#include "autocoach/memory.hpp"

namespace autocoach::llm {

struct GatewayReply {
    bool ok = false;
    std::string text;
    std::string error;
};

// Front door for all agent calls: renders bundles into chat messages, retries
// transport failures with exponential backoff, and records one transcript
// entry per attempt. Deterministic providers get a logical clock so that
// transcripts are byte-reproducible.
class Gateway {
public:
    Gateway(std::shared_ptr<Provider> provider, ProviderConfig config, MemoryStore* store)
        : provider_(std::move(provider)), config_(std::move(config)), store_(store) {
        seq_ = store_ ? store_->transcript_count() : 0;
        logical_clock_ = seq_;
    }

    // One completion with transport retries. Every attempt is transcribed.
    GatewayReply complete(AgentRole role, const PromptBundle& bundle, std::int64_t episode) {
        const std::vector<ChatMessage> messages{{"system", bundle.system_text},
                                                {"user", bundle.user_text}};
        std::string last_error;
        for (int attempt = 0; attempt < config_.max_retries; ++attempt) {
            if (attempt > 0 && !provider_->deterministic()) {
                std::this_thread::sleep_for(
                    std::chrono::milliseconds(config_.backoff_base_ms * (1 << (attempt - 1))));
            }
            const ProviderReply reply = provider_->complete(role, messages);
            record(role, bundle, reply.ok ? reply.text : reply.error, reply.ok ? "ok" : "transport_error",
                   episode);
            if (reply.ok) return {true, reply.text, ""};
            last_error = reply.error;
        }
        return {false, "", "gateway unavailable after " + std::to_string(config_.max_retries) +
                               " attempts: " + last_error};
    }

    // Marks a structurally invalid response (failed decode/parse) in the
    // transcript stream so workflow-level retries stay auditable.
    void note_rejection(AgentRole role, std::int64_t episode, const std::string& reason) {
        TranscriptRecord t;
        t.seq = seq_++;
        t.timestamp = now();
        t.role = to_string(role);
        t.outcome = "decode_error: " + reason;
        t.episode = episode;
        if (store_) store_->append_transcript(t);
    }

    const ProviderConfig& config() const { return config_; }
    Provider& provider() { return *provider_; }

private:
    std::string now() {
        if (provider_->deterministic()) return "t" + std::to_string(logical_clock_++);
        const auto now = std::chrono::system_clock::now();
        const std::time_t tt = std::chrono::system_clock::to_time_t(now);
        char buf[32];
        std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&tt));
        return buf;
    }

    void record(AgentRole role, const PromptBundle& bundle, const std::string& response,
                const std::string& outcome, std::int64_t episode) {
        TranscriptRecord t;
        t.seq = seq_++;
        t.timestamp = now();
        t.role = to_string(role);
        t.system_prompt = bundle.system_text;
        t.user_prompt = bundle.user_text;
        t.response = response;
        t.outcome = outcome;
        t.episode = episode;
        if (store_) store_->append_transcript(t);
    }

    std::shared_ptr<Provider> provider_;
    ProviderConfig config_;
    MemoryStore* store_;
    std::int64_t seq_ = 0;
    std::int64_t logical_clock_ = 0;
};

}  // namespace autocoach::llm
