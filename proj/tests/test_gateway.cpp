#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <thread>

#include "autocoach/llm/gateway.hpp"
#include "autocoach/scenario.hpp"

using namespace autocoach;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("autocoach_gw_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

void write_script(const fs::path& mock_dir, const char* role, int index, const std::string& body) {
    fs::create_directories(mock_dir / role);
    char name[16];
    std::snprintf(name, sizeof(name), "%03d.txt", index);
    std::ofstream out(mock_dir / role / name);
    out << body;
}

// Fails the first `failures` calls, then succeeds.
class FlakyProvider : public llm::Provider {
public:
    explicit FlakyProvider(int failures) : failures_(failures) {}
    llm::ProviderReply complete(llm::AgentRole, const std::vector<llm::ChatMessage>&) override {
        if (calls_++ < failures_) return {false, "", "connection reset"};
        return {true, "hello", ""};
    }
    bool deterministic() const override { return true; }  // skip backoff sleeps in tests

private:
    int failures_;
    int calls_ = 0;
};

}  // namespace

TEST_CASE("mock provider consumes per-role scripts in order and repeats the last") {
    const fs::path dir = fresh_dir("mock_order");
    write_script(dir, "curriculum_generation", 0, "first");
    write_script(dir, "curriculum_generation", 1, "second");
    write_script(dir, "reward_analysis", 0, "analysis");

    llm::MockProvider mock(dir);
    REQUIRE(mock.complete(llm::AgentRole::curriculum_generation, {}).text == "first");
    REQUIRE(mock.complete(llm::AgentRole::curriculum_generation, {}).text == "second");
    REQUIRE(mock.complete(llm::AgentRole::curriculum_generation, {}).text == "second");  // exhausted
    REQUIRE(mock.complete(llm::AgentRole::reward_analysis, {}).text == "analysis");

    REQUIRE_FALSE(mock.complete(llm::AgentRole::reward_generation, {}).ok);  // no scripts

    mock.set_consumed("curriculum_generation", 0);
    REQUIRE(mock.complete(llm::AgentRole::curriculum_generation, {}).text == "first");
    fs::remove_all(dir);
}

TEST_CASE("gateway records one transcript entry per attempt") {
    const fs::path run = fresh_dir("transcripts");
    MemoryStore store(run);
    llm::ProviderConfig cfg;
    cfg.max_retries = 3;
    llm::Gateway gw(std::make_shared<FlakyProvider>(1), cfg, &store);

    llm::PromptBundle bundle{"sys", "user", "text"};
    const auto reply = gw.complete(llm::AgentRole::reward_analysis, bundle, 42);
    REQUIRE(reply.ok);
    REQUIRE(reply.text == "hello");
    REQUIRE(store.transcript_count() == 2);  // one failed attempt, one success

    const auto counts = store.transcript_counts_by_role();
    REQUIRE(counts.at("reward_analysis") == 2);
    fs::remove_all(run);
}

TEST_CASE("exhausting all attempts reports gateway-unavailable") {
    const fs::path run = fresh_dir("exhaust");
    MemoryStore store(run);
    llm::ProviderConfig cfg;
    cfg.max_retries = 3;
    llm::Gateway gw(std::make_shared<FlakyProvider>(99), cfg, &store);

    const auto reply = gw.complete(llm::AgentRole::reward_generation, {"s", "u", ""}, 0);
    REQUIRE_FALSE(reply.ok);
    REQUIRE(reply.text.empty());
    REQUIRE(reply.error.find("gateway unavailable") != std::string::npos);
    REQUIRE(store.transcript_count() == 3);
    fs::remove_all(run);
}

TEST_CASE("deterministic providers get a logical transcript clock") {
    const fs::path run = fresh_dir("clock");
    const fs::path mock_dir = fresh_dir("clock_mock");
    write_script(mock_dir, "curriculum_analysis", 0, "a");
    {
        MemoryStore store(run);
        llm::Gateway gw(std::make_shared<llm::MockProvider>(mock_dir), {}, &store);
        gw.complete(llm::AgentRole::curriculum_analysis, {"s", "u", ""}, 0);
        gw.complete(llm::AgentRole::curriculum_analysis, {"s", "u", ""}, 1);
    }
    std::ifstream in(run / "transcripts.jsonl");
    std::string line;
    std::getline(in, line);
    REQUIRE(nlohmann::json::parse(line).at("timestamp") == "t0");
    std::getline(in, line);
    REQUIRE(nlohmann::json::parse(line).at("timestamp") == "t1");
    fs::remove_all(run);
    fs::remove_all(mock_dir);
}

TEST_CASE("http provider speaks the chat-completion wire shape") {
    httplib::Server server;
    nlohmann::json seen_body;
    std::string seen_auth;
    server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
        seen_body = nlohmann::json::parse(req.body);
        if (req.has_header("Authorization")) seen_auth = req.get_header_value("Authorization");
        const nlohmann::json reply{
            {"choices", {{{"message", {{"role", "assistant"}, {"content", "pong"}}}}}}};
        res.set_content(reply.dump(), "application/json");
    });
    const int port = server.bind_to_any_port("127.0.0.1");
    REQUIRE(port > 0);
    std::thread server_thread([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    setenv("AUTOCOACH_TEST_KEY", "sk-test", 1);
    llm::ProviderConfig cfg;
    cfg.endpoint = "http://127.0.0.1:" + std::to_string(port) + "/v1/chat/completions";
    cfg.model = "test-model";
    cfg.api_key_env = "AUTOCOACH_TEST_KEY";
    llm::HttpProvider provider(cfg);

    const auto reply = provider.complete(llm::AgentRole::reward_generation,
                                         {{"system", "be brief"}, {"user", "ping"}});
    REQUIRE(reply.ok);
    REQUIRE(reply.text == "pong");
    REQUIRE(seen_body.at("model") == "test-model");
    REQUIRE(seen_body.at("temperature").get<double>() == Catch::Approx(0.2));  // generation role
    REQUIRE(seen_body.at("messages").size() == 2);
    REQUIRE(seen_body.at("messages")[0].at("role") == "system");
    REQUIRE(seen_auth == "Bearer sk-test");

    server.stop();
    server_thread.join();
}

TEST_CASE("http provider reports transport errors without throwing") {
    llm::ProviderConfig cfg;
    cfg.endpoint = "http://127.0.0.1:1/v1/chat/completions";  // nothing listens here
    cfg.timeout_s = 1;
    llm::HttpProvider provider(cfg);
    const auto reply = provider.complete(llm::AgentRole::reward_analysis, {{"user", "x"}});
    REQUIRE_FALSE(reply.ok);
    REQUIRE_FALSE(reply.error.empty());
}

// --- extraction -------------------------------------------------------------------

TEST_CASE("extracts the single tagged reward block verbatim") {
    const std::string response =
        "Here is my program.\n```reward\nspeed_r = 0.1 * v_ego\ntotal = speed_r\n```\nHope it helps.";
    const auto r = llm::extract_program_block(response);
    REQUIRE(r.ok());
    REQUIRE(*r.source == "speed_r = 0.1 * v_ego\ntotal = speed_r");
}

TEST_CASE("zero tagged blocks is an extraction error") {
    REQUIRE(llm::extract_program_block("no code here").error == llm::ExtractError::no_block);
    // An untagged fence does not count.
    REQUIRE(llm::extract_program_block("```\ntotal = 1\n```").error == llm::ExtractError::no_block);
}

TEST_CASE("multiple tagged blocks are an extraction error") {
    const std::string response = "```reward\ntotal = 1\n```\n```reward\ntotal = 2\n```";
    REQUIRE(llm::extract_program_block(response).error == llm::ExtractError::multiple_blocks);
}

TEST_CASE("extraction succeeds even when the program later fails to parse") {
    const auto r = llm::extract_program_block("```reward\nthis is not a program\n```");
    REQUIRE(r.ok());
    REQUIRE(*r.source == "this is not a program");
}

// --- prompt construction -------------------------------------------------------------

TEST_CASE("context descriptor is deterministic and names the task") {
    const auto sc = default_overtaking_scenario();
    const std::string a = llm::build_context_descriptor(sc);
    const std::string b = llm::build_context_descriptor(sc);
    REQUIRE(a == b);
    REQUIRE(a.find("overtaking") != std::string::npos);
    REQUIRE(a.find("3 lanes") != std::string::npos);
    REQUIRE(a.find("12") != std::string::npos);  // curriculum set size
    for (const auto& name : dsl::kAccessibleVarNames) REQUIRE(a.find(std::string(name)) != std::string::npos);
}

TEST_CASE("merging descriptor includes the merge-zone extents") {
    const auto sc = default_merging_scenario();
    const std::string d = llm::build_context_descriptor(sc);
    REQUIRE(d.find("70.0") != std::string::npos);
    REQUIRE(d.find("160.0") != std::string::npos);
}

TEST_CASE("reflection summary formats window statistics") {
    WindowStats stats;
    stats.count = 100;
    stats.success_rate = 0.4;
    stats.collision_rate = 0.35;
    stats.timeout_rate = 0.25;
    stats.mean_total_reward = 12.3456;
    stats.component_means = {{"speed_r", 3.2}, {"success_r", 40.0}};
    stats.curriculum_counts["low/interactive"] = 100;

    const std::string s = llm::build_reflection_summary(stats, {}, "total = 1", {"warning text here"});
    REQUIRE(s.find("success rate: 40.0%") != std::string::npos);
    REQUIRE(s.find("collision rate: 35.0%") != std::string::npos);
    REQUIRE(s.find("timeout rate: 25.0%") != std::string::npos);
    REQUIRE(s.find("speed_r: 3.2000") != std::string::npos);
    REQUIRE(s.find("warning text here") != std::string::npos);  // lint passthrough
    REQUIRE(s.find("total = 1") != std::string::npos);
}

TEST_CASE("prompt bundles thread the workflow inputs") {
    const std::string ctx = llm::build_context_descriptor(default_overtaking_scenario());

    const auto analysis = llm::curriculum_analysis_bundle(ctx, "HISTORY", "PREV_A", "FEEDBACK");
    REQUIRE(analysis.system_text.find("Accessible reward variables") != std::string::npos);
    REQUIRE(analysis.user_text.find("HISTORY") != std::string::npos);
    REQUIRE(analysis.user_text.find("PREV_A") != std::string::npos);
    REQUIRE(analysis.user_text.find("FEEDBACK") != std::string::npos);

    const auto gen = llm::curriculum_generation_bundle(ctx, "HISTORY", "ANALYSIS", "FEEDBACK");
    REQUIRE(gen.user_text.find("ANALYSIS") != std::string::npos);
    REQUIRE(gen.user_text.find("<curriculum density=D mode=M/>") != std::string::npos);

    const auto rgen = llm::reward_generation_bundle(ctx, "OLD_PROGRAM", "ANALYSIS", "FEEDBACK", "ERR");
    REQUIRE(rgen.system_text.find("EBNF") != std::string::npos);
    REQUIRE(rgen.system_text.find("total_stmt") != std::string::npos);
    REQUIRE(rgen.user_text.find("OLD_PROGRAM") != std::string::npos);
    REQUIRE(rgen.user_text.find("ERR") != std::string::npos);
    REQUIRE(rgen.user_text.find("```reward") != std::string::npos);
}
