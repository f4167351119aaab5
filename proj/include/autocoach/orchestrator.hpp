#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "autocoach/controller.hpp"
#include "autocoach/curriculum.hpp"
#include "autocoach/llm/gateway.hpp"
#include "autocoach/memory.hpp"
#include "autocoach/ppo.hpp"
#include "autocoach/reward_dsl.hpp"
#include "autocoach/sim.hpp"

namespace autocoach {

// No usable reward program could be obtained at initialization.
struct GatewayInitError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Hand-written reward used by --fixed-reward runs and as the fallback when
// no generated program is available.
inline constexpr const char* kBaselineRewardSource =
    "# hand-written baseline reward\n"
    "speed_r = 0.1 * v_ego / v_limit\n"
    "success_r = 50 * success\n"
    "collision_p = -50 * collision\n"
    "total = speed_r + success_r + collision_p\n";

struct RunConfig {
    ScenarioConfig scenario = default_overtaking_scenario();
    std::int64_t total_episodes = 3000;
    int n_policy = 50;      // episodes per PPO update
    int n_curriculum = 100; // episodes per curriculum workflow step
    int n_reward = 1000;    // episodes per reward workflow step
    std::uint64_t seed = 0;
    bool use_mock = false;
    std::string mock_dir;
    llm::ProviderConfig provider;
    std::string out_dir;
    int eval_episodes = 100;
    bool fixed_reward = false;
    bool no_curriculum = false;
    CurriculumId target{1, 2};  // used by --no-curriculum runs
    double eps0 = 0.3;
    double eps_decay_fraction = 0.8;
    rl::Hyperparams hyper;

    void validate() const {
        scenario.validate();
        if (total_episodes <= 0) throw ConfigError("total_episodes must be positive");
        if (n_policy <= 0 || n_curriculum <= 0 || n_reward <= 0)
            throw ConfigError("cadence parameters must be positive");
        if (out_dir.empty()) throw ConfigError("output run directory required");
        if (use_mock && mock_dir.empty()) throw ConfigError("mock provider needs --mock-dir");
        if (!CurriculumSet::contains(target)) throw ConfigError("target curriculum outside the set");
    }
};

inline json run_config_to_json(const RunConfig& c) {
    return json{{"scenario", to_json(c.scenario)},
                {"total_episodes", c.total_episodes},
                {"n_policy", c.n_policy},
                {"n_curriculum", c.n_curriculum},
                {"n_reward", c.n_reward},
                {"seed", c.seed},
                {"use_mock", c.use_mock},
                {"mock_dir", c.mock_dir},
                {"provider",
                 {{"endpoint", c.provider.endpoint},
                  {"model", c.provider.model},
                  {"temperature_generation", c.provider.temperature_generation},
                  {"temperature_analysis", c.provider.temperature_analysis},
                  {"timeout_s", c.provider.timeout_s},
                  {"max_retries", c.provider.max_retries},
                  {"backoff_base_ms", c.provider.backoff_base_ms},
                  {"api_key_env", c.provider.api_key_env}}},
                {"eval_episodes", c.eval_episodes},
                {"fixed_reward", c.fixed_reward},
                {"no_curriculum", c.no_curriculum},
                {"target_density", c.target.density},
                {"target_motion_mode", c.target.motion_mode},
                {"eps0", c.eps0},
                {"eps_decay_fraction", c.eps_decay_fraction},
                {"hyper",
                 {{"lr_actor", c.hyper.lr_actor},
                  {"lr_critic", c.hyper.lr_critic},
                  {"gamma", c.hyper.gamma},
                  {"clip_eps", c.hyper.clip_eps},
                  {"epochs", c.hyper.epochs},
                  {"gae_lambda", c.hyper.gae_lambda},
                  {"entropy_coef", c.hyper.entropy_coef},
                  {"grad_norm_clip", c.hyper.grad_norm_clip}}}};
}

inline RunConfig run_config_from_json(const json& j) {
    RunConfig c;
    c.scenario = scenario_from_json(j.at("scenario"));
    c.total_episodes = j.at("total_episodes").get<std::int64_t>();
    c.n_policy = j.at("n_policy").get<int>();
    c.n_curriculum = j.at("n_curriculum").get<int>();
    c.n_reward = j.at("n_reward").get<int>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.use_mock = j.at("use_mock").get<bool>();
    c.mock_dir = j.at("mock_dir").get<std::string>();
    const auto& p = j.at("provider");
    c.provider.endpoint = p.at("endpoint").get<std::string>();
    c.provider.model = p.at("model").get<std::string>();
    c.provider.temperature_generation = p.at("temperature_generation").get<double>();
    c.provider.temperature_analysis = p.at("temperature_analysis").get<double>();
    c.provider.timeout_s = p.at("timeout_s").get<int>();
    c.provider.max_retries = p.at("max_retries").get<int>();
    c.provider.backoff_base_ms = p.at("backoff_base_ms").get<int>();
    c.provider.api_key_env = p.at("api_key_env").get<std::string>();
    c.eval_episodes = j.at("eval_episodes").get<int>();
    c.fixed_reward = j.at("fixed_reward").get<bool>();
    c.no_curriculum = j.at("no_curriculum").get<bool>();
    c.target = {j.at("target_density").get<int>(), j.at("target_motion_mode").get<int>()};
    c.eps0 = j.at("eps0").get<double>();
    c.eps_decay_fraction = j.at("eps_decay_fraction").get<double>();
    const auto& h = j.at("hyper");
    c.hyper.lr_actor = h.at("lr_actor").get<double>();
    c.hyper.lr_critic = h.at("lr_critic").get<double>();
    c.hyper.gamma = h.at("gamma").get<double>();
    c.hyper.clip_eps = h.at("clip_eps").get<double>();
    c.hyper.epochs = h.at("epochs").get<int>();
    c.hyper.gae_lambda = h.at("gae_lambda").get<double>();
    c.hyper.entropy_coef = h.at("entropy_coef").get<double>();
    c.hyper.grad_norm_clip = h.at("grad_norm_clip").get<double>();
    return c;
}

// ---------------------------------------------------------------------------
// Episode rollout shared by training and evaluation.

struct EpisodeResult {
    EpisodeOutcome outcome;
    int steps = 0;
    double total_reward = 0.0;
    std::vector<std::pair<std::string, double>> component_sums;
    bool reward_eval_error = false;
};

struct TrajectorySink {
    std::ofstream out;

    explicit TrajectorySink(const std::string& path) : out(path, std::ios::trunc) {
        out << "step,vehicle_id,x,y,v,psi\n";
    }

    void record(int step, const StateMatrix& s) {
        dump_row(step, 0, s.ego);
        for (std::size_t i = 0; i < s.svs.size(); ++i) dump_row(step, static_cast<int>(i) + 1, s.svs[i]);
    }

    void dump_row(int step, int id, const VehicleState& v) {
        char buf[160];
        std::snprintf(buf, sizeof(buf), "%d,%d,%.6f,%.6f,%.6f,%.6f\n", step, id, v.x, v.y, v.v, v.psi);
        out << buf;
    }
};

inline EpisodeResult run_episode(Environment& env, const ScenarioConfig& scenario, CurriculumId curriculum,
                                 std::uint64_t episode_seed, rl::Policy& policy, rl::ActMode mode,
                                 const dsl::CompiledReward* reward, rl::RolloutBuffer* buffer,
                                 Rng* action_rng, TrajectorySink* trajectory = nullptr) {
    env.reset(scenario, curriculum, episode_seed);
    EpisodeResult res;
    if (reward) {
        for (const auto& comp : reward->program().components)
            res.component_sums.emplace_back(comp.name, 0.0);
    }
    if (trajectory) trajectory->record(0, env.state());

    Rng dummy(0);
    for (;;) {
        const Observation obs = env.observe();
        const auto flat = obs.flatten();
        nn::Vector raw = Eigen::Map<const nn::Vector>(flat.data(), static_cast<Eigen::Index>(flat.size()));
        if (mode == rl::ActMode::sample) policy.normalizer.update(raw);
        const nn::Vector norm = policy.normalizer.normalize(raw);

        const rl::ActResult act = rl::act(policy, norm, mode, action_rng ? *action_rng : dummy);
        const ActionTriple triple{act.action[0], act.action[1], act.action[2]};
        const DecodedAction decoded = decode(triple, env, env.state().ego);
        const auto [accel, steer] = track(decoded, env.state().ego);
        auto [outcome, events] = env.step(accel, steer);
        events.lane_change_coerced = decoded.lane_change_coerced;

        double step_reward = 0.0;
        if (reward) {
            const dsl::EvalResult ev = reward->evaluate(events.vars);
            if (ev.ok()) {
                step_reward = ev.breakdown->total;
                for (std::size_t i = 0; i < ev.breakdown->components.size(); ++i)
                    res.component_sums[i].second += ev.breakdown->components[i].second;
            } else {
                res.reward_eval_error = true;
            }
        }
        res.total_reward += step_reward;

        if (buffer) buffer->push(norm, act.action, act.log_prob, step_reward, act.value, outcome.terminal());
        if (trajectory) trajectory->record(env.step_index(), env.state());

        if (outcome.terminal()) {
            res.outcome = outcome;
            res.steps = outcome.step;
            return res;
        }
    }
}

// ---------------------------------------------------------------------------
// Training orchestrator

// Fixed Eigen thread count: enough to use a second core for the batched
// updates while keeping GEMM partitioning (and thus results) reproducible.
inline void pin_eigen_threads() { Eigen::setNbThreads(2); }

class Trainer {
public:
    // Fresh run. The run directory must not already contain training state.
    explicit Trainer(RunConfig config) : cfg_(std::move(config)) {
        pin_eigen_threads();
        cfg_.validate();
        if (fs::exists(fs::path(cfg_.out_dir) / "config.snapshot"))
            throw ConfigError("run directory already initialized; use resume");
        store_ = std::make_unique<MemoryStore>(cfg_.out_dir);
        std::ofstream snap(fs::path(cfg_.out_dir) / "config.snapshot");
        snap << run_config_to_json(cfg_).dump(2) << "\n";
        init_gateway();
        policy_ = rl::Policy::make(cfg_.seed);
        actor_opt_ = nn::Adam(policy_.actor, cfg_.hyper.lr_actor);
        critic_opt_ = nn::Adam(policy_.critic, cfg_.hyper.lr_critic);
        c_llm_ = cfg_.no_curriculum ? cfg_.target : CurriculumId{0, 0};
    }

    struct resume_t {};
    // Resumes from the last complete policy-update checkpoint, rewinding the
    // record streams to that boundary and replaying deterministically.
    Trainer(resume_t, const std::string& out_dir) {
        pin_eigen_threads();
        std::ifstream snap(fs::path(out_dir) / "config.snapshot");
        if (!snap) throw ConfigError("no config.snapshot under " + out_dir + "; cannot resume");
        json j;
        snap >> j;
        cfg_ = run_config_from_json(j);
        cfg_.out_dir = out_dir;

        const auto boundary = find_latest_checkpoint();
        store_ = std::make_unique<MemoryStore>(cfg_.out_dir);
        if (boundary) {
            policy_ = rl::load_policy(checkpoint_path(*boundary));
            restore_trainer_state(*boundary);
            start_episode_ = *boundary;
        } else {
            policy_ = rl::Policy::make(cfg_.seed);
            actor_opt_ = nn::Adam(policy_.actor, cfg_.hyper.lr_actor);
            critic_opt_ = nn::Adam(policy_.critic, cfg_.hyper.lr_critic);
            start_episode_ = 0;
        }
        store_->truncate_from(start_episode_);
        truncate_metrics(start_episode_);
        init_gateway();
        restore_workflow_state();
    }

    const RunConfig& config() const { return cfg_; }
    MemoryStore& store() { return *store_; }
    rl::Policy& policy() { return policy_; }

    // Main loop. Episode indices are absolute; every stochastic stream is
    // keyed on (seed, stream, episode) so resumed runs retrace exactly.
    void train(std::int64_t stop_after_episode = -1) {
        for (std::int64_t e = start_episode_; e < cfg_.total_episodes; ++e) {
            process_boundary(e);
            run_training_episode(e);
            if (stop_after_episode >= 0 && e >= stop_after_episode) return;
        }
        if (cfg_.total_episodes % cfg_.n_policy == 0) update_policy(cfg_.total_episodes);
    }

    // Greedy evaluation of the current in-memory policy.
    struct EvalRow {
        Density density;
        double success_pct = 0.0, collision_pct = 0.0, timeout_pct = 0.0;
    };

    static EvalRow evaluate_policy(rl::Policy& policy, const ScenarioConfig& scenario, Density density,
                                   int episodes, std::uint64_t seed_base,
                                   const std::string& trajectory_dir = "") {
        EvalRow row;
        row.density = density;
        Environment env;
        for (int i = 0; i < episodes; ++i) {
            std::unique_ptr<TrajectorySink> sink;
            if (!trajectory_dir.empty()) {
                char name[64];
                std::snprintf(name, sizeof(name), "traj_%s_ep%03d.csv", to_string(density), i);
                sink = std::make_unique<TrajectorySink>((fs::path(trajectory_dir) / name).string());
            }
            const CurriculumId c{static_cast<int>(density), static_cast<int>(MotionMode::interactive)};
            const EpisodeResult r =
                run_episode(env, scenario, c, derive_seed(seed_base, "eval-episode", static_cast<std::uint64_t>(i)),
                            policy, rl::ActMode::greedy, nullptr, nullptr, nullptr, sink.get());
            switch (r.outcome.kind) {
                case OutcomeKind::success: row.success_pct += 1.0; break;
                case OutcomeKind::collision: row.collision_pct += 1.0; break;
                default: row.timeout_pct += 1.0; break;
            }
        }
        row.success_pct *= 100.0 / episodes;
        row.collision_pct *= 100.0 / episodes;
        row.timeout_pct *= 100.0 / episodes;
        return row;
    }

    std::string checkpoint_path(std::int64_t boundary) const {
        char name[64];
        std::snprintf(name, sizeof(name), "ckpt_%06lld.bin", static_cast<long long>(boundary));
        return (fs::path(cfg_.out_dir) / "checkpoints" / name).string();
    }

    std::optional<std::int64_t> find_latest_checkpoint() const {
        std::optional<std::int64_t> best;
        const fs::path dir = fs::path(cfg_.out_dir) / "checkpoints";
        if (!fs::is_directory(dir)) return best;
        for (const auto& entry : fs::directory_iterator(dir)) {
            const std::string name = entry.path().filename().string();
            long long e = -1;
            if (std::sscanf(name.c_str(), "ckpt_%lld.bin", &e) != 1) continue;
            if (!fs::exists(trainer_state_path(e))) continue;
            try {
                read_tensors(entry.path().string());
                read_tensors(trainer_state_path(e));
            } catch (const std::exception&) {
                continue;  // torn write
            }
            if (!best || e > *best) best = e;
        }
        return best;
    }

private:
    std::string trainer_state_path(std::int64_t boundary) const {
        char name[64];
        std::snprintf(name, sizeof(name), "trainer_%06lld.bin", static_cast<long long>(boundary));
        return (fs::path(cfg_.out_dir) / "checkpoints" / name).string();
    }

    void init_gateway() {
        if (cfg_.use_mock) {
            mock_ = std::make_shared<llm::MockProvider>(cfg_.mock_dir);
            gateway_ = std::make_unique<llm::Gateway>(mock_, cfg_.provider, store_.get());
        } else {
            gateway_ = std::make_unique<llm::Gateway>(std::make_shared<llm::HttpProvider>(cfg_.provider),
                                                      cfg_.provider, store_.get());
        }
        context_ = llm::build_context_descriptor(cfg_.scenario);
    }

    // Everything due before episode `e` runs: PPO update (with checkpoint),
    // then the curriculum and reward workflows.
    void process_boundary(std::int64_t e) {
        if (e > 0 && e % cfg_.n_policy == 0) update_policy(e);
        if (!cfg_.no_curriculum && e % cfg_.n_curriculum == 0) curriculum_workflow(e);
        if (e % cfg_.n_reward == 0) {
            if (cfg_.fixed_reward) {
                if (e == 0) activate_program(kBaselineRewardSource, "(fixed baseline reward)", 0);
            } else {
                reward_workflow(e);
            }
        }
    }

    void update_policy(std::int64_t e) {
        if (buffer_.episodes < 1) return;
        const rl::UpdateDiagnostics diag =
            rl::ppo_update(policy_, actor_opt_, critic_opt_, buffer_, cfg_.hyper);
        if (diag.aborted_nan) std::cerr << "[train] update at episode " << e << " aborted on NaN loss\n";
        append_metrics(e, diag);
        rl::save_policy(checkpoint_path(e), policy_);
        save_trainer_state(e);
    }

    void append_metrics(std::int64_t e, const rl::UpdateDiagnostics& d) {
        const fs::path path = fs::path(cfg_.out_dir) / "metrics.csv";
        const bool fresh = !fs::exists(path);
        std::ofstream out(path, std::ios::app);
        if (fresh)
            out << "episode,mean_ratio,clip_fraction,entropy,actor_loss,critic_loss,actor_grad_norm,"
                   "critic_grad_norm,aborted_nan\n";
        char buf[256];
        std::snprintf(buf, sizeof(buf), "%lld,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%d\n",
                      static_cast<long long>(e), d.mean_ratio, d.clip_fraction, d.entropy, d.actor_loss,
                      d.critic_loss, d.actor_grad_norm, d.critic_grad_norm, d.aborted_nan ? 1 : 0);
        out << buf;
        out.flush();
    }

    void truncate_metrics(std::int64_t boundary) {
        const fs::path path = fs::path(cfg_.out_dir) / "metrics.csv";
        if (!fs::exists(path)) return;
        std::ifstream in(path);
        std::vector<std::string> kept;
        std::string line;
        if (std::getline(in, line)) kept.push_back(line);  // header
        while (std::getline(in, line)) {
            long long e = -1;
            if (std::sscanf(line.c_str(), "%lld,", &e) == 1 && e <= boundary) kept.push_back(line);
        }
        in.close();
        std::ofstream out(path, std::ios::trunc);
        for (const std::string& l : kept) out << l << "\n";
    }

    void save_trainer_state(std::int64_t e) {
        std::vector<NamedTensor> ts;
        auto push_grads = [&](const std::string& prefix, const nn::Mlp::Grads& g) {
            ts.push_back(tensor_of(prefix + ".w1", g.w1));
            ts.push_back(tensor_of(prefix + ".b1", g.b1));
            ts.push_back(tensor_of(prefix + ".w2", g.w2));
            ts.push_back(tensor_of(prefix + ".b2", g.b2));
            for (std::size_t k = 0; k < g.head_w.size(); ++k) {
                ts.push_back(tensor_of(prefix + ".head" + std::to_string(k) + ".w", g.head_w[k]));
                ts.push_back(tensor_of(prefix + ".head" + std::to_string(k) + ".b", g.head_b[k]));
            }
        };
        push_grads("adam.actor.m", actor_opt_.moment1());
        push_grads("adam.actor.v", actor_opt_.moment2());
        push_grads("adam.critic.m", critic_opt_.moment1());
        push_grads("adam.critic.v", critic_opt_.moment2());
        nn::Vector meta(3);
        meta << static_cast<double>(e), static_cast<double>(actor_opt_.steps()),
            static_cast<double>(critic_opt_.steps());
        ts.push_back(tensor_of("meta", meta));
        write_tensors(trainer_state_path(e), ts);

        // Keep only the two most recent trainer-state files; the policy
        // checkpoints themselves are all retained.
        std::vector<std::int64_t> states;
        for (const auto& entry : fs::directory_iterator(fs::path(cfg_.out_dir) / "checkpoints")) {
            long long b = -1;
            if (std::sscanf(entry.path().filename().string().c_str(), "trainer_%lld.bin", &b) == 1)
                states.push_back(b);
        }
        std::sort(states.begin(), states.end());
        for (std::size_t i = 0; i + 2 < states.size(); ++i)
            fs::remove(trainer_state_path(states[i]));
    }

    void restore_trainer_state(std::int64_t e) {
        const auto ts = read_tensors(trainer_state_path(e));
        auto load_grads = [&](const std::string& prefix, const nn::Mlp& shape) {
            nn::Mlp::Grads g = nn::Mlp::Grads::zeros_like(shape);
            g.w1 = matrix_of(find_tensor(ts, prefix + ".w1"));
            g.b1 = vector_of(find_tensor(ts, prefix + ".b1"));
            g.w2 = matrix_of(find_tensor(ts, prefix + ".w2"));
            g.b2 = vector_of(find_tensor(ts, prefix + ".b2"));
            for (std::size_t k = 0; k < g.head_w.size(); ++k) {
                g.head_w[k] = matrix_of(find_tensor(ts, prefix + ".head" + std::to_string(k) + ".w"));
                g.head_b[k] = vector_of(find_tensor(ts, prefix + ".head" + std::to_string(k) + ".b"));
            }
            return g;
        };
        const nn::Vector meta = vector_of(find_tensor(ts, "meta"));
        actor_opt_ = nn::Adam(policy_.actor, cfg_.hyper.lr_actor);
        critic_opt_ = nn::Adam(policy_.critic, cfg_.hyper.lr_critic);
        actor_opt_.restore(load_grads("adam.actor.m", policy_.actor), load_grads("adam.actor.v", policy_.actor),
                           static_cast<std::int64_t>(meta(1)));
        critic_opt_.restore(load_grads("adam.critic.m", policy_.critic),
                            load_grads("adam.critic.v", policy_.critic), static_cast<std::int64_t>(meta(2)));
    }

    // Rebuilds workflow state (active program, last LLM curriculum choice,
    // last analysis texts, mock consumption) from the truncated streams.
    void restore_workflow_state() {
        c_llm_ = cfg_.no_curriculum ? cfg_.target : CurriculumId{0, 0};
        for (const CurriculumDecision& d : store_->decisions()) c_llm_ = d.llm_choice;

        const auto rewards = store_->reward_history();
        if (!rewards.empty()) {
            const RewardHistoryEntry& last = rewards.back();
            auto parsed = dsl::parse(last.source);
            if (!parsed.ok())
                throw ConfigError("persisted reward program no longer parses: " +
                                  parsed.error->describe());
            active_source_ = last.source;
            compiled_ = std::make_unique<dsl::CompiledReward>(*parsed.program);
            active_lints_.clear();
            for (const auto& w : dsl::lint(*parsed.program, cfg_.scenario)) active_lints_.push_back(w.message);
        }

        if (cfg_.use_mock && mock_) {
            for (const auto& [role, count] : store_->transcript_counts_by_role())
                mock_->set_consumed(role, static_cast<std::size_t>(count));
        }

        // Latest successful analysis responses feed the next workflow round.
        std::vector<std::string> warnings;
        const auto transcripts = detail::load_jsonl(fs::path(cfg_.out_dir) / "transcripts.jsonl",
                                                    detail::transcript_from_json, &warnings);
        for (const auto& t : transcripts) {
            if (t.outcome != "ok") continue;
            if (t.role == "curriculum_analysis") prev_curriculum_analysis_ = t.response;
            if (t.role == "reward_analysis") prev_reward_analysis_ = t.response;
        }
    }

    // --- curriculum workflow -------------------------------------------------

    void curriculum_workflow(std::int64_t e) {
        std::string feedback;
        if (e > 0 && !store_->episodes().empty()) {
            const WindowStats stats = store_->window_stats(cfg_.n_curriculum);
            const std::string summary =
                llm::build_reflection_summary(stats, store_->decisions(), active_source_, active_lints_);
            const auto reply = gateway_->complete(llm::AgentRole::curriculum_reflection,
                                                  llm::curriculum_reflection_bundle(context_, summary), e);
            if (!reply.ok) {
                std::cerr << "[curriculum] reflection failed at episode " << e << "; retaining curriculum ("
                          << reply.error << ")\n";
                rationale_ = "(retained: gateway failure in reflection)";
                return;
            }
            feedback = reply.text;
        }

        const std::string history = llm::render_curriculum_history(store_->decisions());
        const auto analysis = gateway_->complete(
            llm::AgentRole::curriculum_analysis,
            llm::curriculum_analysis_bundle(context_, history, prev_curriculum_analysis_, feedback), e);
        if (!analysis.ok) {
            std::cerr << "[curriculum] analysis failed at episode " << e << "; retaining curriculum ("
                      << analysis.error << ")\n";
            rationale_ = "(retained: gateway failure in analysis)";
            return;
        }

        std::string error_feedback;
        for (int attempt = 0; attempt < cfg_.provider.max_retries; ++attempt) {
            const auto reply = gateway_->complete(
                llm::AgentRole::curriculum_generation,
                llm::curriculum_generation_bundle(context_, history, analysis.text, feedback, error_feedback),
                e);
            if (!reply.ok) {
                std::cerr << "[curriculum] generation transport failure at episode " << e << "\n";
                rationale_ = "(retained: gateway failure in generation)";
                return;
            }
            const CurriculumDecodeResult decoded = decode_curriculum(reply.text);
            if (decoded.ok()) {
                c_llm_ = *decoded.id;
                prev_curriculum_analysis_ = analysis.text;
                rationale_ = first_line(reply.text);
                return;
            }
            error_feedback = std::string("curriculum decode error: ") + to_string(*decoded.error);
            gateway_->note_rejection(llm::AgentRole::curriculum_generation, e, to_string(*decoded.error));
        }
        std::cerr << "[curriculum] generation failed " << cfg_.provider.max_retries
                  << " times at episode " << e << "; retaining previous curriculum\n";
        rationale_ = "(retained: undecodable generation responses)";
    }

    // --- reward workflow -----------------------------------------------------

    void reward_workflow(std::int64_t e) {
        const bool have_program = compiled_ != nullptr;
        std::string feedback;
        if (e > 0 && !store_->episodes().empty()) {
            const WindowStats stats = store_->window_stats(cfg_.n_reward);
            const std::string summary =
                llm::build_reflection_summary(stats, store_->decisions(), active_source_, active_lints_);
            const auto reply = gateway_->complete(llm::AgentRole::reward_reflection,
                                                  llm::reward_reflection_bundle(context_, summary), e);
            if (!reply.ok) {
                std::cerr << "[reward] reflection failed at episode " << e << "; retaining program\n";
                return;
            }
            feedback = reply.text;
        }

        const auto analysis = gateway_->complete(
            llm::AgentRole::reward_analysis,
            llm::reward_analysis_bundle(context_, active_source_, prev_reward_analysis_, feedback), e);
        if (!analysis.ok) {
            if (!have_program) fail_init("reward analysis unavailable: " + analysis.error);
            std::cerr << "[reward] analysis failed at episode " << e << "; retaining program\n";
            return;
        }

        std::string error_feedback;
        for (int attempt = 0; attempt < cfg_.provider.max_retries; ++attempt) {
            const auto reply = gateway_->complete(
                llm::AgentRole::reward_generation,
                llm::reward_generation_bundle(context_, active_source_, analysis.text, feedback, error_feedback),
                e);
            if (!reply.ok) {
                if (!have_program) fail_init("reward generation unavailable: " + reply.error);
                std::cerr << "[reward] generation transport failure at episode " << e << "\n";
                return;
            }
            const llm::ExtractResult extracted = llm::extract_program_block(reply.text);
            if (!extracted.ok()) {
                error_feedback = extracted.error == llm::ExtractError::no_block
                                     ? "no ```reward fenced block found in the reply"
                                     : "multiple ```reward fenced blocks found; emit exactly one";
                gateway_->note_rejection(llm::AgentRole::reward_generation, e, error_feedback);
                continue;
            }
            const dsl::ParseResult parsed = dsl::parse(*extracted.source);
            if (!parsed.ok()) {
                error_feedback = "program rejected: " + parsed.error->describe();
                gateway_->note_rejection(llm::AgentRole::reward_generation, e, error_feedback);
                continue;
            }
            activate_program(*extracted.source, analysis.text, e);
            prev_reward_analysis_ = analysis.text;
            return;
        }
        if (!have_program) fail_init("no parseable reward program after retries");
        std::cerr << "[reward] generation failed " << cfg_.provider.max_retries << " times at episode "
                  << e << "; retaining previous program\n";
    }

    void fail_init(const std::string& why) {
        if (cfg_.fixed_reward) {
            activate_program(kBaselineRewardSource, "(fallback baseline reward)", 0);
            return;
        }
        throw GatewayInitError("no initial reward program obtainable: " + why);
    }

    void activate_program(const std::string& source, const std::string& analysis, std::int64_t e) {
        const dsl::ParseResult parsed = dsl::parse(source);
        if (!parsed.ok()) throw ConfigError("reward program rejected: " + parsed.error->describe());
        const auto warnings = dsl::lint(*parsed.program, cfg_.scenario);
        RewardHistoryEntry entry;
        entry.generation = static_cast<int>(store_->reward_history().size());
        entry.source = source;
        entry.fingerprint = parsed.program->fingerprint;
        entry.start_episode = e;
        for (const auto& w : warnings) entry.lint_warnings.push_back(w.message);
        entry.analysis_text = analysis;
        store_->append_reward_entry(entry);

        active_source_ = source;
        active_lints_ = entry.lint_warnings;
        compiled_ = std::make_unique<dsl::CompiledReward>(*parsed.program);
    }

    static std::string first_line(const std::string& text) {
        const auto nl = text.find('\n');
        return nl == std::string::npos ? text : text.substr(0, nl);
    }

    // --- per-episode ----------------------------------------------------------

    void run_training_episode(std::int64_t e) {
        if (!compiled_) throw ConfigError("no active reward program");

        CurriculumId chosen = cfg_.target;
        CurriculumOrigin origin = CurriculumOrigin::llm;
        if (!cfg_.no_curriculum) {
            const EpsilonSchedule schedule{cfg_.eps0, cfg_.eps_decay_fraction, cfg_.total_episodes};
            Rng eps_rng(derive_seed(cfg_.seed, "eps", static_cast<std::uint64_t>(e)));
            std::tie(chosen, origin) = select_curriculum(c_llm_, schedule.at(e), eps_rng);
            if (e % cfg_.n_curriculum == 0)
                store_->append_decision({e, chosen, c_llm_, origin, rationale_});
        }

        const std::uint64_t episode_seed = derive_seed(cfg_.seed, "episode", static_cast<std::uint64_t>(e));
        Rng action_rng(derive_seed(cfg_.seed, "act", static_cast<std::uint64_t>(e)));
        const EpisodeResult r = run_episode(env_, cfg_.scenario, chosen, episode_seed, policy_,
                                            rl::ActMode::sample, compiled_.get(), &buffer_, &action_rng);
        if (r.reward_eval_error)
            std::cerr << "[train] reward evaluation error in episode " << e << " (reward treated as 0)\n";

        EpisodeRecord rec;
        rec.episode = e;
        rec.curriculum = chosen;
        rec.outcome = r.outcome.kind;
        rec.steps = r.steps;
        rec.total_reward = r.total_reward;
        rec.component_sums = r.component_sums;
        rec.reward_fingerprint = compiled_->program().fingerprint;
        rec.seed = episode_seed;
        store_->append_episode(rec);
    }

    RunConfig cfg_;
    std::unique_ptr<MemoryStore> store_;
    std::unique_ptr<llm::Gateway> gateway_;
    std::shared_ptr<llm::MockProvider> mock_;
    std::string context_;

    rl::Policy policy_;
    nn::Adam actor_opt_, critic_opt_;
    rl::RolloutBuffer buffer_;
    Environment env_;

    CurriculumId c_llm_{0, 0};
    std::string rationale_;
    std::string prev_curriculum_analysis_;
    std::string prev_reward_analysis_;
    std::string active_source_;
    std::vector<std::string> active_lints_;
    std::unique_ptr<dsl::CompiledReward> compiled_;

    std::int64_t start_episode_ = 0;
};

// ---------------------------------------------------------------------------
// Evaluation report + export

struct EvalReport {
    std::string checkpoint;
    Task task = Task::overtaking;
    int episodes = 0;
    std::vector<Trainer::EvalRow> rows;
};

inline constexpr std::uint64_t kEvalSeedBase = 0xE7A1u;

inline EvalReport evaluate_checkpoint(const std::string& checkpoint_path, const ScenarioConfig& scenario,
                                      const std::vector<Density>& densities, int episodes,
                                      std::uint64_t seed_base = kEvalSeedBase,
                                      const std::string& trajectory_dir = "") {
    rl::Policy policy = rl::load_policy(checkpoint_path);
    EvalReport report;
    report.checkpoint = checkpoint_path;
    report.task = scenario.task;
    report.episodes = episodes;
    for (Density d : densities)
        report.rows.push_back(
            Trainer::evaluate_policy(policy, scenario, d, episodes, seed_base, trajectory_dir));
    return report;
}

inline void write_eval_report(const EvalReport& report, const fs::path& out_dir, const std::string& label) {
    fs::create_directories(out_dir / "eval");
    json j{{"checkpoint", report.checkpoint},
           {"task", to_string(report.task)},
           {"episodes", report.episodes},
           {"label", label},
           {"rows", json::array()}};
    for (const auto& row : report.rows)
        j["rows"].push_back({{"density", to_string(row.density)},
                             {"success_pct", row.success_pct},
                             {"collision_pct", row.collision_pct},
                             {"timeout_pct", row.timeout_pct}});
    std::ofstream out(out_dir / "eval" / (label + ".json"));
    out << j.dump(2) << "\n";
}

// training_curve.csv: one row per policy-update window; eval_table.csv: one
// row per stored evaluation report, densities across the columns.
inline void export_metrics(const std::string& run_dir) {
    const fs::path dir(run_dir);
    std::ifstream snap(dir / "config.snapshot");
    if (!snap) throw ConfigError("no config.snapshot under " + run_dir);
    json j;
    snap >> j;
    const RunConfig cfg = run_config_from_json(j);

    std::vector<std::string> warnings;
    const auto episodes = detail::load_jsonl(dir / "episodes.jsonl", detail::episode_from_json, &warnings);

    std::vector<std::string> comp_names;
    for (const auto& r : episodes)
        for (const auto& [name, sum] : r.component_sums)
            if (std::find(comp_names.begin(), comp_names.end(), name) == comp_names.end())
                comp_names.push_back(name);

    {
        std::ofstream out(dir / "training_curve.csv", std::ios::trunc);
        out << "episode,mean_total_reward";
        for (const auto& n : comp_names) out << ",mean_" << n;
        out << ",density,motion_mode\n";
        const int w = cfg.n_policy;
        for (std::size_t start = 0; start + 1 <= episodes.size(); start += static_cast<std::size_t>(w)) {
            const std::size_t end = std::min(episodes.size(), start + static_cast<std::size_t>(w));
            double mean_total = 0.0;
            std::map<std::string, std::pair<double, int>> acc;
            for (std::size_t i = start; i < end; ++i) {
                mean_total += episodes[i].total_reward;
                for (const auto& [name, sum] : episodes[i].component_sums) {
                    acc[name].first += sum;
                    acc[name].second += 1;
                }
            }
            mean_total /= static_cast<double>(end - start);
            char buf[64];
            std::snprintf(buf, sizeof(buf), "%lld,%.6f", static_cast<long long>(episodes[end - 1].episode),
                          mean_total);
            out << buf;
            for (const auto& n : comp_names) {
                const auto it = acc.find(n);
                if (it == acc.end()) {
                    out << ",";
                } else {
                    std::snprintf(buf, sizeof(buf), ",%.6f", it->second.first / it->second.second);
                    out << buf;
                }
            }
            out << "," << episodes[start].curriculum.density << "," << episodes[start].curriculum.motion_mode
                << "\n";
            if (end == episodes.size()) break;
        }
    }

    {
        std::ofstream out(dir / "eval_table.csv", std::ios::trunc);
        out << "label,task";
        for (int d = 0; d < kDensityLevels; ++d) {
            const char* n = to_string(static_cast<Density>(d));
            out << "," << n << "_S" << "," << n << "_C" << "," << n << "_TO";
        }
        out << "\n";
        const fs::path eval_dir = dir / "eval";
        std::vector<fs::path> reports;
        if (fs::is_directory(eval_dir))
            for (const auto& entry : fs::directory_iterator(eval_dir))
                if (entry.path().extension() == ".json") reports.push_back(entry.path());
        std::sort(reports.begin(), reports.end());
        for (const fs::path& p : reports) {
            std::ifstream in(p);
            json rj;
            in >> rj;
            out << rj.at("label").get<std::string>() << "," << rj.at("task").get<std::string>();
            std::map<std::string, std::array<double, 3>> cells;
            for (const auto& row : rj.at("rows"))
                cells[row.at("density").get<std::string>()] = {row.at("success_pct").get<double>(),
                                                               row.at("collision_pct").get<double>(),
                                                               row.at("timeout_pct").get<double>()};
            for (int d = 0; d < kDensityLevels; ++d) {
                const auto it = cells.find(to_string(static_cast<Density>(d)));
                if (it == cells.end()) {
                    out << ",,,";
                } else {
                    char buf[64];
                    std::snprintf(buf, sizeof(buf), ",%.1f,%.1f,%.1f", it->second[0], it->second[1],
                                  it->second[2]);
                    out << buf;
                }
            }
            out << "\n";
        }
    }
}

}  // namespace autocoach
