// Command-line front end: train a policy, evaluate checkpoints, export
// plot-ready metrics from a run directory.

#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "autocoach/orchestrator.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitGatewayInit = 3;

int run_train(autocoach::RunConfig cfg, bool resume) {
    using namespace autocoach;
    try {
        if (resume) {
            Trainer trainer(Trainer::resume_t{}, cfg.out_dir);
            std::cout << "resuming run in " << cfg.out_dir << "\n";
            trainer.train();
        } else {
            Trainer trainer(std::move(cfg));
            trainer.train();
        }
    } catch (const GatewayInitError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitGatewayInit;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    using namespace autocoach;

    CLI::App app{"curriculum-RL driving-policy training with LLM-generated rewards"};
    app.require_subcommand(1);

    // --- train ---------------------------------------------------------------
    auto* train = app.add_subcommand("train", "run the closed-loop training workflow");
    std::string scenario_name = "overtaking";
    std::string scenario_config_path;
    std::string provider_name = "mock";
    std::string mock_dir;
    std::string out_dir;
    std::string endpoint;
    std::string model;
    std::int64_t episodes = 3000;
    std::uint64_t seed = 0;
    bool fixed_reward = false, no_curriculum = false, resume = false;
    int np = 50, nc = 100, nr = 1000;
    int target_density = 1, target_mode = 2;
    train->add_option("--scenario", scenario_name, "overtaking|merging")
        ->check(CLI::IsMember({"overtaking", "merging"}));
    train->add_option("--scenario-config", scenario_config_path, "JSON scenario config file");
    train->add_option("--episodes", episodes, "total training episodes");
    train->add_option("--seed", seed, "master seed");
    train->add_option("--provider", provider_name, "http|mock")->check(CLI::IsMember({"http", "mock"}));
    train->add_option("--mock-dir", mock_dir, "directory of per-role mock response scripts");
    train->add_option("--out", out_dir, "run output directory")->required();
    train->add_option("--endpoint", endpoint, "chat-completion endpoint URL");
    train->add_option("--model", model, "model name");
    train->add_option("--np", np, "episodes per policy update");
    train->add_option("--nc", nc, "episodes per curriculum workflow step");
    train->add_option("--nr", nr, "episodes per reward workflow step");
    train->add_flag("--fixed-reward", fixed_reward, "skip the reward workflow, use the baseline program");
    train->add_flag("--no-curriculum", no_curriculum, "train directly on the target curriculum");
    train->add_option("--target-density", target_density, "target density index for --no-curriculum");
    train->add_option("--target-mode", target_mode, "target motion-mode index for --no-curriculum");
    train->add_flag("--resume", resume, "resume an interrupted run from --out");

    // --- evaluate --------------------------------------------------------------
    auto* eval = app.add_subcommand("evaluate", "greedy evaluation of a checkpoint");
    std::string ckpt_path, eval_task = "overtaking", eval_out, eval_label = "eval", eval_scenario_config;
    std::vector<std::string> density_names{};
    int eval_episodes = 100;
    bool dump_traj = false;
    std::uint64_t eval_seed_base = kEvalSeedBase;
    eval->add_option("--checkpoint", ckpt_path, "policy checkpoint file")->required();
    eval->add_option("--task", eval_task, "overtaking|merging")
        ->check(CLI::IsMember({"overtaking", "merging"}));
    eval->add_option("--scenario-config", eval_scenario_config, "JSON scenario config file");
    eval->add_option("--density", density_names, "empty|low|medium|high (repeatable)")
        ->check(CLI::IsMember({"empty", "low", "medium", "high"}));
    eval->add_option("--episodes", eval_episodes, "episodes per density");
    eval->add_option("--out", eval_out, "report output directory")->required();
    eval->add_option("--label", eval_label, "report label");
    eval->add_option("--seed-base", eval_seed_base, "seed block base");
    eval->add_flag("--dump-trajectories", dump_traj, "write per-episode trajectory CSVs");

    // --- export ----------------------------------------------------------------
    auto* exp = app.add_subcommand("export", "emit training_curve.csv and eval_table.csv for a run");
    std::string export_run;
    exp->add_option("--run", export_run, "run directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand(train)) {
            RunConfig cfg;
            cfg.scenario = scenario_config_path.empty() ? default_scenario(task_from_string(scenario_name))
                                                        : load_scenario_file(scenario_config_path);
            cfg.total_episodes = episodes;
            cfg.seed = seed;
            cfg.use_mock = provider_name == "mock";
            cfg.mock_dir = mock_dir;
            cfg.out_dir = out_dir;
            cfg.fixed_reward = fixed_reward;
            cfg.no_curriculum = no_curriculum;
            cfg.n_policy = np;
            cfg.n_curriculum = nc;
            cfg.n_reward = nr;
            cfg.target = {target_density, target_mode};
            if (!endpoint.empty()) cfg.provider.endpoint = endpoint;
            if (!model.empty()) cfg.provider.model = model;
            return run_train(std::move(cfg), resume);
        }
        if (app.got_subcommand(eval)) {
            const ScenarioConfig scenario = eval_scenario_config.empty()
                                                ? default_scenario(task_from_string(eval_task))
                                                : load_scenario_file(eval_scenario_config);
            if (density_names.empty()) density_names = {"empty", "low", "medium", "high"};
            std::vector<Density> densities;
            for (const auto& n : density_names) densities.push_back(*density_from_string(n));
            const EvalReport report =
                evaluate_checkpoint(ckpt_path, scenario, densities, eval_episodes, eval_seed_base,
                                    dump_traj ? eval_out : "");
            write_eval_report(report, eval_out, eval_label);
            for (const auto& row : report.rows) {
                std::printf("%s %s: S=%.1f%% C=%.1f%% TO=%.1f%%\n", to_string(scenario.task),
                            to_string(row.density), row.success_pct, row.collision_pct, row.timeout_pct);
            }
            return kExitOk;
        }
        if (app.got_subcommand(exp)) {
            export_metrics(export_run);
            return kExitOk;
        }
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return kExitOk;
}
