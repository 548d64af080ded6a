#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ood/experiment.hpp"

namespace {

ood::ExperimentConfig build_config(const std::string& config_path, const std::vector<std::string>& sets,
                                   long long seed, const std::string& out_dir) {
    ood::ExperimentConfig cfg = config_path.empty() ? ood::ExperimentConfig::from_overrides(sets)
                                                    : ood::ExperimentConfig::load(config_path, sets);
    if (seed >= 0) cfg.seed = static_cast<std::uint64_t>(seed);
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    cfg.finalize();
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"metric-learning out-of-distribution detection toolkit"};
    app.require_subcommand(1);

    std::string config_path, out_dir, checkpoint;
    long long seed = -1;
    std::vector<std::string> sets;
    std::vector<std::string> run_dirs;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "experiment configuration file");
        cmd->add_option("--seed", seed, "override train.seed");
        cmd->add_option("--out", out_dir, "output directory for run artifacts");
        cmd->add_option("--set", sets, "override a config key, e.g. --set train.mode=ml")
            ->take_all();
    };

    CLI::App* train = app.add_subcommand("train", "train a detector and write a checkpoint");
    add_common(train);

    CLI::App* eval = app.add_subcommand("eval", "score test data against a checkpoint");
    add_common(eval);
    eval->add_option("--checkpoint", checkpoint, "checkpoint path (default <out>/checkpoint.bin)");

    CLI::App* report = app.add_subcommand("report", "aggregate runs into a comparison table + PCA data");
    report->add_option("runs", run_dirs, "run directories produced by eval")->required();
    report->add_option("--out", out_dir, "output directory (default report)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (train->parsed()) {
            const ood::ExperimentConfig cfg = build_config(config_path, sets, seed, out_dir);
            const ood::TrainResult r = ood::cmd_train(cfg);
            std::cout << "trained " << cfg.mode << " for " << cfg.steps << " steps, final loss " << r.final_loss
                      << ", artifacts in " << cfg.out_dir << "\n";
        } else if (eval->parsed()) {
            const ood::ExperimentConfig cfg = build_config(config_path, sets, seed, out_dir);
            const ood::EvalResult r = ood::cmd_eval(cfg, checkpoint);
            std::cout << "in-distribution accuracy " << r.in_dist_accuracy << "%\n";
            for (const auto& [name, m] : r.per_source)
                std::cout << name << ": AUROC " << m.auroc << ", FPR@95TPR " << m.fpr_at_95_tpr << "\n";
        } else if (report->parsed()) {
            ood::cmd_report(run_dirs, out_dir.empty() ? "report" : out_dir);
            std::cout << "report written to " << (out_dir.empty() ? "report" : out_dir) << "\n";
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
