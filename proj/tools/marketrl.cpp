// marketrl: train, evaluate and compare production agents on the simulated
// market. Subcommands: train / eval / baseline / replicate / compare.
// Exit codes: 0 success, 1 usage error, 2 runtime failure.

#include <cstdlib>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "marketrl/config.hpp"
#include "marketrl/errors.hpp"
#include "marketrl/harness.hpp"

namespace {

namespace fs = std::filesystem;
using marketrl::ExperimentConfig;

struct CommonArgs {
    std::string config_path;
    std::string out_dir;
    std::string preset = "desk";
    std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "JSON config file (sections env/algo/train/eval)");
    cmd->add_option("--out", args.out_dir, "Output directory");
    cmd->add_option("--preset", args.preset, "Config preset: desk or full")
        ->check(CLI::IsMember({"desk", "full"}));
    cmd->add_option("--seed", args.seed, "Master seed (overrides train.seed)");
}

ExperimentConfig resolve_config(const CommonArgs& args) {
    ExperimentConfig cfg = args.config_path.empty()
                               ? marketrl::preset_config(args.preset)
                               : marketrl::load_config_file(args.config_path, args.preset);
    if (args.seed) cfg.train.seed = *args.seed;
    cfg.validate();
    return cfg;
}

// --out wins; otherwise MARKETRL_OUT_ROOT; otherwise ./out.
fs::path resolve_out_root(const CommonArgs& args) {
    if (!args.out_dir.empty()) return args.out_dir;
    if (const char* env = std::getenv("MARKETRL_OUT_ROOT")) return env;
    return "out";
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Market production simulator and RL training harness"};
    app.require_subcommand(1);

    CommonArgs train_args, eval_args, baseline_args, replicate_args, compare_args;

    CLI::App* train_cmd = app.add_subcommand("train", "Train one agent, write checkpoints + metrics");
    add_common(train_cmd, train_args);

    CLI::App* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint greedily");
    add_common(eval_cmd, eval_args);
    std::string eval_checkpoint, eval_label = "agent", eval_group = "drl";
    eval_cmd->add_option("--checkpoint", eval_checkpoint, "Checkpoint JSON to evaluate")
        ->required();
    eval_cmd->add_option("--label", eval_label, "Agent label used in the report");
    eval_cmd->add_option("--group", eval_group, "Group label used by compare");

    CLI::App* baseline_cmd = app.add_subcommand("baseline", "Evaluate a fixed:K or random baseline");
    add_common(baseline_cmd, baseline_args);
    std::string baseline_spec, baseline_label;
    baseline_cmd->add_option("--spec", baseline_spec, "Baseline spec: fixed:K or random")
        ->required();
    baseline_cmd->add_option("--label", baseline_label, "Agent label (defaults to the spec)");

    CLI::App* replicate_cmd =
        app.add_subcommand("replicate", "Full roster: train, evaluate, manifest");
    add_common(replicate_cmd, replicate_args);
    bool dry_run = false;
    replicate_cmd->add_flag("--dry-run", dry_run, "Write the manifest without training");

    CLI::App* compare_cmd = app.add_subcommand("compare", "Hypothesis tests over eval reports");
    add_common(compare_cmd, compare_args);
    std::vector<std::string> report_args;
    std::string reports_dir;
    double mu0 = 0.0;
    compare_cmd->add_option("--reports", report_args, "Eval report JSON files");
    compare_cmd->add_option("--reports-dir", reports_dir,
                            "Directory whose *.json files are all treated as reports");
    compare_cmd->add_option("--mu0", mu0, "Null mean for the one-sample tests");

    CLI11_PARSE(app, argc, argv);

    try {
        if (train_cmd->parsed()) {
            const ExperimentConfig cfg = resolve_config(train_args);
            const fs::path out = resolve_out_root(train_args) / "train" /
                                 (cfg.algo.name + "_seed" + std::to_string(cfg.train.seed));
            const auto artifacts = run_training(cfg, cfg.train.seed, out);
            std::cout << "checkpoint: " << artifacts.checkpoint_path.string() << '\n'
                      << "metrics: " << artifacts.metrics_path.string() << '\n';
        } else if (eval_cmd->parsed()) {
            const ExperimentConfig cfg = resolve_config(eval_args);
            const fs::path out = resolve_out_root(eval_args) / "eval" / eval_label;
            const auto report =
                run_eval_checkpoint(eval_checkpoint, cfg, eval_label, eval_group,
                                    cfg.train.seed, out, cfg.eval.seed ^ 0x9E3779B9ull);
            std::cout << "report: " << (out / (eval_label + ".json")).string() << '\n'
                      << "mean cumulative profit: " << report.summary.mean << '\n';
        } else if (baseline_cmd->parsed()) {
            const ExperimentConfig cfg = resolve_config(baseline_args);
            std::string label = baseline_label;
            if (label.empty()) {
                label = baseline_spec;
                for (char& c : label)
                    if (c == ':') c = '_';
            }
            const std::string group = baseline_spec == "random" ? "random" : "fixed";
            const fs::path out = resolve_out_root(baseline_args) / "baseline" / label;
            const auto report = run_eval_baseline(baseline_spec, cfg, label, group, out,
                                                  cfg.eval.seed ^ 0x5851F42Dull);
            std::cout << "report: " << (out / (label + ".json")).string() << '\n'
                      << "mean cumulative profit: " << report.summary.mean << '\n';
        } else if (replicate_cmd->parsed()) {
            const ExperimentConfig cfg = resolve_config(replicate_args);
            const fs::path out = resolve_out_root(replicate_args) / "replicate";
            const fs::path manifest = run_replicate(cfg, out, dry_run);
            std::cout << "manifest: " << manifest.string() << '\n';
        } else if (compare_cmd->parsed()) {
            std::vector<fs::path> reports(report_args.begin(), report_args.end());
            if (!reports_dir.empty())
                for (const auto& entry : fs::directory_iterator(reports_dir))
                    if (entry.is_regular_file() && entry.path().extension() == ".json")
                        reports.push_back(entry.path());
            std::sort(reports.begin(), reports.end());
            if (reports.empty()) {
                std::cerr << "compare: no reports given (use --reports or --reports-dir)\n";
                return 1;
            }
            const fs::path out = resolve_out_root(compare_args) / "compare";
            const auto result = marketrl::run_compare(reports, out, mu0);
            std::cout << "comparison: " << (out / "comparison.json").string() << '\n';
            for (const auto& test : result["tests"])
                std::cout << test["name"].get<std::string>()
                          << ": t=" << test["t_statistic"].get<double>()
                          << " p=" << test["p_value"].get<double>() << '\n';
        }
    } catch (const marketrl::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
