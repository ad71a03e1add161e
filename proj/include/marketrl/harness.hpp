#ifndef MARKETRL_HARNESS_HPP
#define MARKETRL_HARNESS_HPP

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "marketrl/config.hpp"
#include "marketrl/eval.hpp"
#include "marketrl/policy.hpp"

namespace marketrl {

struct TrainArtifacts {
    std::filesystem::path checkpoint_path; // final snapshot
    std::filesystem::path metrics_path;
};

/// Trains cfg.algo for cfg.train.total_steps with master seed `seed`, writing
/// metrics.csv, periodic snapshots and checkpoint_final.json into out_dir.
/// Fully deterministic in (config, seed).
TrainArtifacts run_training(const ExperimentConfig& cfg, std::uint64_t seed,
                            const std::filesystem::path& out_dir);

/// Loads a checkpoint and evaluates it greedily under cfg.eval; the report
/// lands at out_dir/<label>.json with traces beside it.
EvalReport run_eval_checkpoint(const std::filesystem::path& checkpoint_path,
                               const ExperimentConfig& cfg, const std::string& label,
                               const std::string& group, std::uint64_t agent_seed,
                               const std::filesystem::path& out_dir, std::uint64_t act_seed);

/// Baseline spec: "fixed:K" (always produce K units) or "random".
Policy make_baseline_policy(const std::string& spec, const MarketParams& params);

EvalReport run_eval_baseline(const std::string& spec, const ExperimentConfig& cfg,
                             const std::string& label, const std::string& group,
                             const std::filesystem::path& out_dir, std::uint64_t act_seed);

/// Whole-roster experiment: trains one actor-critic run per seed in
/// train.ppo_seeds plus optional DQN and A2C runs, evaluates those alongside
/// train.n_fixed fixed and train.n_random random baselines, and writes
/// manifest.json cataloguing every artifact with its SHA-256. With dry_run
/// only the manifest (roster + config echo, no artifacts) is produced.
/// Returns the manifest path.
std::filesystem::path run_replicate(const ExperimentConfig& cfg,
                                    const std::filesystem::path& out_dir, bool dry_run = false);

/// Group comparison over saved evaluation reports: one sample point per agent
/// (its mean cumulative profit). Emits comparison.json, group_means.csv,
/// group_quartiles.csv and cumulative_traces.csv into out_dir; pairwise
/// one-sided Welch tests run for every group pair (alphabetical order), plus
/// a one-sample test of each group against mu0. Returns the parsed report.
nlohmann::json run_compare(const std::vector<std::filesystem::path>& report_paths,
                           const std::filesystem::path& out_dir, double mu0 = 0.0);

} // namespace marketrl

#endif
