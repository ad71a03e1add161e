#ifndef MARKETRL_EVAL_HPP
#define MARKETRL_EVAL_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "marketrl/config.hpp"
#include "marketrl/policy.hpp"
#include "marketrl/stats.hpp"

namespace marketrl {

struct EvalEpisode {
    int index = 0;
    std::uint64_t seed = 0;
    double cumulative_profit = 0.0;
    std::string trace_path; // relative to the report's directory
};

/// Greedy evaluation record for one agent. The summary aggregates the
/// per-episode cumulative profits; every episode references a per-step trace
/// CSV whose reward column sums to the episode's cumulative figure.
struct EvalReport {
    std::string label;
    std::string group; // "drl", "drl_extra", "fixed", "random"
    std::uint64_t agent_seed = 0;
    std::uint64_t eval_seed = 0;
    int horizon = 0;
    std::vector<EvalEpisode> episodes;
    SampleSummary summary;
};

/// Runs `eval.episodes` greedy episodes. Episode seeds derive only from
/// eval.seed, so different agents face identical market draws. Trace CSVs are
/// written under out_dir/traces/. When the randomization spec is non-empty,
/// each episode samples fresh market parameters first. act_seed feeds the
/// action stream consumed by stochastic (random baseline) policies.
EvalReport evaluate_policy(const EnvConfig& env_cfg, const RandomizationSpec& randomization,
                           const Policy& policy, const std::string& label,
                           const std::string& group, std::uint64_t agent_seed,
                           const EvalSection& eval, const std::filesystem::path& out_dir,
                           std::uint64_t act_seed);

void save_eval_report(const std::filesystem::path& path, const EvalReport& report);
EvalReport load_eval_report(const std::filesystem::path& path);

} // namespace marketrl

#endif
