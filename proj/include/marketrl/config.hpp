#ifndef MARKETRL_CONFIG_HPP
#define MARKETRL_CONFIG_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "marketrl/a2c.hpp"
#include "marketrl/dqn.hpp"
#include "marketrl/env.hpp"
#include "marketrl/ppo.hpp"

namespace marketrl {

/// train section: scale of a run plus the replicate roster.
struct TrainSection {
    std::int64_t total_steps = 200000;
    int n_envs = 4;
    std::uint64_t seed = 0;
    std::int64_t checkpoint_interval = 50000; // env steps between snapshots; 0 = final only
    std::vector<std::uint64_t> ppo_seeds = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
    bool include_dqn = true;
    bool include_a2c = true;
    int n_fixed = 15;  // fixed baselines producing q_min .. q_min + n_fixed - 1
    int n_random = 5;
};

struct EvalSection {
    int horizon = 1000;
    int episodes = 5;
    std::uint64_t seed = 1000;
};

/// algo section: one active algorithm; the configs for all three live here so
/// a parsed file can be echoed without loss.
struct AlgoSection {
    std::string name = "ppo";
    PpoConfig ppo;
    A2cConfig a2c;
    DqnConfig dqn;
};

struct ExperimentConfig {
    EnvConfig env;
    RandomizationSpec randomization;
    AlgoSection algo;
    TrainSection train;
    EvalSection eval;

    void validate() const;
};

/// Named scales: "desk" (the default, 200k steps / 4 envs) and "full"
/// (1.5M steps, otherwise identical).
ExperimentConfig preset_config(const std::string& name);

/// Applies a JSON document with sections env/algo/train/eval on top of a base
/// config. Unknown keys anywhere are errors.
void apply_config_json(ExperimentConfig& cfg, const nlohmann::json& j);

/// preset + file overrides + validation.
ExperimentConfig load_config_file(const std::filesystem::path& path,
                                  const std::string& preset = "desk");

/// Full echo of every effective value, suitable for manifests and
/// checkpoint embedding. Parsing this echo reproduces the config.
nlohmann::json config_to_json(const ExperimentConfig& cfg);

} // namespace marketrl

#endif
