#ifndef MARKETRL_CHECKPOINT_HPP
#define MARKETRL_CHECKPOINT_HPP

#include <filesystem>
#include <map>
#include <string>

#include <nlohmann/json.hpp>

#include "marketrl/nn.hpp"
#include "marketrl/policy.hpp"

namespace marketrl {

inline constexpr int kCheckpointFormatVersion = 1;

/// Network serialization: {format_version, layer_sizes, weights (row-major
/// nested arrays), biases}. Doubles survive a round-trip bit-exactly.
nlohmann::json mlp_to_json(const Mlp& net);
Mlp mlp_from_json(const nlohmann::json& j);

nlohmann::json adam_to_json(const AdamState& state);
AdamState adam_from_json(const nlohmann::json& j);

/// Training snapshot: algorithm tag ("ppo" | "dqn" | "a2c"), an echo of the
/// training configuration, named networks, and optionally their optimizer
/// states. Maps keep file output key-ordered and therefore byte-stable.
struct Checkpoint {
    std::string algorithm;
    nlohmann::json config = nlohmann::json::object();
    std::map<std::string, Mlp> nets;
    std::map<std::string, AdamState> optimizers;
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Builds the evaluation-ready policy: actor-critic for ppo/a2c (expects nets
/// "policy" and "value"), Q-policy for dqn (expects net "q").
Policy policy_from_checkpoint(const Checkpoint& ckpt);

} // namespace marketrl

#endif
