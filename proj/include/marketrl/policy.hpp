#ifndef MARKETRL_POLICY_HPP
#define MARKETRL_POLICY_HPP

#include <Eigen/Dense>
#include <variant>

#include "marketrl/nn.hpp"
#include "marketrl/rng.hpp"

namespace marketrl {

/// Actor-critic pair (softmax policy over action indices + scalar value).
struct ActorCriticPolicy {
    Mlp policy;
    Mlp value;
};

/// Action-value network; greedy or epsilon-greedy over its outputs.
struct QPolicy {
    Mlp q;
};

/// Always produces the same quantity.
struct FixedPolicy {
    int units = 0;
    int q_min = 0; // maps units onto the 0-based action index
};

/// Uniform over all action indices.
struct RandomPolicy {
    int action_count = 0;
};

using Policy = std::variant<ActorCriticPolicy, QPolicy, FixedPolicy, RandomPolicy>;

enum class ActMode { kSample, kGreedy };

/// Selects a 0-based action index. In kSample mode actor-critic policies draw
/// from the categorical distribution and Q policies act epsilon-greedily with
/// the given epsilon; in kGreedy mode both take the argmax. Fixed and Random
/// behave identically in both modes.
int act(const Policy& policy, const Eigen::VectorXd& observation, Rng& rng, ActMode mode,
        double epsilon = 0.0);

/// Number of action indices the policy can emit (network output width, the
/// fixed policy's single action + its index, or the random policy's range).
int policy_action_count(const Policy& policy);

} // namespace marketrl

#endif
