#ifndef MARKETRL_DQN_HPP
#define MARKETRL_DQN_HPP

#include <Eigen/Dense>
#include <cstdint>

#include "marketrl/nn.hpp"
#include "marketrl/rollout.hpp"

namespace marketrl {

struct DqnConfig {
    double gamma = 0.99;
    int buffer_capacity = 100000;
    int batch_size = 32;
    int target_sync_interval = 2000; // environment steps between target copies
    double epsilon_start = 1.0;
    double epsilon_end = 0.05;
    double epsilon_decay_fraction = 0.1; // fraction of total steps spent annealing
    double max_grad_norm = 0.5;
    double learning_rate = 1e-4;
    int train_frequency = 4;    // environment steps between gradient updates
    int learning_starts = 1000; // steps of pure collection before updates begin

    void validate() const;
};

/// Linear epsilon schedule: epsilon_start at step 0, annealed to epsilon_end
/// at step epsilon_decay_fraction * total_steps, constant afterwards.
double epsilon_at(std::int64_t step, std::int64_t total_steps, const DqnConfig& cfg);

/// Bellman target for one transition:
///   reward + gamma * max_a Q_target(next_obs, a), or just reward when done.
double dqn_target(double reward, const Eigen::VectorXd& next_obs, bool done,
                  const Mlp& target_net, double gamma);

struct DqnDiagnostics {
    double loss = 0.0;   // MSE over the minibatch
    double mean_q = 0.0; // mean online Q(s, a) over the minibatch
};

/// One gradient step on a uniformly sampled minibatch:
///   L = mean_i (Q(s_i, a_i) - y_i)^2 with y from the target network.
DqnDiagnostics dqn_update(const ReplayBuffer& buffer, Mlp& online, const Mlp& target,
                          AdamState& opt, const DqnConfig& cfg, Rng& rng);

} // namespace marketrl

#endif
