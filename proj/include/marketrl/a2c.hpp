#ifndef MARKETRL_A2C_HPP
#define MARKETRL_A2C_HPP

#include <Eigen/Dense>

#include "marketrl/nn.hpp"
#include "marketrl/rollout.hpp"

namespace marketrl {

struct A2cConfig {
    double gamma = 0.99;
    int n_steps = 5; // steps collected per update, per environment
    double value_coef = 0.5;
    double entropy_coef = 0.0;
    double max_grad_norm = 0.5;
    double learning_rate = 1e-4;

    void validate() const;
};

/// Discounted n-step returns over the buffer, bootstrapped from last_values
/// at the end of the window and from the stored terminal values at
/// truncation rows: R_t = r_t + gamma * R_{t+1}.
Eigen::VectorXd a2c_returns(const RolloutBuffer& buffer, const Eigen::VectorXd& last_values,
                            double gamma);

struct A2cDiagnostics {
    double loss = 0.0;
    double policy_loss = 0.0; // -mean(log_prob * advantage)
    double value_loss = 0.0;
    double entropy = 0.0;
};

/// One synchronous update: advantage = n-step return - V(s), treated as a
/// constant for the actor; actor loss -mean(log_prob * advantage), critic
/// loss value_coef * MSE, entropy bonus, one Adam step per network.
A2cDiagnostics a2c_update(const RolloutBuffer& buffer, const Eigen::VectorXd& last_values,
                          Mlp& policy, Mlp& value, AdamState& policy_opt, AdamState& value_opt,
                          const A2cConfig& cfg);

} // namespace marketrl

#endif
