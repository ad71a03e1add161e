#ifndef MARKETRL_PPO_HPP
#define MARKETRL_PPO_HPP

#include <Eigen/Dense>

#include "marketrl/nn.hpp"
#include "marketrl/rollout.hpp"

namespace marketrl {

struct PpoConfig {
    double gamma = 0.99;
    double gae_lambda = 0.95;
    double clip_epsilon = 0.2;
    int rollout_length = 2048; // total steps per update, summed over envs
    int minibatch_size = 64;
    int epochs = 10;
    double value_coef = 0.5;
    double entropy_coef = 0.0;
    double max_grad_norm = 0.5;
    double learning_rate = 1e-4;
    bool anneal_lr = true; // decay the Adam step size linearly to 0 over training

    void validate() const;
};

/// One minibatch of training data. Advantages are expected to be already
/// normalized (mean 0, std 1) by the caller.
struct PpoBatch {
    Eigen::MatrixXd obs;
    Eigen::VectorXi actions;
    Eigen::VectorXd old_log_probs;
    Eigen::VectorXd advantages;
    Eigen::VectorXd returns;
};

struct PpoDiagnostics {
    double loss = 0.0;
    double policy_loss = 0.0;
    double value_loss = 0.0;
    double entropy = 0.0;
    double clip_fraction = 0.0;
    double approx_kl = 0.0; // mean(old_log_prob - new_log_prob)
};

/// Clipped-surrogate loss
///   -E[min(r A, clip(r, 1-eps, 1+eps) A)] + value_coef * MSE(V, returns)
///   - entropy_coef * H,   r = exp(new_log_prob - old_log_prob).
/// Pure evaluation; parameters untouched.
PpoDiagnostics ppo_loss(const PpoBatch& batch, const Mlp& policy, const Mlp& value,
                        const PpoConfig& cfg);

/// Same loss, also accumulating exact gradients for both networks.
PpoDiagnostics ppo_loss_grad(const PpoBatch& batch, const Mlp& policy, const Mlp& value,
                             const PpoConfig& cfg, MlpGrad& policy_grad, MlpGrad& value_grad);

/// Full update: `epochs` passes of shuffled minibatches with per-minibatch
/// advantage normalization, joint global-norm gradient clipping and one Adam
/// step per network per minibatch. Returns diagnostics averaged over all
/// minibatches. `advantages`/`returns` must come from compute_returns_and_gae
/// on this buffer.
PpoDiagnostics ppo_update(const RolloutBuffer& buffer, const Eigen::VectorXd& advantages,
                          const Eigen::VectorXd& returns, Mlp& policy, Mlp& value,
                          AdamState& policy_opt, AdamState& value_opt, const PpoConfig& cfg,
                          Rng& rng);

} // namespace marketrl

#endif
