#include "marketrl/dqn.hpp"

#include <algorithm>
#include <vector>

#include "marketrl/errors.hpp"

namespace marketrl {

void DqnConfig::validate() const {
    if (gamma < 0.0 || gamma > 1.0) throw ConfigError("dqn: gamma must be in [0, 1]");
    if (buffer_capacity <= 0) throw ConfigError("dqn: buffer_capacity must be positive");
    if (batch_size <= 0) throw ConfigError("dqn: batch_size must be positive");
    if (target_sync_interval <= 0)
        throw ConfigError("dqn: target_sync_interval must be positive");
    if (epsilon_start < 0.0 || epsilon_start > 1.0 || epsilon_end < 0.0 || epsilon_end > 1.0)
        throw ConfigError("dqn: epsilon bounds must be in [0, 1]");
    if (epsilon_decay_fraction <= 0.0 || epsilon_decay_fraction > 1.0)
        throw ConfigError("dqn: epsilon_decay_fraction must be in (0, 1]");
    if (max_grad_norm <= 0.0) throw ConfigError("dqn: max_grad_norm must be positive");
    if (learning_rate < 0.0) throw ConfigError("dqn: learning_rate must not be negative");
    if (train_frequency <= 0) throw ConfigError("dqn: train_frequency must be positive");
    if (learning_starts < 0) throw ConfigError("dqn: learning_starts must be non-negative");
}

double epsilon_at(std::int64_t step, std::int64_t total_steps, const DqnConfig& cfg) {
    if (step < 0 || total_steps <= 0)
        throw ContractViolation("epsilon_at: step must be >= 0 and total_steps > 0");
    const double decay_steps = cfg.epsilon_decay_fraction * static_cast<double>(total_steps);
    const double progress = std::min(1.0, static_cast<double>(step) / decay_steps);
    return cfg.epsilon_start + (cfg.epsilon_end - cfg.epsilon_start) * progress;
}

double dqn_target(double reward, const Eigen::VectorXd& next_obs, bool done,
                  const Mlp& target_net, double gamma) {
    if (done) return reward;
    const Eigen::VectorXd q = forward(target_net, next_obs);
    return reward + gamma * q.maxCoeff();
}

DqnDiagnostics dqn_update(const ReplayBuffer& buffer, Mlp& online, const Mlp& target,
                          AdamState& opt, const DqnConfig& cfg, Rng& rng) {
    if (buffer.size() < cfg.batch_size)
        throw ContractViolation("dqn_update: buffer smaller than batch size");

    const ReplayBuffer::Batch batch = buffer.sample(cfg.batch_size, rng);
    const auto m = static_cast<Eigen::Index>(batch.obs.rows());

    const Eigen::MatrixXd next_q = forward_batch(target, batch.next_obs, nullptr);
    Eigen::VectorXd targets(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        targets[i] = batch.rewards[i];
        if (!batch.done[static_cast<std::size_t>(i)])
            targets[i] += cfg.gamma * next_q.row(i).maxCoeff();
    }

    ForwardCache cache;
    const Eigen::MatrixXd q = forward_batch(online, batch.obs, &cache);
    Eigen::MatrixXd out_grad = Eigen::MatrixXd::Zero(m, q.cols());

    DqnDiagnostics d;
    const double inv_m = 1.0 / static_cast<double>(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        const int a = batch.actions[i];
        if (a < 0 || a >= q.cols()) throw ContractViolation("dqn_update: bad action index");
        const double err = q(i, a) - targets[i];
        d.loss += err * err * inv_m;
        d.mean_q += q(i, a) * inv_m;
        out_grad(i, a) = 2.0 * err * inv_m;
    }

    MlpGrad grad = backward_batch(online, cache, out_grad);
    std::vector<MlpGrad*> grads{&grad};
    clip_grad_norm(grads, cfg.max_grad_norm);
    adam_step(opt, online, grad);
    return d;
}

} // namespace marketrl
