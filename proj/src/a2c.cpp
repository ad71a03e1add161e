#include "marketrl/a2c.hpp"

#include <cmath>
#include <vector>

#include "marketrl/distributions.hpp"
#include "marketrl/errors.hpp"

namespace marketrl {

void A2cConfig::validate() const {
    if (gamma < 0.0 || gamma > 1.0) throw ConfigError("a2c: gamma must be in [0, 1]");
    if (n_steps <= 0) throw ConfigError("a2c: n_steps must be positive");
    if (max_grad_norm <= 0.0) throw ConfigError("a2c: max_grad_norm must be positive");
    if (learning_rate < 0.0) throw ConfigError("a2c: learning_rate must not be negative");
}

Eigen::VectorXd a2c_returns(const RolloutBuffer& buffer, const Eigen::VectorXd& last_values,
                            double gamma) {
    if (!buffer.full()) throw ContractViolation("a2c_returns: buffer not full");
    if (last_values.size() != buffer.n_envs())
        throw ContractViolation("a2c_returns: last_values size mismatch");

    Eigen::VectorXd returns(buffer.size());
    for (int e = 0; e < buffer.n_envs(); ++e) {
        double carry = last_values[e];
        for (int t = buffer.horizon() - 1; t >= 0; --t) {
            const int i = buffer.row(t, e);
            if (buffer.episode_end()[static_cast<std::size_t>(i)])
                carry = buffer.terminal_values()[i];
            carry = buffer.rewards()[i] + gamma * carry;
            returns[i] = carry;
        }
    }
    return returns;
}

A2cDiagnostics a2c_update(const RolloutBuffer& buffer, const Eigen::VectorXd& last_values,
                          Mlp& policy, Mlp& value, AdamState& policy_opt, AdamState& value_opt,
                          const A2cConfig& cfg) {
    cfg.validate();
    const Eigen::VectorXd returns = a2c_returns(buffer, last_values, cfg.gamma);
    const auto m = static_cast<Eigen::Index>(buffer.size());

    ForwardCache policy_cache, value_cache;
    const Eigen::MatrixXd logits = forward_batch(policy, buffer.observations(), &policy_cache);
    const Eigen::MatrixXd values_out =
        forward_batch(value, buffer.observations(), &value_cache);
    const auto k = logits.cols();

    Eigen::MatrixXd logit_grad = Eigen::MatrixXd::Zero(m, k);
    Eigen::MatrixXd value_out_grad = Eigen::MatrixXd::Zero(m, 1);

    A2cDiagnostics d;
    const double inv_m = 1.0 / static_cast<double>(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        const Eigen::VectorXd row = logits.row(i).transpose();
        const int a = buffer.actions()[i];
        if (a < 0 || a >= k) throw ContractViolation("a2c_update: bad action index");
        const double log_z = logsumexp(row);
        const double logp = row[a] - log_z;
        const double adv = returns[i] - values_out(i, 0);

        d.policy_loss -= logp * adv * inv_m;
        const Eigen::VectorXd probs = (row.array() - log_z).exp();
        const double mean_logit = probs.dot(row);
        d.entropy += (log_z - mean_logit) * inv_m;

        const double v_err = values_out(i, 0) - returns[i];
        d.value_loss += v_err * v_err * inv_m;

        for (Eigen::Index j = 0; j < k; ++j) {
            double g = -adv * inv_m * ((j == a ? 1.0 : 0.0) - probs[j]);
            g += cfg.entropy_coef * probs[j] * (row[j] - mean_logit) * inv_m;
            logit_grad(i, j) = g;
        }
        value_out_grad(i, 0) = cfg.value_coef * 2.0 * v_err * inv_m;
    }
    d.loss = d.policy_loss + cfg.value_coef * d.value_loss - cfg.entropy_coef * d.entropy;

    MlpGrad policy_grad = backward_batch(policy, policy_cache, logit_grad);
    MlpGrad value_grad = backward_batch(value, value_cache, value_out_grad);
    std::vector<MlpGrad*> grads{&policy_grad, &value_grad};
    clip_grad_norm(grads, cfg.max_grad_norm);
    adam_step(policy_opt, policy, policy_grad);
    adam_step(value_opt, value, value_grad);
    return d;
}

} // namespace marketrl
