#include "marketrl/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "marketrl/distributions.hpp"
#include "marketrl/errors.hpp"

namespace marketrl {

void PpoConfig::validate() const {
    if (gamma < 0.0 || gamma > 1.0) throw ConfigError("ppo: gamma must be in [0, 1]");
    if (gae_lambda < 0.0 || gae_lambda > 1.0)
        throw ConfigError("ppo: gae_lambda must be in [0, 1]");
    if (clip_epsilon <= 0.0) throw ConfigError("ppo: clip_epsilon must be positive");
    if (rollout_length <= 0) throw ConfigError("ppo: rollout_length must be positive");
    if (minibatch_size <= 0) throw ConfigError("ppo: minibatch_size must be positive");
    if (epochs <= 0) throw ConfigError("ppo: epochs must be positive");
    if (max_grad_norm <= 0.0) throw ConfigError("ppo: max_grad_norm must be positive");
    if (learning_rate < 0.0) throw ConfigError("ppo: learning_rate must not be negative");
}

namespace {

struct LossAccum {
    double policy_loss = 0.0;
    double value_loss = 0.0;
    double entropy = 0.0;
    double clip_count = 0.0;
    double kl_sum = 0.0;
};

// Shared forward pass + per-sample bookkeeping for both the pure and the
// gradient-carrying entry points. When grads are non-null, backprops into them.
PpoDiagnostics ppo_eval(const PpoBatch& batch, const Mlp& policy, const Mlp& value,
                        const PpoConfig& cfg, MlpGrad* policy_grad, MlpGrad* value_grad) {
    const auto m = static_cast<Eigen::Index>(batch.obs.rows());
    if (m == 0) throw ContractViolation("ppo: empty batch");
    if (batch.actions.size() != m || batch.old_log_probs.size() != m ||
        batch.advantages.size() != m || batch.returns.size() != m)
        throw ContractViolation("ppo: batch field sizes disagree");

    ForwardCache policy_cache, value_cache;
    const Eigen::MatrixXd logits =
        forward_batch(policy, batch.obs, policy_grad ? &policy_cache : nullptr);
    const Eigen::MatrixXd values_out =
        forward_batch(value, batch.obs, value_grad ? &value_cache : nullptr);
    if (values_out.cols() != 1) throw ContractViolation("ppo: value net must have one output");

    const auto k = logits.cols();
    Eigen::MatrixXd logit_grad; // dLoss/dlogits, filled only when needed
    if (policy_grad) logit_grad.setZero(m, k);
    Eigen::MatrixXd value_out_grad;
    if (value_grad) value_out_grad.setZero(m, 1);

    LossAccum acc;
    const double inv_m = 1.0 / static_cast<double>(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        const Eigen::VectorXd row = logits.row(i).transpose();
        const int a = batch.actions[i];
        if (a < 0 || a >= k) throw ContractViolation("ppo: action index out of range");
        const double log_z = logsumexp(row);
        const double new_logp = row[a] - log_z;
        const double ratio = std::exp(new_logp - batch.old_log_probs[i]);
        const double adv = batch.advantages[i];
        const double unclipped = ratio * adv;
        const double clipped =
            std::clamp(ratio, 1.0 - cfg.clip_epsilon, 1.0 + cfg.clip_epsilon) * adv;
        acc.policy_loss -= std::min(unclipped, clipped) * inv_m;
        if (std::abs(ratio - 1.0) > cfg.clip_epsilon) acc.clip_count += 1.0;
        acc.kl_sum += batch.old_log_probs[i] - new_logp;

        const Eigen::VectorXd probs = (row.array() - log_z).exp();
        const double entropy_i = log_z - probs.dot(row);
        acc.entropy += entropy_i * inv_m;

        const double v = values_out(i, 0);
        const double v_err = v - batch.returns[i];
        acc.value_loss += v_err * v_err * inv_m;

        if (policy_grad) {
            // d(-min)/dlogp is -ratio*adv when the unclipped branch is taken
            // (clip makes the clipped branch constant in the parameters).
            double dloss_dlogp = 0.0;
            if (unclipped <= clipped) dloss_dlogp = -unclipped * inv_m;
            // dlogp/dlogit_j = [j == a] - p_j; dH/dlogit_j = -p_j*(logit_j - E_p[logit]).
            const double mean_logit = probs.dot(row);
            for (Eigen::Index j = 0; j < k; ++j) {
                double g = dloss_dlogp * ((j == a ? 1.0 : 0.0) - probs[j]);
                g += cfg.entropy_coef * probs[j] * (row[j] - mean_logit) * inv_m;
                logit_grad(i, j) = g;
            }
        }
        if (value_grad) value_out_grad(i, 0) = cfg.value_coef * 2.0 * v_err * inv_m;
    }

    if (policy_grad) *policy_grad = backward_batch(policy, policy_cache, logit_grad);
    if (value_grad) *value_grad = backward_batch(value, value_cache, value_out_grad);

    PpoDiagnostics d;
    d.policy_loss = acc.policy_loss;
    d.value_loss = acc.value_loss;
    d.entropy = acc.entropy;
    d.clip_fraction = acc.clip_count * inv_m;
    d.approx_kl = acc.kl_sum * inv_m;
    d.loss = d.policy_loss + cfg.value_coef * d.value_loss - cfg.entropy_coef * d.entropy;
    return d;
}

} // namespace

PpoDiagnostics ppo_loss(const PpoBatch& batch, const Mlp& policy, const Mlp& value,
                        const PpoConfig& cfg) {
    return ppo_eval(batch, policy, value, cfg, nullptr, nullptr);
}

PpoDiagnostics ppo_loss_grad(const PpoBatch& batch, const Mlp& policy, const Mlp& value,
                             const PpoConfig& cfg, MlpGrad& policy_grad, MlpGrad& value_grad) {
    return ppo_eval(batch, policy, value, cfg, &policy_grad, &value_grad);
}

PpoDiagnostics ppo_update(const RolloutBuffer& buffer, const Eigen::VectorXd& advantages,
                          const Eigen::VectorXd& returns, Mlp& policy, Mlp& value,
                          AdamState& policy_opt, AdamState& value_opt, const PpoConfig& cfg,
                          Rng& rng) {
    cfg.validate();
    const auto n = static_cast<Eigen::Index>(buffer.size());
    if (n == 0) throw ContractViolation("ppo_update: empty buffer");
    if (advantages.size() != n || returns.size() != n)
        throw ContractViolation("ppo_update: advantage/return size mismatch");

    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);

    MlpGrad policy_grad = make_grad_like(policy);
    MlpGrad value_grad = make_grad_like(value);

    PpoDiagnostics total;
    int batches = 0;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        // Fisher-Yates with our own rng so shuffles are reproducible.
        for (auto i = static_cast<std::size_t>(n) - 1; i > 0; --i) {
            const auto j = static_cast<std::size_t>(
                rng.uniform_int(0, static_cast<int>(i)));
            std::swap(order[i], order[j]);
        }
        for (Eigen::Index start = 0; start < n; start += cfg.minibatch_size) {
            const auto len = std::min<Eigen::Index>(cfg.minibatch_size, n - start);
            PpoBatch mb;
            mb.obs.resize(len, buffer.observations().cols());
            mb.actions.resize(len);
            mb.old_log_probs.resize(len);
            mb.advantages.resize(len);
            mb.returns.resize(len);
            for (Eigen::Index i = 0; i < len; ++i) {
                const int src = order[static_cast<std::size_t>(start + i)];
                mb.obs.row(i) = buffer.observations().row(src);
                mb.actions[i] = buffer.actions()[src];
                mb.old_log_probs[i] = buffer.log_probs()[src];
                mb.advantages[i] = advantages[src];
                mb.returns[i] = returns[src];
            }
            // Normalize advantages within the minibatch (unbiased std).
            const double mean = mb.advantages.mean();
            double var = 0.0;
            if (len > 1)
                var = (mb.advantages.array() - mean).square().sum() /
                      static_cast<double>(len - 1);
            mb.advantages = (mb.advantages.array() - mean) / (std::sqrt(var) + 1e-8);

            const PpoDiagnostics d =
                ppo_loss_grad(mb, policy, value, cfg, policy_grad, value_grad);
            std::vector<MlpGrad*> grads{&policy_grad, &value_grad};
            clip_grad_norm(grads, cfg.max_grad_norm);
            adam_step(policy_opt, policy, policy_grad);
            adam_step(value_opt, value, value_grad);

            total.loss += d.loss;
            total.policy_loss += d.policy_loss;
            total.value_loss += d.value_loss;
            total.entropy += d.entropy;
            total.clip_fraction += d.clip_fraction;
            total.approx_kl += d.approx_kl;
            ++batches;
        }
    }
    const double inv_b = 1.0 / static_cast<double>(batches);
    total.loss *= inv_b;
    total.policy_loss *= inv_b;
    total.value_loss *= inv_b;
    total.entropy *= inv_b;
    total.clip_fraction *= inv_b;
    total.approx_kl *= inv_b;
    return total;
}

} // namespace marketrl
