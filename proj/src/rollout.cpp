#include "marketrl/rollout.hpp"

#include "marketrl/errors.hpp"

namespace marketrl {

RolloutBuffer::RolloutBuffer(int horizon, int n_envs, int obs_dim)
    : horizon_(horizon), n_envs_(n_envs), obs_dim_(obs_dim) {
    if (horizon < 1 || n_envs < 1 || obs_dim < 1) {
        throw ConfigError("RolloutBuffer: horizon, n_envs and obs_dim must be positive");
    }
    const int n = size();
    obs_.resize(n, obs_dim);
    actions_.resize(n);
    rewards_.resize(n);
    values_.resize(n);
    log_probs_.resize(n);
    terminal_values_.setZero(n);
    episode_end_.assign(static_cast<std::size_t>(n), 0);
}

void RolloutBuffer::begin_rollout() {
    steps_written_ = 0;
}

void RolloutBuffer::add(const Eigen::MatrixXd& obs, const Eigen::VectorXi& actions,
                        const Eigen::VectorXd& rewards, const Eigen::VectorXd& values,
                        const Eigen::VectorXd& log_probs,
                        const std::vector<std::uint8_t>& episode_end,
                        const Eigen::VectorXd& terminal_values) {
    if (full()) {
        throw LifecycleError("RolloutBuffer::add: buffer already full");
    }
    if (obs.rows() != n_envs_ || obs.cols() != obs_dim_ || actions.size() != n_envs_ ||
        rewards.size() != n_envs_ || values.size() != n_envs_ || log_probs.size() != n_envs_ ||
        episode_end.size() != static_cast<std::size_t>(n_envs_) ||
        terminal_values.size() != n_envs_) {
        throw ContractViolation("RolloutBuffer::add: shape mismatch");
    }
    const int base = row(steps_written_, 0);
    obs_.middleRows(base, n_envs_) = obs;
    actions_.segment(base, n_envs_) = actions;
    rewards_.segment(base, n_envs_) = rewards;
    values_.segment(base, n_envs_) = values;
    log_probs_.segment(base, n_envs_) = log_probs;
    terminal_values_.segment(base, n_envs_) = terminal_values;
    for (int e = 0; e < n_envs_; ++e) {
        episode_end_[static_cast<std::size_t>(base + e)] = episode_end[static_cast<std::size_t>(e)];
    }
    steps_written_ += 1;
}

void compute_returns_and_gae(const RolloutBuffer& buffer, const Eigen::VectorXd& last_values,
                             double gamma, double gae_lambda, Eigen::VectorXd& advantages,
                             Eigen::VectorXd& returns) {
    if (!buffer.full()) {
        throw ContractViolation("compute_returns_and_gae: buffer not full");
    }
    if (last_values.size() != buffer.n_envs()) {
        throw ContractViolation("compute_returns_and_gae: last_values size mismatch");
    }
    const int horizon = buffer.horizon();
    const int n_envs = buffer.n_envs();
    advantages.resize(buffer.size());
    returns.resize(buffer.size());
    for (int e = 0; e < n_envs; ++e) {
        double carry = 0.0;
        for (int t = horizon - 1; t >= 0; --t) {
            const int i = buffer.row(t, e);
            const bool cut = buffer.episode_end()[static_cast<std::size_t>(i)] != 0;
            double next_value;
            if (cut) {
                next_value = buffer.terminal_values()[i];
            } else if (t + 1 == horizon) {
                next_value = last_values[e];
            } else {
                next_value = buffer.values()[buffer.row(t + 1, e)];
            }
            const double delta =
                buffer.rewards()[i] + gamma * next_value - buffer.values()[i];
            carry = delta + (cut ? 0.0 : gamma * gae_lambda * carry);
            advantages[i] = carry;
        }
    }
    returns = advantages + buffer.values();
}

void compute_returns_and_gae(const RolloutBuffer& buffer, double last_value, double gamma,
                             double gae_lambda, Eigen::VectorXd& advantages,
                             Eigen::VectorXd& returns) {
    Eigen::VectorXd lv(1);
    lv[0] = last_value;
    compute_returns_and_gae(buffer, lv, gamma, gae_lambda, advantages, returns);
}

ReplayBuffer::ReplayBuffer(int capacity, int obs_dim) : capacity_(capacity), obs_dim_(obs_dim) {
    if (capacity < 1 || obs_dim < 1) {
        throw ConfigError("ReplayBuffer: capacity and obs_dim must be positive");
    }
    obs_.resize(capacity, obs_dim);
    next_obs_.resize(capacity, obs_dim);
    actions_.resize(capacity);
    rewards_.resize(capacity);
    done_.assign(static_cast<std::size_t>(capacity), 0);
}

void ReplayBuffer::add(const Eigen::VectorXd& obs, int action, double reward,
                       const Eigen::VectorXd& next_obs, bool done) {
    if (obs.size() != obs_dim_ || next_obs.size() != obs_dim_) {
        throw ContractViolation("ReplayBuffer::add: observation size mismatch");
    }
    obs_.row(next_) = obs;
    next_obs_.row(next_) = next_obs;
    actions_[next_] = action;
    rewards_[next_] = reward;
    done_[static_cast<std::size_t>(next_)] = done ? 1 : 0;
    next_ = (next_ + 1) % capacity_;
    size_ = std::min(size_ + 1, capacity_);
    insertions_ += 1;
}

int ReplayBuffer::sample_index(Rng& rng) const {
    if (size_ == 0) {
        throw LifecycleError("ReplayBuffer: cannot sample from an empty buffer");
    }
    return rng.uniform_int(0, size_ - 1);
}

ReplayBuffer::Batch ReplayBuffer::sample(int batch_size, Rng& rng) const {
    if (batch_size < 1 || batch_size > size_) {
        throw ContractViolation("ReplayBuffer::sample: batch size out of range");
    }
    Batch batch;
    batch.obs.resize(batch_size, obs_dim_);
    batch.next_obs.resize(batch_size, obs_dim_);
    batch.actions.resize(batch_size);
    batch.rewards.resize(batch_size);
    batch.done.resize(static_cast<std::size_t>(batch_size));
    for (int i = 0; i < batch_size; ++i) {
        const int j = sample_index(rng);
        batch.obs.row(i) = obs_.row(j);
        batch.next_obs.row(i) = next_obs_.row(j);
        batch.actions[i] = actions_[j];
        batch.rewards[i] = rewards_[j];
        batch.done[static_cast<std::size_t>(i)] = done_[static_cast<std::size_t>(j)];
    }
    return batch;
}

} // namespace marketrl
