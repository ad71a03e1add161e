#ifndef MARKETRL_TRAINER_HPP
#define MARKETRL_TRAINER_HPP

#include <Eigen/Dense>

#include <concepts>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "marketrl/a2c.hpp"
#include "marketrl/distributions.hpp"
#include "marketrl/dqn.hpp"
#include "marketrl/errors.hpp"
#include "marketrl/nn.hpp"
#include "marketrl/ppo.hpp"
#include "marketrl/rollout.hpp"
#include "marketrl/stats.hpp"

namespace marketrl {

/// Anything the training loops can drive: episodic, integer action indices,
/// observations encodable to fixed-width vectors. Step results carry
/// `terminated` (true end state, bootstrap value 0) separately from
/// `truncated` (time limit, bootstrap from the value estimate).
template <typename E>
concept TrainEnv = requires(E e, std::uint64_t seed, int index) {
    { e.action_count() } -> std::convertible_to<int>;
    { e.observation_size() } -> std::convertible_to<int>;
    { e.encode(e.reset(seed)) } -> std::convertible_to<Eigen::VectorXd>;
    { e.step(e.action_from_index(index)).reward } -> std::convertible_to<double>;
    { e.step(e.action_from_index(index)).truncated } -> std::convertible_to<bool>;
    { e.step(e.action_from_index(index)).terminated } -> std::convertible_to<bool>;
    { e.encode(e.step(e.action_from_index(index)).observation) }
        -> std::convertible_to<Eigen::VectorXd>;
};

/// One logged line of training diagnostics. Fields that an algorithm does not
/// produce (e.g. clip_fraction outside PPO) stay zero; explained_variance is
/// empty when the return variance vanishes.
struct MetricsRow {
    long update_index = 0;
    std::int64_t env_steps = 0;
    double mean_reward = 0.0;
    double value_loss = 0.0;
    double approx_kl = 0.0;
    std::optional<double> explained_variance;
    double entropy = 0.0;
    double clip_fraction = 0.0;
};

using MetricsSink = std::function<void(const MetricsRow&)>;

namespace detail {

// Per-environment deterministic seed streams, decoupled from action sampling.
inline Rng env_seed_stream(const Rng& master, int env_index) {
    return master.split(0x1000u + static_cast<std::uint64_t>(env_index));
}

} // namespace detail

/// On-policy clipped-surrogate training across parallel environments.
/// total_steps counts environment steps summed over all environments; one
/// update consumes cfg.rollout_length of them (which must divide evenly by
/// the number of environments).
template <TrainEnv Env>
void train_ppo(std::vector<Env>& envs, Mlp& policy, Mlp& value, AdamState& policy_opt,
               AdamState& value_opt, const PpoConfig& cfg, std::int64_t total_steps,
               const Rng& master, const MetricsSink& sink = {}) {
    cfg.validate();
    const int n_envs = static_cast<int>(envs.size());
    if (n_envs == 0) throw ContractViolation("train_ppo: need at least one environment");
    if (cfg.rollout_length % n_envs != 0)
        throw ContractViolation("train_ppo: rollout_length must be divisible by env count");
    const int horizon = cfg.rollout_length / n_envs;
    const int obs_dim = envs[0].observation_size();

    Rng action_rng = master.split(1);
    Rng shuffle_rng = master.split(2);
    std::vector<Rng> seed_streams;
    seed_streams.reserve(static_cast<std::size_t>(n_envs));
    for (int e = 0; e < n_envs; ++e) seed_streams.push_back(detail::env_seed_stream(master, e));

    Eigen::MatrixXd obs(n_envs, obs_dim);
    for (int e = 0; e < n_envs; ++e)
        obs.row(e) = envs[e].encode(envs[e].reset(seed_streams[e].next_u64())).transpose();

    RolloutBuffer buffer(horizon, n_envs, obs_dim);
    const std::int64_t n_updates = total_steps / cfg.rollout_length;
    std::int64_t env_steps = 0;

    for (std::int64_t update = 0; update < n_updates; ++update) {
        if (cfg.anneal_lr) {
            const double frac =
                1.0 - static_cast<double>(update) / static_cast<double>(n_updates);
            policy_opt.learning_rate = cfg.learning_rate * frac;
            value_opt.learning_rate = cfg.learning_rate * frac;
        }
        buffer.begin_rollout();
        double reward_sum = 0.0;
        for (int t = 0; t < horizon; ++t) {
            const Eigen::MatrixXd logits = forward_batch(policy, obs, nullptr);
            const Eigen::MatrixXd values_out = forward_batch(value, obs, nullptr);
            Eigen::VectorXi actions(n_envs);
            Eigen::VectorXd rewards(n_envs), values_v(n_envs), log_probs(n_envs);
            Eigen::VectorXd terminal_values = Eigen::VectorXd::Zero(n_envs);
            std::vector<std::uint8_t> episode_end(static_cast<std::size_t>(n_envs), 0);
            Eigen::MatrixXd next_obs(n_envs, obs_dim);

            for (int e = 0; e < n_envs; ++e) {
                const CategoricalDist dist{logits.row(e).transpose()};
                const int a = categorical_sample(dist, action_rng);
                actions[e] = a;
                log_probs[e] = categorical_log_prob(dist, a);
                values_v[e] = values_out(e, 0);

                auto result = envs[e].step(envs[e].action_from_index(a));
                rewards[e] = result.reward;
                reward_sum += result.reward;
                if (result.terminated || result.truncated) {
                    episode_end[static_cast<std::size_t>(e)] = 1;
                    if (result.truncated && !result.terminated) {
                        const Eigen::VectorXd final_obs = envs[e].encode(result.observation);
                        terminal_values[e] = forward(value, final_obs)[0];
                    }
                    next_obs.row(e) =
                        envs[e].encode(envs[e].reset(seed_streams[e].next_u64())).transpose();
                } else {
                    next_obs.row(e) = envs[e].encode(result.observation).transpose();
                }
            }
            buffer.add(obs, actions, rewards, values_v, log_probs, episode_end,
                       terminal_values);
            obs = next_obs;
            env_steps += n_envs;
        }

        Eigen::VectorXd last_values(n_envs);
        for (int e = 0; e < n_envs; ++e)
            last_values[e] = forward(value, obs.row(e).transpose())[0];
        Eigen::VectorXd advantages, returns;
        compute_returns_and_gae(buffer, last_values, cfg.gamma, cfg.gae_lambda, advantages,
                                returns);
        const PpoDiagnostics d = ppo_update(buffer, advantages, returns, policy, value,
                                            policy_opt, value_opt, cfg, shuffle_rng);

        if (sink) {
            MetricsRow row;
            row.update_index = static_cast<long>(update + 1);
            row.env_steps = env_steps;
            row.mean_reward = reward_sum / static_cast<double>(cfg.rollout_length);
            row.value_loss = d.value_loss;
            row.approx_kl = d.approx_kl;
            row.explained_variance = explained_variance(returns, buffer.values());
            row.entropy = d.entropy;
            row.clip_fraction = d.clip_fraction;
            sink(row);
        }
    }
}

/// Synchronous advantage actor-critic; one update per n_steps window.
/// Metrics are aggregated so one row covers roughly metrics_stride env steps.
template <TrainEnv Env>
void train_a2c(std::vector<Env>& envs, Mlp& policy, Mlp& value, AdamState& policy_opt,
               AdamState& value_opt, const A2cConfig& cfg, std::int64_t total_steps,
               const Rng& master, const MetricsSink& sink = {},
               std::int64_t metrics_stride = 2048) {
    cfg.validate();
    const int n_envs = static_cast<int>(envs.size());
    if (n_envs == 0) throw ContractViolation("train_a2c: need at least one environment");
    const int obs_dim = envs[0].observation_size();
    const std::int64_t steps_per_update =
        static_cast<std::int64_t>(cfg.n_steps) * static_cast<std::int64_t>(n_envs);

    Rng action_rng = master.split(1);
    std::vector<Rng> seed_streams;
    seed_streams.reserve(static_cast<std::size_t>(n_envs));
    for (int e = 0; e < n_envs; ++e) seed_streams.push_back(detail::env_seed_stream(master, e));

    Eigen::MatrixXd obs(n_envs, obs_dim);
    for (int e = 0; e < n_envs; ++e)
        obs.row(e) = envs[e].encode(envs[e].reset(seed_streams[e].next_u64())).transpose();

    RolloutBuffer buffer(cfg.n_steps, n_envs, obs_dim);
    const std::int64_t n_updates = total_steps / steps_per_update;
    std::int64_t env_steps = 0;

    double window_reward = 0.0, window_value_loss = 0.0, window_entropy = 0.0;
    std::int64_t window_steps = 0;
    long window_updates = 0;
    std::int64_t last_emit = 0;

    for (std::int64_t update = 0; update < n_updates; ++update) {
        buffer.begin_rollout();
        for (int t = 0; t < cfg.n_steps; ++t) {
            const Eigen::MatrixXd logits = forward_batch(policy, obs, nullptr);
            const Eigen::MatrixXd values_out = forward_batch(value, obs, nullptr);
            Eigen::VectorXi actions(n_envs);
            Eigen::VectorXd rewards(n_envs), values_v(n_envs), log_probs(n_envs);
            Eigen::VectorXd terminal_values = Eigen::VectorXd::Zero(n_envs);
            std::vector<std::uint8_t> episode_end(static_cast<std::size_t>(n_envs), 0);
            Eigen::MatrixXd next_obs(n_envs, obs_dim);

            for (int e = 0; e < n_envs; ++e) {
                const CategoricalDist dist{logits.row(e).transpose()};
                const int a = categorical_sample(dist, action_rng);
                actions[e] = a;
                log_probs[e] = categorical_log_prob(dist, a);
                values_v[e] = values_out(e, 0);

                auto result = envs[e].step(envs[e].action_from_index(a));
                rewards[e] = result.reward;
                window_reward += result.reward;
                if (result.terminated || result.truncated) {
                    episode_end[static_cast<std::size_t>(e)] = 1;
                    if (result.truncated && !result.terminated) {
                        const Eigen::VectorXd final_obs = envs[e].encode(result.observation);
                        terminal_values[e] = forward(value, final_obs)[0];
                    }
                    next_obs.row(e) =
                        envs[e].encode(envs[e].reset(seed_streams[e].next_u64())).transpose();
                } else {
                    next_obs.row(e) = envs[e].encode(result.observation).transpose();
                }
            }
            buffer.add(obs, actions, rewards, values_v, log_probs, episode_end,
                       terminal_values);
            obs = next_obs;
            env_steps += n_envs;
            window_steps += n_envs;
        }

        Eigen::VectorXd last_values(n_envs);
        for (int e = 0; e < n_envs; ++e)
            last_values[e] = forward(value, obs.row(e).transpose())[0];
        const A2cDiagnostics d =
            a2c_update(buffer, last_values, policy, value, policy_opt, value_opt, cfg);
        window_value_loss += d.value_loss;
        window_entropy += d.entropy;
        ++window_updates;

        if (sink && (env_steps - last_emit >= metrics_stride || update + 1 == n_updates)) {
            MetricsRow row;
            row.update_index = static_cast<long>(update + 1);
            row.env_steps = env_steps;
            row.mean_reward = window_reward / static_cast<double>(window_steps);
            row.value_loss = window_value_loss / static_cast<double>(window_updates);
            row.entropy = window_entropy / static_cast<double>(window_updates);
            sink(row);
            window_reward = window_value_loss = window_entropy = 0.0;
            window_steps = 0;
            window_updates = 0;
            last_emit = env_steps;
        }
    }
}

/// Epsilon-greedy Q-learning with uniform replay and hard target sync.
/// Single environment; metrics aggregated per metrics_stride env steps.
template <TrainEnv Env>
void train_dqn(Env& env, Mlp& online, Mlp& target, AdamState& opt, const DqnConfig& cfg,
               std::int64_t total_steps, const Rng& master, const MetricsSink& sink = {},
               std::int64_t metrics_stride = 2048) {
    cfg.validate();
    Rng action_rng = master.split(1);
    Rng replay_rng = master.split(2);
    Rng seed_stream = detail::env_seed_stream(master, 0);

    ReplayBuffer replay(cfg.buffer_capacity, env.observation_size());
    Eigen::VectorXd obs = env.encode(env.reset(seed_stream.next_u64()));
    target = online;

    double window_reward = 0.0, window_loss = 0.0;
    std::int64_t window_steps = 0;
    long window_updates = 0, updates_done = 0;
    std::int64_t last_emit = 0;

    for (std::int64_t step = 0; step < total_steps; ++step) {
        const double eps = epsilon_at(step, total_steps, cfg);
        int a;
        if (action_rng.uniform() < eps) {
            a = action_rng.uniform_int(0, env.action_count() - 1);
        } else {
            const Eigen::VectorXd q = forward(online, obs);
            Eigen::Index best = 0;
            q.maxCoeff(&best);
            a = static_cast<int>(best);
        }

        auto result = env.step(env.action_from_index(a));
        window_reward += result.reward;
        ++window_steps;
        const bool episode_end = result.terminated || result.truncated;
        Eigen::VectorXd next_obs = env.encode(result.observation);
        // Time-limit truncation is not a true terminal: keep bootstrapping.
        replay.add(obs, a, result.reward, next_obs, result.terminated);
        obs = episode_end ? env.encode(env.reset(seed_stream.next_u64())) : std::move(next_obs);

        const std::int64_t steps_taken = step + 1;
        if (steps_taken >= cfg.learning_starts && replay.size() >= cfg.batch_size &&
            steps_taken % cfg.train_frequency == 0) {
            const DqnDiagnostics d = dqn_update(replay, online, target, opt, cfg, replay_rng);
            window_loss += d.loss;
            ++window_updates;
            ++updates_done;
        }
        if (steps_taken % cfg.target_sync_interval == 0) target = online;

        if (sink && (steps_taken - last_emit >= metrics_stride || steps_taken == total_steps)) {
            MetricsRow row;
            row.update_index = updates_done;
            row.env_steps = steps_taken;
            row.mean_reward = window_reward / static_cast<double>(window_steps);
            row.value_loss =
                window_updates > 0 ? window_loss / static_cast<double>(window_updates) : 0.0;
            sink(row);
            window_reward = window_loss = 0.0;
            window_steps = 0;
            window_updates = 0;
            last_emit = steps_taken;
        }
    }
}

} // namespace marketrl

#endif
