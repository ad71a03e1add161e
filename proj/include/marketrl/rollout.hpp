#ifndef MARKETRL_ROLLOUT_HPP
#define MARKETRL_ROLLOUT_HPP

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

#include "marketrl/rng.hpp"

namespace marketrl {

/// On-policy trajectory storage for horizon steps of n_envs parallel
/// environments. Step t of environment e lives at row t * n_envs + e.
/// Episodes never terminate, only truncate; at a truncation row the value
/// estimate of the final observation is kept for bootstrapping.
class RolloutBuffer {
  public:
    RolloutBuffer(int horizon, int n_envs, int obs_dim);

    int horizon() const { return horizon_; }
    int n_envs() const { return n_envs_; }
    int size() const { return horizon_ * n_envs_; }
    int obs_dim() const { return obs_dim_; }
    int row(int t, int env) const { return t * n_envs_ + env; }

    /// Resets the write cursor; storage is reused.
    void begin_rollout();

    /// Appends one synchronous step of all environments.
    /// `terminal_values[e]` is read only where `episode_end[e]` is true.
    void add(const Eigen::MatrixXd& obs, const Eigen::VectorXi& actions,
             const Eigen::VectorXd& rewards, const Eigen::VectorXd& values,
             const Eigen::VectorXd& log_probs, const std::vector<std::uint8_t>& episode_end,
             const Eigen::VectorXd& terminal_values);

    bool full() const { return steps_written_ == horizon_; }

    const Eigen::MatrixXd& observations() const { return obs_; }
    const Eigen::VectorXi& actions() const { return actions_; }
    const Eigen::VectorXd& rewards() const { return rewards_; }
    const Eigen::VectorXd& values() const { return values_; }
    const Eigen::VectorXd& log_probs() const { return log_probs_; }
    const std::vector<std::uint8_t>& episode_end() const { return episode_end_; }
    const Eigen::VectorXd& terminal_values() const { return terminal_values_; }

  private:
    int horizon_, n_envs_, obs_dim_;
    int steps_written_ = 0;
    Eigen::MatrixXd obs_;
    Eigen::VectorXi actions_;
    Eigen::VectorXd rewards_, values_, log_probs_, terminal_values_;
    std::vector<std::uint8_t> episode_end_;
};

/// Generalized advantage estimation over a full buffer. `last_values[e]`
/// bootstraps the value of the observation following the final stored step of
/// environment e; truncation rows bootstrap from the stored terminal value
/// and cut the lambda-recursion, with no terminal zeroing.
/// Returns (advantages, returns) with returns = advantages + values.
void compute_returns_and_gae(const RolloutBuffer& buffer, const Eigen::VectorXd& last_values,
                             double gamma, double gae_lambda, Eigen::VectorXd& advantages,
                             Eigen::VectorXd& returns);

/// Single-environment convenience overload.
void compute_returns_and_gae(const RolloutBuffer& buffer, double last_value, double gamma,
                             double gae_lambda, Eigen::VectorXd& advantages,
                             Eigen::VectorXd& returns);

/// Uniform-sampling ring buffer of off-policy transitions.
class ReplayBuffer {
  public:
    ReplayBuffer(int capacity, int obs_dim);

    void add(const Eigen::VectorXd& obs, int action, double reward,
             const Eigen::VectorXd& next_obs, bool done);

    int size() const { return size_; }
    int capacity() const { return capacity_; }
    std::int64_t insertions() const { return insertions_; }

    /// Uniform random index into the stored transitions.
    int sample_index(Rng& rng) const;

    struct Batch {
        Eigen::MatrixXd obs;
        Eigen::MatrixXd next_obs;
        Eigen::VectorXi actions;
        Eigen::VectorXd rewards;
        std::vector<std::uint8_t> done;
    };

    Batch sample(int batch_size, Rng& rng) const;

  private:
    int capacity_, obs_dim_;
    int size_ = 0;
    int next_ = 0;
    std::int64_t insertions_ = 0;
    Eigen::MatrixXd obs_, next_obs_;
    Eigen::VectorXi actions_;
    Eigen::VectorXd rewards_;
    std::vector<std::uint8_t> done_;
};

} // namespace marketrl

#endif
