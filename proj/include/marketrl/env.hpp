#ifndef MARKETRL_ENV_HPP
#define MARKETRL_ENV_HPP

#include <Eigen/Dense>

#include <cstdint>
#include <map>
#include <string>

#include "marketrl/market.hpp"
#include "marketrl/rng.hpp"

namespace marketrl {

/// Market trend relative to the previous step's total production.
enum Progress : int { kProgressDown = 0, kProgressEqual = 1, kProgressUp = 2 };

/// What the agent sees after each step. Flattens to a vector of length
/// 5 + n_competitors, in the field order below.
struct Observation {
    double total_supply = 0.0;
    double total_demand = 0.0;
    int progress = kProgressEqual; // 0 down, 1 equal, 2 up
    int timestep_mod = 0;          // t % 100
    Eigen::VectorXd competitor_q_prev; // quantities seen in the previous timestep
    double price = 0.0;
};

/// Units the agent chooses to produce this step.
struct Action {
    int units = 0;
};

struct StepResult {
    Observation observation;
    double reward = 0.0;    // this step's profit
    bool truncated = false; // horizon reached; the market episode never terminates early
    bool terminated = false; // always false here; kept so trainers can serve true-terminal MDPs
    ProfitBreakdown breakdown;
};

struct EnvConfig {
    MarketParams params;
    int horizon = 1000;
    std::uint64_t seed = 0;
    bool observation_scaling = true;

    void validate() const;
};

/// Per-field interval distributions over MarketParams. Fields absent from the
/// maps keep their base value; an interval with lo == hi is a point mass.
struct RandomizationSpec {
    struct Interval {
        double lo = 0.0;
        double hi = 0.0;
    };
    std::map<std::string, Interval> real_fields;
    std::map<std::string, Interval> int_fields; // sampled as uniform integers

    bool empty() const { return real_fields.empty() && int_fields.empty(); }
};

/// Field registry used by randomization and config parsing.
const std::map<std::string, double MarketParams::*>& market_real_fields();
const std::map<std::string, int MarketParams::*>& market_int_fields();

/// Draws one MarketParams from the spec, every field independent. The result
/// is validated; a spec that can produce invalid combinations is an error.
MarketParams sample_params(const MarketParams& base, const RandomizationSpec& spec, Rng& rng);

/// Scales each observation field by its static bound (supply and demand by
/// base_demand, price by p_max, timestep by 100, competitor units by q_max,
/// progress by 2) when scaling is enabled; otherwise copies fields verbatim.
Eigen::VectorXd encode_observation(const Observation& obs, const MarketParams& params,
                                   bool scaling);

/// Episodic MDP over the market dynamics. One instance is single-threaded;
/// independent instances may run in parallel.
class MarketEnv {
  public:
    explicit MarketEnv(EnvConfig config);

    /// Starts a new episode: t = 0, price = p_init, competitor quantities
    /// uniform over the production range, fixed cost drawn for the episode.
    Observation reset(std::uint64_t seed);
    Observation reset() { return reset(cfg_.seed); }

    /// Advances one timestep. Throws LifecycleError after truncation and
    /// ContractViolation for out-of-range actions.
    StepResult step(Action action);

    Eigen::VectorXd encode(const Observation& obs) const {
        return encode_observation(obs, cfg_.params, cfg_.observation_scaling);
    }

    int action_count() const { return cfg_.params.action_count(); }
    Action action_from_index(int index) const { return Action{cfg_.params.q_min + index}; }
    int action_index(Action a) const { return a.units - cfg_.params.q_min; }
    int observation_size() const { return 5 + cfg_.params.n_competitors; }

    const MarketState& state() const { return state_; }
    const EnvConfig& config() const { return cfg_; }

  private:
    EnvConfig cfg_;
    MarketState state_;
    Rng rng_{0};
    bool episode_active_ = false;
};

} // namespace marketrl

#endif
