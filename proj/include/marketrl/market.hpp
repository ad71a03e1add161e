#ifndef MARKETRL_MARKET_HPP
#define MARKETRL_MARKET_HPP

#include <Eigen/Dense>

#include <array>

#include "marketrl/rng.hpp"

namespace marketrl {

/// Full parameterization of the simulated economy. Defaults describe one
/// concrete market; every field can be perturbed when sampling environments.
struct MarketParams {
    int q_min = 0;           // minimum production per producer (units)
    int q_max = 14;          // production limit per producer (units)
    int n_competitors = 3;   // scripted competing producers
    double p_init = 15.0;    // starting price (currency / unit)
    double fixed_cost_min = 1.0;
    double fixed_cost_max = 10.0;
    std::array<double, 4> cost_coefs{0.0, 4.0, -0.6, 0.03}; // cubic cost c0..c3
    double elasticity = 1.02;       // linear demand response to price
    double base_demand = 43.4;      // demand at zero price, mid-season
    double production_noise = 0.05; // std scale shared by every Gaussian term
    double storage_factor = 2.0;    // base of the excess-production penalty
    double max_brand_effect = 0.3;  // revenue bonus fraction at full production
    double max_subsidy = 10.0;      // subsidy at full production

    // Dynamics constants not tabulated above: seasonality, the price-update
    // gain, the quadratic demand penalty above the reference price, and the
    // price / penalty clamps.
    int demand_period = 200;
    int supply_period = 200;
    double demand_amplitude = 1.0; // deep troughs: demand vanishes off-season
    double supply_amplitude = 0.1;
    double price_sensitivity = 0.1; // eta in the price update
    double quad_demand_coef = 0.05; // k_q above p_init
    double p_min = 1.0;
    double p_max = 60.0;
    int storage_exponent_cap = 12;

    int action_count() const { return q_max - q_min + 1; }

    /// Throws ConfigError when any invariant is violated.
    void validate() const;
};

/// Evolving market variables. `competitor_q` holds the units each scripted
/// competitor produced in the most recent step.
struct MarketState {
    double price = 0.0;
    Eigen::VectorXi competitor_q;
    int t = 0;
    double fixed_cost_base = 0.0; // drawn once per episode
    int last_agent_q = 0;
    double last_total_supply = 0.0;
    double last_total_demand = 0.0;
};

/// Signed decomposition of one step's profit.
/// profit == revenue + brand_bonus + subsidy
///           - fixed_cost_paid - production_cost - storage_penalty
struct ProfitBreakdown {
    double revenue = 0.0;
    double brand_bonus = 0.0;
    double subsidy = 0.0;
    double fixed_cost_paid = 0.0;
    double production_cost = 0.0;
    double storage_penalty = 0.0;
    double profit = 0.0;
};

/// Standard-normal variates consumed by profit(). Pre-drawn by the caller so
/// the whole computation is a pure function (set all to 0 to disable noise).
struct ComponentNoise {
    double production = 0.0;
    double fixed_cost = 0.0;
    double brand = 0.0;
};

/// Noise-free cubic production cost, clipped at zero.
double cubic_cost(int q, const MarketParams& params);

/// 1 + amplitude * sin(2*pi*t / period).
double seasonal_factor(int t, int period, double amplitude);

/// Units demanded at `price` and time `t`; `noise` is a pre-drawn standard
/// normal variate. Never negative.
double demand_at(double price, int t, const MarketParams& params, double noise);

/// One random-walk move for every competitor, drifting against the agent's
/// latest production change and clipped to the production range.
Eigen::VectorXi competitor_update(const MarketState& state, int agent_q,
                                  const MarketParams& params, Rng& rng);

/// Seasonal, noise-perturbed cost of producing q units at time t.
double production_cost(int q, int t, const MarketParams& params, double noise);

/// Exponential penalty on production in excess of demand; zero when q <= demand.
double storage_penalty(int q, double demand, const MarketParams& params);

/// Next price under the supply/demand imbalance rule, clipped to [p_min, p_max].
double price_update(double price, double supply, double demand,
                    const MarketParams& params, double noise);

/// Revenue bonus from brand image, quadratic in the production ratio.
double brand_bonus(int q, double price, const MarketParams& params, double noise);

/// Public subsidy, linear ramp reaching max_subsidy at q_max.
double subsidy(int q, const MarketParams& params);

/// Assembles the full profit breakdown for producing q units in `state`,
/// given this step's demand and the pre-drawn component noises.
ProfitBreakdown profit(int q, const MarketState& state, double demand,
                       const MarketParams& params, const ComponentNoise& noise);

} // namespace marketrl

#endif
