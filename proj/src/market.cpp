#include "marketrl/market.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "marketrl/errors.hpp"

namespace marketrl {

namespace {

constexpr double kTwoPi = 6.28318530717958647692;

void require_q_in_range(int q, const MarketParams& params, const char* op) {
    if (q < params.q_min || q > params.q_max) {
        throw ContractViolation(std::string(op) + ": q=" + std::to_string(q) +
                                " outside [" + std::to_string(params.q_min) + ", " +
                                std::to_string(params.q_max) + "]");
    }
}

int sign_of(int x) { return (x > 0) - (x < 0); }

} // namespace

void MarketParams::validate() const {
    auto fail = [](const std::string& msg) { throw ConfigError("MarketParams: " + msg); };
    if (q_min > q_max) fail("q_min > q_max");
    if (n_competitors < 1) fail("n_competitors < 1");
    if (fixed_cost_min > fixed_cost_max) fail("fixed_cost_min > fixed_cost_max");
    if (!(p_min <= p_init && p_init <= p_max)) fail("p_init outside [p_min, p_max]");
    if (production_noise < 0) fail("production_noise < 0");
    if (demand_amplitude < 0 || supply_amplitude < 0) fail("negative seasonal amplitude");
    if (demand_period <= 0 || supply_period <= 0) fail("seasonal period must be positive");
    if (!(storage_factor > 1.0)) fail("storage_factor must exceed 1");
    if (max_brand_effect < 0 || max_brand_effect >= 1.0) fail("max_brand_effect outside [0, 1)");
    if (max_subsidy < 0) fail("max_subsidy < 0");
    if (price_sensitivity < 0) fail("price_sensitivity < 0");
    if (quad_demand_coef < 0) fail("quad_demand_coef < 0");
    if (storage_exponent_cap < 0) fail("storage_exponent_cap < 0");
    if (q_max <= 0) fail("q_max must be positive");
}

double cubic_cost(int q, const MarketParams& params) {
    require_q_in_range(q, params, "cubic_cost");
    const double x = static_cast<double>(q);
    const auto& c = params.cost_coefs;
    return std::max(0.0, c[0] + c[1] * x + c[2] * x * x + c[3] * x * x * x);
}

double seasonal_factor(int t, int period, double amplitude) {
    if (period <= 0) {
        throw ContractViolation("seasonal_factor: period must be positive");
    }
    return 1.0 + amplitude * std::sin(kTwoPi * static_cast<double>(t) / period);
}

double demand_at(double price, int t, const MarketParams& params, double noise) {
    if (price < 0) {
        throw ContractViolation("demand_at: negative price");
    }
    const double seasonal = seasonal_factor(t, params.demand_period, params.demand_amplitude);
    const double over_ref = std::max(0.0, price - params.p_init);
    const double d = params.base_demand * seasonal +
                     params.production_noise * params.base_demand * noise -
                     params.elasticity * price -
                     params.quad_demand_coef * over_ref * over_ref;
    return std::max(0.0, d);
}

Eigen::VectorXi competitor_update(const MarketState& state, int agent_q,
                                  const MarketParams& params, Rng& rng) {
    require_q_in_range(agent_q, params, "competitor_update");
    const int drift = sign_of(agent_q - state.last_agent_q);
    Eigen::VectorXi next(state.competitor_q.size());
    for (Eigen::Index i = 0; i < state.competitor_q.size(); ++i) {
        const int walk = rng.uniform_int(-1, 1);
        next[i] = std::clamp(state.competitor_q[i] + walk - drift, params.q_min, params.q_max);
    }
    return next;
}

double production_cost(int q, int t, const MarketParams& params, double noise) {
    const double seasonal = seasonal_factor(t, params.supply_period, params.supply_amplitude);
    const double cost = cubic_cost(q, params) * seasonal * (1.0 + params.production_noise * noise);
    return std::max(0.0, cost);
}

double storage_penalty(int q, double demand, const MarketParams& params) {
    if (q < 0 || demand < 0) {
        throw ContractViolation("storage_penalty: q and demand must be non-negative");
    }
    const double excess = static_cast<double>(q) - demand;
    if (excess <= 0) {
        return 0.0;
    }
    const double exponent = std::min(excess, static_cast<double>(params.storage_exponent_cap));
    return std::pow(params.storage_factor, exponent) - 1.0;
}

double price_update(double price, double supply, double demand,
                    const MarketParams& params, double noise) {
    if (supply < 0 || demand < 0) {
        throw ContractViolation("price_update: supply and demand must be non-negative");
    }
    const double scale = std::max({demand, supply, 1.0});
    const double factor = 1.0 + params.price_sensitivity * (demand - supply) / scale +
                          params.production_noise * noise;
    return std::clamp(price * factor, params.p_min, params.p_max);
}

double brand_bonus(int q, double price, const MarketParams& params, double noise) {
    require_q_in_range(q, params, "brand_bonus");
    const double ratio = static_cast<double>(q) / params.q_max;
    const double bonus = price * q * params.max_brand_effect * ratio *
                         (1.0 + params.production_noise * noise);
    return std::max(0.0, bonus);
}

double subsidy(int q, const MarketParams& params) {
    require_q_in_range(q, params, "subsidy");
    return params.max_subsidy * (static_cast<double>(q) / params.q_max);
}

ProfitBreakdown profit(int q, const MarketState& state, double demand,
                       const MarketParams& params, const ComponentNoise& noise) {
    ProfitBreakdown b;
    b.revenue = state.price * q;
    b.brand_bonus = brand_bonus(q, state.price, params, noise.brand);
    b.subsidy = subsidy(q, params);
    b.fixed_cost_paid =
        std::max(0.0, state.fixed_cost_base * (1.0 + params.production_noise * noise.fixed_cost));
    b.production_cost = production_cost(q, state.t, params, noise.production);
    b.storage_penalty = storage_penalty(q, demand, params);
    b.profit = b.revenue + b.brand_bonus + b.subsidy - b.fixed_cost_paid - b.production_cost -
               b.storage_penalty;
    return b;
}

} // namespace marketrl
