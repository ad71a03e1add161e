#include "marketrl/env.hpp"

#include <algorithm>
#include <cmath>

#include "marketrl/errors.hpp"

namespace marketrl {

void EnvConfig::validate() const {
    params.validate();
    if (horizon < 0) {
        throw ConfigError("EnvConfig: horizon must be >= 0");
    }
}

const std::map<std::string, double MarketParams::*>& market_real_fields() {
    static const std::map<std::string, double MarketParams::*> fields = {
        {"p_init", &MarketParams::p_init},
        {"fixed_cost_min", &MarketParams::fixed_cost_min},
        {"fixed_cost_max", &MarketParams::fixed_cost_max},
        {"elasticity", &MarketParams::elasticity},
        {"base_demand", &MarketParams::base_demand},
        {"production_noise", &MarketParams::production_noise},
        {"storage_factor", &MarketParams::storage_factor},
        {"max_brand_effect", &MarketParams::max_brand_effect},
        {"max_subsidy", &MarketParams::max_subsidy},
        {"demand_amplitude", &MarketParams::demand_amplitude},
        {"supply_amplitude", &MarketParams::supply_amplitude},
        {"price_sensitivity", &MarketParams::price_sensitivity},
        {"quad_demand_coef", &MarketParams::quad_demand_coef},
        {"p_min", &MarketParams::p_min},
        {"p_max", &MarketParams::p_max},
    };
    return fields;
}

const std::map<std::string, int MarketParams::*>& market_int_fields() {
    static const std::map<std::string, int MarketParams::*> fields = {
        {"q_min", &MarketParams::q_min},
        {"q_max", &MarketParams::q_max},
        {"n_competitors", &MarketParams::n_competitors},
        {"demand_period", &MarketParams::demand_period},
        {"supply_period", &MarketParams::supply_period},
        {"storage_exponent_cap", &MarketParams::storage_exponent_cap},
    };
    return fields;
}

MarketParams sample_params(const MarketParams& base, const RandomizationSpec& spec, Rng& rng) {
    MarketParams out = base;
    // Deterministic draw order: sorted field names, reals then cost
    // coefficients then integers (std::map iteration is already sorted).
    for (const auto& [name, interval] : spec.real_fields) {
        double value = 0.0;
        if (name.rfind("cost_c", 0) == 0 && name.size() == 7) {
            const int idx = name[6] - '0';
            if (idx < 0 || idx > 3) {
                throw ConfigError("randomization: unknown field '" + name + "'");
            }
            value = interval.lo + (interval.hi - interval.lo) * rng.uniform();
            out.cost_coefs[static_cast<std::size_t>(idx)] = value;
            continue;
        }
        const auto it = market_real_fields().find(name);
        if (it == market_real_fields().end()) {
            throw ConfigError("randomization: unknown field '" + name + "'");
        }
        value = interval.lo + (interval.hi - interval.lo) * rng.uniform();
        out.*(it->second) = value;
    }
    for (const auto& [name, interval] : spec.int_fields) {
        const auto it = market_int_fields().find(name);
        if (it == market_int_fields().end()) {
            throw ConfigError("randomization: unknown field '" + name + "'");
        }
        const int lo = static_cast<int>(std::llround(interval.lo));
        const int hi = static_cast<int>(std::llround(interval.hi));
        if (lo > hi) {
            throw ConfigError("randomization: empty interval for '" + name + "'");
        }
        out.*(it->second) = rng.uniform_int(lo, hi);
    }
    out.validate();
    return out;
}

Eigen::VectorXd encode_observation(const Observation& obs, const MarketParams& params,
                                   bool scaling) {
    const Eigen::Index n = obs.competitor_q_prev.size();
    Eigen::VectorXd v(5 + n);
    v[0] = obs.total_supply;
    v[1] = obs.total_demand;
    v[2] = static_cast<double>(obs.progress);
    v[3] = static_cast<double>(obs.timestep_mod);
    v.segment(4, n) = obs.competitor_q_prev;
    v[4 + n] = obs.price;
    if (scaling) {
        v[0] /= params.base_demand;
        v[1] /= params.base_demand;
        v[2] /= 2.0;
        v[3] /= 100.0;
        v.segment(4, n) /= static_cast<double>(params.q_max);
        v[4 + n] /= params.p_max;
    }
    return v;
}

MarketEnv::MarketEnv(EnvConfig config) : cfg_(std::move(config)) {
    cfg_.validate();
}

Observation MarketEnv::reset(std::uint64_t seed) {
    rng_ = Rng(seed);
    const auto& p = cfg_.params;

    state_.competitor_q.resize(p.n_competitors);
    for (int i = 0; i < p.n_competitors; ++i) {
        state_.competitor_q[i] = rng_.uniform_int(p.q_min, p.q_max);
    }
    const double mean = 0.5 * (p.fixed_cost_min + p.fixed_cost_max);
    const double sd = (p.fixed_cost_max - p.fixed_cost_min) / 6.0;
    state_.fixed_cost_base =
        std::clamp(mean + sd * rng_.normal(), p.fixed_cost_min, p.fixed_cost_max);
    state_.price = p.p_init;
    state_.t = 0;
    state_.last_agent_q = 0;
    state_.last_total_supply = 0.0;
    state_.last_total_demand = 0.0;
    episode_active_ = cfg_.horizon > 0;

    Observation obs;
    obs.total_supply = 0.0;
    obs.total_demand = 0.0;
    obs.progress = kProgressEqual;
    obs.timestep_mod = 0;
    obs.competitor_q_prev = state_.competitor_q.cast<double>();
    obs.price = state_.price;
    return obs;
}

StepResult MarketEnv::step(Action action) {
    if (!episode_active_) {
        throw LifecycleError("MarketEnv::step: no active episode (reset required)");
    }
    const auto& p = cfg_.params;
    const int q = action.units;
    if (q < p.q_min || q > p.q_max) {
        throw ContractViolation("MarketEnv::step: action " + std::to_string(q) +
                                " outside [" + std::to_string(p.q_min) + ", " +
                                std::to_string(p.q_max) + "]");
    }

    const Eigen::VectorXd competitors_before = state_.competitor_q.cast<double>();
    state_.competitor_q = competitor_update(state_, q, p, rng_);
    const double supply = static_cast<double>(q) + state_.competitor_q.sum();

    const double demand = demand_at(state_.price, state_.t, p, rng_.normal());

    ComponentNoise noise;
    noise.production = rng_.normal();
    noise.fixed_cost = rng_.normal();
    noise.brand = rng_.normal();
    const ProfitBreakdown breakdown = profit(q, state_, demand, p, noise);

    const double new_price = price_update(state_.price, supply, demand, p, rng_.normal());

    int progress = kProgressEqual;
    if (supply > state_.last_total_supply) progress = kProgressUp;
    if (supply < state_.last_total_supply) progress = kProgressDown;

    state_.price = new_price;
    state_.t += 1;
    state_.last_agent_q = q;
    state_.last_total_supply = supply;
    state_.last_total_demand = demand;

    StepResult result;
    result.observation.total_supply = supply;
    result.observation.total_demand = demand;
    result.observation.progress = progress;
    result.observation.timestep_mod = state_.t % 100;
    result.observation.competitor_q_prev = competitors_before;
    result.observation.price = new_price;
    result.reward = breakdown.profit;
    result.truncated = state_.t == cfg_.horizon;
    result.breakdown = breakdown;
    if (result.truncated) {
        episode_active_ = false;
    }
    return result;
}

} // namespace marketrl
