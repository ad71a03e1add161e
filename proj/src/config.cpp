#include "marketrl/config.hpp"

#include <fstream>
#include <set>

#include "marketrl/errors.hpp"

namespace marketrl {

namespace {

void require_object(const nlohmann::json& j, const std::string& where) {
    if (!j.is_object()) throw ConfigError("config: " + where + " must be a JSON object");
}

void reject_unknown(const nlohmann::json& j, const std::set<std::string>& known,
                    const std::string& where) {
    for (const auto& [key, value] : j.items())
        if (!known.contains(key))
            throw ConfigError("config: unknown key '" + key + "' in " + where);
}

RandomizationSpec::Interval parse_interval(const nlohmann::json& j, const std::string& name) {
    if (!j.is_array() || j.size() != 2)
        throw ConfigError("config: randomization." + name + " must be [lo, hi]");
    RandomizationSpec::Interval iv;
    iv.lo = j[0].get<double>();
    iv.hi = j[1].get<double>();
    if (iv.lo > iv.hi)
        throw ConfigError("config: randomization." + name + " has lo > hi");
    return iv;
}

void apply_params(MarketParams& params, const nlohmann::json& j) {
    require_object(j, "env.params");
    for (const auto& [key, value] : j.items()) {
        if (key == "cost_coefs") {
            if (!value.is_array() || value.size() != 4)
                throw ConfigError("config: env.params.cost_coefs must hold 4 numbers");
            for (std::size_t i = 0; i < 4; ++i) params.cost_coefs[i] = value[i].get<double>();
            continue;
        }
        if (const auto it = market_real_fields().find(key); it != market_real_fields().end()) {
            params.*(it->second) = value.get<double>();
            continue;
        }
        if (const auto it = market_int_fields().find(key); it != market_int_fields().end()) {
            params.*(it->second) = value.get<int>();
            continue;
        }
        throw ConfigError("config: unknown key '" + key + "' in env.params");
    }
}

void apply_randomization(RandomizationSpec& spec, const nlohmann::json& j) {
    require_object(j, "env.randomization");
    for (const auto& [key, value] : j.items()) {
        const bool is_cost = key.rfind("cost_c", 0) == 0 && key.size() == 7 &&
                             key[6] >= '0' && key[6] <= '3';
        if (is_cost || market_real_fields().contains(key)) {
            spec.real_fields[key] = parse_interval(value, key);
        } else if (market_int_fields().contains(key)) {
            spec.int_fields[key] = parse_interval(value, key);
        } else {
            throw ConfigError("config: unknown key '" + key + "' in env.randomization");
        }
    }
}

void apply_env(ExperimentConfig& cfg, const nlohmann::json& j) {
    require_object(j, "env");
    reject_unknown(j, {"horizon", "observation_scaling", "params", "randomization"}, "env");
    if (j.contains("horizon")) cfg.env.horizon = j["horizon"].get<int>();
    if (j.contains("observation_scaling"))
        cfg.env.observation_scaling = j["observation_scaling"].get<bool>();
    if (j.contains("params")) apply_params(cfg.env.params, j["params"]);
    if (j.contains("randomization")) apply_randomization(cfg.randomization, j["randomization"]);
}

void apply_ppo(PpoConfig& c, const nlohmann::json& j) {
    reject_unknown(j,
                   {"name", "gamma", "gae_lambda", "clip_epsilon", "rollout_length",
                    "minibatch_size", "epochs", "value_coef", "entropy_coef", "max_grad_norm",
                    "learning_rate", "anneal_lr"},
                   "algo (ppo)");
    if (j.contains("gamma")) c.gamma = j["gamma"].get<double>();
    if (j.contains("gae_lambda")) c.gae_lambda = j["gae_lambda"].get<double>();
    if (j.contains("clip_epsilon")) c.clip_epsilon = j["clip_epsilon"].get<double>();
    if (j.contains("rollout_length")) c.rollout_length = j["rollout_length"].get<int>();
    if (j.contains("minibatch_size")) c.minibatch_size = j["minibatch_size"].get<int>();
    if (j.contains("epochs")) c.epochs = j["epochs"].get<int>();
    if (j.contains("value_coef")) c.value_coef = j["value_coef"].get<double>();
    if (j.contains("entropy_coef")) c.entropy_coef = j["entropy_coef"].get<double>();
    if (j.contains("max_grad_norm")) c.max_grad_norm = j["max_grad_norm"].get<double>();
    if (j.contains("learning_rate")) c.learning_rate = j["learning_rate"].get<double>();
    if (j.contains("anneal_lr")) c.anneal_lr = j["anneal_lr"].get<bool>();
}

void apply_a2c(A2cConfig& c, const nlohmann::json& j) {
    reject_unknown(j,
                   {"name", "gamma", "n_steps", "value_coef", "entropy_coef", "max_grad_norm",
                    "learning_rate"},
                   "algo (a2c)");
    if (j.contains("gamma")) c.gamma = j["gamma"].get<double>();
    if (j.contains("n_steps")) c.n_steps = j["n_steps"].get<int>();
    if (j.contains("value_coef")) c.value_coef = j["value_coef"].get<double>();
    if (j.contains("entropy_coef")) c.entropy_coef = j["entropy_coef"].get<double>();
    if (j.contains("max_grad_norm")) c.max_grad_norm = j["max_grad_norm"].get<double>();
    if (j.contains("learning_rate")) c.learning_rate = j["learning_rate"].get<double>();
}

void apply_dqn(DqnConfig& c, const nlohmann::json& j) {
    reject_unknown(j,
                   {"name", "gamma", "buffer_capacity", "batch_size", "target_sync_interval",
                    "epsilon_start", "epsilon_end", "epsilon_decay_fraction", "max_grad_norm",
                    "learning_rate", "train_frequency", "learning_starts"},
                   "algo (dqn)");
    if (j.contains("gamma")) c.gamma = j["gamma"].get<double>();
    if (j.contains("buffer_capacity")) c.buffer_capacity = j["buffer_capacity"].get<int>();
    if (j.contains("batch_size")) c.batch_size = j["batch_size"].get<int>();
    if (j.contains("target_sync_interval"))
        c.target_sync_interval = j["target_sync_interval"].get<int>();
    if (j.contains("epsilon_start")) c.epsilon_start = j["epsilon_start"].get<double>();
    if (j.contains("epsilon_end")) c.epsilon_end = j["epsilon_end"].get<double>();
    if (j.contains("epsilon_decay_fraction"))
        c.epsilon_decay_fraction = j["epsilon_decay_fraction"].get<double>();
    if (j.contains("max_grad_norm")) c.max_grad_norm = j["max_grad_norm"].get<double>();
    if (j.contains("learning_rate")) c.learning_rate = j["learning_rate"].get<double>();
    if (j.contains("train_frequency")) c.train_frequency = j["train_frequency"].get<int>();
    if (j.contains("learning_starts")) c.learning_starts = j["learning_starts"].get<int>();
}

void apply_algo(AlgoSection& algo, const nlohmann::json& j) {
    require_object(j, "algo");
    if (j.contains("name")) algo.name = j["name"].get<std::string>();
    if (algo.name == "ppo")
        apply_ppo(algo.ppo, j);
    else if (algo.name == "a2c")
        apply_a2c(algo.a2c, j);
    else if (algo.name == "dqn")
        apply_dqn(algo.dqn, j);
    else
        throw ConfigError("config: algo.name must be ppo, a2c, or dqn (got '" + algo.name +
                          "')");
}

void apply_train(TrainSection& t, const nlohmann::json& j) {
    require_object(j, "train");
    reject_unknown(j,
                   {"total_steps", "n_envs", "seed", "checkpoint_interval", "ppo_seeds",
                    "include_dqn", "include_a2c", "n_fixed", "n_random"},
                   "train");
    if (j.contains("total_steps")) t.total_steps = j["total_steps"].get<std::int64_t>();
    if (j.contains("n_envs")) t.n_envs = j["n_envs"].get<int>();
    if (j.contains("seed")) t.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("checkpoint_interval"))
        t.checkpoint_interval = j["checkpoint_interval"].get<std::int64_t>();
    if (j.contains("ppo_seeds")) t.ppo_seeds = j["ppo_seeds"].get<std::vector<std::uint64_t>>();
    if (j.contains("include_dqn")) t.include_dqn = j["include_dqn"].get<bool>();
    if (j.contains("include_a2c")) t.include_a2c = j["include_a2c"].get<bool>();
    if (j.contains("n_fixed")) t.n_fixed = j["n_fixed"].get<int>();
    if (j.contains("n_random")) t.n_random = j["n_random"].get<int>();
}

void apply_eval(EvalSection& e, const nlohmann::json& j) {
    require_object(j, "eval");
    reject_unknown(j, {"horizon", "episodes", "seed"}, "eval");
    if (j.contains("horizon")) e.horizon = j["horizon"].get<int>();
    if (j.contains("episodes")) e.episodes = j["episodes"].get<int>();
    if (j.contains("seed")) e.seed = j["seed"].get<std::uint64_t>();
}

} // namespace

void ExperimentConfig::validate() const {
    env.validate();
    if (train.total_steps < 1) throw ConfigError("config: train.total_steps must be >= 1");
    if (train.n_envs < 1) throw ConfigError("config: train.n_envs must be >= 1");
    if (train.checkpoint_interval < 0)
        throw ConfigError("config: train.checkpoint_interval must be >= 0");
    if (train.ppo_seeds.empty()) throw ConfigError("config: train.ppo_seeds must be non-empty");
    std::set<std::uint64_t> distinct(train.ppo_seeds.begin(), train.ppo_seeds.end());
    if (distinct.size() != train.ppo_seeds.size())
        throw ConfigError("config: train.ppo_seeds must be distinct");
    if (train.n_fixed < 0 || train.n_fixed > env.params.action_count())
        throw ConfigError("config: train.n_fixed must be in [0, action_count]");
    if (train.n_random < 0) throw ConfigError("config: train.n_random must be >= 0");
    if (eval.horizon < 0) throw ConfigError("config: eval.horizon must be >= 0");
    if (eval.episodes < 1) throw ConfigError("config: eval.episodes must be >= 1");
    if (algo.name == "ppo")
        algo.ppo.validate();
    else if (algo.name == "a2c")
        algo.a2c.validate();
    else if (algo.name == "dqn")
        algo.dqn.validate();
    else
        throw ConfigError("config: algo.name must be ppo, a2c, or dqn");
}

ExperimentConfig preset_config(const std::string& name) {
    ExperimentConfig cfg; // defaults are the desk scale
    if (name == "desk") return cfg;
    if (name == "full") {
        cfg.train.total_steps = 1500000;
        cfg.train.checkpoint_interval = 250000;
        return cfg;
    }
    throw ConfigError("config: unknown preset '" + name + "' (expected desk or full)");
}

void apply_config_json(ExperimentConfig& cfg, const nlohmann::json& j) {
    require_object(j, "top level");
    reject_unknown(j, {"env", "algo", "train", "eval"}, "top level");
    if (j.contains("env")) apply_env(cfg, j["env"]);
    if (j.contains("algo")) apply_algo(cfg.algo, j["algo"]);
    if (j.contains("train")) apply_train(cfg.train, j["train"]);
    if (j.contains("eval")) apply_eval(cfg.eval, j["eval"]);
}

ExperimentConfig load_config_file(const std::filesystem::path& path,
                                  const std::string& preset) {
    ExperimentConfig cfg = preset_config(preset);
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config: parse error in " + path.string() + ": " + e.what());
    }
    apply_config_json(cfg, j);
    cfg.validate();
    return cfg;
}

nlohmann::json config_to_json(const ExperimentConfig& cfg) {
    nlohmann::json params;
    for (const auto& [name, member] : market_real_fields())
        params[name] = cfg.env.params.*member;
    for (const auto& [name, member] : market_int_fields())
        params[name] = cfg.env.params.*member;
    params["cost_coefs"] = cfg.env.params.cost_coefs;

    nlohmann::json randomization = nlohmann::json::object();
    for (const auto& [name, iv] : cfg.randomization.real_fields)
        randomization[name] = {iv.lo, iv.hi};
    for (const auto& [name, iv] : cfg.randomization.int_fields)
        randomization[name] = {iv.lo, iv.hi};

    nlohmann::json env;
    env["horizon"] = cfg.env.horizon;
    env["observation_scaling"] = cfg.env.observation_scaling;
    env["params"] = std::move(params);
    env["randomization"] = std::move(randomization);

    nlohmann::json algo;
    algo["name"] = cfg.algo.name;
    if (cfg.algo.name == "ppo") {
        const PpoConfig& c = cfg.algo.ppo;
        algo["gamma"] = c.gamma;
        algo["gae_lambda"] = c.gae_lambda;
        algo["clip_epsilon"] = c.clip_epsilon;
        algo["rollout_length"] = c.rollout_length;
        algo["minibatch_size"] = c.minibatch_size;
        algo["epochs"] = c.epochs;
        algo["value_coef"] = c.value_coef;
        algo["entropy_coef"] = c.entropy_coef;
        algo["max_grad_norm"] = c.max_grad_norm;
        algo["learning_rate"] = c.learning_rate;
        algo["anneal_lr"] = c.anneal_lr;
    } else if (cfg.algo.name == "a2c") {
        const A2cConfig& c = cfg.algo.a2c;
        algo["gamma"] = c.gamma;
        algo["n_steps"] = c.n_steps;
        algo["value_coef"] = c.value_coef;
        algo["entropy_coef"] = c.entropy_coef;
        algo["max_grad_norm"] = c.max_grad_norm;
        algo["learning_rate"] = c.learning_rate;
    } else if (cfg.algo.name == "dqn") {
        const DqnConfig& c = cfg.algo.dqn;
        algo["gamma"] = c.gamma;
        algo["buffer_capacity"] = c.buffer_capacity;
        algo["batch_size"] = c.batch_size;
        algo["target_sync_interval"] = c.target_sync_interval;
        algo["epsilon_start"] = c.epsilon_start;
        algo["epsilon_end"] = c.epsilon_end;
        algo["epsilon_decay_fraction"] = c.epsilon_decay_fraction;
        algo["max_grad_norm"] = c.max_grad_norm;
        algo["learning_rate"] = c.learning_rate;
        algo["train_frequency"] = c.train_frequency;
        algo["learning_starts"] = c.learning_starts;
    }

    nlohmann::json train;
    train["total_steps"] = cfg.train.total_steps;
    train["n_envs"] = cfg.train.n_envs;
    train["seed"] = cfg.train.seed;
    train["checkpoint_interval"] = cfg.train.checkpoint_interval;
    train["ppo_seeds"] = cfg.train.ppo_seeds;
    train["include_dqn"] = cfg.train.include_dqn;
    train["include_a2c"] = cfg.train.include_a2c;
    train["n_fixed"] = cfg.train.n_fixed;
    train["n_random"] = cfg.train.n_random;

    nlohmann::json eval;
    eval["horizon"] = cfg.eval.horizon;
    eval["episodes"] = cfg.eval.episodes;
    eval["seed"] = cfg.eval.seed;

    nlohmann::json j;
    j["env"] = std::move(env);
    j["algo"] = std::move(algo);
    j["train"] = std::move(train);
    j["eval"] = std::move(eval);
    return j;
}

} // namespace marketrl
