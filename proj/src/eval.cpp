#include "marketrl/eval.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

#include "marketrl/errors.hpp"
#include "marketrl/io_util.hpp"

namespace marketrl {

namespace {

const std::vector<std::string> kTraceHeader = {
    "t",           "action",      "supply",          "demand",
    "price",       "reward",      "revenue",         "brand_bonus",
    "subsidy",     "fixed_cost_paid", "production_cost", "storage_penalty"};

} // namespace

EvalReport evaluate_policy(const EnvConfig& env_cfg, const RandomizationSpec& randomization,
                           const Policy& policy, const std::string& label,
                           const std::string& group, std::uint64_t agent_seed,
                           const EvalSection& eval, const std::filesystem::path& out_dir,
                           std::uint64_t act_seed) {
    const std::filesystem::path trace_dir = out_dir / "traces";
    std::filesystem::create_directories(trace_dir);

    EvalReport report;
    report.label = label;
    report.group = group;
    report.agent_seed = agent_seed;
    report.eval_seed = eval.seed;
    report.horizon = eval.horizon;

    Rng episode_seeds(eval.seed);
    Rng act_rng(act_seed);
    Eigen::VectorXd profits(eval.episodes);

    for (int ep = 0; ep < eval.episodes; ++ep) {
        const std::uint64_t seed = episode_seeds.next_u64();

        EnvConfig cfg = env_cfg;
        if (!randomization.empty()) {
            Rng param_rng = Rng(seed).split(77);
            cfg.params = sample_params(env_cfg.params, randomization, param_rng);
        }
        cfg.horizon = eval.horizon;
        MarketEnv env(cfg);

        const std::string trace_name = label + "_ep" + std::to_string(ep) + ".csv";
        CsvWriter trace(trace_dir / trace_name, kTraceHeader);

        Observation obs = env.reset(seed);
        double cumulative = 0.0;
        for (int t = 0; t < eval.horizon; ++t) {
            const Eigen::VectorXd encoded = env.encode(obs);
            const int a = act(policy, encoded, act_rng, ActMode::kGreedy);
            const double transaction_price = env.state().price;
            const StepResult result = env.step(env.action_from_index(a));
            cumulative += result.reward;
            trace.write_row({std::to_string(t), std::to_string(env.action_from_index(a).units),
                             format_double(result.observation.total_supply),
                             format_double(result.observation.total_demand),
                             format_double(transaction_price), format_double(result.reward),
                             format_double(result.breakdown.revenue),
                             format_double(result.breakdown.brand_bonus),
                             format_double(result.breakdown.subsidy),
                             format_double(result.breakdown.fixed_cost_paid),
                             format_double(result.breakdown.production_cost),
                             format_double(result.breakdown.storage_penalty)});
            obs = result.observation;
        }

        EvalEpisode record;
        record.index = ep;
        record.seed = seed;
        record.cumulative_profit = cumulative;
        record.trace_path = (std::filesystem::path("traces") / trace_name).string();
        report.episodes.push_back(std::move(record));
        profits[ep] = cumulative;
    }

    report.summary = SampleSummary::from_data(profits);
    return report;
}

void save_eval_report(const std::filesystem::path& path, const EvalReport& report) {
    nlohmann::json j;
    j["label"] = report.label;
    j["group"] = report.group;
    j["agent_seed"] = report.agent_seed;
    j["eval_seed"] = report.eval_seed;
    j["horizon"] = report.horizon;
    auto episodes = nlohmann::json::array();
    for (const auto& ep : report.episodes) {
        nlohmann::json e;
        e["index"] = ep.index;
        e["seed"] = ep.seed;
        e["cumulative_profit"] = ep.cumulative_profit;
        e["trace_path"] = ep.trace_path;
        episodes.push_back(std::move(e));
    }
    j["episodes"] = std::move(episodes);
    j["summary"] = {{"n", report.summary.n},
                    {"mean", report.summary.mean},
                    {"variance", report.summary.variance}};
    std::ofstream out(path);
    if (!out) throw IoError("eval report: cannot open " + path.string() + " for writing");
    out << j.dump(2) << '\n';
    if (!out) throw IoError("eval report: write failed for " + path.string());
}

EvalReport load_eval_report(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("eval report: cannot open " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw IoError("eval report: parse error in " + path.string() + ": " + e.what());
    }
    EvalReport report;
    report.label = j.at("label").get<std::string>();
    report.group = j.at("group").get<std::string>();
    report.agent_seed = j.at("agent_seed").get<std::uint64_t>();
    report.eval_seed = j.at("eval_seed").get<std::uint64_t>();
    report.horizon = j.at("horizon").get<int>();
    for (const auto& e : j.at("episodes")) {
        EvalEpisode ep;
        ep.index = e.at("index").get<int>();
        ep.seed = e.at("seed").get<std::uint64_t>();
        ep.cumulative_profit = e.at("cumulative_profit").get<double>();
        ep.trace_path = e.at("trace_path").get<std::string>();
        report.episodes.push_back(std::move(ep));
    }
    report.summary.n = j.at("summary").at("n").get<long>();
    report.summary.mean = j.at("summary").at("mean").get<double>();
    report.summary.variance = j.at("summary").at("variance").get<double>();
    return report;
}

} // namespace marketrl
