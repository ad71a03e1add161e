#include "marketrl/harness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "marketrl/checkpoint.hpp"
#include "marketrl/errors.hpp"
#include "marketrl/io_util.hpp"
#include "marketrl/trainer.hpp"

namespace marketrl {

namespace {

const std::vector<std::string> kMetricsHeader = {
    "update_index", "env_steps", "mean_reward",        "value_loss",
    "approx_kl",    "explained_variance", "entropy",   "clip_fraction"};

std::vector<MarketEnv> make_training_envs(const ExperimentConfig& cfg, int n_envs,
                                          const Rng& master) {
    std::vector<MarketEnv> envs;
    envs.reserve(static_cast<std::size_t>(n_envs));
    for (int i = 0; i < n_envs; ++i) {
        EnvConfig ec = cfg.env;
        if (!cfg.randomization.empty()) {
            Rng param_rng = master.split(500 + static_cast<std::uint64_t>(i));
            ec.params = sample_params(cfg.env.params, cfg.randomization, param_rng);
        }
        envs.emplace_back(ec);
    }
    return envs;
}

std::string metrics_field(const std::optional<double>& v) {
    return v ? format_double(*v) : "nan";
}

} // namespace

TrainArtifacts run_training(const ExperimentConfig& cfg, std::uint64_t seed,
                            const std::filesystem::path& out_dir) {
    cfg.validate();
    std::filesystem::create_directories(out_dir);
    const Rng master(seed);

    const int n_envs = cfg.algo.name == "dqn" ? 1 : cfg.train.n_envs;
    std::vector<MarketEnv> envs = make_training_envs(cfg, n_envs, master);
    const int obs_dim = envs[0].observation_size();
    const int n_actions = envs[0].action_count();

    TrainArtifacts artifacts;
    artifacts.metrics_path = out_dir / "metrics.csv";
    artifacts.checkpoint_path = out_dir / "checkpoint_final.json";
    CsvWriter metrics(artifacts.metrics_path, kMetricsHeader);

    Checkpoint ckpt;
    ckpt.algorithm = cfg.algo.name;
    ckpt.config = config_to_json(cfg);

    std::int64_t next_snapshot = cfg.train.checkpoint_interval > 0
                                     ? cfg.train.checkpoint_interval
                                     : std::numeric_limits<std::int64_t>::max();
    const auto sink = [&](const MetricsRow& row) {
        metrics.write_row({std::to_string(row.update_index), std::to_string(row.env_steps),
                           format_double(row.mean_reward), format_double(row.value_loss),
                           format_double(row.approx_kl),
                           metrics_field(row.explained_variance), format_double(row.entropy),
                           format_double(row.clip_fraction)});
        if (row.env_steps >= next_snapshot) {
            save_checkpoint(out_dir / ("checkpoint_step" + std::to_string(row.env_steps) +
                                       ".json"),
                            ckpt);
            while (next_snapshot <= row.env_steps) next_snapshot += cfg.train.checkpoint_interval;
        }
    };

    if (cfg.algo.name == "ppo" || cfg.algo.name == "a2c") {
        Mlp policy = make_mlp({obs_dim, 64, 64, n_actions});
        Mlp value = make_mlp({obs_dim, 64, 64, 1});
        Rng policy_init = master.split(10);
        Rng value_init = master.split(11);
        orthogonal_init(policy, std::sqrt(2.0), 0.01, policy_init);
        orthogonal_init(value, std::sqrt(2.0), 1.0, value_init);
        const double lr = cfg.algo.name == "ppo" ? cfg.algo.ppo.learning_rate
                                                 : cfg.algo.a2c.learning_rate;
        AdamState policy_opt = make_adam(policy, lr);
        AdamState value_opt = make_adam(value, lr);
        ckpt.nets["policy"] = policy;
        ckpt.nets["value"] = value;

        const auto snapshot_sink = [&](const MetricsRow& row) {
            ckpt.nets["policy"] = policy;
            ckpt.nets["value"] = value;
            ckpt.optimizers["policy"] = policy_opt;
            ckpt.optimizers["value"] = value_opt;
            sink(row);
        };
        if (cfg.algo.name == "ppo")
            train_ppo(envs, policy, value, policy_opt, value_opt, cfg.algo.ppo,
                      cfg.train.total_steps, master.split(20), snapshot_sink);
        else
            train_a2c(envs, policy, value, policy_opt, value_opt, cfg.algo.a2c,
                      cfg.train.total_steps, master.split(20), snapshot_sink);

        ckpt.nets["policy"] = policy;
        ckpt.nets["value"] = value;
        ckpt.optimizers["policy"] = policy_opt;
        ckpt.optimizers["value"] = value_opt;
    } else if (cfg.algo.name == "dqn") {
        Mlp online = make_mlp({obs_dim, 64, 64, n_actions});
        Rng q_init = master.split(10);
        orthogonal_init(online, std::sqrt(2.0), 1.0, q_init);
        Mlp target = online;
        AdamState opt = make_adam(online, cfg.algo.dqn.learning_rate);
        ckpt.nets["q"] = online;

        const auto snapshot_sink = [&](const MetricsRow& row) {
            ckpt.nets["q"] = online;
            ckpt.optimizers["q"] = opt;
            sink(row);
        };
        train_dqn(envs[0], online, target, opt, cfg.algo.dqn, cfg.train.total_steps,
                  master.split(20), snapshot_sink);
        ckpt.nets["q"] = online;
        ckpt.optimizers["q"] = opt;
    } else {
        throw ConfigError("run_training: unknown algorithm '" + cfg.algo.name + "'");
    }

    save_checkpoint(artifacts.checkpoint_path, ckpt);
    return artifacts;
}

EvalReport run_eval_checkpoint(const std::filesystem::path& checkpoint_path,
                               const ExperimentConfig& cfg, const std::string& label,
                               const std::string& group, std::uint64_t agent_seed,
                               const std::filesystem::path& out_dir, std::uint64_t act_seed) {
    std::filesystem::create_directories(out_dir);
    const Checkpoint ckpt = load_checkpoint(checkpoint_path);
    const Policy policy = policy_from_checkpoint(ckpt);
    EvalReport report = evaluate_policy(cfg.env, cfg.randomization, policy, label, group,
                                        agent_seed, cfg.eval, out_dir, act_seed);
    save_eval_report(out_dir / (label + ".json"), report);
    return report;
}

Policy make_baseline_policy(const std::string& spec, const MarketParams& params) {
    if (spec == "random") return RandomPolicy{params.action_count()};
    if (spec.rfind("fixed:", 0) == 0) {
        int units = 0;
        try {
            units = std::stoi(spec.substr(6));
        } catch (const std::exception&) {
            throw ConfigError("baseline: cannot parse units in '" + spec + "'");
        }
        if (units < params.q_min || units > params.q_max)
            throw ConfigError("baseline: fixed units outside the production range");
        return FixedPolicy{units, params.q_min};
    }
    throw ConfigError("baseline: spec must be 'fixed:K' or 'random' (got '" + spec + "')");
}

EvalReport run_eval_baseline(const std::string& spec, const ExperimentConfig& cfg,
                             const std::string& label, const std::string& group,
                             const std::filesystem::path& out_dir, std::uint64_t act_seed) {
    std::filesystem::create_directories(out_dir);
    const Policy policy = make_baseline_policy(spec, cfg.env.params);
    EvalReport report = evaluate_policy(cfg.env, cfg.randomization, policy, label, group, 0,
                                        cfg.eval, out_dir, act_seed);
    save_eval_report(out_dir / (label + ".json"), report);
    return report;
}

namespace {

struct RosterEntry {
    std::string label;
    std::string group;
    std::string kind; // ppo | dqn | a2c | fixed | random
    std::uint64_t seed = 0;
    std::string baseline_spec; // for fixed/random kinds
};

std::vector<RosterEntry> build_roster(const ExperimentConfig& cfg) {
    std::vector<RosterEntry> roster;
    for (const std::uint64_t s : cfg.train.ppo_seeds)
        roster.push_back({"ppo_seed" + std::to_string(s), "drl", "ppo", s, ""});
    if (cfg.train.include_dqn)
        roster.push_back({"dqn", "drl_extra", "dqn", cfg.train.seed, ""});
    if (cfg.train.include_a2c)
        roster.push_back({"a2c", "drl_extra", "a2c", cfg.train.seed, ""});
    for (int j = 0; j < cfg.train.n_fixed; ++j) {
        const int units = cfg.env.params.q_min + j;
        roster.push_back({"fixed_" + std::to_string(units), "fixed", "fixed", 0,
                          "fixed:" + std::to_string(units)});
    }
    for (int i = 0; i < cfg.train.n_random; ++i)
        roster.push_back(
            {"random_" + std::to_string(i), "random", "random", 0, "random"});
    return roster;
}

} // namespace

std::filesystem::path run_replicate(const ExperimentConfig& cfg,
                                    const std::filesystem::path& out_dir, bool dry_run) {
    cfg.validate();
    std::filesystem::create_directories(out_dir);
    const std::filesystem::path reports_dir = out_dir / "reports";
    const std::filesystem::path runs_dir = out_dir / "runs";

    const std::vector<RosterEntry> roster = build_roster(cfg);
    const Rng act_seeds = Rng(cfg.eval.seed);

    if (!dry_run) {
        std::filesystem::create_directories(reports_dir);
        std::filesystem::create_directories(runs_dir);
        for (std::size_t i = 0; i < roster.size(); ++i) {
            const RosterEntry& entry = roster[i];
            const std::uint64_t act_seed =
                act_seeds.split(9000 + static_cast<std::uint64_t>(i)).next_u64();
            if (entry.kind == "fixed" || entry.kind == "random") {
                run_eval_baseline(entry.baseline_spec, cfg, entry.label, entry.group,
                                  reports_dir, act_seed);
                continue;
            }
            ExperimentConfig run_cfg = cfg;
            run_cfg.algo.name = entry.kind;
            const TrainArtifacts artifacts =
                run_training(run_cfg, entry.seed, runs_dir / entry.label);
            run_eval_checkpoint(artifacts.checkpoint_path, run_cfg, entry.label, entry.group,
                                entry.seed, reports_dir, act_seed);
        }
    }

    nlohmann::json manifest;
    manifest["config"] = config_to_json(cfg);
    manifest["master_seed"] = cfg.train.seed;
    manifest["total_steps"] = cfg.train.total_steps;
    manifest["dry_run"] = dry_run;

    auto roster_json = nlohmann::json::array();
    for (const RosterEntry& entry : roster) {
        nlohmann::json r;
        r["label"] = entry.label;
        r["group"] = entry.group;
        r["kind"] = entry.kind;
        r["seed"] = entry.seed;
        if (!entry.baseline_spec.empty()) r["baseline_spec"] = entry.baseline_spec;
        r["report"] = ("reports/" + entry.label + ".json");
        roster_json.push_back(std::move(r));
    }
    manifest["roster"] = std::move(roster_json);

    // Catalogue everything under out_dir except the manifest itself, in
    // path order so reruns produce byte-identical manifests.
    std::vector<std::filesystem::path> files;
    if (!dry_run)
        for (const auto& entry : std::filesystem::recursive_directory_iterator(out_dir))
            if (entry.is_regular_file() && entry.path().filename() != "manifest.json")
                files.push_back(std::filesystem::relative(entry.path(), out_dir));
    std::sort(files.begin(), files.end());
    auto artifacts_json = nlohmann::json::array();
    for (const auto& rel : files) {
        nlohmann::json a;
        a["path"] = rel.generic_string();
        a["sha256"] = sha256_hex_of_file(out_dir / rel);
        a["bytes"] = static_cast<std::int64_t>(std::filesystem::file_size(out_dir / rel));
        artifacts_json.push_back(std::move(a));
    }
    manifest["artifacts"] = std::move(artifacts_json);

    const std::filesystem::path manifest_path = out_dir / "manifest.json";
    write_text_file(manifest_path, manifest.dump(2) + "\n");
    return manifest_path;
}

namespace {

double quantile_type7(std::vector<double> sorted, double p) {
    const auto n = sorted.size();
    if (n == 1) return sorted[0];
    const double h = static_cast<double>(n - 1) * p;
    const auto lo = static_cast<std::size_t>(h);
    const double frac = h - static_cast<double>(lo);
    if (lo + 1 >= n) return sorted[n - 1];
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

// Mean-over-episodes running cumulative profit for one agent, read back from
// its trace CSVs.
std::vector<double> mean_cumulative_trace(const EvalReport& report,
                                          const std::filesystem::path& report_dir) {
    std::vector<double> mean_trace;
    for (const auto& ep : report.episodes) {
        const std::string text = read_text_file(report_dir / ep.trace_path);
        std::istringstream lines(text);
        std::string line;
        if (!std::getline(lines, line)) throw IoError("compare: empty trace " + ep.trace_path);
        // Locate the reward column from the header.
        int reward_col = -1, col = 0;
        std::istringstream header(line);
        std::string field;
        while (std::getline(header, field, ','))
            if (field == "reward") reward_col = col++; else ++col;
        if (reward_col < 0) throw IoError("compare: no reward column in " + ep.trace_path);

        std::size_t t = 0;
        double running = 0.0;
        while (std::getline(lines, line)) {
            std::istringstream row(line);
            col = 0;
            double reward = 0.0;
            while (std::getline(row, field, ',')) {
                if (col == reward_col) reward = std::stod(field);
                ++col;
            }
            running += reward;
            if (t >= mean_trace.size()) mean_trace.push_back(0.0);
            mean_trace[t] += running;
            ++t;
        }
    }
    const double inv = report.episodes.empty() ? 0.0 : 1.0 / static_cast<double>(report.episodes.size());
    for (double& v : mean_trace) v *= inv;
    return mean_trace;
}

nlohmann::json test_to_json(const std::string& name, const TestResult& r) {
    nlohmann::json j;
    j["name"] = name;
    j["t_statistic"] = r.t_statistic;
    j["degrees_of_freedom"] = r.degrees_of_freedom;
    j["p_value"] = r.p_value;
    j["alternative"] = "greater";
    return j;
}

} // namespace

nlohmann::json run_compare(const std::vector<std::filesystem::path>& report_paths,
                           const std::filesystem::path& out_dir, double mu0) {
    if (report_paths.empty()) throw ContractViolation("compare: no reports given");
    std::filesystem::create_directories(out_dir);

    std::map<std::string, std::vector<double>> group_samples;
    std::vector<std::pair<EvalReport, std::filesystem::path>> reports;
    for (const auto& path : report_paths) {
        EvalReport report = load_eval_report(path);
        group_samples[report.group].push_back(report.summary.mean);
        reports.emplace_back(std::move(report), path.parent_path());
    }

    nlohmann::json result;
    result["mu0"] = mu0;
    result["report_count"] = static_cast<int>(reports.size());

    nlohmann::json groups = nlohmann::json::object();
    CsvWriter means_csv(out_dir / "group_means.csv", {"group", "n", "mean", "sd"});
    CsvWriter quartiles_csv(out_dir / "group_quartiles.csv",
                            {"group", "min", "q1", "median", "q3", "max"});
    for (const auto& [name, samples] : group_samples) {
        Eigen::VectorXd data =
            Eigen::Map<const Eigen::VectorXd>(samples.data(), static_cast<Eigen::Index>(samples.size()));
        const SampleSummary s = SampleSummary::from_data(data);
        groups[name] = {{"n", s.n}, {"mean", s.mean}, {"variance", s.variance}};
        means_csv.write_row({name, std::to_string(s.n), format_double(s.mean),
                             format_double(std::sqrt(s.variance))});
        std::vector<double> sorted = samples;
        std::sort(sorted.begin(), sorted.end());
        quartiles_csv.write_row({name, format_double(sorted.front()),
                                 format_double(quantile_type7(sorted, 0.25)),
                                 format_double(quantile_type7(sorted, 0.5)),
                                 format_double(quantile_type7(sorted, 0.75)),
                                 format_double(sorted.back())});
    }
    result["groups"] = std::move(groups);

    auto tests = nlohmann::json::array();
    for (auto a = group_samples.begin(); a != group_samples.end(); ++a)
        for (auto b = std::next(a); b != group_samples.end(); ++b) {
            if (a->second.size() < 2 || b->second.size() < 2) continue;
            const auto sa = SampleSummary::from_data(Eigen::Map<const Eigen::VectorXd>(
                a->second.data(), static_cast<Eigen::Index>(a->second.size())));
            const auto sb = SampleSummary::from_data(Eigen::Map<const Eigen::VectorXd>(
                b->second.data(), static_cast<Eigen::Index>(b->second.size())));
            if (!(sa.variance / static_cast<double>(sa.n) +
                      sb.variance / static_cast<double>(sb.n) >
                  0.0))
                continue; // both groups degenerate; the statistic is undefined
            tests.push_back(test_to_json(a->first + "_vs_" + b->first, welch_t_test(sa, sb)));
        }
    for (const auto& [name, samples] : group_samples) {
        if (samples.size() < 2) continue;
        const auto s = SampleSummary::from_data(Eigen::Map<const Eigen::VectorXd>(
            samples.data(), static_cast<Eigen::Index>(samples.size())));
        if (!(s.variance > 0.0)) continue;
        tests.push_back(test_to_json(name + "_vs_mu0", one_sample_t_test(s, mu0)));
    }
    result["tests"] = std::move(tests);

    CsvWriter traces_csv(out_dir / "cumulative_traces.csv",
                         {"label", "group", "t", "cumulative_profit"});
    for (const auto& [report, dir] : reports) {
        const std::vector<double> trace = mean_cumulative_trace(report, dir);
        for (std::size_t t = 0; t < trace.size(); ++t)
            traces_csv.write_row({report.label, report.group, std::to_string(t),
                                  format_double(trace[t])});
    }

    write_text_file(out_dir / "comparison.json", result.dump(2) + "\n");
    return result;
}

} // namespace marketrl
