#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "marketrl/checkpoint.hpp"
#include "marketrl/config.hpp"
#include "marketrl/errors.hpp"
#include "marketrl/eval.hpp"
#include "marketrl/harness.hpp"
#include "marketrl/io_util.hpp"
#include "marketrl/policy.hpp"
#include "marketrl/rng.hpp"
#include "marketrl/stats.hpp"

using namespace marketrl;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Fresh scratch directory per test case, removed on destruction.
struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag) {
        path = fs::temp_directory_path() /
               ("marketrl_test_" + tag + "_" + std::to_string(::getpid()));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

// Config small enough that a whole replicate finishes in seconds.
ExperimentConfig micro_config() {
    ExperimentConfig cfg = preset_config("desk");
    cfg.algo.ppo.rollout_length = 128;
    cfg.algo.ppo.minibatch_size = 32;
    cfg.algo.ppo.epochs = 2;
    cfg.algo.dqn.learning_starts = 64;
    cfg.algo.dqn.buffer_capacity = 512;
    cfg.train.total_steps = 256;
    cfg.train.n_envs = 2;
    cfg.train.checkpoint_interval = 0;
    cfg.train.ppo_seeds = {0};
    cfg.train.n_fixed = 3;
    cfg.train.n_random = 2;
    cfg.eval.horizon = 40;
    cfg.eval.episodes = 2;
    cfg.eval.seed = 5;
    return cfg;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Eigen::VectorXd vec3(double a, double b, double c) {
    Eigen::VectorXd v(3);
    v << a, b, c;
    return v;
}

} // namespace

TEST_CASE("config: presets differ only in scale") {
    const ExperimentConfig desk = preset_config("desk");
    const ExperimentConfig full = preset_config("full");
    CHECK(desk.train.total_steps == 200000);
    CHECK(full.train.total_steps == 1500000);
    CHECK(desk.env.params.base_demand == full.env.params.base_demand);
    CHECK(desk.eval.horizon == full.eval.horizon);
    CHECK_THROWS_AS(preset_config("galactic"), ConfigError);
}

TEST_CASE("config: json overrides apply and echo back") {
    ExperimentConfig cfg = preset_config("desk");
    const json j = json::parse(R"({
        "env": {"horizon": 500, "params": {"base_demand": 50.0, "cost_coefs": [1, 2, 3, 4]}},
        "algo": {"name": "ppo", "learning_rate": 0.0003, "anneal_lr": false},
        "train": {"total_steps": 4096, "n_envs": 2, "ppo_seeds": [3, 4]},
        "eval": {"horizon": 200, "episodes": 3}
    })");
    apply_config_json(cfg, j);
    CHECK(cfg.env.horizon == 500);
    CHECK(cfg.env.params.base_demand == 50.0);
    CHECK(cfg.env.params.cost_coefs[3] == 4.0);
    CHECK(cfg.algo.ppo.learning_rate == 0.0003);
    CHECK(cfg.algo.ppo.anneal_lr == false);
    CHECK(cfg.train.total_steps == 4096);
    CHECK(cfg.train.ppo_seeds == std::vector<std::uint64_t>{3, 4});
    CHECK(cfg.eval.episodes == 3);

    // Echo -> reparse -> identical echo.
    const json echo = config_to_json(cfg);
    ExperimentConfig cfg2 = preset_config("desk");
    apply_config_json(cfg2, echo);
    CHECK(config_to_json(cfg2) == echo);
}

TEST_CASE("config: unknown keys are rejected at every level") {
    const std::vector<std::string> bad = {
        R"({"enviroment": {}})",
        R"({"env": {"horizons": 5}})",
        R"({"env": {"params": {"base_demands": 1}}})",
        R"({"algo": {"name": "ppo", "clip": 0.2}})",
        R"({"train": {"steps": 10}})",
        R"({"eval": {"episode": 1}})",
        R"({"env": {"randomization": {"not_a_field": [0, 1]}}})",
    };
    for (const auto& text : bad) {
        ExperimentConfig cfg = preset_config("desk");
        CHECK_THROWS_AS(apply_config_json(cfg, json::parse(text)), ConfigError);
    }
}

TEST_CASE("config: malformed values are rejected") {
    ExperimentConfig cfg = preset_config("desk");
    CHECK_THROWS_AS(
        apply_config_json(cfg, json::parse(R"({"algo": {"name": "sarsa"}})")),
        ConfigError);
    CHECK_THROWS_AS(
        apply_config_json(cfg,
                          json::parse(R"({"env": {"params": {"cost_coefs": [1, 2]}}})")),
        ConfigError);
    cfg = preset_config("desk");
    apply_config_json(cfg, json::parse(R"({"train": {"total_steps": -5}})"));
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("config: randomization intervals parse into the spec") {
    ExperimentConfig cfg = preset_config("desk");
    apply_config_json(cfg, json::parse(R"({
        "env": {
            "randomization": {
                "base_demand": [35.0, 55.0],
                "cost_c1": [3.0, 5.0],
                "n_competitors": [2, 4]
            }
        }
    })"));
    CHECK(cfg.randomization.real_fields.at("base_demand").lo == 35.0);
    CHECK(cfg.randomization.real_fields.at("base_demand").hi == 55.0);
    CHECK(cfg.randomization.real_fields.at("cost_c1").hi == 5.0);
    CHECK(cfg.randomization.int_fields.at("n_competitors").lo == 2);
    // Echo keeps the intervals.
    const json echo = config_to_json(cfg);
    CHECK(echo["env"]["randomization"]["base_demand"][1] == 55.0);
}

TEST_CASE("checkpoint: mlp json round-trip is bit exact") {
    Rng rng(7);
    Mlp net = make_mlp({5, 13, 7, 3});
    orthogonal_init(net, std::sqrt(2.0), 0.01, rng);
    net.weights[1](2, 3) = 1.0 / 3.0; // awkward doubles on purpose
    net.biases[0][1] = -1e-17;
    const Mlp back = mlp_from_json(mlp_to_json(net));
    REQUIRE(back.layer_sizes == net.layer_sizes);
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
        CHECK(back.weights[l] == net.weights[l]);
        CHECK(back.biases[l] == net.biases[l]);
    }
    json j = mlp_to_json(net);
    j["layer_sizes"] = {5, 13, 7};
    CHECK_THROWS_AS(mlp_from_json(j), IoError);
}

TEST_CASE("checkpoint: adam state json round-trip") {
    Mlp net = make_mlp({3, 4, 2});
    AdamState opt = make_adam(net, 3e-4);
    opt.step = 1234;
    opt.m_w[0].setConstant(0.25);
    opt.v_b[1].setConstant(1e-9);
    const AdamState back = adam_from_json(adam_to_json(opt));
    CHECK(back.step == 1234);
    CHECK(back.learning_rate == 3e-4);
    CHECK(back.m_w[0] == opt.m_w[0]);
    CHECK(back.v_b[1] == opt.v_b[1]);
    CHECK(back.beta1 == opt.beta1);
    CHECK(back.beta2 == opt.beta2);
    CHECK(back.epsilon == opt.epsilon);
}

TEST_CASE("checkpoint: file round-trip preserves greedy behaviour exactly") {
    TempDir tmp("ckpt");
    Rng rng(8);
    Checkpoint ckpt;
    ckpt.algorithm = "ppo";
    ckpt.config = json{{"note", "round-trip"}};
    Mlp policy = make_mlp({8, 64, 64, 15});
    Mlp value = make_mlp({8, 64, 64, 1});
    orthogonal_init(policy, std::sqrt(2.0), 0.01, rng);
    orthogonal_init(value, std::sqrt(2.0), 1.0, rng);
    ckpt.nets["policy"] = policy;
    ckpt.nets["value"] = value;
    ckpt.optimizers["policy"] = make_adam(policy, 1e-4);

    const fs::path file = tmp.path / "snap.json";
    save_checkpoint(file, ckpt);
    const Checkpoint back = load_checkpoint(file);
    CHECK(back.algorithm == "ppo");
    CHECK(back.config == ckpt.config);
    REQUIRE(back.nets.count("policy") == 1);
    REQUIRE(back.optimizers.count("policy") == 1);

    const Policy original = policy_from_checkpoint(ckpt);
    const Policy restored = policy_from_checkpoint(back);
    Rng obs_rng(9);
    Rng scratch(1);
    for (int i = 0; i < 1000; ++i) {
        Eigen::VectorXd obs(8);
        for (int j2 = 0; j2 < 8; ++j2) obs[j2] = obs_rng.uniform();
        CHECK(act(original, obs, scratch, ActMode::kGreedy) ==
              act(restored, obs, scratch, ActMode::kGreedy));
    }

    // Saving the reloaded checkpoint reproduces the file byte for byte.
    const fs::path file2 = tmp.path / "snap2.json";
    save_checkpoint(file2, back);
    CHECK(slurp(file) == slurp(file2));
}

TEST_CASE("checkpoint: dqn checkpoints restore a q policy") {
    Rng rng(10);
    Checkpoint ckpt;
    ckpt.algorithm = "dqn";
    Mlp q = make_mlp({8, 32, 15});
    orthogonal_init(q, std::sqrt(2.0), 1.0, rng);
    ckpt.nets["q"] = q;
    const Policy p = policy_from_checkpoint(ckpt);
    CHECK(std::holds_alternative<QPolicy>(p));
    CHECK(policy_action_count(p) == 15);
    Checkpoint missing;
    missing.algorithm = "dqn";
    CHECK_THROWS_AS(policy_from_checkpoint(missing), IoError);
}

TEST_CASE("training runs write metrics and a loadable final checkpoint") {
    TempDir tmp("train");
    ExperimentConfig cfg = micro_config();
    const TrainArtifacts art = run_training(cfg, 0, tmp.path);
    CHECK(fs::exists(art.checkpoint_path));
    CHECK(fs::exists(art.metrics_path));
    const std::string metrics = slurp(art.metrics_path);
    CHECK(metrics.rfind("update_index,env_steps,mean_reward,value_loss,approx_kl,"
                        "explained_variance,entropy,clip_fraction",
                        0) == 0);
    // 256 steps / 128 rollout = exactly 2 update rows (plus the header).
    int lines = 0;
    for (char c : metrics)
        if (c == '\n') ++lines;
    CHECK(lines == 3);
    const Checkpoint ckpt = load_checkpoint(art.checkpoint_path);
    CHECK(ckpt.algorithm == "ppo");
    CHECK(ckpt.nets.count("policy") == 1);
    CHECK(ckpt.nets.count("value") == 1);
}

TEST_CASE("training is deterministic in config and seed") {
    TempDir tmp("det");
    const ExperimentConfig cfg = micro_config();
    const TrainArtifacts a = run_training(cfg, 3, tmp.path / "a");
    const TrainArtifacts b = run_training(cfg, 3, tmp.path / "b");
    CHECK(slurp(a.checkpoint_path) == slurp(b.checkpoint_path));
    CHECK(slurp(a.metrics_path) == slurp(b.metrics_path));
    const TrainArtifacts c = run_training(cfg, 4, tmp.path / "c");
    CHECK(slurp(a.checkpoint_path) != slurp(c.checkpoint_path));
}

TEST_CASE("evaluation: report and traces agree, seeds shared across agents") {
    TempDir tmp("eval");
    ExperimentConfig cfg = micro_config();
    const Policy fixed7 = make_baseline_policy("fixed:7", cfg.env.params);
    const EvalReport rep = evaluate_policy(cfg.env, cfg.randomization, fixed7, "fixed_7",
                                           "fixed", 0, cfg.eval, tmp.path, 99);
    CHECK(rep.label == "fixed_7");
    CHECK(rep.horizon == 40);
    REQUIRE(rep.episodes.size() == 2);
    CHECK(rep.summary.n == 2);

    for (const EvalEpisode& ep : rep.episodes) {
        const fs::path trace = tmp.path / ep.trace_path;
        REQUIRE(fs::exists(trace));
        std::ifstream in(trace);
        std::string header;
        std::getline(in, header);
        CHECK(header ==
              "t,action,supply,demand,price,reward,revenue,brand_bonus,subsidy,"
              "fixed_cost_paid,production_cost,storage_penalty");
        double total = 0.0;
        int rows = 0;
        std::string line;
        while (std::getline(in, line)) {
            std::stringstream ss(line);
            std::string cell;
            for (int col = 0; col <= 5; ++col) std::getline(ss, cell, ',');
            total += std::stod(cell); // reward column
            ++rows;
        }
        CHECK(rows == 40);
        CHECK(total == doctest::Approx(ep.cumulative_profit).epsilon(1e-6));
    }

    // A second agent sees the same episode seeds.
    const Policy fixed3 = make_baseline_policy("fixed:3", cfg.env.params);
    const EvalReport rep2 = evaluate_policy(cfg.env, cfg.randomization, fixed3, "fixed_3",
                                            "fixed", 0, cfg.eval, tmp.path, 99);
    REQUIRE(rep2.episodes.size() == rep.episodes.size());
    for (std::size_t i = 0; i < rep.episodes.size(); ++i)
        CHECK(rep.episodes[i].seed == rep2.episodes[i].seed);
}

TEST_CASE("evaluation: idle baseline with pinned costs loses exactly the fixed fee") {
    TempDir tmp("idle");
    ExperimentConfig cfg = micro_config();
    cfg.env.params.production_noise = 0.0;
    cfg.env.params.fixed_cost_min = 5.0;
    cfg.env.params.fixed_cost_max = 5.0;
    const Policy idle = make_baseline_policy("fixed:0", cfg.env.params);
    const EvalReport rep = evaluate_policy(cfg.env, cfg.randomization, idle, "fixed_0",
                                           "fixed", 0, cfg.eval, tmp.path, 1);
    for (const EvalEpisode& ep : rep.episodes)
        CHECK(ep.cumulative_profit == doctest::Approx(-5.0 * 40).epsilon(1e-9));
}

TEST_CASE("evaluation: zero horizon earns zero") {
    TempDir tmp("zeroh");
    ExperimentConfig cfg = micro_config();
    cfg.eval.horizon = 0;
    cfg.env.horizon = 0;
    const Policy idle = make_baseline_policy("fixed:0", cfg.env.params);
    const EvalReport rep = evaluate_policy(cfg.env, cfg.randomization, idle, "fixed_0",
                                           "fixed", 0, cfg.eval, tmp.path, 1);
    for (const EvalEpisode& ep : rep.episodes) CHECK(ep.cumulative_profit == 0.0);
}

TEST_CASE("evaluation: report json round-trips") {
    TempDir tmp("repjson");
    ExperimentConfig cfg = micro_config();
    const Policy p = make_baseline_policy("random", cfg.env.params);
    const EvalReport rep = evaluate_policy(cfg.env, cfg.randomization, p, "random_0",
                                           "random", 0, cfg.eval, tmp.path, 17);
    const fs::path file = tmp.path / "random_0.json";
    save_eval_report(file, rep);
    const EvalReport back = load_eval_report(file);
    CHECK(back.label == rep.label);
    CHECK(back.group == rep.group);
    CHECK(back.summary.mean == rep.summary.mean);
    CHECK(back.summary.variance == rep.summary.variance);
    REQUIRE(back.episodes.size() == rep.episodes.size());
    CHECK(back.episodes[1].cumulative_profit == rep.episodes[1].cumulative_profit);
    CHECK(back.episodes[1].trace_path == rep.episodes[1].trace_path);
}

TEST_CASE("baseline specs are validated") {
    const MarketParams params;
    CHECK(std::holds_alternative<FixedPolicy>(make_baseline_policy("fixed:14", params)));
    CHECK(std::holds_alternative<RandomPolicy>(make_baseline_policy("random", params)));
    CHECK_THROWS_AS(make_baseline_policy("fixed:15", params), ConfigError);
    CHECK_THROWS_AS(make_baseline_policy("fixed:-1", params), ConfigError);
    CHECK_THROWS_AS(make_baseline_policy("greedy", params), ConfigError);
    CHECK_THROWS_AS(make_baseline_policy("fixed:", params), ConfigError);
}

namespace {

// Writes a minimal but schema-complete report for compare tests.
void write_synthetic_report(const fs::path& dir, const std::string& label,
                            const std::string& group,
                            const std::vector<double>& episode_profits) {
    EvalReport rep;
    rep.label = label;
    rep.group = group;
    rep.horizon = 10;
    Eigen::VectorXd data(static_cast<Eigen::Index>(episode_profits.size()));
    for (std::size_t i = 0; i < episode_profits.size(); ++i) {
        EvalEpisode ep;
        ep.index = static_cast<int>(i);
        ep.seed = i;
        ep.cumulative_profit = episode_profits[i];
        // Trace with constant per-step reward so cumulative traces stay sane.
        const fs::path traces = dir / "traces";
        fs::create_directories(traces);
        const fs::path trace = traces / (label + "_ep" + std::to_string(i) + ".csv");
        std::ofstream out(trace);
        out << "t,action,supply,demand,price,reward,revenue,brand_bonus,subsidy,"
               "fixed_cost_paid,production_cost,storage_penalty\n";
        for (int t = 0; t < 10; ++t)
            out << t << ",0,0,0,0," << episode_profits[i] / 10.0 << ",0,0,0,0,0,0\n";
        ep.trace_path = (fs::path("traces") / trace.filename()).generic_string();
        rep.episodes.push_back(ep);
        data[static_cast<Eigen::Index>(i)] = episode_profits[i];
    }
    rep.summary = SampleSummary::from_data(data);
    save_eval_report(dir / (label + ".json"), rep);
}

} // namespace

TEST_CASE("compare: pairwise welch tests match the stats module") {
    TempDir tmp("cmp");
    const fs::path reports = tmp.path / "reports";
    fs::create_directories(reports);
    // Group "drl": agent means 1, 2, 3. Group "fixed": -1, -2, -3.
    std::vector<fs::path> paths;
    int idx = 0;
    for (double m : {1.0, 2.0, 3.0}) {
        const std::string label = "drl_agent" + std::to_string(idx++);
        write_synthetic_report(reports, label, "drl", {m - 0.5, m, m + 0.5});
        paths.push_back(reports / (label + ".json"));
    }
    for (double m : {-1.0, -2.0, -3.0}) {
        const std::string label = "fixed_agent" + std::to_string(idx++);
        write_synthetic_report(reports, label, "fixed", {m - 1.0, m, m + 1.0});
        paths.push_back(reports / (label + ".json"));
    }

    const fs::path out = tmp.path / "compare";
    const json cmp = run_compare(paths, out, 0.0);

    REQUIRE(cmp.contains("groups"));
    CHECK(cmp["groups"]["drl"]["n"] == 3);
    CHECK(cmp["groups"]["drl"]["mean"].get<double>() == doctest::Approx(2.0));
    CHECK(cmp["groups"]["fixed"]["mean"].get<double>() == doctest::Approx(-2.0));

    // Oracle: agent means are the sample points.
    const SampleSummary drl = SampleSummary::from_data(vec3(1.0, 2.0, 3.0));
    const SampleSummary fixed = SampleSummary::from_data(vec3(-1.0, -2.0, -3.0));
    const TestResult want = welch_t_test(drl, fixed);
    REQUIRE(cmp.contains("tests"));
    const auto find_test = [&](const std::string& name) -> json {
        for (const auto& t : cmp["tests"])
            if (t["name"] == name) return t;
        return json();
    };
    const json pair = find_test("drl_vs_fixed");
    REQUIRE(!pair.is_null());
    CHECK(pair["t_statistic"].get<double>() ==
          doctest::Approx(want.t_statistic).epsilon(1e-10));
    CHECK(pair["degrees_of_freedom"].get<double>() ==
          doctest::Approx(want.degrees_of_freedom).epsilon(1e-10));
    CHECK(pair["p_value"].get<double>() == doctest::Approx(want.p_value).epsilon(1e-10));
    CHECK(pair["alternative"] == "greater");

    const TestResult one = one_sample_t_test(drl, 0.0);
    const json vs_mu0 = find_test("drl_vs_mu0");
    REQUIRE(!vs_mu0.is_null());
    CHECK(vs_mu0["t_statistic"].get<double>() ==
          doctest::Approx(one.t_statistic).epsilon(1e-10));

    CHECK(fs::exists(out / "comparison.json"));
    CHECK(fs::exists(out / "cumulative_traces.csv"));

    // One row per group in the summary CSVs.
    const std::string means_csv = slurp(out / "group_means.csv");
    int lines = 0;
    for (char ch : means_csv)
        if (ch == '\n') ++lines;
    CHECK(lines == 3); // header + drl + fixed
    CHECK(means_csv.find("drl,3,2,1") != std::string::npos); // n=3, mean 2, sd 1

    // Quartiles of {1, 2, 3} under linear interpolation.
    const std::string quartiles = slurp(out / "group_quartiles.csv");
    CHECK(quartiles.find("drl,1,1.5,2,2.5,3") != std::string::npos);
    CHECK(quartiles.find("fixed,-3,-2.5,-2,-1.5,-1") != std::string::npos);
}

TEST_CASE("replicate: manifest is deterministic and catalogues every artifact") {
    TempDir tmp("rep");
    const ExperimentConfig cfg = micro_config();
    const fs::path m1 = run_replicate(cfg, tmp.path / "run1");
    const fs::path m2 = run_replicate(cfg, tmp.path / "run2");
    const json j1 = json::parse(slurp(m1));
    const json j2 = json::parse(slurp(m2));
    CHECK(j1 == j2); // identical configs and seeds -> identical hashes

    // Roster: 1 ppo seed + dqn + a2c + 3 fixed + 2 random.
    REQUIRE(j1.contains("roster"));
    CHECK(j1["roster"].size() == 8);
    CHECK(j1["dry_run"] == false);

    // Every listed artifact exists and hashes to its recorded digest.
    for (const auto& art : j1["artifacts"]) {
        const fs::path p = tmp.path / "run1" / art["path"].get<std::string>();
        REQUIRE(fs::exists(p));
        CHECK(sha256_hex_of_file(p) == art["sha256"].get<std::string>());
        CHECK(fs::file_size(p) == art["bytes"].get<std::uint64_t>());
    }
    // Reports for all roster entries.
    for (const auto& entry : j1["roster"]) {
        const std::string label = entry["label"].get<std::string>();
        CHECK(fs::exists(tmp.path / "run1" / "reports" / (label + ".json")));
    }
}

TEST_CASE("replicate: dry run emits only the manifest") {
    TempDir tmp("dry");
    const ExperimentConfig cfg = micro_config();
    const fs::path m = run_replicate(cfg, tmp.path, true);
    const json j = json::parse(slurp(m));
    CHECK(j["dry_run"] == true);
    CHECK(j["roster"].size() == 8);
    CHECK(j["artifacts"].empty());
    // Nothing but the manifest on disk.
    int files = 0;
    for (const auto& e : fs::recursive_directory_iterator(tmp.path))
        if (e.is_regular_file()) ++files;
    CHECK(files == 1);
}

TEST_CASE("io: csv writer enforces column counts; format_double round-trips") {
    TempDir tmp("io");
    const fs::path file = tmp.path / "t.csv";
    {
        CsvWriter csv(file, {"a", "b"});
        csv.write_row({"1", "2"});
        CHECK_THROWS_AS(csv.write_row({"only_one"}), ContractViolation);
    }
    CHECK(slurp(file) == "a,b\n1,2\n");
    CHECK(format_double(0.5) == "0.5");
    CHECK(format_double(1.0 / 3.0) == "0.3333333333333333");
    const double awkward = 0.1 + 0.2;
    CHECK(std::stod(format_double(awkward)) == awkward);
    CHECK(format_double(std::numeric_limits<double>::quiet_NaN()) == "nan");
}
