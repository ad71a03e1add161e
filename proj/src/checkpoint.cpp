#include "marketrl/checkpoint.hpp"

#include <fstream>

#include "marketrl/errors.hpp"

namespace marketrl {

namespace {

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
    auto rows = nlohmann::json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        auto row = nlohmann::json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& j) {
    if (!j.is_array() || j.empty()) throw IoError("checkpoint: weight matrix must be a non-empty array");
    const auto rows = static_cast<Eigen::Index>(j.size());
    const auto cols = static_cast<Eigen::Index>(j[0].size());
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        if (static_cast<Eigen::Index>(j[r].size()) != cols)
            throw IoError("checkpoint: ragged weight matrix");
        for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = j[r][c].get<double>();
    }
    return m;
}

nlohmann::json vector_to_json(const Eigen::VectorXd& v) {
    auto arr = nlohmann::json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
    return arr;
}

Eigen::VectorXd vector_from_json(const nlohmann::json& j) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = j[static_cast<std::size_t>(i)].get<double>();
    return v;
}

} // namespace

nlohmann::json mlp_to_json(const Mlp& net) {
    nlohmann::json j;
    j["format_version"] = kCheckpointFormatVersion;
    j["layer_sizes"] = net.layer_sizes;
    auto weights = nlohmann::json::array();
    auto biases = nlohmann::json::array();
    for (std::size_t l = 0; l < net.weights.size(); ++l) {
        weights.push_back(matrix_to_json(net.weights[l]));
        biases.push_back(vector_to_json(net.biases[l]));
    }
    j["weights"] = std::move(weights);
    j["biases"] = std::move(biases);
    return j;
}

Mlp mlp_from_json(const nlohmann::json& j) {
    if (j.at("format_version").get<int>() != kCheckpointFormatVersion)
        throw IoError("checkpoint: unsupported format_version");
    Mlp net;
    net.layer_sizes = j.at("layer_sizes").get<std::vector<int>>();
    const auto& weights = j.at("weights");
    const auto& biases = j.at("biases");
    if (weights.size() + 1 != net.layer_sizes.size() || biases.size() != weights.size())
        throw IoError("checkpoint: layer count mismatch");
    for (std::size_t l = 0; l < weights.size(); ++l) {
        Eigen::MatrixXd w = matrix_from_json(weights[l]);
        Eigen::VectorXd b = vector_from_json(biases[l]);
        if (w.rows() != net.layer_sizes[l + 1] || w.cols() != net.layer_sizes[l] ||
            b.size() != w.rows())
            throw IoError("checkpoint: weight shape disagrees with layer_sizes");
        net.weights.push_back(std::move(w));
        net.biases.push_back(std::move(b));
    }
    return net;
}

nlohmann::json adam_to_json(const AdamState& state) {
    nlohmann::json j;
    j["step"] = state.step;
    j["learning_rate"] = state.learning_rate;
    j["beta1"] = state.beta1;
    j["beta2"] = state.beta2;
    j["epsilon"] = state.epsilon;
    auto m_w = nlohmann::json::array(), v_w = nlohmann::json::array();
    auto m_b = nlohmann::json::array(), v_b = nlohmann::json::array();
    for (std::size_t l = 0; l < state.m_w.size(); ++l) {
        m_w.push_back(matrix_to_json(state.m_w[l]));
        v_w.push_back(matrix_to_json(state.v_w[l]));
        m_b.push_back(vector_to_json(state.m_b[l]));
        v_b.push_back(vector_to_json(state.v_b[l]));
    }
    j["m_w"] = std::move(m_w);
    j["v_w"] = std::move(v_w);
    j["m_b"] = std::move(m_b);
    j["v_b"] = std::move(v_b);
    return j;
}

AdamState adam_from_json(const nlohmann::json& j) {
    AdamState state;
    state.step = j.at("step").get<std::int64_t>();
    state.learning_rate = j.at("learning_rate").get<double>();
    state.beta1 = j.at("beta1").get<double>();
    state.beta2 = j.at("beta2").get<double>();
    state.epsilon = j.at("epsilon").get<double>();
    for (const auto& m : j.at("m_w")) state.m_w.push_back(matrix_from_json(m));
    for (const auto& v : j.at("v_w")) state.v_w.push_back(matrix_from_json(v));
    for (const auto& m : j.at("m_b")) state.m_b.push_back(vector_from_json(m));
    for (const auto& v : j.at("v_b")) state.v_b.push_back(vector_from_json(v));
    return state;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
    nlohmann::json j;
    j["format_version"] = kCheckpointFormatVersion;
    j["algorithm"] = ckpt.algorithm;
    j["config"] = ckpt.config;
    auto nets = nlohmann::json::object();
    for (const auto& [name, net] : ckpt.nets) nets[name] = mlp_to_json(net);
    j["nets"] = std::move(nets);
    if (!ckpt.optimizers.empty()) {
        auto opts = nlohmann::json::object();
        for (const auto& [name, opt] : ckpt.optimizers) opts[name] = adam_to_json(opt);
        j["optimizers"] = std::move(opts);
    }
    std::ofstream out(path);
    if (!out) throw IoError("checkpoint: cannot open " + path.string() + " for writing");
    out << j.dump(2) << '\n';
    if (!out) throw IoError("checkpoint: write failed for " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("checkpoint: cannot open " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw IoError("checkpoint: parse error in " + path.string() + ": " + e.what());
    }
    if (j.at("format_version").get<int>() != kCheckpointFormatVersion)
        throw IoError("checkpoint: unsupported format_version");
    Checkpoint ckpt;
    ckpt.algorithm = j.at("algorithm").get<std::string>();
    ckpt.config = j.value("config", nlohmann::json::object());
    for (const auto& [name, net] : j.at("nets").items())
        ckpt.nets.emplace(name, mlp_from_json(net));
    if (j.contains("optimizers"))
        for (const auto& [name, opt] : j["optimizers"].items())
            ckpt.optimizers.emplace(name, adam_from_json(opt));
    return ckpt;
}

namespace {

const Mlp& require_net(const Checkpoint& ckpt, const std::string& name) {
    auto it = ckpt.nets.find(name);
    if (it == ckpt.nets.end())
        throw IoError("checkpoint: missing net '" + name + "' for algorithm '" +
                      ckpt.algorithm + "'");
    return it->second;
}

} // namespace

Policy policy_from_checkpoint(const Checkpoint& ckpt) {
    if (ckpt.algorithm == "ppo" || ckpt.algorithm == "a2c") {
        ActorCriticPolicy p;
        p.policy = require_net(ckpt, "policy");
        p.value = require_net(ckpt, "value");
        return p;
    }
    if (ckpt.algorithm == "dqn") return QPolicy{require_net(ckpt, "q")};
    throw IoError("checkpoint: unknown algorithm tag '" + ckpt.algorithm + "'");
}

} // namespace marketrl
