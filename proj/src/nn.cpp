#include "marketrl/nn.hpp"

#include <cmath>
#include <string>

#include "marketrl/errors.hpp"

namespace marketrl {

namespace {

void require_shapes(const Mlp& net, Eigen::Index input_cols, const char* op) {
    if (net.layer_sizes.size() < 2) {
        throw ContractViolation(std::string(op) + ": network has no layers");
    }
    if (input_cols != net.input_size()) {
        throw ContractViolation(std::string(op) + ": input width " +
                                std::to_string(input_cols) + " != " +
                                std::to_string(net.input_size()));
    }
}

// Orthogonal matrix with the requested shape: QR of a square normal draw,
// columns sign-corrected by the diagonal of R.
Eigen::MatrixXd orthogonal_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
    const Eigen::Index n = std::max(rows, cols);
    Eigen::MatrixXd a(n, n);
    for (Eigen::Index r = 0; r < n; ++r) {
        for (Eigen::Index c = 0; c < n; ++c) {
            a(r, c) = rng.normal();
        }
    }
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
    Eigen::MatrixXd q = qr.householderQ();
    const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (Eigen::Index c = 0; c < n; ++c) {
        if (r(c, c) < 0) {
            q.col(c) = -q.col(c);
        }
    }
    return q.topLeftCorner(rows, cols);
}

} // namespace

void MlpGrad::set_zero() {
    for (auto& w : weights) w.setZero();
    for (auto& b : biases) b.setZero();
}

double MlpGrad::squared_norm() const {
    double total = 0.0;
    for (const auto& w : weights) total += w.squaredNorm();
    for (const auto& b : biases) total += b.squaredNorm();
    return total;
}

Mlp make_mlp(const std::vector<int>& layer_sizes) {
    if (layer_sizes.size() < 2) {
        throw ConfigError("make_mlp: need at least input and output sizes");
    }
    for (int s : layer_sizes) {
        if (s < 1) throw ConfigError("make_mlp: layer sizes must be positive");
    }
    Mlp net;
    net.layer_sizes = layer_sizes;
    for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
        net.weights.emplace_back(Eigen::MatrixXd::Zero(layer_sizes[l + 1], layer_sizes[l]));
        net.biases.emplace_back(Eigen::VectorXd::Zero(layer_sizes[l + 1]));
    }
    return net;
}

MlpGrad make_grad_like(const Mlp& net) {
    MlpGrad g;
    for (const auto& w : net.weights) g.weights.emplace_back(Eigen::MatrixXd::Zero(w.rows(), w.cols()));
    for (const auto& b : net.biases) g.biases.emplace_back(Eigen::VectorXd::Zero(b.size()));
    return g;
}

void orthogonal_init(Mlp& net, double hidden_gain, double output_gain, Rng& rng) {
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
        const double gain = (l + 1 == net.layer_count()) ? output_gain : hidden_gain;
        net.weights[l] = gain * orthogonal_matrix(net.weights[l].rows(), net.weights[l].cols(), rng);
        net.biases[l].setZero();
    }
}

Eigen::MatrixXd forward_batch(const Mlp& net, const Eigen::MatrixXd& inputs, ForwardCache* cache) {
    require_shapes(net, inputs.cols(), "forward");
    if (cache) {
        cache->activations.clear();
        cache->activations.push_back(inputs);
    }
    Eigen::MatrixXd a = inputs;
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
        Eigen::MatrixXd z = (a * net.weights[l].transpose()).rowwise() + net.biases[l].transpose();
        if (l + 1 < net.layer_count()) {
            a = z.array().tanh();
            if (cache) cache->activations.push_back(a);
        } else {
            a = std::move(z);
        }
    }
    return a;
}

Eigen::VectorXd forward(const Mlp& net, const Eigen::VectorXd& input) {
    return forward_batch(net, input.transpose()).row(0);
}

MlpGrad backward_batch(const Mlp& net, const ForwardCache& cache,
                       const Eigen::MatrixXd& output_grad, Eigen::MatrixXd* input_grad) {
    const std::size_t layers = net.layer_count();
    if (cache.activations.size() != layers) {
        throw ContractViolation("backward: cache does not match network depth");
    }
    if (output_grad.cols() != net.output_size() ||
        output_grad.rows() != cache.activations[0].rows()) {
        throw ContractViolation("backward: output_grad shape mismatch");
    }
    MlpGrad grad = make_grad_like(net);
    Eigen::MatrixXd delta = output_grad;
    for (std::size_t l = layers; l-- > 0;) {
        grad.weights[l] = delta.transpose() * cache.activations[l];
        grad.biases[l] = delta.colwise().sum();
        if (l > 0) {
            // Propagate through the preceding tanh: a' = 1 - a^2.
            delta = (delta * net.weights[l]).cwiseProduct(
                (1.0 - cache.activations[l].array().square()).matrix());
        } else if (input_grad) {
            *input_grad = delta * net.weights[0];
        }
    }
    return grad;
}

MlpGrad backward(const Mlp& net, const Eigen::VectorXd& input,
                 const Eigen::VectorXd& output_grad, Eigen::VectorXd* input_grad) {
    ForwardCache cache;
    forward_batch(net, input.transpose(), &cache);
    Eigen::MatrixXd ig;
    MlpGrad grad = backward_batch(net, cache, output_grad.transpose(), input_grad ? &ig : nullptr);
    if (input_grad) {
        *input_grad = ig.row(0);
    }
    return grad;
}

double clip_grad_norm(std::vector<MlpGrad*> grads, double max_norm) {
    double sq = 0.0;
    for (const MlpGrad* g : grads) sq += g->squared_norm();
    const double norm = std::sqrt(sq);
    if (norm > max_norm && norm > 0.0) {
        const double scale = max_norm / norm;
        for (MlpGrad* g : grads) {
            for (auto& w : g->weights) w *= scale;
            for (auto& b : g->biases) b *= scale;
        }
    }
    return norm;
}

AdamState make_adam(const Mlp& net, double learning_rate) {
    AdamState s;
    s.learning_rate = learning_rate;
    for (const auto& w : net.weights) {
        s.m_w.emplace_back(Eigen::MatrixXd::Zero(w.rows(), w.cols()));
        s.v_w.emplace_back(Eigen::MatrixXd::Zero(w.rows(), w.cols()));
    }
    for (const auto& b : net.biases) {
        s.m_b.emplace_back(Eigen::VectorXd::Zero(b.size()));
        s.v_b.emplace_back(Eigen::VectorXd::Zero(b.size()));
    }
    return s;
}

void adam_step(AdamState& state, Mlp& net, const MlpGrad& grad) {
    if (state.m_w.size() != net.weights.size() || grad.weights.size() != net.weights.size()) {
        throw ContractViolation("adam_step: shape mismatch");
    }
    state.step += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    const double lr = state.learning_rate * std::sqrt(bc2) / bc1;
    for (std::size_t l = 0; l < net.weights.size(); ++l) {
        state.m_w[l] = state.beta1 * state.m_w[l] + (1.0 - state.beta1) * grad.weights[l];
        state.v_w[l] = state.beta2 * state.v_w[l] +
                       (1.0 - state.beta2) * grad.weights[l].array().square().matrix();
        net.weights[l].array() -=
            lr * state.m_w[l].array() / (state.v_w[l].array().sqrt() + state.epsilon);

        state.m_b[l] = state.beta1 * state.m_b[l] + (1.0 - state.beta1) * grad.biases[l];
        state.v_b[l] = state.beta2 * state.v_b[l] +
                       (1.0 - state.beta2) * grad.biases[l].array().square().matrix();
        net.biases[l].array() -=
            lr * state.m_b[l].array() / (state.v_b[l].array().sqrt() + state.epsilon);
    }
}

} // namespace marketrl
