#ifndef MARKETRL_NN_HPP
#define MARKETRL_NN_HPP

#include <Eigen/Dense>

#include <vector>

#include "marketrl/rng.hpp"

namespace marketrl {

/// Feed-forward network: affine + tanh per hidden layer, affine output.
/// weights[l] has shape (layer_sizes[l+1] x layer_sizes[l]).
struct Mlp {
    std::vector<int> layer_sizes;
    std::vector<Eigen::MatrixXd> weights;
    std::vector<Eigen::VectorXd> biases;

    int input_size() const { return layer_sizes.front(); }
    int output_size() const { return layer_sizes.back(); }
    std::size_t layer_count() const { return weights.size(); }
};

/// Gradients shaped like an Mlp's parameters.
struct MlpGrad {
    std::vector<Eigen::MatrixXd> weights;
    std::vector<Eigen::VectorXd> biases;

    void set_zero();
    double squared_norm() const;
};

/// Zero-initialized network with the given layer sizes (>= 2 entries).
Mlp make_mlp(const std::vector<int>& layer_sizes);

MlpGrad make_grad_like(const Mlp& net);

/// Orthogonal weights (hidden layers scaled by hidden_gain, output layer by
/// output_gain) and zero biases. Fill order is fixed so runs are replayable.
void orthogonal_init(Mlp& net, double hidden_gain, double output_gain, Rng& rng);

/// Intermediate activations from a batch forward pass; activations[0] is the
/// input batch, activations[l] the post-tanh output of hidden layer l.
struct ForwardCache {
    std::vector<Eigen::MatrixXd> activations;
};

/// Batch forward pass, samples in rows: (n x in) -> (n x out).
Eigen::MatrixXd forward_batch(const Mlp& net, const Eigen::MatrixXd& inputs,
                              ForwardCache* cache = nullptr);

/// Single-sample forward pass.
Eigen::VectorXd forward(const Mlp& net, const Eigen::VectorXd& input);

/// Exact reverse-mode gradients of sum_i dot(output_i, output_grad_i) with
/// respect to every parameter; optionally also with respect to the inputs.
/// `cache` must come from forward_batch on the same inputs and parameters.
MlpGrad backward_batch(const Mlp& net, const ForwardCache& cache,
                       const Eigen::MatrixXd& output_grad,
                       Eigen::MatrixXd* input_grad = nullptr);

/// Single-sample backward pass.
MlpGrad backward(const Mlp& net, const Eigen::VectorXd& input,
                 const Eigen::VectorXd& output_grad,
                 Eigen::VectorXd* input_grad = nullptr);

/// Scales gradients in place so their joint global L2 norm does not exceed
/// max_norm. Returns the pre-clip norm.
double clip_grad_norm(std::vector<MlpGrad*> grads, double max_norm);

/// Adam optimizer state for one network.
struct AdamState {
    std::vector<Eigen::MatrixXd> m_w, v_w;
    std::vector<Eigen::VectorXd> m_b, v_b;
    long step = 0;
    double learning_rate = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

AdamState make_adam(const Mlp& net, double learning_rate);

/// Standard bias-corrected Adam update, applied in place.
void adam_step(AdamState& state, Mlp& net, const MlpGrad& grad);

} // namespace marketrl

#endif
