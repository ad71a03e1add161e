#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <vector>

#include "marketrl/distributions.hpp"
#include "marketrl/errors.hpp"
#include "marketrl/nn.hpp"
#include "marketrl/rng.hpp"

using namespace marketrl;

namespace {

Mlp random_net(const std::vector<int>& sizes, Rng& rng) {
    Mlp net = make_mlp(sizes);
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
        for (Eigen::Index i = 0; i < net.weights[l].size(); ++i)
            net.weights[l].data()[i] = rng.normal() * 0.7;
        for (Eigen::Index i = 0; i < net.biases[l].size(); ++i)
            net.biases[l].data()[i] = rng.normal() * 0.1;
    }
    return net;
}

// Hand-rolled forward pass used as the oracle for forward_batch.
Eigen::VectorXd naive_forward(const Mlp& net, Eigen::VectorXd x) {
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
        Eigen::VectorXd z = net.weights[l] * x + net.biases[l];
        x = (l + 1 == net.layer_count()) ? z : z.array().tanh().matrix();
    }
    return x;
}

// Scalar objective used by the finite-difference check.
double objective(const Mlp& net, const Eigen::MatrixXd& inputs,
                 const Eigen::MatrixXd& coeffs) {
    return (forward_batch(net, inputs).array() * coeffs.array()).sum();
}

} // namespace

TEST_CASE("forward matches a naive per-sample evaluation") {
    Rng rng(101);
    for (int trial = 0; trial < 20; ++trial) {
        const int in = rng.uniform_int(1, 6);
        const int hidden = rng.uniform_int(1, 8);
        const int out = rng.uniform_int(1, 5);
        const Mlp net = random_net({in, hidden, out}, rng);
        const int n = rng.uniform_int(1, 7);
        Eigen::MatrixXd batch(n, in);
        for (Eigen::Index i = 0; i < batch.size(); ++i) batch.data()[i] = rng.normal();
        const Eigen::MatrixXd got = forward_batch(net, batch);
        REQUIRE(got.rows() == n);
        REQUIRE(got.cols() == out);
        for (int i = 0; i < n; ++i) {
            const Eigen::VectorXd want = naive_forward(net, batch.row(i).transpose());
            for (int j = 0; j < out; ++j)
                CHECK(got(i, j) == doctest::Approx(want[j]).epsilon(1e-12));
        }
        const Eigen::VectorXd single = forward(net, batch.row(0).transpose());
        CHECK(single == got.row(0).transpose());
    }
}

TEST_CASE("analytic gradients match central finite differences on 60 configs") {
    const auto t0 = std::chrono::steady_clock::now();
    Rng rng(2024);
    const double h = 1e-5;
    for (int trial = 0; trial < 60; ++trial) {
        std::vector<int> sizes{rng.uniform_int(1, 5)};
        const int depth = rng.uniform_int(1, 3);
        for (int l = 0; l < depth; ++l) sizes.push_back(rng.uniform_int(2, 6));
        sizes.push_back(rng.uniform_int(1, 4));

        Mlp net = random_net(sizes, rng);
        const int n = rng.uniform_int(1, 5);
        Eigen::MatrixXd inputs(n, sizes.front());
        for (Eigen::Index i = 0; i < inputs.size(); ++i) inputs.data()[i] = rng.normal();
        Eigen::MatrixXd coeffs(n, sizes.back());
        for (Eigen::Index i = 0; i < coeffs.size(); ++i) coeffs.data()[i] = rng.normal();

        ForwardCache cache;
        forward_batch(net, inputs, &cache);
        Eigen::MatrixXd input_grad;
        const MlpGrad grad = backward_batch(net, cache, coeffs, &input_grad);

        const auto check = [&](double got, double* param) {
            const double saved = *param;
            *param = saved + h;
            const double up = objective(net, inputs, coeffs);
            *param = saved - h;
            const double down = objective(net, inputs, coeffs);
            *param = saved;
            const double fd = (up - down) / (2.0 * h);
            const double scale = std::max({std::abs(fd), std::abs(got), 1e-4});
            CHECK(std::abs(got - fd) / scale < 1e-4);
        };

        for (std::size_t l = 0; l < net.layer_count(); ++l) {
            for (Eigen::Index i = 0; i < net.weights[l].size(); ++i)
                check(grad.weights[l].data()[i], net.weights[l].data() + i);
            for (Eigen::Index i = 0; i < net.biases[l].size(); ++i)
                check(grad.biases[l].data()[i], net.biases[l].data() + i);
        }
        // Also differentiate with respect to the inputs.
        for (Eigen::Index i = 0; i < inputs.size(); ++i)
            check(input_grad.data()[i], inputs.data() + i);
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    CHECK(secs < 10.0);
}

TEST_CASE("orthogonal init produces orthogonal rows with the requested gain") {
    Rng rng(5);
    Mlp net = make_mlp({8, 16, 16, 4});
    orthogonal_init(net, std::sqrt(2.0), 0.01, rng);
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
        const double gain = (l + 1 == net.layer_count()) ? 0.01 : std::sqrt(2.0);
        const Eigen::MatrixXd& w = net.weights[l];
        // Rows (or columns, whichever is the short side) must be mutually
        // orthogonal with squared norm gain^2.
        const Eigen::MatrixXd gram =
            w.rows() <= w.cols() ? Eigen::MatrixXd(w * w.transpose())
                                 : Eigen::MatrixXd(w.transpose() * w);
        const Eigen::MatrixXd want =
            gain * gain * Eigen::MatrixXd::Identity(gram.rows(), gram.cols());
        CHECK((gram - want).cwiseAbs().maxCoeff() < 1e-9);
        CHECK(net.biases[l].isZero());
    }
}

TEST_CASE("init is deterministic in the rng and differs across streams") {
    Rng a(9), b(9), c(10);
    Mlp n1 = make_mlp({4, 8, 3}), n2 = make_mlp({4, 8, 3}), n3 = make_mlp({4, 8, 3});
    orthogonal_init(n1, 1.0, 1.0, a);
    orthogonal_init(n2, 1.0, 1.0, b);
    orthogonal_init(n3, 1.0, 1.0, c);
    CHECK(n1.weights[0] == n2.weights[0]);
    CHECK(n1.weights[1] == n2.weights[1]);
    CHECK(n1.weights[0] != n3.weights[0]);
}

TEST_CASE("clip_grad_norm: joint norm, in-place scaling, pre-clip return") {
    Mlp net = make_mlp({2, 3, 1});
    MlpGrad g1 = make_grad_like(net), g2 = make_grad_like(net);
    g1.weights[0].setConstant(3.0);
    g2.weights[1].setConstant(4.0);
    const double n1 = std::sqrt(g1.squared_norm() + g2.squared_norm());
    const double pre = clip_grad_norm({&g1, &g2}, 1.0);
    CHECK(pre == doctest::Approx(n1).epsilon(1e-12));
    CHECK(std::sqrt(g1.squared_norm() + g2.squared_norm()) ==
          doctest::Approx(1.0).epsilon(1e-9));
    // Already-small gradients are untouched.
    MlpGrad g3 = make_grad_like(net);
    g3.weights[0].setConstant(0.01);
    const Eigen::MatrixXd before = g3.weights[0];
    clip_grad_norm({&g3}, 10.0);
    CHECK(g3.weights[0] == before);
}

TEST_CASE("adam: zero gradient leaves parameters unchanged") {
    Rng rng(3);
    Mlp net = random_net({3, 4, 2}, rng);
    const Mlp before = net;
    AdamState opt = make_adam(net, 1e-3);
    adam_step(opt, net, make_grad_like(net));
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
        CHECK(net.weights[l] == before.weights[l]);
        CHECK(net.biases[l] == before.biases[l]);
    }
    CHECK(opt.step == 1);
}

TEST_CASE("adam: first step moves each parameter by about -lr*sign(grad)") {
    Rng rng(4);
    Mlp net = random_net({2, 3, 2}, rng);
    const Mlp before = net;
    AdamState opt = make_adam(net, 1e-3);
    MlpGrad grad = make_grad_like(net);
    for (std::size_t l = 0; l < grad.weights.size(); ++l) {
        for (Eigen::Index i = 0; i < grad.weights[l].size(); ++i)
            grad.weights[l].data()[i] = rng.normal();
    }
    adam_step(opt, net, grad);
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
        for (Eigen::Index i = 0; i < net.weights[l].size(); ++i) {
            const double g = grad.weights[l].data()[i];
            if (std::abs(g) < 1e-3) continue; // epsilon-dominated region
            const double delta = net.weights[l].data()[i] - before.weights[l].data()[i];
            CHECK(delta == doctest::Approx(-1e-3 * (g > 0 ? 1.0 : -1.0)).epsilon(1e-4));
        }
    }
}

TEST_CASE("adam: learning rate zero freezes the network") {
    Rng rng(6);
    Mlp net = random_net({3, 5, 2}, rng);
    const Mlp before = net;
    AdamState opt = make_adam(net, 0.0);
    MlpGrad grad = make_grad_like(net);
    grad.weights[0].setConstant(1.0);
    adam_step(opt, net, grad);
    CHECK(net.weights[0] == before.weights[0]);
}

TEST_CASE("adam drives a quadratic to its minimum") {
    // Minimize ||W||^2 over a 1-layer net; gradient is 2W.
    Mlp net = make_mlp({2, 2});
    net.weights[0] << 1.0, -2.0, 0.5, 3.0;
    AdamState opt = make_adam(net, 0.05);
    for (int i = 0; i < 2000; ++i) {
        MlpGrad grad = make_grad_like(net);
        grad.weights[0] = 2.0 * net.weights[0];
        adam_step(opt, net, grad);
    }
    CHECK(net.weights[0].cwiseAbs().maxCoeff() < 1e-4);
}

TEST_CASE("make_mlp validates shapes") {
    CHECK_THROWS_AS(make_mlp({4}), ConfigError);
    CHECK_THROWS_AS(make_mlp({4, 0, 2}), ConfigError);
    const Mlp net = make_mlp({4, 7, 2});
    CHECK(net.input_size() == 4);
    CHECK(net.output_size() == 2);
    CHECK(net.weights[0].rows() == 7);
    CHECK(net.weights[0].cols() == 4);
}

TEST_CASE("logsumexp is shift-stable at extreme logits") {
    Eigen::VectorXd v(3);
    v << 1e4, 1e4, 1e4;
    CHECK(logsumexp(v) == doctest::Approx(1e4 + std::log(3.0)).epsilon(1e-12));
    v << -1e4, -1e4 - 1.0, -1e4 - 2.0;
    CHECK(std::isfinite(logsumexp(v)));
    v << 0.0, 1.0, 2.0;
    const double base = logsumexp(v);
    CHECK(logsumexp((v.array() + 123.0).matrix()) ==
          doctest::Approx(base + 123.0).epsilon(1e-12));
}

TEST_CASE("categorical log_prob and entropy of a uniform distribution") {
    const int k = 15;
    CategoricalDist dist{Eigen::VectorXd::Zero(k)};
    for (int a = 0; a < k; ++a)
        CHECK(categorical_log_prob(dist, a) ==
              doctest::Approx(-std::log(static_cast<double>(k))).epsilon(1e-12));
    CHECK(categorical_entropy(dist) ==
          doctest::Approx(std::log(static_cast<double>(k))).epsilon(1e-12));
    // Entropy is maximal at uniform: any perturbation lowers it.
    Eigen::VectorXd bent = Eigen::VectorXd::Zero(k);
    bent[3] = 0.7;
    CHECK(categorical_entropy(CategoricalDist{bent}) < std::log(static_cast<double>(k)));
}

TEST_CASE("categorical probabilities are shift invariant") {
    Rng rng(12);
    for (int trial = 0; trial < 50; ++trial) {
        Eigen::VectorXd logits(6);
        for (int i = 0; i < 6; ++i) logits[i] = rng.normal() * 3.0;
        const CategoricalDist d1{logits};
        const CategoricalDist d2{(logits.array() + 57.5).matrix()};
        for (int a = 0; a < 6; ++a)
            CHECK(categorical_log_prob(d1, a) ==
                  doctest::Approx(categorical_log_prob(d2, a)).epsilon(1e-10));
        CHECK(categorical_argmax(d1) == categorical_argmax(d2));
        CHECK(categorical_entropy(d1) ==
              doctest::Approx(categorical_entropy(d2)).epsilon(1e-10));
    }
}

TEST_CASE("log probs normalize and match softmax") {
    Rng rng(13);
    Eigen::VectorXd logits(9);
    for (int i = 0; i < 9; ++i) logits[i] = rng.normal() * 2.0;
    const CategoricalDist dist{logits};
    const Eigen::VectorXd p = softmax(logits);
    CHECK(p.sum() == doctest::Approx(1.0).epsilon(1e-12));
    double total = 0.0;
    for (int a = 0; a < 9; ++a) {
        CHECK(std::exp(categorical_log_prob(dist, a)) ==
              doctest::Approx(p[a]).epsilon(1e-12));
        total += std::exp(categorical_log_prob(dist, a));
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("sampling is deterministic and follows the distribution") {
    Eigen::VectorXd logits(4);
    logits << std::log(0.1), std::log(0.2), std::log(0.3), std::log(0.4);
    const CategoricalDist dist{logits};

    Rng a(111), b(111);
    for (int i = 0; i < 100; ++i) CHECK(categorical_sample(dist, a) == categorical_sample(dist, b));

    Rng rng(2222);
    Eigen::Vector4d counts = Eigen::Vector4d::Zero();
    const int n = 200000;
    for (int i = 0; i < n; ++i) counts[categorical_sample(dist, rng)] += 1.0;
    counts /= n;
    for (int i = 0; i < 4; ++i)
        CHECK(counts[i] == doctest::Approx(std::exp(logits[i])).epsilon(0.03));
}

TEST_CASE("argmax picks the largest logit, lowest index on ties") {
    Eigen::VectorXd logits(5);
    logits << 1.0, 3.0, 3.0, -2.0, 0.0;
    CHECK(categorical_argmax(CategoricalDist{logits}) == 1);
    logits << -5.0, -5.0, -5.0, -5.0, -5.0;
    CHECK(categorical_argmax(CategoricalDist{logits}) == 0);
}
