#include "marketrl/distributions.hpp"

#include <cmath>

#include "marketrl/errors.hpp"

namespace marketrl {

double logsumexp(const Eigen::VectorXd& v) {
    if (v.size() == 0) {
        throw ContractViolation("logsumexp: empty vector");
    }
    const double m = v.maxCoeff();
    return m + std::log((v.array() - m).exp().sum());
}

Eigen::VectorXd softmax(const Eigen::VectorXd& logits) {
    const double m = logits.maxCoeff();
    Eigen::VectorXd p = (logits.array() - m).exp();
    return p / p.sum();
}

int categorical_sample(const CategoricalDist& dist, Rng& rng) {
    const Eigen::VectorXd p = softmax(dist.logits);
    const double u = rng.uniform();
    double cumulative = 0.0;
    for (int k = 0; k < dist.size(); ++k) {
        cumulative += p[k];
        if (u < cumulative) {
            return k;
        }
    }
    return dist.size() - 1; // rounding leftover
}

double categorical_log_prob(const CategoricalDist& dist, int action) {
    if (action < 0 || action >= dist.size()) {
        throw ContractViolation("categorical_log_prob: action out of range");
    }
    return dist.logits[action] - logsumexp(dist.logits);
}

double categorical_entropy(const CategoricalDist& dist) {
    const double log_z = logsumexp(dist.logits);
    const Eigen::VectorXd p = softmax(dist.logits);
    return log_z - p.dot(dist.logits);
}

int categorical_argmax(const CategoricalDist& dist) {
    Eigen::Index best = 0;
    dist.logits.maxCoeff(&best);
    return static_cast<int>(best);
}

} // namespace marketrl
