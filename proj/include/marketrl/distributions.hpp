#ifndef MARKETRL_DISTRIBUTIONS_HPP
#define MARKETRL_DISTRIBUTIONS_HPP

#include <Eigen/Dense>

#include "marketrl/rng.hpp"

namespace marketrl {

/// log(sum_i exp(v_i)), shifted by the max so logits up to +-1e4 stay finite.
double logsumexp(const Eigen::VectorXd& v);

Eigen::VectorXd softmax(const Eigen::VectorXd& logits);

/// Discrete distribution over K actions parameterized by unnormalized logits.
struct CategoricalDist {
    Eigen::VectorXd logits;

    int size() const { return static_cast<int>(logits.size()); }
};

/// Inverse-CDF sample over softmax(logits); consumes one uniform draw.
int categorical_sample(const CategoricalDist& dist, Rng& rng);

double categorical_log_prob(const CategoricalDist& dist, int action);

double categorical_entropy(const CategoricalDist& dist);

/// Index of the most probable action (ties resolve to the lowest index).
int categorical_argmax(const CategoricalDist& dist);

} // namespace marketrl

#endif
