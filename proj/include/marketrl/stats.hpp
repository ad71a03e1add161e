#ifndef MARKETRL_STATS_HPP
#define MARKETRL_STATS_HPP

#include <Eigen/Dense>
#include <optional>

namespace marketrl {

struct SampleSummary {
    long n = 0;
    double mean = 0.0;
    double variance = 0.0; // unbiased

    static SampleSummary from_data(const Eigen::VectorXd& data);
};

/// One-sided test with alternative "greater":
/// p_value = P(T > t_statistic) under the null.
struct TestResult {
    double t_statistic = 0.0;
    double degrees_of_freedom = 0.0;
    double p_value = 0.0;
};

/// 1 - Var(returns - values)/Var(returns), unbiased variances. Empty when the
/// return variance vanishes (metric undefined); never NaN.
std::optional<double> explained_variance(const Eigen::VectorXd& returns,
                                         const Eigen::VectorXd& values);

/// Unequal-variance two-sample comparison (Welch-Satterthwaite dof).
TestResult welch_t_test(const SampleSummary& a, const SampleSummary& b);

TestResult one_sample_t_test(const SampleSummary& a, double mu0);

/// Student-t distribution function via the regularized incomplete beta
/// function; absolute error below 1e-10.
double student_t_cdf(double x, double dof);

/// I_x(a, b), evaluated with a Lentz-style continued fraction.
double regularized_incomplete_beta(double a, double b, double x);

} // namespace marketrl

#endif
