#include "marketrl/stats.hpp"

#include <cmath>

#include "marketrl/errors.hpp"

namespace marketrl {

SampleSummary SampleSummary::from_data(const Eigen::VectorXd& data) {
    if (data.size() < 1) throw ContractViolation("SampleSummary: empty sample");
    SampleSummary s;
    s.n = static_cast<long>(data.size());
    s.mean = data.mean();
    if (s.n > 1)
        s.variance = (data.array() - s.mean).square().sum() / static_cast<double>(s.n - 1);
    return s;
}

std::optional<double> explained_variance(const Eigen::VectorXd& returns,
                                         const Eigen::VectorXd& values) {
    if (returns.size() != values.size())
        throw ContractViolation("explained_variance: length mismatch");
    if (returns.size() < 2) throw ContractViolation("explained_variance: need length >= 2");
    const double n1 = static_cast<double>(returns.size() - 1);
    const double ret_mean = returns.mean();
    const double var_ret = (returns.array() - ret_mean).square().sum() / n1;
    if (!(var_ret > 0.0)) return std::nullopt;
    const Eigen::VectorXd resid = returns - values;
    const double resid_mean = resid.mean();
    const double var_resid = (resid.array() - resid_mean).square().sum() / n1;
    return 1.0 - var_resid / var_ret;
}

namespace {

// Continued-fraction kernel for the incomplete beta function
// (modified Lentz iteration, even/odd term pairs).
double beta_cont_frac(double a, double b, double x) {
    constexpr double kTiny = 1e-300;
    constexpr double kEps = 3e-16;
    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= 500; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < kEps) break;
    }
    return h;
}

} // namespace

double regularized_incomplete_beta(double a, double b, double x) {
    if (!(a > 0.0) || !(b > 0.0))
        throw ContractViolation("regularized_incomplete_beta: a, b must be positive");
    if (x < 0.0 || x > 1.0)
        throw ContractViolation("regularized_incomplete_beta: x must be in [0, 1]");
    if (x == 0.0) return 0.0;
    if (x == 1.0) return 1.0;
    const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                             a * std::log(x) + b * std::log1p(-x);
    const double front = std::exp(log_front);
    // The continued fraction converges fast only for x below the mean a/(a+b);
    // above it, evaluate the mirrored tail.
    if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_cont_frac(a, b, x) / a;
    return 1.0 - front * beta_cont_frac(b, a, 1.0 - x) / b;
}

double student_t_cdf(double x, double dof) {
    if (!(dof > 0.0)) throw ContractViolation("student_t_cdf: dof must be positive");
    if (x == 0.0) return 0.5;
    const double tail =
        0.5 * regularized_incomplete_beta(0.5 * dof, 0.5, dof / (dof + x * x));
    return x > 0.0 ? 1.0 - tail : tail;
}

TestResult welch_t_test(const SampleSummary& a, const SampleSummary& b) {
    if (a.n < 2 || b.n < 2) throw ContractViolation("welch_t_test: both samples need n >= 2");
    if (a.variance < 0.0 || b.variance < 0.0)
        throw ContractViolation("welch_t_test: negative variance");
    const double sa = a.variance / static_cast<double>(a.n);
    const double sb = b.variance / static_cast<double>(b.n);
    const double se2 = sa + sb;
    if (!(se2 > 0.0)) throw ContractViolation("welch_t_test: zero standard error");
    TestResult r;
    r.t_statistic = (a.mean - b.mean) / std::sqrt(se2);
    r.degrees_of_freedom = se2 * se2 /
                           (sa * sa / static_cast<double>(a.n - 1) +
                            sb * sb / static_cast<double>(b.n - 1));
    r.p_value = 1.0 - student_t_cdf(r.t_statistic, r.degrees_of_freedom);
    return r;
}

TestResult one_sample_t_test(const SampleSummary& a, double mu0) {
    if (a.n < 2) throw ContractViolation("one_sample_t_test: need n >= 2");
    if (!(a.variance > 0.0)) throw ContractViolation("one_sample_t_test: zero variance");
    TestResult r;
    r.t_statistic = (a.mean - mu0) / std::sqrt(a.variance / static_cast<double>(a.n));
    r.degrees_of_freedom = static_cast<double>(a.n - 1);
    r.p_value = 1.0 - student_t_cdf(r.t_statistic, r.degrees_of_freedom);
    return r;
}

} // namespace marketrl
