#include "rssmix/distributions.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace rssmix {

namespace {

constexpr double kLogSqrt2Pi = 0.91893853320467274178;  // log(sqrt(2*pi))
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void check_rank(int h, int set_size)
{
    if (set_size < 1 || h < 1 || h > set_size) {
        throw std::invalid_argument("rank " + std::to_string(h) + " outside [1, " +
                                    std::to_string(set_size) + "]");
    }
}

void require_positive(const Eigen::VectorXd& v, const char* what)
{
    for (Eigen::Index k = 0; k < v.size(); ++k) {
        if (!(v[k] > 0.0) || !std::isfinite(v[k])) {
            throw std::invalid_argument(std::string(what) + " must be finite and strictly positive");
        }
    }
}

}  // namespace

MixtureParams MixtureParams::heteroscedastic(Eigen::VectorXd weights, Eigen::VectorXd means,
                                             Eigen::VectorXd variances)
{
    MixtureParams p{std::move(weights), std::move(means), std::move(variances),
                    VarianceModel::Heteroscedastic};
    p.validate();
    return p;
}

MixtureParams MixtureParams::homoscedastic(Eigen::VectorXd weights, Eigen::VectorXd means,
                                           double variance)
{
    MixtureParams p{std::move(weights), std::move(means), Eigen::VectorXd::Constant(1, variance),
                    VarianceModel::Homoscedastic};
    p.validate();
    return p;
}

double MixtureParams::sd(Eigen::Index j) const { return std::sqrt(variance(j)); }

void MixtureParams::validate() const
{
    const Eigen::Index J = weights.size();
    if (J < 1) {
        throw std::invalid_argument("mixture needs at least one component");
    }
    if (means.size() != J) {
        throw std::invalid_argument("means and weights differ in length");
    }
    const Eigen::Index expected = model == VarianceModel::Homoscedastic ? 1 : J;
    if (variances.size() != expected) {
        throw std::invalid_argument("variance vector has the wrong length for its model");
    }
    require_positive(weights, "mixing weights");
    require_positive(variances, "variances");
    if (std::abs(weights.sum() - 1.0) > 1e-12) {
        throw std::invalid_argument("mixing weights must sum to 1");
    }
    if (!means.allFinite()) {
        throw std::invalid_argument("component means must be finite");
    }
}

void Hyperparams::validate() const
{
    const Eigen::Index J = kappa.size();
    if (J < 1 || tau.size() != J || gamma.size() != J) {
        throw std::invalid_argument("kappa, tau and gamma must share a positive length");
    }
    const Eigen::Index expected = model == VarianceModel::Homoscedastic ? 1 : J;
    if (nu.size() != expected || beta.size() != expected) {
        throw std::invalid_argument("nu/beta have the wrong length for the variance model");
    }
    require_positive(nu, "nu");
    require_positive(beta, "beta");
    require_positive(tau, "tau");
    require_positive(gamma, "gamma");
}

double log_normal_pdf(double x, double mean, double variance)
{
    const double d = x - mean;
    return -kLogSqrt2Pi - 0.5 * std::log(variance) - 0.5 * d * d / variance;
}

double normal_pdf(double x, double mean, double variance)
{
    return std::exp(log_normal_pdf(x, mean, variance));
}

double std_normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double log_std_normal_cdf(double z)
{
    if (z > 0.0) {
        return std::log1p(-0.5 * std::erfc(z / std::numbers::sqrt2));
    }
    if (z > -37.0) {
        return std::log(0.5 * std::erfc(-z / std::numbers::sqrt2));
    }
    // Mills-ratio asymptotic series; erfc underflows below here.
    const double z2 = z * z;
    const double series = 1.0 - 1.0 / z2 + 3.0 / (z2 * z2) - 15.0 / (z2 * z2 * z2);
    return -kLogSqrt2Pi - 0.5 * z2 - std::log(-z) + std::log(series);
}

double normal_cdf(double x, double mean, double variance)
{
    return std_normal_cdf((x - mean) / std::sqrt(variance));
}

double log_normal_cdf(double x, double mean, double variance)
{
    return log_std_normal_cdf((x - mean) / std::sqrt(variance));
}

double log_normal_sf(double x, double mean, double variance)
{
    return log_std_normal_cdf((mean - x) / std::sqrt(variance));
}

double log_sum_exp(const Eigen::Ref<const Eigen::VectorXd>& v)
{
    if (v.size() == 0) {
        return kNegInf;
    }
    const double m = v.maxCoeff();
    if (m == kNegInf) {
        return kNegInf;
    }
    return m + std::log((v.array() - m).exp().sum());
}

double log_mixture_pdf(double x, const MixtureParams& params)
{
    const Eigen::Index J = params.components();
    Eigen::VectorXd terms(J);
    for (Eigen::Index j = 0; j < J; ++j) {
        terms[j] = std::log(params.weights[j]) + log_normal_pdf(x, params.means[j], params.variance(j));
    }
    return log_sum_exp(terms);
}

double mixture_pdf(double x, const MixtureParams& params)
{
    double total = 0.0;
    for (Eigen::Index j = 0; j < params.components(); ++j) {
        total += params.weights[j] * normal_pdf(x, params.means[j], params.variance(j));
    }
    return total;
}

double mixture_cdf(double x, const MixtureParams& params)
{
    double total = 0.0;
    for (Eigen::Index j = 0; j < params.components(); ++j) {
        total += params.weights[j] * normal_cdf(x, params.means[j], params.variance(j));
    }
    return total;
}

double log_mixture_cdf(double x, const MixtureParams& params)
{
    const Eigen::Index J = params.components();
    Eigen::VectorXd terms(J);
    for (Eigen::Index j = 0; j < J; ++j) {
        terms[j] = std::log(params.weights[j]) + log_normal_cdf(x, params.means[j], params.variance(j));
    }
    return log_sum_exp(terms);
}

double log_mixture_sf(double x, const MixtureParams& params)
{
    const Eigen::Index J = params.components();
    Eigen::VectorXd terms(J);
    for (Eigen::Index j = 0; j < J; ++j) {
        terms[j] = std::log(params.weights[j]) + log_normal_sf(x, params.means[j], params.variance(j));
    }
    return log_sum_exp(terms);
}

double mixture_mean(const MixtureParams& params) { return params.weights.dot(params.means); }

double mixture_sd(const MixtureParams& params)
{
    double second = 0.0;
    for (Eigen::Index j = 0; j < params.components(); ++j) {
        second += params.weights[j] * (params.variance(j) + params.means[j] * params.means[j]);
    }
    const double mean = mixture_mean(params);
    return std::sqrt(second - mean * mean);
}

double log_order_stat_constant(int h, int set_size)
{
    check_rank(h, set_size);
    return std::lgamma(set_size + 1.0) - std::lgamma(static_cast<double>(h)) -
           std::lgamma(static_cast<double>(set_size - h + 1));
}

double log_beta_pdf_at_cdf(double log_cdf, double log_sf, int h, int set_size)
{
    double value = log_order_stat_constant(h, set_size);
    // Zero exponents contribute nothing even when the log term is -inf.
    if (h > 1) {
        value += (h - 1) * log_cdf;
    }
    if (set_size > h) {
        value += (set_size - h) * log_sf;
    }
    return value;
}

double beta_pdf_at_cdf(double x, int h, int set_size, const MixtureParams& params)
{
    check_rank(h, set_size);
    return std::exp(log_beta_pdf_at_cdf(log_mixture_cdf(x, params), log_mixture_sf(x, params), h, set_size));
}

double log_order_stat_pdf(double x, int h, int set_size, const MixtureParams& params)
{
    check_rank(h, set_size);
    return log_mixture_pdf(x, params) +
           log_beta_pdf_at_cdf(log_mixture_cdf(x, params), log_mixture_sf(x, params), h, set_size);
}

double order_stat_pdf(double x, int h, int set_size, const MixtureParams& params)
{
    return std::exp(log_order_stat_pdf(x, h, set_size, params));
}

double log_beta_pdf(double u, double a, double b)
{
    if (!(a > 0.0) || !(b > 0.0)) {
        throw std::invalid_argument("beta parameters must be positive");
    }
    if (u < 0.0 || u > 1.0) {
        return kNegInf;
    }
    const double norm = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b);
    double value = norm;
    if (a != 1.0) {
        value += (a - 1.0) * std::log(u);
    }
    if (b != 1.0) {
        value += (b - 1.0) * std::log1p(-u);
    }
    return value;
}

}  // namespace rssmix
