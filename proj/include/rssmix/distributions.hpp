#pragma once

#include <Eigen/Dense>

namespace rssmix {

enum class VarianceModel { Heteroscedastic, Homoscedastic };

/// Finite normal mixture: weights, means and variances per component.
///
/// In the homoscedastic model `variances` has length 1 and is shared by every
/// component; use variance(j) rather than indexing the vector directly.
struct MixtureParams {
    Eigen::VectorXd weights;
    Eigen::VectorXd means;
    Eigen::VectorXd variances;
    VarianceModel model = VarianceModel::Heteroscedastic;

    static MixtureParams heteroscedastic(Eigen::VectorXd weights, Eigen::VectorXd means,
                                         Eigen::VectorXd variances);
    static MixtureParams homoscedastic(Eigen::VectorXd weights, Eigen::VectorXd means,
                                       double variance);

    Eigen::Index components() const { return weights.size(); }
    double variance(Eigen::Index j) const
    {
        return model == VarianceModel::Homoscedastic ? variances[0] : variances[j];
    }
    double sd(Eigen::Index j) const;

    /// Throws std::invalid_argument on any broken invariant.
    void validate() const;
};

/// Conjugate prior hyperparameters. nu/beta have length J (heteroscedastic) or 1
/// (homoscedastic); kappa, tau, gamma always have length J.
struct Hyperparams {
    Eigen::VectorXd nu;
    Eigen::VectorXd beta;
    Eigen::VectorXd kappa;
    Eigen::VectorXd tau;
    Eigen::VectorXd gamma;
    VarianceModel model = VarianceModel::Heteroscedastic;

    Eigen::Index components() const { return kappa.size(); }
    double shape(Eigen::Index j) const { return model == VarianceModel::Homoscedastic ? nu[0] : nu[j]; }
    double rate(Eigen::Index j) const { return model == VarianceModel::Homoscedastic ? beta[0] : beta[j]; }

    void validate() const;
};

// Standard and general normal.
double normal_pdf(double x, double mean, double variance);
double log_normal_pdf(double x, double mean, double variance);
double std_normal_cdf(double z);
/// log Phi(z), accurate far into the lower tail.
double log_std_normal_cdf(double z);
double normal_cdf(double x, double mean, double variance);
double log_normal_cdf(double x, double mean, double variance);
/// log(1 - Phi((x - mean)/sd)), computed without cancellation.
double log_normal_sf(double x, double mean, double variance);

double log_sum_exp(const Eigen::Ref<const Eigen::VectorXd>& v);

double mixture_pdf(double x, const MixtureParams& params);
double log_mixture_pdf(double x, const MixtureParams& params);
double mixture_cdf(double x, const MixtureParams& params);
double log_mixture_cdf(double x, const MixtureParams& params);
/// log(1 - F(x)).
double log_mixture_sf(double x, const MixtureParams& params);

/// Mean and standard deviation of the whole mixture.
double mixture_mean(const MixtureParams& params);
double mixture_sd(const MixtureParams& params);

/// log of H * C(H-1, h-1), the Beta(h, H-h+1) normalizing constant.
double log_order_stat_constant(int h, int set_size);

/// Density of the h-th smallest of H iid mixture draws. Ranks are 1-based.
double order_stat_pdf(double x, int h, int set_size, const MixtureParams& params);
double log_order_stat_pdf(double x, int h, int set_size, const MixtureParams& params);

double log_beta_pdf(double u, double a, double b);

/// Beta(h, H-h+1) density at F(x); f(x) * this == order_stat_pdf(x, h, H).
double beta_pdf_at_cdf(double x, int h, int set_size, const MixtureParams& params);
/// Same, from precomputed log F(x) and log(1 - F(x)).
double log_beta_pdf_at_cdf(double log_cdf, double log_sf, int h, int set_size);

}  // namespace rssmix
