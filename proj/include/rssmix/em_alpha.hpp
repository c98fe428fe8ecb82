#pragma once

#include "rssmix/distributions.hpp"
#include "rssmix/rss_design.hpp"

#include <Eigen/Dense>

namespace rssmix {

/// zeta(r-1, h-1) = sum over cycles of P(true rank h | x_[r]i). Rows sum to `cycles`.
struct ZetaAggregate {
    Eigen::MatrixXd zeta;
    int cycles = 0;
};

/// log B_{h,H-h+1}(F(x)) for every observation (rows, in pooled order) and true
/// rank (columns). Depends only on the mixture parameters, so it is computed once
/// per EM run.
Eigen::MatrixXd rank_log_likelihoods(const RssDataset& data, const MixtureParams& params);

ZetaAggregate e_step(const RssDataset& data, const MisplacementMatrix& alpha, const MixtureParams& params);
ZetaAggregate e_step(const Eigen::MatrixXd& rank_loglik, int set_size, const MisplacementMatrix& alpha);

/// Maximizer of sum zeta(r,h) log alpha(r,h) over doubly stochastic alpha (entries of
/// zeta floored at 1e-12). Throws std::domain_error on an all-zero row.
MisplacementMatrix m_step(const ZetaAggregate& zeta);

/// Expected complete-data objective sum zeta(r,h) log alpha(r,h).
double q_value(const ZetaAggregate& zeta, const MisplacementMatrix& alpha);

/// Observed-data log-likelihood of the ranks, up to terms free of alpha.
double rank_log_likelihood(const Eigen::MatrixXd& rank_loglik, int set_size, const MisplacementMatrix& alpha);

struct EmOptions {
    double tol = 1e-7;
    int max_iter = 100;
    /// When false, hitting max_iter returns the last iterate with converged = false.
    bool throw_on_cap = true;
};

struct EmResult {
    MisplacementMatrix alpha;
    int iterations = 0;
    bool converged = true;
};

/// EM for alpha with the mixture parameters held fixed. Stops when the max-abs
/// change is within tol. After max_iter iterations throws NonConvergence, unless
/// options.throw_on_cap is false.
EmResult em_alpha(const RssDataset& data, const MisplacementMatrix& alpha0, const MixtureParams& params,
                  const EmOptions& options = {});
EmResult em_alpha(const Eigen::MatrixXd& rank_loglik, int set_size, const MisplacementMatrix& alpha0,
                  const EmOptions& options = {});

}  // namespace rssmix
