#pragma once

#include "rssmix/distributions.hpp"
#include "rssmix/em_alpha.hpp"
#include "rssmix/latent.hpp"
#include "rssmix/random.hpp"
#include "rssmix/rss_design.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <iosfwd>
#include <limits>
#include <optional>
#include <vector>

namespace rssmix {

/// Per-component counts, sums and squared deviations around `means`.
struct SufficientStats {
    Eigen::VectorXd count;
    Eigen::VectorXd sum;
    Eigen::VectorXd sq_dev;
};

SufficientStats sufficient_stats(const Eigen::VectorXd& values, const Eigen::VectorXi& labels,
                                 const Eigen::VectorXd& means);

struct NormalLaw {
    double mean;
    double variance;

    double log_pdf(double x) const { return log_normal_pdf(x, mean, variance); }
    double draw(RandomStream& stream) const { return draw_normal(stream, mean, variance); }
};

/// Inverse gamma with (shape, rate).
struct InverseGammaLaw {
    double shape;
    double rate;

    double log_pdf(double v) const;
    double draw(RandomStream& stream) const { return draw_inverse_gamma(stream, shape, rate); }
};

/// Conjugate full conditional of mu_j given labels and the component variance.
NormalLaw srs_mu_conditional(const SufficientStats& stats, Eigen::Index j, double variance,
                             const Hyperparams& hyper);

/// Conjugate full conditional of sigma_j^2; `stats.sq_dev` must be taken around the new mu_j.
InverseGammaLaw srs_variance_conditional_het(const SufficientStats& stats, Eigen::Index j, double mean,
                                             const Hyperparams& hyper);

/// Conjugate full conditional of the shared variance; sums prior and data terms over components.
InverseGammaLaw srs_variance_conditional_hom(const SufficientStats& stats, const Eigen::VectorXd& means,
                                             const Hyperparams& hyper);

struct SrsChainState {
    MixtureParams params;
    Eigen::VectorXi labels;
    long iteration = 0;
};

/// One Gibbs scan: labels, weights, each mean, then the variance block.
SrsChainState srs_gibbs_iteration(SrsChainState state, const Eigen::VectorXd& values, const Hyperparams& hyper,
                                  RandomStream& stream);

/// Unnormalized log full conditional of mu_j under the augmented RSS likelihood.
double rss_target_logpdf_mu(double mu, Eigen::Index j, const Eigen::VectorXd& values, const LatentState& latent,
                            const MixtureParams& params, const Hyperparams& hyper);

/// Unnormalized log full conditional of a variance. Heteroscedastic: sigma_j^2 of
/// component j. Homoscedastic: the shared variance (j is ignored). -inf for v <= 0.
double rss_target_logpdf_variance(double variance, Eigen::Index j, const Eigen::VectorXd& values,
                                  const LatentState& latent, const MixtureParams& params, const Hyperparams& hyper);

struct MhResult {
    double value;
    bool accepted;
    double acceptance_probability;
};

/// Independence Metropolis-Hastings transition. The candidate is drawn from the
/// instrumental law and accepted with probability
///   min(1, target(cand) q(current) / (target(current) q(cand))).
/// A candidate whose target is not finite is rejected.
template <class LogTarget, class LogInstrumental, class DrawInstrumental>
MhResult mh_step(double current, LogTarget&& log_target, LogInstrumental&& log_instrumental,
                 DrawInstrumental&& draw_instrumental, RandomStream& stream)
{
    const double candidate = draw_instrumental(stream);
    const double u = stream.uniform();
    const double target_cand = log_target(candidate);
    if (!std::isfinite(target_cand)) {
        return {current, false, 0.0};
    }
    double prob = 1.0;
    if (candidate != current) {
        const double target_curr = log_target(current);
        if (std::isfinite(target_curr)) {
            const double log_ratio =
                target_cand - target_curr + log_instrumental(current) - log_instrumental(candidate);
            prob = std::isnan(log_ratio) ? 0.0 : std::exp(std::min(0.0, log_ratio));
        }
    }
    if (u < prob) {
        return {candidate, true, prob};
    }
    return {current, false, prob};
}

struct RssChainState {
    MixtureParams params;
    MisplacementMatrix alpha;
    LatentState latent;
    long iteration = 0;
};

struct MhTally {
    long mean_proposals = 0;
    long mean_accepts = 0;
    long variance_proposals = 0;
    long variance_accepts = 0;
    int max_em_iterations = 0;
    long em_steps = 0;
    long em_capped = 0;  // EM steps that stopped at the iteration cap
};

/// One Metropolis-within-Gibbs scan: EM for alpha (warm-started from state.alpha),
/// augmentation, weights, each mean by MH, then the variance block by MH.
/// Propagates NonConvergence from the EM step when em.throw_on_cap is set.
RssChainState rss_mwg_iteration(RssChainState state, const RssDataset& data, const Hyperparams& hyper,
                                RandomStream& stream, const EmOptions& em = {}, MhTally* tally = nullptr);

/// Raw chain draws, one per iteration, plus the final misplacement estimate for RSS chains.
struct ChainOutput {
    std::vector<MixtureParams> draws;
    std::optional<MisplacementMatrix> alpha;
    MhTally tally;
};

ChainOutput run_srs_chain(const Eigen::VectorXd& values, const MixtureParams& init, const Hyperparams& hyper,
                          int iterations, RandomStream& stream);

ChainOutput run_rss_chain(const RssDataset& data, const MixtureParams& init, const Hyperparams& hyper,
                          int iterations, RandomStream& stream, const EmOptions& em = {});

/// CSV `iteration,pi1..piJ,mu1..muJ,sigma1..sigmaJ` (or a single `sigma`); sigma is the
/// standard deviation.
void write_chain_csv(std::ostream& out, const std::vector<MixtureParams>& draws);

}  // namespace rssmix
