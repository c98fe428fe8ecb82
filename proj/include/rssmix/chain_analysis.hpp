#pragma once

#include "rssmix/distributions.hpp"

#include <Eigen/Dense>

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace rssmix {

/// Single K-means pass and the data-dependent prior built from it.
struct KMeansInit {
    Eigen::VectorXi labels;
    Hyperparams hyper;
    MixtureParams start;
};

/// One assignment + centroid update from centers at the (j - 0.5)/J sample quantiles.
/// Prior: kappa_j = cluster mean, tau_j = 2.6 / range_j^2 (global range when a cluster
/// has zero range), nu = 1.28, beta = 0.36 * sample variance, gamma_j = 1.
KMeansInit kmeans_init(const Eigen::VectorXd& values, Eigen::Index components, VarianceModel model);

/// Keeps elements burn, burn + thin, burn + 2*thin, ...
template <class T>
std::vector<T> burn_thin(const std::vector<T>& chain, std::size_t burn, std::size_t thin)
{
    if (thin < 1) {
        throw std::invalid_argument("thinning interval must be at least 1");
    }
    if (burn >= chain.size()) {
        throw std::invalid_argument("burn-in must be shorter than the chain");
    }
    std::vector<T> kept;
    kept.reserve((chain.size() - burn + thin - 1) / thin);
    for (std::size_t t = burn; t < chain.size(); t += thin) {
        kept.push_back(chain[t]);
    }
    return kept;
}

/// Permutes components so means increase; ties keep their original order.
MixtureParams relabel_ordered(const MixtureParams& draw);
std::vector<MixtureParams> relabel_ordered(const std::vector<MixtureParams>& chain);

/// Linear-interpolation percentile (p in [0,1]) of unsorted data.
double percentile(std::span<const double> data, double p);

/// Argmax over the sample points of a Gaussian KDE with Silverman's bandwidth.
double posterior_mode(std::span<const double> draws);

struct CredibleInterval {
    double low;
    double high;
    double level;

    double width() const { return high - low; }
    bool contains(double v) const { return low <= v && v <= high; }
};

/// Narrowest window of ceil(level * n) consecutive sorted draws.
CredibleInterval shortest_credible_interval(std::span<const double> draws, double level = 0.95);

/// Parameters reported per fit: pi_j, mu_j and sigma_j (or one shared sigma).
std::vector<std::string> estimand_names(Eigen::Index components, VarianceModel model);
/// Values of the estimands for one draw, in estimand_names() order. Sigma is a standard deviation.
Eigen::VectorXd estimand_values(const MixtureParams& draw);

struct EstimandSummary {
    std::string name;
    double mode;
    CredibleInterval interval;
};

/// Posterior summary of processed draws (already burned, thinned and relabelled).
struct PosteriorSummary {
    std::vector<EstimandSummary> estimands;
};

PosteriorSummary summarize_posterior(const std::vector<MixtureParams>& draws, double level = 0.95);

/// One row of a study table.
struct StudySummaryRow {
    std::string estimand;
    double se_low, se_mid, se_high;  // 10th, 50th, 90th percentiles of squared error
    double ci_low, ci_mid, ci_high;  // 2.5th, 50th, 97.5th percentiles of interval width
    double coverage;
};

/// summaries[k] is replicate k's posterior summary; truth gives the estimand values.
std::vector<StudySummaryRow> summarize_replicates(const std::vector<PosteriorSummary>& summaries,
                                                  const Eigen::VectorXd& truth);

/// Box-and-whisker statistics; whiskers reach the most extreme data within 1.5 IQR.
struct BoxStats {
    double min, q1, median, q3, max, whisker_low, whisker_high;
};

BoxStats box_stats(std::span<const double> data);

}  // namespace rssmix
