#pragma once

#include "rssmix/distributions.hpp"
#include "rssmix/random.hpp"
#include "rssmix/rss_design.hpp"

#include <Eigen/Dense>

#include <vector>

namespace rssmix {

/// Latent variables attached to one RSS observation.
///   stratum   - active true rank h (1-based), the index set in Delta
///   component - 0-based mixture component of the measured unit (Z)
///   lower     - per-component counts of the h-1 smaller set members (L)
///   upper     - per-component counts of the H-h larger set members (U)
struct LatentObservation {
    int stratum = 1;
    int component = 0;
    Eigen::VectorXi lower;
    Eigen::VectorXi upper;
};

/// One entry per observation in RssDataset::pooled() order.
using LatentState = std::vector<LatentObservation>;

/// Per-observation quantities that depend only on x and the mixture parameters.
struct ObservationTerms {
    double log_cdf;
    double log_sf;
    Eigen::VectorXd component;  // pi_j phi_j(x) / f(x)
    Eigen::VectorXd lower;      // pi_j Phi_j(x) / F(x)
    Eigen::VectorXd upper;      // pi_j (1 - Phi_j(x)) / (1 - F(x))
};

ObservationTerms observation_terms(double x, const MixtureParams& params);

/// P(true rank h | x, judgment rank r) for h = 1..H, as a length-H vector.
Eigen::VectorXd zeta_weights(double x, int r, const MisplacementMatrix& alpha, const MixtureParams& params);
Eigen::VectorXd zeta_weights(double log_cdf, double log_sf, int r, const MisplacementMatrix& alpha);

/// Returns the sampled true rank h (1-based).
int sample_delta(RandomStream& stream, double x, int r, const MisplacementMatrix& alpha,
                 const MixtureParams& params);

/// Component membership probabilities and draws. The conditionals for Z, L and U
/// do not depend on h beyond the trial counts.
Eigen::VectorXd component_weights(double x, const MixtureParams& params);
Eigen::VectorXd lower_weights(double x, const MixtureParams& params);
Eigen::VectorXd upper_weights(double x, const MixtureParams& params);

int sample_z(RandomStream& stream, double x, const MixtureParams& params);
Eigen::VectorXi sample_l(RandomStream& stream, double x, int h, const MixtureParams& params);
Eigen::VectorXi sample_u(RandomStream& stream, double x, int h, int set_size, const MixtureParams& params);

/// Full augmentation pass over a dataset: Delta, then Z, L, U for each observation.
LatentState augment(RandomStream& stream, const RssDataset& data, const MisplacementMatrix& alpha,
                    const MixtureParams& params);

/// Throws std::logic_error if any sum constraint is violated.
void check_latent(const LatentObservation& obs, int set_size, Eigen::Index components);

/// log of the complete-data density of (x, Delta, Z, L, U) up to the multinomial
/// coefficients and the order-statistic constant.
double log_complete_density(double x, int r, const LatentObservation& obs, const MisplacementMatrix& alpha,
                            const MixtureParams& params);

}  // namespace rssmix
