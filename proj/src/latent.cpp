#include "rssmix/latent.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace rssmix {

namespace {

Eigen::VectorXd normalize_log(const Eigen::VectorXd& log_w)
{
    const double total = log_sum_exp(log_w);
    if (!std::isfinite(total)) {
        throw std::domain_error("all latent weights vanish");
    }
    return (log_w.array() - total).exp();
}

}  // namespace

ObservationTerms observation_terms(double x, const MixtureParams& params)
{
    const Eigen::Index J = params.components();
    Eigen::VectorXd log_pdf(J), log_cdf(J), log_sf(J);
    for (Eigen::Index j = 0; j < J; ++j) {
        const double lw = std::log(params.weights[j]);
        log_pdf[j] = lw + log_normal_pdf(x, params.means[j], params.variance(j));
        log_cdf[j] = lw + log_normal_cdf(x, params.means[j], params.variance(j));
        log_sf[j] = lw + log_normal_sf(x, params.means[j], params.variance(j));
    }
    return {log_sum_exp(log_cdf), log_sum_exp(log_sf), normalize_log(log_pdf), normalize_log(log_cdf),
            normalize_log(log_sf)};
}

Eigen::VectorXd zeta_weights(double log_cdf, double log_sf, int r, const MisplacementMatrix& alpha)
{
    const int H = alpha.set_size();
    if (r < 1 || r > H) {
        throw std::invalid_argument("judgment rank outside [1, H]");
    }
    Eigen::VectorXd log_w(H);
    for (int h = 1; h <= H; ++h) {
        const double a = alpha.alpha(r - 1, h - 1);
        log_w[h - 1] = a > 0.0 ? std::log(a) + log_beta_pdf_at_cdf(log_cdf, log_sf, h, H)
                               : -std::numeric_limits<double>::infinity();
    }
    if (!(alpha.alpha.row(r - 1).sum() > 0.0)) {
        throw std::invalid_argument("misplacement row is all zero");
    }
    return normalize_log(log_w);
}

Eigen::VectorXd zeta_weights(double x, int r, const MisplacementMatrix& alpha, const MixtureParams& params)
{
    return zeta_weights(log_mixture_cdf(x, params), log_mixture_sf(x, params), r, alpha);
}

int sample_delta(RandomStream& stream, double x, int r, const MisplacementMatrix& alpha,
                 const MixtureParams& params)
{
    return draw_categorical(stream, zeta_weights(x, r, alpha, params)) + 1;
}

Eigen::VectorXd component_weights(double x, const MixtureParams& params)
{
    return observation_terms(x, params).component;
}

Eigen::VectorXd lower_weights(double x, const MixtureParams& params)
{
    return observation_terms(x, params).lower;
}

Eigen::VectorXd upper_weights(double x, const MixtureParams& params)
{
    return observation_terms(x, params).upper;
}

int sample_z(RandomStream& stream, double x, const MixtureParams& params)
{
    return draw_categorical(stream, component_weights(x, params));
}

Eigen::VectorXi sample_l(RandomStream& stream, double x, int h, const MixtureParams& params)
{
    if (h < 1) {
        throw std::invalid_argument("rank must be at least 1");
    }
    if (h == 1) {
        return Eigen::VectorXi::Zero(params.components());
    }
    return draw_multinomial(stream, h - 1, lower_weights(x, params));
}

Eigen::VectorXi sample_u(RandomStream& stream, double x, int h, int set_size, const MixtureParams& params)
{
    if (h < 1 || h > set_size) {
        throw std::invalid_argument("rank outside [1, H]");
    }
    if (h == set_size) {
        return Eigen::VectorXi::Zero(params.components());
    }
    return draw_multinomial(stream, set_size - h, upper_weights(x, params));
}

LatentState augment(RandomStream& stream, const RssDataset& data, const MisplacementMatrix& alpha,
                    const MixtureParams& params)
{
    const int H = data.set_size();
    const Eigen::Index J = params.components();
    LatentState state;
    state.reserve(static_cast<std::size_t>(data.size()));
    for (int i = 0; i < data.cycles(); ++i) {
        for (int r = 1; r <= H; ++r) {
            const double x = data.values(i, r - 1);
            const ObservationTerms terms = observation_terms(x, params);
            LatentObservation obs;
            obs.stratum = draw_categorical(stream, zeta_weights(terms.log_cdf, terms.log_sf, r, alpha)) + 1;
            obs.component = draw_categorical(stream, terms.component);
            obs.lower = obs.stratum > 1 ? draw_multinomial(stream, obs.stratum - 1, terms.lower)
                                        : Eigen::VectorXi::Zero(J);
            obs.upper = obs.stratum < H ? draw_multinomial(stream, H - obs.stratum, terms.upper)
                                        : Eigen::VectorXi::Zero(J);
            state.push_back(std::move(obs));
        }
    }
    return state;
}

void check_latent(const LatentObservation& obs, int set_size, Eigen::Index components)
{
    if (obs.stratum < 1 || obs.stratum > set_size) {
        throw std::logic_error("latent stratum outside [1, H]");
    }
    if (obs.component < 0 || obs.component >= components) {
        throw std::logic_error("latent component index out of range");
    }
    if (obs.lower.size() != components || obs.upper.size() != components) {
        throw std::logic_error("latent count vectors have the wrong length");
    }
    if ((obs.lower.array() < 0).any() || (obs.upper.array() < 0).any()) {
        throw std::logic_error("latent counts must be nonnegative");
    }
    if (obs.lower.sum() != obs.stratum - 1 || obs.upper.sum() != set_size - obs.stratum) {
        throw std::logic_error("latent counts do not match the active stratum");
    }
}

double log_complete_density(double x, int r, const LatentObservation& obs, const MisplacementMatrix& alpha,
                            const MixtureParams& params)
{
    double value = std::log(alpha.alpha(r - 1, obs.stratum - 1));
    for (Eigen::Index j = 0; j < params.components(); ++j) {
        const int z = obs.component == j ? 1 : 0;
        const int trials = z + obs.lower[j] + obs.upper[j];
        value += trials * std::log(params.weights[j]);
        if (z) {
            value += log_normal_pdf(x, params.means[j], params.variance(j));
        }
        if (obs.lower[j]) {
            value += obs.lower[j] * log_normal_cdf(x, params.means[j], params.variance(j));
        }
        if (obs.upper[j]) {
            value += obs.upper[j] * log_normal_sf(x, params.means[j], params.variance(j));
        }
    }
    return value;
}

}  // namespace rssmix
