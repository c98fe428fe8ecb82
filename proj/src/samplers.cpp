#include "rssmix/samplers.hpp"

#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace rssmix {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void check_models(const MixtureParams& params, const Hyperparams& hyper)
{
    if (params.model != hyper.model) {
        throw std::invalid_argument("mixture and prior disagree on the variance model");
    }
    if (params.components() != hyper.components()) {
        throw std::invalid_argument("mixture and prior disagree on the number of components");
    }
}

// Sum over observations of the augmented log-likelihood contributions of
// component j, evaluated at (mean, variance).
double component_loglik(Eigen::Index j, double mean, double variance, const Eigen::VectorXd& values,
                        const LatentState& latent)
{
    double total = 0.0;
    for (std::size_t k = 0; k < latent.size(); ++k) {
        const LatentObservation& obs = latent[k];
        const double x = values[static_cast<Eigen::Index>(k)];
        if (obs.component == j) {
            total += log_normal_pdf(x, mean, variance);
        }
        if (obs.lower[j] > 0) {
            total += obs.lower[j] * log_normal_cdf(x, mean, variance);
        }
        if (obs.upper[j] > 0) {
            total += obs.upper[j] * log_normal_sf(x, mean, variance);
        }
    }
    return total;
}

double log_mean_prior(double mu, Eigen::Index j, double variance, const Hyperparams& hyper)
{
    const double d = mu - hyper.kappa[j];
    return 0.5 * std::log(hyper.tau[j]) - 0.5 * std::log(variance) - 0.5 * hyper.tau[j] * d * d / variance;
}

double log_inverse_gamma(double v, double shape, double rate)
{
    return shape * std::log(rate) - std::lgamma(shape) - (shape + 1.0) * std::log(v) - rate / v;
}

Eigen::VectorXi latent_components(const LatentState& latent)
{
    Eigen::VectorXi labels(static_cast<Eigen::Index>(latent.size()));
    for (std::size_t k = 0; k < latent.size(); ++k) {
        labels[static_cast<Eigen::Index>(k)] = latent[k].component;
    }
    return labels;
}

}  // namespace

SufficientStats sufficient_stats(const Eigen::VectorXd& values, const Eigen::VectorXi& labels,
                                 const Eigen::VectorXd& means)
{
    if (values.size() != labels.size()) {
        throw std::invalid_argument("values and labels differ in length");
    }
    const Eigen::Index J = means.size();
    SufficientStats s{Eigen::VectorXd::Zero(J), Eigen::VectorXd::Zero(J), Eigen::VectorXd::Zero(J)};
    for (Eigen::Index k = 0; k < values.size(); ++k) {
        const int j = labels[k];
        if (j < 0 || j >= J) {
            throw std::invalid_argument("component label out of range");
        }
        const double d = values[k] - means[j];
        s.count[j] += 1.0;
        s.sum[j] += values[k];
        s.sq_dev[j] += d * d;
    }
    return s;
}

double InverseGammaLaw::log_pdf(double v) const
{
    if (!(v > 0.0)) {
        return kNegInf;
    }
    return log_inverse_gamma(v, shape, rate);
}

NormalLaw srs_mu_conditional(const SufficientStats& stats, Eigen::Index j, double variance,
                             const Hyperparams& hyper)
{
    const double precision = hyper.tau[j] + stats.count[j];
    return {(hyper.tau[j] * hyper.kappa[j] + stats.sum[j]) / precision, variance / precision};
}

InverseGammaLaw srs_variance_conditional_het(const SufficientStats& stats, Eigen::Index j, double mean,
                                             const Hyperparams& hyper)
{
    const double d = mean - hyper.kappa[j];
    return {hyper.shape(j) + 0.5 * (stats.count[j] + 1.0),
            hyper.rate(j) + 0.5 * hyper.tau[j] * d * d + 0.5 * stats.sq_dev[j]};
}

InverseGammaLaw srs_variance_conditional_hom(const SufficientStats& stats, const Eigen::VectorXd& means,
                                             const Hyperparams& hyper)
{
    const Eigen::Index J = means.size();
    double rate = hyper.rate(0);
    for (Eigen::Index j = 0; j < J; ++j) {
        const double d = means[j] - hyper.kappa[j];
        rate += 0.5 * hyper.tau[j] * d * d + 0.5 * stats.sq_dev[j];
    }
    return {hyper.shape(0) + 0.5 * (stats.count.sum() + static_cast<double>(J)), rate};
}

SrsChainState srs_gibbs_iteration(SrsChainState state, const Eigen::VectorXd& values, const Hyperparams& hyper,
                                  RandomStream& stream)
{
    MixtureParams& p = state.params;
    check_models(p, hyper);
    const Eigen::Index J = p.components();

    state.labels.resize(values.size());
    for (Eigen::Index k = 0; k < values.size(); ++k) {
        state.labels[k] = sample_z(stream, values[k], p);
    }

    SufficientStats stats = sufficient_stats(values, state.labels, p.means);
    p.weights = draw_dirichlet(stream, stats.count + hyper.gamma);

    for (Eigen::Index j = 0; j < J; ++j) {
        p.means[j] = srs_mu_conditional(stats, j, p.variance(j), hyper).draw(stream);
    }

    stats = sufficient_stats(values, state.labels, p.means);
    if (p.model == VarianceModel::Heteroscedastic) {
        for (Eigen::Index j = 0; j < J; ++j) {
            p.variances[j] = srs_variance_conditional_het(stats, j, p.means[j], hyper).draw(stream);
        }
    } else {
        p.variances[0] = srs_variance_conditional_hom(stats, p.means, hyper).draw(stream);
    }
    ++state.iteration;
    return state;
}

double rss_target_logpdf_mu(double mu, Eigen::Index j, const Eigen::VectorXd& values, const LatentState& latent,
                            const MixtureParams& params, const Hyperparams& hyper)
{
    const double variance = params.variance(j);
    return component_loglik(j, mu, variance, values, latent) + log_mean_prior(mu, j, variance, hyper);
}

double rss_target_logpdf_variance(double variance, Eigen::Index j, const Eigen::VectorXd& values,
                                  const LatentState& latent, const MixtureParams& params, const Hyperparams& hyper)
{
    if (!(variance > 0.0) || !std::isfinite(variance)) {
        return kNegInf;
    }
    if (params.model == VarianceModel::Heteroscedastic) {
        return component_loglik(j, params.means[j], variance, values, latent) +
               log_mean_prior(params.means[j], j, variance, hyper) +
               log_inverse_gamma(variance, hyper.shape(j), hyper.rate(j));
    }
    double total = log_inverse_gamma(variance, hyper.shape(0), hyper.rate(0));
    for (Eigen::Index c = 0; c < params.components(); ++c) {
        total += component_loglik(c, params.means[c], variance, values, latent) +
                 log_mean_prior(params.means[c], c, variance, hyper);
    }
    return total;
}

RssChainState rss_mwg_iteration(RssChainState state, const RssDataset& data, const Hyperparams& hyper,
                                RandomStream& stream, const EmOptions& em, MhTally* tally)
{
    MixtureParams& p = state.params;
    check_models(p, hyper);
    const Eigen::Index J = p.components();
    const Eigen::VectorXd values = data.pooled();

    EmResult fitted = em_alpha(data, state.alpha, p, em);
    state.alpha = std::move(fitted.alpha);

    state.latent = augment(stream, data, state.alpha, p);

    Eigen::VectorXd concentration = hyper.gamma;
    for (const LatentObservation& obs : state.latent) {
        concentration[obs.component] += 1.0;
        concentration += (obs.lower + obs.upper).cast<double>();
    }
    p.weights = draw_dirichlet(stream, concentration);

    // Instrumental laws treat the measured values as an SRS sample labelled by Z.
    const Eigen::VectorXi labels = latent_components(state.latent);
    SufficientStats stats = sufficient_stats(values, labels, p.means);
    for (Eigen::Index j = 0; j < J; ++j) {
        const NormalLaw proposal = srs_mu_conditional(stats, j, p.variance(j), hyper);
        const MhResult step = mh_step(
            p.means[j], [&](double mu) { return rss_target_logpdf_mu(mu, j, values, state.latent, p, hyper); },
            [&](double mu) { return proposal.log_pdf(mu); }, [&](RandomStream& s) { return proposal.draw(s); },
            stream);
        p.means[j] = step.value;
        if (tally) {
            ++tally->mean_proposals;
            tally->mean_accepts += step.accepted ? 1 : 0;
        }
    }

    stats = sufficient_stats(values, labels, p.means);
    const Eigen::Index blocks = p.model == VarianceModel::Heteroscedastic ? J : 1;
    for (Eigen::Index j = 0; j < blocks; ++j) {
        const InverseGammaLaw proposal = p.model == VarianceModel::Heteroscedastic
                                             ? srs_variance_conditional_het(stats, j, p.means[j], hyper)
                                             : srs_variance_conditional_hom(stats, p.means, hyper);
        const MhResult step = mh_step(
            p.variances[j],
            [&](double v) { return rss_target_logpdf_variance(v, j, values, state.latent, p, hyper); },
            [&](double v) { return proposal.log_pdf(v); }, [&](RandomStream& s) { return proposal.draw(s); },
            stream);
        p.variances[j] = step.value;
        if (tally) {
            ++tally->variance_proposals;
            tally->variance_accepts += step.accepted ? 1 : 0;
        }
    }
    if (tally) {
        tally->max_em_iterations = std::max(tally->max_em_iterations, fitted.iterations);
        ++tally->em_steps;
        tally->em_capped += fitted.converged ? 0 : 1;
    }
    ++state.iteration;
    return state;
}

ChainOutput run_srs_chain(const Eigen::VectorXd& values, const MixtureParams& init, const Hyperparams& hyper,
                          int iterations, RandomStream& stream)
{
    init.validate();
    hyper.validate();
    ChainOutput out;
    out.draws.reserve(static_cast<std::size_t>(iterations));
    SrsChainState state{init, Eigen::VectorXi::Zero(values.size()), 0};
    for (int t = 0; t < iterations; ++t) {
        state = srs_gibbs_iteration(std::move(state), values, hyper, stream);
        out.draws.push_back(state.params);
    }
    return out;
}

ChainOutput run_rss_chain(const RssDataset& data, const MixtureParams& init, const Hyperparams& hyper,
                          int iterations, RandomStream& stream, const EmOptions& em)
{
    init.validate();
    hyper.validate();
    data.validate();
    ChainOutput out;
    out.draws.reserve(static_cast<std::size_t>(iterations));
    RssChainState state{init, MisplacementMatrix::uniform(data.set_size()), {}, 0};
    for (int t = 0; t < iterations; ++t) {
        state = rss_mwg_iteration(std::move(state), data, hyper, stream, em, &out.tally);
        out.draws.push_back(state.params);
    }
    out.alpha = state.alpha;
    return out;
}

void write_chain_csv(std::ostream& out, const std::vector<MixtureParams>& draws)
{
    if (draws.empty()) {
        return;
    }
    const Eigen::Index J = draws.front().components();
    const bool shared = draws.front().model == VarianceModel::Homoscedastic;
    out << "iteration";
    for (Eigen::Index j = 1; j <= J; ++j) {
        out << ",pi" << j;
    }
    for (Eigen::Index j = 1; j <= J; ++j) {
        out << ",mu" << j;
    }
    if (shared) {
        out << ",sigma";
    } else {
        for (Eigen::Index j = 1; j <= J; ++j) {
            out << ",sigma" << j;
        }
    }
    out << '\n' << std::setprecision(17);
    for (std::size_t t = 0; t < draws.size(); ++t) {
        const MixtureParams& p = draws[t];
        out << (t + 1);
        for (Eigen::Index j = 0; j < J; ++j) {
            out << ',' << p.weights[j];
        }
        for (Eigen::Index j = 0; j < J; ++j) {
            out << ',' << p.means[j];
        }
        for (Eigen::Index j = 0; j < p.variances.size(); ++j) {
            out << ',' << std::sqrt(p.variances[j]);
        }
        out << '\n';
    }
}

}  // namespace rssmix
