#include "rssmix/chain_analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace rssmix {

namespace {

std::vector<double> sorted_copy(std::span<const double> data)
{
    std::vector<double> v(data.begin(), data.end());
    std::sort(v.begin(), v.end());
    return v;
}

double percentile_sorted(const std::vector<double>& v, double p)
{
    const double pos = p * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

double sample_variance(const Eigen::VectorXd& x)
{
    if (x.size() < 2) {
        return 0.0;
    }
    return (x.array() - x.mean()).square().sum() / static_cast<double>(x.size() - 1);
}

}  // namespace

double percentile(std::span<const double> data, double p)
{
    if (data.empty()) {
        throw std::invalid_argument("percentile of empty data");
    }
    if (p < 0.0 || p > 1.0) {
        throw std::invalid_argument("percentile level outside [0,1]");
    }
    return percentile_sorted(sorted_copy(data), p);
}

KMeansInit kmeans_init(const Eigen::VectorXd& values, Eigen::Index components, VarianceModel model)
{
    const Eigen::Index N = values.size();
    const Eigen::Index J = components;
    if (J < 1) {
        throw std::invalid_argument("need at least one component");
    }
    std::vector<double> sorted(values.data(), values.data() + N);
    std::sort(sorted.begin(), sorted.end());
    const auto distinct = std::unique(sorted.begin(), sorted.end()) - sorted.begin();
    if (distinct < J) {
        throw std::invalid_argument("fewer distinct values than components");
    }
    sorted.assign(values.data(), values.data() + N);
    std::sort(sorted.begin(), sorted.end());

    Eigen::VectorXd centers(J);
    for (Eigen::Index j = 0; j < J; ++j) {
        centers[j] = percentile_sorted(sorted, (static_cast<double>(j) + 0.5) / static_cast<double>(J));
    }

    KMeansInit out;
    out.labels.resize(N);
    for (Eigen::Index k = 0; k < N; ++k) {
        Eigen::Index best = 0;
        (centers.array() - values[k]).abs().minCoeff(&best);
        out.labels[k] = static_cast<int>(best);
    }

    const double global_range = sorted.back() - sorted.front();
    const double s2 = sample_variance(values);
    Eigen::VectorXd kappa(J), tau(J), count = Eigen::VectorXd::Zero(J), within(J);
    double pooled_ss = 0.0;
    for (Eigen::Index j = 0; j < J; ++j) {
        std::vector<double> members;
        for (Eigen::Index k = 0; k < N; ++k) {
            if (out.labels[k] == j) {
                members.push_back(values[k]);
            }
        }
        count[j] = static_cast<double>(members.size());
        if (members.empty()) {
            kappa[j] = centers[j];
            tau[j] = 2.6 / (global_range * global_range);
            within[j] = 0.0;
            continue;
        }
        const Eigen::Map<const Eigen::VectorXd> m(members.data(), static_cast<Eigen::Index>(members.size()));
        kappa[j] = m.mean();
        const double range = m.maxCoeff() - m.minCoeff();
        const double r = range > 0.0 ? range : global_range;
        tau[j] = 2.6 / (r * r);
        within[j] = sample_variance(m);
        pooled_ss += (m.array() - kappa[j]).square().sum();
    }

    Hyperparams& hyper = out.hyper;
    hyper.model = model;
    hyper.kappa = kappa;
    hyper.tau = tau;
    hyper.gamma = Eigen::VectorXd::Ones(J);
    const Eigen::Index shared = model == VarianceModel::Homoscedastic ? 1 : J;
    hyper.nu = Eigen::VectorXd::Constant(shared, 1.28);
    hyper.beta = Eigen::VectorXd::Constant(shared, 0.36 * s2);
    hyper.validate();

    // Starting point: cluster proportions smoothed by the flat Dirichlet prior,
    // cluster means, and within-cluster spread with a floor tied to the data scale.
    const double floor = 1e-2 * s2;
    const double pooled = N > J ? pooled_ss / static_cast<double>(N - J) : 0.0;
    const double pooled_var = std::max(pooled > 0.0 ? pooled : s2 / static_cast<double>(J), floor);
    Eigen::VectorXd weights = (count.array() + 1.0) / static_cast<double>(N + J);
    weights /= weights.sum();
    if (model == VarianceModel::Homoscedastic) {
        out.start = MixtureParams::homoscedastic(weights, kappa, pooled_var);
    } else {
        Eigen::VectorXd var(J);
        for (Eigen::Index j = 0; j < J; ++j) {
            var[j] = count[j] >= 2 && within[j] > 0.0 ? std::max(within[j], floor) : pooled_var;
        }
        out.start = MixtureParams::heteroscedastic(weights, kappa, var);
    }
    return out;
}

MixtureParams relabel_ordered(const MixtureParams& draw)
{
    const Eigen::Index J = draw.components();
    std::vector<Eigen::Index> order(static_cast<std::size_t>(J));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](Eigen::Index a, Eigen::Index b) { return draw.means[a] < draw.means[b]; });
    MixtureParams out = draw;
    for (Eigen::Index k = 0; k < J; ++k) {
        const Eigen::Index src = order[static_cast<std::size_t>(k)];
        out.weights[k] = draw.weights[src];
        out.means[k] = draw.means[src];
        if (draw.model == VarianceModel::Heteroscedastic) {
            out.variances[k] = draw.variances[src];
        }
    }
    return out;
}

std::vector<MixtureParams> relabel_ordered(const std::vector<MixtureParams>& chain)
{
    std::vector<MixtureParams> out;
    out.reserve(chain.size());
    for (const auto& d : chain) {
        out.push_back(relabel_ordered(d));
    }
    return out;
}

double posterior_mode(std::span<const double> draws)
{
    if (draws.size() < 2) {
        throw std::invalid_argument("posterior mode needs at least two draws");
    }
    const std::vector<double> v = sorted_copy(draws);
    const auto n = static_cast<double>(v.size());
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
    double ss = 0.0;
    for (double x : v) {
        ss += (x - mean) * (x - mean);
    }
    const double sd = std::sqrt(ss / (n - 1.0));
    const double iqr = percentile_sorted(v, 0.75) - percentile_sorted(v, 0.25);
    double spread = std::min(sd, iqr / 1.34);
    if (!(spread > 0.0)) {
        spread = sd;
    }
    if (!(spread > 0.0)) {
        return v.front();
    }
    const double bw = 0.9 * spread * std::pow(n, -0.2);
    const double inv2h2 = 0.5 / (bw * bw);
    // Kernel mass beyond 8 bandwidths is negligible; the sorted order lets each
    // evaluation touch only the nearby points.
    const double reach = 8.0 * bw;
    double best_x = v.front();
    double best_density = -1.0;
    std::size_t lo = 0;
    std::size_t hi = 0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        while (v[lo] < v[i] - reach) {
            ++lo;
        }
        while (hi < v.size() && v[hi] <= v[i] + reach) {
            ++hi;
        }
        double density = 0.0;
        for (std::size_t k = lo; k < hi; ++k) {
            const double d = v[k] - v[i];
            density += std::exp(-d * d * inv2h2);
        }
        if (density > best_density) {
            best_density = density;
            best_x = v[i];
        }
    }
    return best_x;
}

CredibleInterval shortest_credible_interval(std::span<const double> draws, double level)
{
    if (!(level > 0.0) || !(level < 1.0)) {
        throw std::invalid_argument("credible level must lie in (0,1)");
    }
    if (draws.size() < 2) {
        throw std::invalid_argument("credible interval needs at least two draws");
    }
    const std::vector<double> v = sorted_copy(draws);
    const auto window = static_cast<std::size_t>(std::ceil(level * static_cast<double>(v.size()) - 1e-9));
    const std::size_t span = std::max<std::size_t>(window, 1);
    CredibleInterval best{v.front(), v[span - 1], level};
    for (std::size_t i = 0; i + span <= v.size(); ++i) {
        const double width = v[i + span - 1] - v[i];
        if (width < best.width()) {
            best = {v[i], v[i + span - 1], level};
        }
    }
    return best;
}

std::vector<std::string> estimand_names(Eigen::Index components, VarianceModel model)
{
    std::vector<std::string> names;
    for (Eigen::Index j = 1; j <= components; ++j) {
        names.push_back("pi" + std::to_string(j));
    }
    for (Eigen::Index j = 1; j <= components; ++j) {
        names.push_back("mu" + std::to_string(j));
    }
    if (model == VarianceModel::Homoscedastic) {
        names.emplace_back("sigma");
    } else {
        for (Eigen::Index j = 1; j <= components; ++j) {
            names.push_back("sigma" + std::to_string(j));
        }
    }
    return names;
}

Eigen::VectorXd estimand_values(const MixtureParams& draw)
{
    const Eigen::Index J = draw.components();
    const Eigen::Index V = draw.variances.size();
    Eigen::VectorXd out(2 * J + V);
    out << draw.weights, draw.means, draw.variances.array().sqrt().matrix();
    return out;
}

PosteriorSummary summarize_posterior(const std::vector<MixtureParams>& draws, double level)
{
    if (draws.size() < 2) {
        throw std::invalid_argument("posterior summary needs at least two draws");
    }
    const auto names = estimand_names(draws.front().components(), draws.front().model);
    Eigen::MatrixXd table(static_cast<Eigen::Index>(draws.size()), static_cast<Eigen::Index>(names.size()));
    for (std::size_t t = 0; t < draws.size(); ++t) {
        table.row(static_cast<Eigen::Index>(t)) = estimand_values(draws[t]).transpose();
    }
    PosteriorSummary out;
    for (std::size_t c = 0; c < names.size(); ++c) {
        const Eigen::VectorXd col = table.col(static_cast<Eigen::Index>(c));
        const std::span<const double> s(col.data(), static_cast<std::size_t>(col.size()));
        out.estimands.push_back({names[c], posterior_mode(s), shortest_credible_interval(s, level)});
    }
    return out;
}

std::vector<StudySummaryRow> summarize_replicates(const std::vector<PosteriorSummary>& summaries,
                                                  const Eigen::VectorXd& truth)
{
    if (summaries.size() < 2) {
        throw std::invalid_argument("summarizing needs at least two replicates");
    }
    const std::size_t E = summaries.front().estimands.size();
    if (static_cast<Eigen::Index>(E) != truth.size()) {
        throw std::invalid_argument("truth vector does not match the estimands");
    }
    std::vector<StudySummaryRow> rows;
    for (std::size_t e = 0; e < E; ++e) {
        std::vector<double> sq, width;
        double covered = 0.0;
        for (const auto& s : summaries) {
            const EstimandSummary& est = s.estimands.at(e);
            const double d = est.mode - truth[static_cast<Eigen::Index>(e)];
            sq.push_back(d * d);
            width.push_back(est.interval.width());
            covered += est.interval.contains(truth[static_cast<Eigen::Index>(e)]) ? 1.0 : 0.0;
        }
        std::sort(sq.begin(), sq.end());
        std::sort(width.begin(), width.end());
        rows.push_back({summaries.front().estimands[e].name, percentile_sorted(sq, 0.10), percentile_sorted(sq, 0.50),
                        percentile_sorted(sq, 0.90), percentile_sorted(width, 0.025),
                        percentile_sorted(width, 0.50), percentile_sorted(width, 0.975),
                        covered / static_cast<double>(summaries.size())});
    }
    return rows;
}

BoxStats box_stats(std::span<const double> data)
{
    if (data.empty()) {
        throw std::invalid_argument("box statistics of empty data");
    }
    const std::vector<double> v = sorted_copy(data);
    BoxStats b{};
    b.min = v.front();
    b.max = v.back();
    b.q1 = percentile_sorted(v, 0.25);
    b.median = percentile_sorted(v, 0.5);
    b.q3 = percentile_sorted(v, 0.75);
    const double fence = 1.5 * (b.q3 - b.q1);
    b.whisker_low = *std::lower_bound(v.begin(), v.end(), b.q1 - fence);
    b.whisker_high = *(std::upper_bound(v.begin(), v.end(), b.q3 + fence) - 1);
    return b;
}

}  // namespace rssmix
