#include "property_checks.hpp"

#include "rssmix/chain_analysis.hpp"
#include "rssmix/em_alpha.hpp"
#include "rssmix/experiment.hpp"
#include "rssmix/latent.hpp"
#include "rssmix/samplers.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

namespace rssmix::checks {

namespace {

std::string fmt(double v)
{
    std::ostringstream os;
    os << v;
    return os.str();
}

// Composite Simpson rule on [a, b] with an even number of panels.
double simpson(const std::function<double(double)>& f, double a, double b, int panels)
{
    const double step = (b - a) / panels;
    double total = f(a) + f(b);
    for (int k = 1; k < panels; ++k) {
        total += f(a + k * step) * (k % 2 ? 4.0 : 2.0);
    }
    return total * step / 3.0;
}

MisplacementMatrix random_alpha(RandomStream& stream, int H)
{
    Eigen::MatrixXd m(H, H);
    for (int r = 0; r < H; ++r) {
        for (int h = 0; h < H; ++h) {
            m(r, h) = 0.05 + stream.uniform() + (r == h ? 2.0 * stream.uniform() : 0.0);
        }
    }
    return {project_doubly_stochastic(m)};
}

double ds_deviation(const Eigen::MatrixXd& a)
{
    return std::max((a.rowwise().sum().array() - 1.0).abs().maxCoeff(),
                    (a.colwise().sum().array() - 1.0).abs().maxCoeff());
}

std::vector<MixtureParams> test_mixtures()
{
    return {MixtureParams::homoscedastic(Eigen::Vector2d(0.7, 0.3), Eigen::Vector2d(0.0, 5.0), 1.0),
            MixtureParams::heteroscedastic(Eigen::Vector3d(0.5, 0.3, 0.2), Eigen::Vector3d(-2.0, 1.0, 6.0),
                                           Eigen::Vector3d(0.5, 2.0, 1.5)),
            MixtureParams::homoscedastic(Eigen::Vector2d(0.87, 0.13), Eigen::Vector2d(4.69, 6.34), 0.6889)};
}

// Batch-means standard error of the mean.
double batch_se(const std::vector<double>& x, int batches)
{
    const std::size_t size = x.size() / static_cast<std::size_t>(batches);
    std::vector<double> means;
    for (int b = 0; b < batches; ++b) {
        double s = 0.0;
        for (std::size_t k = 0; k < size; ++k) {
            s += x[b * size + k];
        }
        means.push_back(s / static_cast<double>(size));
    }
    double m = 0.0;
    for (double v : means) {
        m += v;
    }
    m /= batches;
    double var = 0.0;
    for (double v : means) {
        var += (v - m) * (v - m);
    }
    var /= (batches - 1);
    return std::sqrt(var / batches);
}

std::string read_all(const std::filesystem::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

bool same_tree(const std::filesystem::path& a, const std::filesystem::path& b, std::string& why)
{
    namespace fs = std::filesystem;
    std::vector<fs::path> files;
    for (const auto& e : fs::recursive_directory_iterator(a)) {
        if (e.is_regular_file()) {
            files.push_back(fs::relative(e.path(), a));
        }
    }
    std::size_t count_b = 0;
    for (const auto& e : fs::recursive_directory_iterator(b)) {
        count_b += e.is_regular_file() ? 1 : 0;
    }
    if (files.size() != count_b) {
        why = "different file counts";
        return false;
    }
    for (const auto& f : files) {
        if (!fs::exists(b / f) || read_all(a / f) != read_all(b / f)) {
            why = "file differs: " + f.string();
            return false;
        }
    }
    return true;
}

}  // namespace

Outcome doubly_stochastic_outputs(int trials)
{
    RandomStream stream(101);
    double worst = 0.0;
    for (int t = 0; t < trials; ++t) {
        const int H = 2 + t % 4;
        Eigen::MatrixXd zeta(H, H);
        for (int r = 0; r < H; ++r) {
            for (int h = 0; h < H; ++h) {
                // Some entries are exact zeros to exercise the floor.
                zeta(r, h) = stream.uniform() < 0.2 ? 0.0 : 10.0 * stream.uniform();
            }
            zeta(r, r) += 0.1;
        }
        worst = std::max(worst, ds_deviation(m_step({zeta, 10}).alpha));

        const MixtureParams truth = test_mixtures()[static_cast<std::size_t>(t % 3)];
        const RssDataset data = draw_rss_dataset(stream, truth, H, 6, random_alpha(stream, H));
        EmOptions options;
        options.throw_on_cap = false;
        worst = std::max(worst, ds_deviation(em_alpha(data, MisplacementMatrix::uniform(H), truth, options).alpha.alpha));
    }
    return {worst <= 1e-9, "max row/column deviation " + fmt(worst)};
}

Outcome order_stat_identities()
{
    double worst_mass = 0.0;
    double worst_avg = 0.0;
    for (const auto& p : test_mixtures()) {
        const double lo = p.means.minCoeff() - 14.0 * std::sqrt(p.variances.maxCoeff());
        const double hi = p.means.maxCoeff() + 14.0 * std::sqrt(p.variances.maxCoeff());
        for (int H = 1; H <= 5; ++H) {
            for (int h = 1; h <= H; ++h) {
                const double mass = simpson([&](double x) { return order_stat_pdf(x, h, H, p); }, lo, hi, 40000);
                worst_mass = std::max(worst_mass, std::abs(mass - 1.0));
            }
            for (int k = 0; k <= 200; ++k) {
                const double x = lo + (hi - lo) * k / 200.0;
                double avg = 0.0;
                for (int h = 1; h <= H; ++h) {
                    avg += order_stat_pdf(x, h, H, p);
                }
                avg /= H;
                const double f = mixture_pdf(x, p);
                worst_avg = std::max(worst_avg, std::abs(avg - f));
            }
        }
    }
    return {worst_mass <= 1e-6 && worst_avg <= 1e-10,
            "mass error " + fmt(worst_mass) + ", averaging error " + fmt(worst_avg)};
}

Outcome zeta_weight_identities(int trials)
{
    RandomStream stream(202);
    double worst_sum = 0.0;
    double worst_prop = 0.0;
    const auto mixtures = test_mixtures();
    for (int t = 0; t < trials; ++t) {
        const int H = 1 + t % 5;
        const MixtureParams& p = mixtures[static_cast<std::size_t>(t % 3)];
        const MisplacementMatrix alpha = random_alpha(stream, H);
        const double x = p.means.minCoeff() - 3.0 + (p.means.maxCoeff() - p.means.minCoeff() + 6.0) * stream.uniform();
        const int r = 1 + t % H;
        const Eigen::VectorXd z = zeta_weights(x, r, alpha, p);
        worst_sum = std::max(worst_sum, std::abs(z.sum() - 1.0));
        Eigen::VectorXd direct(H);
        for (int h = 1; h <= H; ++h) {
            direct[h - 1] = alpha.alpha(r - 1, h - 1) * order_stat_pdf(x, h, H, p);
        }
        direct /= direct.sum();
        worst_prop = std::max(worst_prop, (z - direct).cwiseAbs().maxCoeff());
    }
    return {worst_sum <= 1e-12 && worst_prop <= 1e-10,
            "sum error " + fmt(worst_sum) + ", proportionality error " + fmt(worst_prop)};
}

Outcome srs_conditionals_match_quadrature()
{
    const Eigen::Vector3d x(-0.3, 0.4, 1.2);
    const Eigen::Vector3i labels(0, 0, 1);
    Hyperparams het{Eigen::Vector2d(1.28, 1.5), Eigen::Vector2d(0.36, 0.7), Eigen::Vector2d(0.1, 1.0),
                    Eigen::Vector2d(0.8, 1.3), Eigen::Vector2d(1.0, 1.0), VarianceModel::Heteroscedastic};
    Hyperparams hom = het;
    hom.model = VarianceModel::Homoscedastic;
    hom.nu = Eigen::VectorXd::Constant(1, 1.28);
    hom.beta = Eigen::VectorXd::Constant(1, 0.36);
    const Eigen::Vector2d means(0.05, 1.1);
    const SufficientStats stats = sufficient_stats(x, labels, means);
    double worst = 0.0;

    // Compares a closed-form density with the grid-normalized target, checked at points
    // spread over [lo, hi].
    const auto check_points = [&](const std::function<double(double)>& log_target,
                                  const std::function<double(double)>& closed, double mass, double lo, double hi) {
        for (int k = 1; k < 50; ++k) {
            const double v = lo + (hi - lo) * k / 50.0;
            const double q = std::exp(log_target(v)) / mass;
            const double c = closed(v);
            if (c > 1e-6) {
                worst = std::max(worst, std::abs(q - c) / c);
            }
        }
    };
    const auto compare = [&](const std::function<double(double)>& log_target,
                             const std::function<double(double)>& closed, double lo, double hi) {
        const double mass = simpson([&](double v) { return std::exp(log_target(v)); }, lo, hi, 200000);
        check_points(log_target, closed, mass, lo, hi);
    };
    // Variances: integrate over t = log v so the heavy right tail is covered.
    const auto compare_positive = [&](const std::function<double(double)>& log_target,
                                      const std::function<double(double)>& closed, double mode) {
        const double mass = simpson([&](double t) { return std::exp(log_target(std::exp(t)) + t); },
                                    std::log(mode) - 12.0, std::log(mode) + 40.0, 400000);
        check_points(log_target, closed, mass, mode * 0.05, mode * 20.0);
    };

    for (int j = 0; j < 2; ++j) {
        const double var = 0.7;
        const NormalLaw law = srs_mu_conditional(stats, j, var, het);
        const auto log_target = [&](double mu) {
            double v = log_normal_pdf(mu, het.kappa[j], var / het.tau[j]);
            for (int i = 0; i < 3; ++i) {
                v += labels[i] == j ? log_normal_pdf(x[i], mu, var) : 0.0;
            }
            return v;
        };
        const double sd = std::sqrt(law.variance);
        compare(log_target, [&](double mu) { return std::exp(law.log_pdf(mu)); }, law.mean - 14 * sd,
                law.mean + 14 * sd);

        const InverseGammaLaw ig = srs_variance_conditional_het(stats, j, means[j], het);
        const auto log_var_target = [&](double v) {
            double t = -(het.nu[j] + 1.0) * std::log(v) - het.beta[j] / v +
                       log_normal_pdf(means[j], het.kappa[j], v / het.tau[j]);
            for (int i = 0; i < 3; ++i) {
                t += labels[i] == j ? log_normal_pdf(x[i], means[j], v) : 0.0;
            }
            return t;
        };
        const double mode = ig.rate / (ig.shape + 1.0);
        compare_positive(log_var_target, [&](double v) { return std::exp(ig.log_pdf(v)); }, mode);
    }

    const InverseGammaLaw ig = srs_variance_conditional_hom(stats, means, hom);
    const auto log_hom_target = [&](double v) {
        double t = -(hom.nu[0] + 1.0) * std::log(v) - hom.beta[0] / v;
        for (int j = 0; j < 2; ++j) {
            t += log_normal_pdf(means[j], hom.kappa[j], v / hom.tau[j]);
        }
        for (int i = 0; i < 3; ++i) {
            t += log_normal_pdf(x[i], means[labels[i]], v);
        }
        return t;
    };
    const double mode = ig.rate / (ig.shape + 1.0);
    compare_positive(log_hom_target, [&](double v) { return std::exp(ig.log_pdf(v)); }, mode);
    return {worst <= 1e-6, "max relative error " + fmt(worst)};
}

Outcome two_state_mh_frequencies()
{
    RandomStream stream(303);
    const double target[2] = {0.3, 0.7};
    const double proposal[2] = {0.6, 0.4};
    double state = 0.0;
    long ones = 0;
    const long steps = 200000;
    for (long t = 0; t < steps; ++t) {
        const MhResult step = mh_step(
            state, [&](double s) { return std::log(target[static_cast<int>(s)]); },
            [&](double s) { return std::log(proposal[static_cast<int>(s)]); },
            [&](RandomStream& s) { return s.uniform() < proposal[1] ? 1.0 : 0.0; }, stream);
        state = step.value;
        ones += state == 1.0 ? 1 : 0;
    }
    const double freq = static_cast<double>(ones) / steps;
    return {std::abs(freq - 0.7) <= 0.01, "frequency of state 2: " + fmt(freq) + " (target 0.7)"};
}

Outcome single_rank_matches_srs()
{
    const MixtureParams truth = MixtureParams::homoscedastic(Eigen::Vector2d(0.6, 0.4), Eigen::Vector2d(0.0, 4.0), 1.0);
    RandomStream data_stream(404);
    const Eigen::VectorXd values = draw_mixture_sample(data_stream, truth, 30);
    const RssDataset data{Eigen::MatrixXd(values), std::nullopt};

    const KMeansInit init = kmeans_init(values, 2, VarianceModel::Homoscedastic);
    const int iterations = 40000;
    RandomStream s1(505);
    RandomStream s2(606);
    const auto srs = relabel_ordered(burn_thin(run_srs_chain(values, init.start, init.hyper, iterations, s1).draws, 2000, 1));
    const auto rss = relabel_ordered(
        burn_thin(run_rss_chain(data, init.start, init.hyper, iterations, s2).draws, 2000, 1));

    std::string detail;
    bool pass = true;
    const auto names = estimand_names(2, VarianceModel::Homoscedastic);
    for (std::size_t e = 0; e < names.size(); ++e) {
        std::vector<double> a, b;
        for (const auto& d : srs) {
            a.push_back(estimand_values(d)[static_cast<Eigen::Index>(e)]);
        }
        for (const auto& d : rss) {
            b.push_back(estimand_values(d)[static_cast<Eigen::Index>(e)]);
        }
        double ma = 0.0, mb = 0.0;
        for (double v : a) {
            ma += v;
        }
        for (double v : b) {
            mb += v;
        }
        ma /= static_cast<double>(a.size());
        mb /= static_cast<double>(b.size());
        const double se = std::hypot(batch_se(a, 50), batch_se(b, 50));
        const double z = std::abs(ma - mb) / se;
        pass = pass && z <= 3.0;
        detail += names[e] + " |diff|/se=" + fmt(z) + " ";
    }
    return {pass, detail};
}

Outcome em_q_monotone(int datasets)
{
    RandomStream stream(707);
    double worst = 0.0;
    double worst_ll = 0.0;
    const auto mixtures = test_mixtures();
    for (int d = 0; d < datasets; ++d) {
        const int H = 2 + d % 3;
        const MixtureParams& p = mixtures[static_cast<std::size_t>(d % 3)];
        const RssDataset data = draw_rss_dataset(stream, p, H, 4 + d % 6, random_alpha(stream, H));
        const Eigen::MatrixXd table = rank_log_likelihoods(data, p);
        MisplacementMatrix alpha = d % 2 ? MisplacementMatrix::uniform(H) : random_alpha(stream, H);
        double ll = rank_log_likelihood(table, H, alpha);
        for (int t = 0; t < 60; ++t) {
            const ZetaAggregate zeta = e_step(table, H, alpha);
            MisplacementMatrix next = m_step(zeta);
            worst = std::min(worst, q_value(zeta, next) - q_value(zeta, alpha));
            const double next_ll = rank_log_likelihood(table, H, next);
            worst_ll = std::min(worst_ll, next_ll - ll);
            ll = next_ll;
            alpha = std::move(next);
        }
    }
    return {worst >= -1e-12 && worst_ll >= -1e-9,
            "largest Q decrease " + fmt(-worst) + ", largest log-likelihood decrease " + fmt(-worst_ll)};
}

Outcome end_to_end_determinism()
{
    namespace fs = std::filesystem;
    StudyConfig config;
    config.truth = MixtureParams::homoscedastic(Eigen::Vector2d(0.7, 0.3), Eigen::Vector2d(0.0, 5.0), 1.0);
    config.replicates = 6;
    config.sampler.iterations = 300;
    config.sampler.burn_in = 100;
    config.sampler.thin = 2;
    config.stage1_reps = 500;
    config.seed = 2024;

    const fs::path base = fs::temp_directory_path() / "rssmix_determinism";
    fs::remove_all(base);
    config.workers = 1;
    const StudyReport one = run_study(config);
    write_report(one, config, (base / "a").string(), "study");
    config.workers = 3;
    const StudyReport three = run_study(config);
    write_report(three, config, (base / "b").string(), "study");

    std::string why;
    bool pass = same_tree(base / "a", base / "b", why);

    // A single replicate rerun in isolation reproduces its file.
    const StudyReport alone = run_study(config, 4);
    write_report(alone, config, (base / "c").string(), "study");
    const std::string rep_file = "replicates/rep_00004.csv";
    if (pass && read_all(base / "a" / rep_file) != read_all(base / "c" / rep_file)) {
        pass = false;
        why = "replicate 4 rerun differs";
    }
    fs::remove_all(base);
    return {pass, pass ? "outputs identical across worker counts and isolated reruns" : why};
}

}  // namespace rssmix::checks
