#include "rssmix/em_alpha.hpp"
#include "rssmix/errors.hpp"

#include <doctest.h>

#include <cmath>
#include <stdexcept>

using namespace rssmix;

namespace {

MixtureParams study_truth()
{
    return MixtureParams::homoscedastic(Eigen::Vector2d(0.7, 0.3), Eigen::Vector2d(0.0, 5.0), 1.0);
}

// Maximizer of z00 log a + z01 log(1-a) + z10 log(1-a) + z11 log a by grid search at step 1e-6.
double grid_argmax(const Eigen::Matrix2d& z)
{
    double best = 0.0;
    double best_value = -INFINITY;
    for (int k = 1; k < 1000000; ++k) {
        const double a = k * 1e-6;
        const double v = (z(0, 0) + z(1, 1)) * std::log(a) + (z(0, 1) + z(1, 0)) * std::log(1.0 - a);
        if (v > best_value) {
            best_value = v;
            best = a;
        }
    }
    return best;
}

}  // namespace

TEST_CASE("e-step under perfect ranking is n times the identity")
{
    RandomStream s(1);
    const RssDataset d = draw_rss_dataset(s, study_truth(), 3, 7, MisplacementMatrix::identity(3));
    const ZetaAggregate z = e_step(d, MisplacementMatrix::identity(3), study_truth());
    CHECK(z.cycles == 7);
    CHECK((z.zeta - 7.0 * Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("e-step with one rank")
{
    RandomStream s(2);
    const RssDataset d = draw_rss_dataset(s, study_truth(), 1, 5, MisplacementMatrix::identity(1));
    const ZetaAggregate z = e_step(d, MisplacementMatrix::identity(1), study_truth());
    CHECK(z.zeta.size() == 1);
    CHECK(z.zeta(0, 0) == doctest::Approx(5.0).epsilon(1e-15));
}

TEST_CASE("e-step rows sum to the cycle count")
{
    RandomStream s(3);
    for (int trial = 0; trial < 20; ++trial) {
        const int H = 2 + trial % 3;
        const RssDataset d = draw_rss_dataset(s, study_truth(), H, 6, MisplacementMatrix::uniform(H));
        Eigen::MatrixXd a = Eigen::MatrixXd::Random(H, H).cwiseAbs().array() + 0.05;
        const MisplacementMatrix alpha{project_doubly_stochastic(a)};
        const ZetaAggregate z = e_step(d, alpha, study_truth());
        CHECK((z.zeta.rowwise().sum().array() - 6.0).abs().maxCoeff() < 1e-9);
        CHECK(z.zeta.minCoeff() >= 0.0);
    }
}

TEST_CASE("m-step fixed points")
{
    const MisplacementMatrix id = m_step({4.0 * Eigen::MatrixXd::Identity(3, 3), 4});
    CHECK((id.alpha - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() < 1e-9);
    const MisplacementMatrix flat = m_step({Eigen::MatrixXd::Constant(4, 4, 2.5), 10});
    CHECK((flat.alpha.array() - 0.25).abs().maxCoeff() < 1e-12);
}

TEST_CASE("two-rank m-step matches a grid search")
{
    Eigen::Matrix2d z;
    z << 3.0, 1.0, 1.0, 3.0;
    CHECK(m_step({z, 4}).alpha(0, 0) == doctest::Approx(0.75).epsilon(1e-9));
    CHECK(std::abs(grid_argmax(z) - 0.75) < 1e-6);
    z << 4.0, 1.0, 2.0, 3.0;
    CHECK(m_step({z, 5}).alpha(0, 0) == doctest::Approx(0.7).epsilon(1e-9));
}

TEST_CASE("two-rank m-step matches the grid search on random zeta")
{
    RandomStream s(4);
    for (int trial = 0; trial < 100; ++trial) {
        Eigen::Matrix2d raw;
        for (int k = 0; k < 4; ++k) {
            raw(k) = 0.05 + 5.0 * s.uniform();
        }
        // Rows of an aggregate share the cycle total.
        Eigen::Matrix2d z = raw;
        z.row(1) *= raw.row(0).sum() / raw.row(1).sum();
        const MisplacementMatrix a = m_step({z, 1});
        CHECK_NOTHROW(a.validate(1e-9));
        CHECK(std::abs(a.alpha(0, 0) - grid_argmax(z)) < 1e-5);
    }
}

TEST_CASE("m-step rejects an empty row")
{
    Eigen::Matrix2d z;
    z << 0.0, 0.0, 1.0, 1.0;
    CHECK_THROWS_AS(m_step({z, 1}), std::domain_error);
}

TEST_CASE("m-step increases the expected objective")
{
    RandomStream s(5);
    for (int trial = 0; trial < 30; ++trial) {
        const int H = 2 + trial % 4;
        Eigen::MatrixXd z(H, H);
        for (Eigen::Index k = 0; k < z.size(); ++k) {
            z(k) = s.uniform() * 3.0;
        }
        const ZetaAggregate agg{z, 1};
        const MisplacementMatrix best = m_step(agg);
        const MisplacementMatrix other{project_doubly_stochastic(z.array() + 0.1)};
        CHECK(q_value(agg, best) >= q_value(agg, other) - 1e-12);
        CHECK(q_value(agg, best) >= q_value(agg, MisplacementMatrix::uniform(H)) - 1e-12);
    }
}

TEST_CASE("EM with one rank finishes immediately")
{
    RandomStream s(6);
    const RssDataset d = draw_rss_dataset(s, study_truth(), 1, 8, MisplacementMatrix::identity(1));
    const EmResult r = em_alpha(d, MisplacementMatrix::uniform(1), study_truth());
    CHECK(r.iterations == 1);
    CHECK(r.alpha.alpha(0, 0) == 1.0);
}

TEST_CASE("EM recovers near-perfect ranking")
{
    RandomStream s(7);
    const MixtureParams p = study_truth();
    const RssDataset d = draw_rss_dataset(s, p, 3, 20, RankerConfig{1.0, 0.6});
    const EmResult r = em_alpha(d, MisplacementMatrix::uniform(3), p, {1e-7, 10000, true});
    CHECK(r.converged);
    CHECK((r.alpha.alpha - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() < 0.05);
}

TEST_CASE("EM output is doubly stochastic and the likelihood never falls")
{
    RandomStream s(8);
    const MixtureParams p = study_truth();
    const RssDataset d = draw_rss_dataset(s, p, 3, 12, RankerConfig{0.8, 0.6});
    const Eigen::MatrixXd loglik = rank_log_likelihoods(d, p);
    MisplacementMatrix a = MisplacementMatrix::uniform(3);
    double previous = rank_log_likelihood(loglik, 3, a);
    for (int it = 0; it < 40; ++it) {
        a = em_alpha(loglik, 3, a, {1e-7, 1, false}).alpha;
        CHECK_NOTHROW(a.validate(1e-9));
        const double now = rank_log_likelihood(loglik, 3, a);
        CHECK(now >= previous - 1e-9);
        previous = now;
    }
}

TEST_CASE("EM cap handling")
{
    RandomStream s(9);
    const MixtureParams p = study_truth();
    const RssDataset d = draw_rss_dataset(s, p, 3, 12, RankerConfig{0.8, 0.6});
    CHECK_THROWS_AS(em_alpha(d, MisplacementMatrix::uniform(3), p, {1e-15, 3, true}), NonConvergence);
    try {
        em_alpha(d, MisplacementMatrix::uniform(3), p, {1e-15, 3, true});
    } catch (const NonConvergence& e) {
        CHECK(e.iterations == 3);
    }
    const EmResult r = em_alpha(d, MisplacementMatrix::uniform(3), p, {1e-15, 3, false});
    CHECK_FALSE(r.converged);
    CHECK(r.iterations == 3);
    CHECK_NOTHROW(r.alpha.validate(1e-9));
}

TEST_CASE("EM warm start at a fixed point stops at once")
{
    RandomStream s(10);
    const MixtureParams p = study_truth();
    const RssDataset d = draw_rss_dataset(s, p, 2, 15, RankerConfig{0.9, 0.6});
    const EmResult first = em_alpha(d, MisplacementMatrix::uniform(2), p, {1e-12, 100000, true});
    const EmResult again = em_alpha(d, first.alpha, p, {1e-7, 100, true});
    CHECK(again.iterations == 1);
    CHECK((again.alpha.alpha - first.alpha.alpha).cwiseAbs().maxCoeff() < 1e-7);
}
