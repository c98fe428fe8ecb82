#include "rssmix/distributions.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <stdexcept>

using namespace rssmix;

namespace {

MixtureParams two_component()
{
    return MixtureParams::homoscedastic(Eigen::Vector2d(0.7, 0.3), Eigen::Vector2d(0.0, 5.0), 1.0);
}

template <class F>
double simpson(F&& f, double a, double b, int panels)
{
    const double h = (b - a) / panels;
    double s = f(a) + f(b);
    for (int k = 1; k < panels; ++k) {
        s += f(a + k * h) * (k % 2 ? 4.0 : 2.0);
    }
    return s * h / 3.0;
}

}  // namespace

TEST_CASE("standard normal cdf against high-precision values")
{
    CHECK(std_normal_cdf(0.0) == 0.5);
    CHECK(std_normal_cdf(-1.0) == doctest::Approx(0.158655253931457051).epsilon(1e-14));
    CHECK(std_normal_cdf(1.5) == doctest::Approx(0.933192798731141934).epsilon(1e-14));
    CHECK(std_normal_cdf(-8.0) == doctest::Approx(6.22096057427178412e-16).epsilon(1e-13));
}

TEST_CASE("log normal cdf stays accurate deep in the lower tail")
{
    CHECK(log_std_normal_cdf(-10.0) == doctest::Approx(-53.2312851505124706).epsilon(1e-13));
    CHECK(log_std_normal_cdf(-30.0) == doctest::Approx(-454.321243956343197).epsilon(1e-13));
    CHECK(log_normal_sf(10.0, 0.0, 1.0) == doctest::Approx(-53.2312851505124706).epsilon(1e-13));
    CHECK(std::isfinite(log_normal_cdf(-60.0, 0.0, 1.0)));
}

TEST_CASE("mixture pdf at known points")
{
    const MixtureParams one = MixtureParams::heteroscedastic(Eigen::VectorXd::Ones(1), Eigen::VectorXd::Zero(1),
                                                             Eigen::VectorXd::Ones(1));
    CHECK(mixture_pdf(0.0, one) == doctest::Approx(1.0 / std::sqrt(2.0 * std::numbers::pi)).epsilon(1e-14));
    CHECK(mixture_pdf(0.0, two_component()) == doctest::Approx(0.279260042296857295).epsilon(1e-14));
    CHECK(log_mixture_pdf(0.0, two_component()) == doctest::Approx(std::log(0.279260042296857295)).epsilon(1e-14));
}

TEST_CASE("symmetric mixture has a symmetric density")
{
    const MixtureParams p =
        MixtureParams::homoscedastic(Eigen::Vector2d(0.5, 0.5), Eigen::Vector2d(-1.7, 1.7), 0.8);
    for (double x : {0.1, 0.9, 2.3, 5.0}) {
        CHECK(mixture_pdf(x, p) == doctest::Approx(mixture_pdf(-x, p)).epsilon(1e-14));
    }
}

TEST_CASE("mixture cdf limits, median and a quadrature value")
{
    const MixtureParams p = two_component();
    CHECK(mixture_cdf(-50.0, p) == doctest::Approx(0.0));
    CHECK(mixture_cdf(60.0, p) == doctest::Approx(1.0));
    const MixtureParams one = MixtureParams::heteroscedastic(Eigen::VectorXd::Ones(1), Eigen::VectorXd::Zero(1),
                                                             Eigen::VectorXd::Ones(1));
    CHECK(mixture_cdf(0.0, one) == 0.5);
    const double at = mixture_cdf(2.5, p);
    CHECK(at > 0.69);
    CHECK(at < 0.71);
    CHECK(at == doctest::Approx(0.697516133869689546).epsilon(1e-12));
}

TEST_CASE("mixture cdf is nondecreasing and log sf matches 1 - cdf")
{
    const MixtureParams p = MixtureParams::heteroscedastic(Eigen::Vector3d(0.2, 0.5, 0.3),
                                                           Eigen::Vector3d(-2.0, 1.0, 4.0),
                                                           Eigen::Vector3d(0.5, 2.0, 1.0));
    double previous = 0.0;
    for (double x = -12.0; x <= 15.0; x += 0.01) {
        const double c = mixture_cdf(x, p);
        REQUIRE(c >= previous);
        previous = c;
        if (c < 0.999) {
            REQUIRE(std::exp(log_mixture_sf(x, p)) == doctest::Approx(1.0 - c).epsilon(1e-12));
        }
    }
}

TEST_CASE("mixture pdf integrates to one for random mixtures")
{
    for (int J = 1; J <= 5; ++J) {
        Eigen::VectorXd w(J), m(J), v(J);
        for (int j = 0; j < J; ++j) {
            w[j] = 1.0 + j;
            m[j] = -3.0 + 2.1 * j;
            v[j] = 0.3 + 0.4 * j;
        }
        w /= w.sum();
        const MixtureParams p = MixtureParams::heteroscedastic(w, m, v);
        const double s = std::sqrt(v.maxCoeff());
        const double mass =
            simpson([&](double x) { return mixture_pdf(x, p); }, m.minCoeff() - 10 * s, m.maxCoeff() + 10 * s, 20000);
        CHECK(mass == doctest::Approx(1.0).epsilon(1e-6));
    }
}

TEST_CASE("order statistic density at a reference point")
{
    CHECK(order_stat_pdf(1.0, 2, 3, two_component()) == doctest::Approx(0.24608654128997735).epsilon(1e-12));
}

TEST_CASE("single-unit set reduces to the mixture density")
{
    const MixtureParams p = two_component();
    for (double x : {-2.0, 0.0, 2.5, 5.0, 9.0}) {
        CHECK(order_stat_pdf(x, 1, 1, p) == doctest::Approx(mixture_pdf(x, p)).epsilon(1e-14));
        CHECK(beta_pdf_at_cdf(x, 1, 1, p) == doctest::Approx(1.0).epsilon(1e-14));
    }
}

TEST_CASE("beta(2,2) density at the mixture median is 1.5")
{
    const MixtureParams p =
        MixtureParams::homoscedastic(Eigen::Vector2d(0.5, 0.5), Eigen::Vector2d(-1.0, 1.0), 1.0);
    CHECK(beta_pdf_at_cdf(0.0, 2, 3, p) == doctest::Approx(1.5).epsilon(1e-14));
    CHECK(std::exp(log_beta_pdf(0.5, 2.0, 2.0)) == doctest::Approx(1.5).epsilon(1e-14));
}

TEST_CASE("order statistic density is f times the beta density at F")
{
    const MixtureParams p = two_component();
    for (int k = 0; k < 20; ++k) {
        const double x = -3.0 + 0.55 * k;
        for (int h = 1; h <= 4; ++h) {
            CHECK(order_stat_pdf(x, h, 4, p) ==
                  doctest::Approx(mixture_pdf(x, p) * beta_pdf_at_cdf(x, h, 4, p)).epsilon(1e-12));
        }
    }
}

TEST_CASE("ranks outside the set are rejected")
{
    const MixtureParams p = two_component();
    CHECK_THROWS_AS(order_stat_pdf(0.0, 0, 3, p), std::invalid_argument);
    CHECK_THROWS_AS(order_stat_pdf(0.0, 4, 3, p), std::invalid_argument);
    CHECK_THROWS_AS(beta_pdf_at_cdf(0.0, 3, 2, p), std::invalid_argument);
}

TEST_CASE("parameter validation")
{
    CHECK_NOTHROW(two_component().validate());
    CHECK_THROWS_AS(MixtureParams::homoscedastic(Eigen::Vector2d(0.6, 0.3), Eigen::Vector2d(0, 1), 1.0).validate(),
                    std::invalid_argument);
    CHECK_THROWS_AS(MixtureParams::homoscedastic(Eigen::Vector2d(1.0, 0.0), Eigen::Vector2d(0, 1), 1.0).validate(),
                    std::invalid_argument);
    CHECK_THROWS_AS(MixtureParams::heteroscedastic(Eigen::Vector2d(0.5, 0.5), Eigen::Vector2d(0, 1),
                                                   Eigen::Vector2d(1.0, -1.0))
                        .validate(),
                    std::invalid_argument);
}

TEST_CASE("mixture moments")
{
    const MixtureParams p = two_component();
    CHECK(mixture_mean(p) == doctest::Approx(1.5));
    CHECK(mixture_sd(p) == doctest::Approx(std::sqrt(1.0 + 0.7 * 0.3 * 25.0)));
}
