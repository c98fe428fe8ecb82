#include "rssmix/em_alpha.hpp"

#include "rssmix/errors.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace rssmix {

namespace {

constexpr double kZetaFloor = 1e-12;

// Dual objective sum(lambda) + sum(mu) - sum z log(lambda_r + mu_h); +inf off the domain.
double dual_objective(const Eigen::MatrixXd& z, const Eigen::VectorXd& lambda, const Eigen::VectorXd& mu)
{
    double value = lambda.sum() + mu.sum();
    for (Eigen::Index r = 0; r < z.rows(); ++r) {
        for (Eigen::Index h = 0; h < z.cols(); ++h) {
            const double s = lambda[r] + mu[h];
            if (!(s > 0.0)) {
                return std::numeric_limits<double>::infinity();
            }
            value -= z(r, h) * std::log(s);
        }
    }
    return value;
}

// Maximizes sum z log(alpha) over doubly stochastic alpha for strictly positive z.
// Stationarity gives alpha_rh = z_rh / (lambda_r + mu_h); the multipliers minimize the
// convex dual, solved by damped Newton. The dual is flat along (1, -1), so that
// direction is added to the Hessian. `lambda` and `mu` carry a warm start in and the
// solution out; an empty start means lambda = mu = n/2.
Eigen::MatrixXd constrained_maximizer(const Eigen::MatrixXd& z, Eigen::VectorXd& lambda, Eigen::VectorXd& mu)
{
    const Eigen::Index H = z.rows();
    if (lambda.size() != H || mu.size() != H) {
        const double n = z.sum() / static_cast<double>(H);
        lambda = Eigen::VectorXd::Constant(H, 0.5 * n);
        mu = Eigen::VectorXd::Constant(H, 0.5 * n);
    }
    Eigen::VectorXd flat(2 * H);
    flat << Eigen::VectorXd::Ones(H), -Eigen::VectorXd::Ones(H);
    flat /= std::sqrt(2.0 * static_cast<double>(H));

    Eigen::MatrixXd a(H, H);
    const auto fill_alpha = [&](const Eigen::VectorXd& l, const Eigen::VectorXd& m) {
        for (Eigen::Index h = 0; h < H; ++h) {
            for (Eigen::Index r = 0; r < H; ++r) {
                a(r, h) = z(r, h) / (l[r] + m[h]);
            }
        }
    };

    double value = dual_objective(z, lambda, mu);
    if (!std::isfinite(value)) {
        const double n = z.sum() / static_cast<double>(H);
        lambda.setConstant(0.5 * n);
        mu.setConstant(0.5 * n);
        value = dual_objective(z, lambda, mu);
    }
    Eigen::VectorXd grad(2 * H);
    Eigen::MatrixXd hess(2 * H, 2 * H);
    Eigen::VectorXd l(H), m(H);
    for (int iter = 0; iter < 100; ++iter) {
        fill_alpha(lambda, mu);
        grad << Eigen::VectorXd::Ones(H) - a.rowwise().sum(), Eigen::VectorXd::Ones(H) - a.colwise().sum().transpose();
        if (grad.cwiseAbs().maxCoeff() <= 1e-13) {
            break;
        }
        hess = flat * flat.transpose();
        for (Eigen::Index r = 0; r < H; ++r) {
            for (Eigen::Index h = 0; h < H; ++h) {
                const double w = a(r, h) / (lambda[r] + mu[h]);
                hess(r, r) += w;
                hess(H + h, H + h) += w;
                hess(r, H + h) += w;
                hess(H + h, r) += w;
            }
        }
        const Eigen::VectorXd step = hess.ldlt().solve(-grad);
        const double slope = grad.dot(step);
        // Slack for rounding in the objective near the optimum.
        const double slack = 1e-13 * (1.0 + std::abs(value));
        double t = 1.0;
        bool moved = false;
        for (int k = 0; k < 40; ++k, t *= 0.5) {
            l = lambda + t * step.head(H);
            m = mu + t * step.tail(H);
            const double candidate = dual_objective(z, l, m);
            if (candidate <= value + 1e-4 * t * slope + slack) {
                lambda = l;
                mu = m;
                value = candidate;
                moved = true;
                break;
            }
        }
        if (!moved) {
            break;
        }
    }
    fill_alpha(lambda, mu);
    // Rounding residue is removed by scaling, which barely moves a near-feasible point.
    return project_doubly_stochastic(a);
}

}  // namespace

Eigen::MatrixXd rank_log_likelihoods(const RssDataset& data, const MixtureParams& params)
{
    const int H = data.set_size();
    const Eigen::VectorXd x = data.pooled();
    Eigen::MatrixXd out(x.size(), H);
    for (Eigen::Index k = 0; k < x.size(); ++k) {
        const double log_cdf = log_mixture_cdf(x[k], params);
        const double log_sf = log_mixture_sf(x[k], params);
        for (int h = 1; h <= H; ++h) {
            out(k, h - 1) = log_beta_pdf_at_cdf(log_cdf, log_sf, h, H);
        }
    }
    return out;
}

ZetaAggregate e_step(const Eigen::MatrixXd& rank_loglik, int set_size, const MisplacementMatrix& alpha)
{
    if (alpha.set_size() != set_size || rank_loglik.cols() != set_size || rank_loglik.rows() % set_size != 0) {
        throw std::invalid_argument("E-step inputs disagree on the set size");
    }
    const Eigen::Index n = rank_loglik.rows() / set_size;
    const Eigen::MatrixXd log_alpha = alpha.alpha.array().log();
    ZetaAggregate agg{Eigen::MatrixXd::Zero(set_size, set_size), static_cast<int>(n)};
    Eigen::VectorXd log_w(set_size);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (int r = 0; r < set_size; ++r) {
            log_w = log_alpha.row(r).transpose() + rank_loglik.row(i * set_size + r).transpose();
            const double total = log_sum_exp(log_w);
            if (!std::isfinite(total)) {
                throw std::domain_error("E-step weights vanish for an observation");
            }
            agg.zeta.row(r) += (log_w.array() - total).exp().matrix().transpose();
        }
    }
    return agg;
}

ZetaAggregate e_step(const RssDataset& data, const MisplacementMatrix& alpha, const MixtureParams& params)
{
    return e_step(rank_log_likelihoods(data, params), data.set_size(), alpha);
}

MisplacementMatrix m_step(const ZetaAggregate& zeta)
{
    const Eigen::MatrixXd& z = zeta.zeta;
    if (z.rows() != z.cols() || z.rows() < 1) {
        throw std::invalid_argument("zeta aggregate must be square");
    }
    for (Eigen::Index r = 0; r < z.rows(); ++r) {
        if (!(z.row(r).sum() > 0.0)) {
            throw std::domain_error("degenerate augmentation: zeta row " + std::to_string(r + 1) + " is all zero");
        }
    }
    Eigen::VectorXd lambda, mu;
    return {constrained_maximizer(z.cwiseMax(kZetaFloor), lambda, mu)};
}

double q_value(const ZetaAggregate& zeta, const MisplacementMatrix& alpha)
{
    double q = 0.0;
    for (Eigen::Index r = 0; r < zeta.zeta.rows(); ++r) {
        for (Eigen::Index h = 0; h < zeta.zeta.cols(); ++h) {
            if (zeta.zeta(r, h) > 0.0) {
                q += zeta.zeta(r, h) * std::log(alpha.alpha(r, h));
            }
        }
    }
    return q;
}

double rank_log_likelihood(const Eigen::MatrixXd& rank_loglik, int set_size, const MisplacementMatrix& alpha)
{
    const Eigen::Index n = rank_loglik.rows() / set_size;
    const Eigen::MatrixXd log_alpha = alpha.alpha.array().log();
    double total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        for (int r = 0; r < set_size; ++r) {
            total += log_sum_exp(log_alpha.row(r).transpose() + rank_loglik.row(i * set_size + r).transpose());
        }
    }
    return total;
}

EmResult em_alpha(const Eigen::MatrixXd& rank_loglik, int set_size, const MisplacementMatrix& alpha0,
                  const EmOptions& options)
{
    alpha0.validate(1e-6);
    if (rank_loglik.cols() != set_size || rank_loglik.rows() % set_size != 0) {
        throw std::invalid_argument("E-step inputs disagree on the set size");
    }
    // Each row rescaled by its maximum; the E-step weights are invariant to that.
    const Eigen::MatrixXd scaled =
        (rank_loglik.colwise() - rank_loglik.rowwise().maxCoeff()).array().exp().matrix();
    const Eigen::Index n = rank_loglik.rows() / set_size;
    MisplacementMatrix current = alpha0;
    ZetaAggregate agg{Eigen::MatrixXd(set_size, set_size), static_cast<int>(n)};
    Eigen::RowVectorXd w(set_size);
    Eigen::VectorXd lambda, mu;
    for (int iter = 1; iter <= options.max_iter; ++iter) {
        agg.zeta.setZero();
        for (Eigen::Index i = 0; i < n; ++i) {
            for (int r = 0; r < set_size; ++r) {
                w = current.alpha.row(r).cwiseProduct(scaled.row(i * set_size + r));
                const double total = w.sum();
                if (!(total > 0.0) || !std::isfinite(total)) {
                    throw std::domain_error("E-step weights vanish for an observation");
                }
                agg.zeta.row(r) += w / total;
            }
        }
        for (int r = 0; r < set_size; ++r) {
            if (!(agg.zeta.row(r).sum() > 0.0)) {
                throw std::domain_error("degenerate augmentation: zeta row " + std::to_string(r + 1) + " is all zero");
            }
        }
        MisplacementMatrix next{constrained_maximizer(agg.zeta.cwiseMax(kZetaFloor), lambda, mu)};
        const double change = (next.alpha - current.alpha).cwiseAbs().maxCoeff();
        current = std::move(next);
        if (change <= options.tol) {
            return {std::move(current), iter, true};
        }
    }
    if (!options.throw_on_cap) {
        return {std::move(current), options.max_iter, false};
    }
    throw NonConvergence("EM for the misplacement matrix did not converge in " +
                             std::to_string(options.max_iter) + " iterations",
                         options.max_iter);
}

EmResult em_alpha(const RssDataset& data, const MisplacementMatrix& alpha0, const MixtureParams& params,
                  const EmOptions& options)
{
    return em_alpha(rank_log_likelihoods(data, params), data.set_size(), alpha0, options);
}

}  // namespace rssmix
