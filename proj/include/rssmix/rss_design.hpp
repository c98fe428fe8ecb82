#pragma once

#include "rssmix/distributions.hpp"
#include "rssmix/random.hpp"

#include <Eigen/Dense>

#include <iosfwd>
#include <optional>

namespace rssmix {

/// H x H ranking-error matrix; entry (r-1, h-1) is P(true rank h | judgment rank r).
struct MisplacementMatrix {
    Eigen::MatrixXd alpha;

    static MisplacementMatrix identity(int set_size);
    static MisplacementMatrix uniform(int set_size);

    int set_size() const { return static_cast<int>(alpha.rows()); }

    /// Throws std::invalid_argument unless square, entries in [0,1] and every
    /// row and column sums to 1 within `tol`.
    void validate(double tol = 1e-9) const;
};

/// Alternating row/column normalization until every row and column sum is within
/// `tol` of one, or `max_iter` sweeps. Input must be nonnegative with a positive
/// entry in every row and column.
Eigen::MatrixXd project_doubly_stochastic(Eigen::MatrixXd m, double tol = 1e-13, int max_iter = 10000);

/// Balanced ranked set sample. values(i, r-1) is the unit measured in cycle i at
/// judgment rank r. true_ranks is only known for simulated data.
struct RssDataset {
    Eigen::MatrixXd values;
    std::optional<Eigen::MatrixXi> true_ranks;

    int set_size() const { return static_cast<int>(values.cols()); }
    int cycles() const { return static_cast<int>(values.rows()); }
    Eigen::Index size() const { return values.size(); }

    /// Values in cycle-major order: index i*H + (r-1).
    Eigen::VectorXd pooled() const;

    void validate() const;
};

/// Additive-noise ranker: concomitant Z = X + eps, eps ~ N(0, (1-rho^2)/rho^2 * sigma^2).
/// A negative rho ranks on the reversed concomitant; |rho| is the ranking quality.
struct RankerConfig {
    double rho = 1.0;
    double sigma = 1.0;

    void validate() const;
    double noise_variance() const;
};

/// Default ranker noise scale for a population: 0.6 times the pooled within-component
/// standard deviation sqrt(sum_j pi_j sigma_j^2).
double default_ranker_scale(const MixtureParams& params);

double draw_mixture(RandomStream& stream, const MixtureParams& params);
Eigen::VectorXd draw_mixture_sample(RandomStream& stream, const MixtureParams& params, Eigen::Index count);

struct RssCycle {
    Eigen::VectorXd values;
    Eigen::VectorXi true_ranks;
};

/// One cycle: for each judgment rank r, a fresh set of H units is ranked on the
/// concomitant and the unit judged r-th is measured.
RssCycle draw_rss_cycle(RandomStream& stream, const MixtureParams& params, int set_size,
                        const RankerConfig& ranker);

/// Stage-1 misplacement estimate: count judgment->true rank over `reps` cycles,
/// divide by reps and project onto the doubly stochastic set.
MisplacementMatrix estimate_alpha_stage1(RandomStream& stream, const MixtureParams& params, int set_size,
                                         const RankerConfig& ranker, int reps);

/// Simulates ranking physically with a concomitant ranker.
RssDataset draw_rss_dataset(RandomStream& stream, const MixtureParams& params, int set_size, int cycles,
                            const RankerConfig& ranker);

/// Draws the true rank h from row r of alpha, then the h-th smallest of H mixture draws.
RssDataset draw_rss_dataset(RandomStream& stream, const MixtureParams& params, int set_size, int cycles,
                            const MisplacementMatrix& alpha);

/// CSV with header `cycle,judgment_rank,value[,true_rank]`; cycles and ranks are 1-based.
void write_rss_csv(std::ostream& out, const RssDataset& data);
RssDataset read_rss_csv(std::istream& in);

void write_matrix_csv(std::ostream& out, const Eigen::MatrixXd& m);
Eigen::MatrixXd read_matrix_csv(std::istream& in);

}  // namespace rssmix
