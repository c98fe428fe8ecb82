#pragma once

#include "rssmix/chain_analysis.hpp"
#include "rssmix/config.hpp"
#include "rssmix/rss_design.hpp"
#include "rssmix/samplers.hpp"

#include <Eigen/Dense>

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace rssmix {

/// A fitted chain after burn-in, thinning and relabelling.
struct FitResult {
    std::vector<MixtureParams> draws;
    PosteriorSummary summary;
    std::optional<MisplacementMatrix> alpha;
    MhTally tally;
};

/// K-means prior and start, SRS Gibbs chain, post-processing.
FitResult fit_srs(const Eigen::VectorXd& values, Eigen::Index components, VarianceModel model,
                  const SamplerSettings& settings, RandomStream& stream);

/// K-means prior and start on the pooled values, RSS Metropolis-within-Gibbs chain,
/// post-processing. Throws NonConvergence when the embedded EM hits its cap.
FitResult fit_rss(const RssDataset& data, Eigen::Index components, VarianceModel model,
                  const SamplerSettings& settings, RandomStream& stream);

/// One (set size, ranking correlation) arm of a study with its stage-1 misplacement matrix.
struct Design {
    int set_size;
    double rho;
    MisplacementMatrix alpha;
};

struct ReplicateOutcome {
    int replicate = 0;
    std::optional<PosteriorSummary> srs;
    std::vector<std::optional<PosteriorSummary>> rss;        // one per design
    std::vector<std::optional<Eigen::MatrixXd>> alpha_hat;  // one per design
    std::vector<long> em_capped;                            // capped EM steps per design
    std::vector<std::string> failures;
};

/// Finite population used by the case study in dataset mode.
struct Population {
    Eigen::VectorXd outcome;
    Eigen::VectorXd concomitant;
    bool with_replacement = false;
};

struct StudyReport {
    MixtureParams truth;
    std::vector<Design> designs;
    std::vector<ReplicateOutcome> replicates;
    std::vector<StudySummaryRow> srs_rows;
    std::vector<std::vector<StudySummaryRow>> rss_rows;  // one table per design
    int srs_excluded = 0;
    std::vector<int> rss_excluded;
    bool budget_exceeded = false;
    std::optional<long> population_size;
};

/// Stage 1 for every (H, rho) pair of the config.
std::vector<Design> stage1_designs(const StudyConfig& config);

/// Deterministic given (seed, replicate) and the designs: draws SRS and RSS data,
/// fits both and records failures instead of throwing.
ReplicateOutcome run_replicate(const StudyConfig& config, const std::vector<Design>& designs, int replicate,
                               const Population* population = nullptr);

/// Two-stage simulation study. Replicates are spread over config.workers threads; the
/// result does not depend on the worker count. When `only` is set, just that replicate runs.
StudyReport run_study(const StudyConfig& config, std::optional<int> only = std::nullopt);

/// Surrogate mode draws from config.study.truth; dataset mode samples the finite population
/// read from config.dataset and ranks on its concomitant column.
StudyReport run_case_study(const CaseStudyConfig& config, std::optional<int> only = std::nullopt);

/// Reads a CSV with the named outcome and concomitant columns. Throws DataError.
Population read_population_csv(std::istream& in, const std::string& outcome_column,
                               const std::string& concomitant_column);

/// Tables and summaries for a finished report.
void finalize_report(StudyReport& report, double max_failure_fraction);

/// Writes manifest.json, stage1_alpha.csv, replicates.csv, replicates/rep_NNNNN.csv,
/// summary.csv, alpha_recovery.csv, failures.csv and boxplot.csv (when there are at least
/// five replicates) under `dir`.
void write_report(const StudyReport& report, const StudyConfig& config, const std::string& dir,
                  const std::string& kind);

/// One estimate row of replicates.csv.
struct EstimateRecord {
    std::string method;  // "SRS" or "RSS"
    int set_size = 0;    // 0 for SRS
    double rho = 0.0;
    int replicate = 0;
    std::string estimand;
    double estimate = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    double truth = 0.0;
};

std::vector<EstimateRecord> estimate_records(const StudyReport& report);
void write_estimates_csv(std::ostream& out, const std::vector<EstimateRecord>& records);
std::vector<EstimateRecord> read_estimates_csv(std::istream& in);

/// Summary table rows grouped by (method, H, rho), in first-seen order.
void write_summary_csv(std::ostream& out, const std::vector<EstimateRecord>& records);

/// Box statistics per (method, H, rho, estimand). Throws DataError with fewer than five
/// replicates in a group.
void emit_plot_data(std::ostream& out, const std::vector<EstimateRecord>& records);

void write_fit_summary(std::ostream& out, const PosteriorSummary& summary);

}  // namespace rssmix
