// Prints one PASS/FAIL line per acceptance criterion; exits nonzero if any fails.

#include "property_checks.hpp"
#include "rssmix/experiment.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

using namespace rssmix;

namespace {

int worker_count()
{
    return std::max(1u, std::thread::hardware_concurrency());
}

const StudySummaryRow& row(const std::vector<StudySummaryRow>& rows, const std::string& name)
{
    for (const auto& r : rows) {
        if (r.estimand == name) {
            return r;
        }
    }
    throw std::runtime_error("no summary row for " + name);
}

checks::Outcome stage1_recovery()
{
    StudyConfig c;
    c.truth = study1_truth();
    c.set_sizes = {3};
    c.rhos = {0.9, 0.7};
    c.stage1_reps = 5000;
    const auto designs = stage1_designs(c);
    const Eigen::MatrixXd& hi = designs[0].alpha.alpha;
    const Eigen::MatrixXd& lo = designs[1].alpha.alpha;
    const bool pass = std::abs(hi(0, 0) - 0.9041) <= 0.02 && std::abs(hi(1, 1) - 0.8483) <= 0.02 &&
                      std::abs(lo(0, 0) - 0.8300) <= 0.02 && std::abs(lo(1, 0) - 0.1536) <= 0.02;
    std::ostringstream d;
    d << "rho=0.9: a11=" << hi(0, 0) << " a22=" << hi(1, 1) << "; rho=0.7: a11=" << lo(0, 0)
      << " a21=" << lo(1, 0);
    return {pass, d.str()};
}

struct StudyChecks {
    checks::Outcome directionality;
    checks::Outcome coverage;
};

StudyChecks study_one()
{
    StudyConfig c;
    c.truth = study1_truth();
    c.workers = worker_count();
    const StudyReport r = run_study(c);
    const auto& srs = r.srs_rows;
    const auto& rss = r.rss_rows.at(0);
    const double srs_pi = row(srs, "pi1").se_mid;
    const double rss_pi = row(rss, "pi1").se_mid;
    const double srs_ci = row(srs, "mu1").ci_mid;
    const double rss_ci = row(rss, "mu1").ci_mid;
    std::ostringstream d1;
    d1 << "median sq. error pi1 RSS " << rss_pi << " vs SRS " << srs_pi << "; median CI width mu1 RSS " << rss_ci
       << " vs SRS " << srs_ci << "; excluded SRS " << r.srs_excluded << " RSS " << r.rss_excluded.at(0);
    const bool dir = rss_pi <= srs_pi && rss_ci < srs_ci && srs_pi >= 0.002 && srs_pi <= 0.015 && !r.budget_exceeded;
    const double cov_mu = row(srs, "mu1").coverage;
    const double cov_pi = row(rss, "pi1").coverage;
    std::ostringstream d2;
    d2 << "SRS coverage mu1 " << cov_mu << "; RSS coverage pi1 " << cov_pi;
    return {{dir, d1.str()}, {cov_mu >= 0.90 && cov_pi >= 0.88 && cov_pi <= 1.0, d2.str()}};
}

checks::Outcome alpha_bias()
{
    StudyConfig c;
    c.truth = study1_truth();
    c.total_size = 36;
    c.workers = worker_count();
    const StudyReport r = run_study(c);
    double total = 0.0;
    int count = 0;
    for (const auto& rep : r.replicates) {
        if (rep.alpha_hat.at(0)) {
            total += std::abs((*rep.alpha_hat[0])(0, 0) - 0.9041);
            ++count;
        }
    }
    const double bias = count ? total / count : NAN;
    std::ostringstream d;
    d << "mean |a11_hat - 0.9041| = " << bias << " over " << count << " datasets";
    return {std::abs(bias - 0.085) <= 0.03, d.str()};
}

checks::Outcome property_suite()
{
    const std::vector<std::pair<std::string, std::function<checks::Outcome()>>> all{
        {"doubly stochastic", [] { return checks::doubly_stochastic_outputs(200); }},
        {"order statistics", [] { return checks::order_stat_identities(); }},
        {"zeta", [] { return checks::zeta_weight_identities(200); }},
        {"conjugate quadrature", [] { return checks::srs_conditionals_match_quadrature(); }},
        {"two-state MH", [] { return checks::two_state_mh_frequencies(); }},
        {"H=1 equivalence", [] { return checks::single_rank_matches_srs(); }},
        {"EM monotone", [] { return checks::em_q_monotone(100); }},
        {"determinism", [] { return checks::end_to_end_determinism(); }},
    };
    bool pass = true;
    std::ostringstream d;
    for (const auto& [name, check] : all) {
        const checks::Outcome o = check();
        pass = pass && o.pass;
        d << "\n    " << (o.pass ? "ok   " : "FAIL ") << name << ": " << o.detail;
    }
    return {pass, d.str()};
}

checks::Outcome case_study()
{
    CaseStudyConfig c;
    c.study.truth = bone_surrogate_truth();
    c.study.set_sizes = {2};
    c.study.rhos = {-0.49};
    c.study.workers = worker_count();
    const StudyReport r = run_case_study(c);
    const double srs = row(r.srs_rows, "sigma").ci_mid;
    const double rss = row(r.rss_rows.at(0), "sigma").ci_mid;
    std::ostringstream d;
    d << "median CI width sigma RSS " << rss << " vs SRS " << srs;
    return {rss < srs && !r.budget_exceeded, d.str()};
}

bool report(const char* id, const checks::Outcome& o, double seconds)
{
    std::printf("%s %s (%.0fs): %s\n", o.pass ? "PASS" : "FAIL", id, seconds, o.detail.c_str());
    std::fflush(stdout);
    return o.pass;
}

template <class F>
auto timed(F&& f, double& seconds)
{
    const auto start = std::chrono::steady_clock::now();
    auto out = f();
    seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return out;
}

}  // namespace

int main()
{
    bool ok = true;
    double s = 0.0;
    const checks::Outcome c1 = timed(stage1_recovery, s);
    ok &= report("C1 stage-1 misplacement recovery", c1, s);
    const StudyChecks study = timed(study_one, s);
    ok &= report("C2 study-one directionality", study.directionality, s);
    ok &= report("C3 coverage", study.coverage, 0.0);
    const checks::Outcome c4 = timed(alpha_bias, s);
    ok &= report("C4 EM misplacement bias", c4, s);
    const checks::Outcome c5 = timed(property_suite, s);
    ok &= report("C5 property suite", c5, s);
    const checks::Outcome c6 = timed(case_study, s);
    ok &= report("C6 case-study surrogate", c6, s);
    return ok ? 0 : 1;
}
