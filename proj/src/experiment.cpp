#include "rssmix/experiment.hpp"

#include "rssmix/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>
#include <tuple>

namespace rssmix {

namespace {

constexpr const char* kVersion = "0.1.0";
constexpr std::uint64_t kSrsData = 1;
constexpr std::uint64_t kSrsFit = 2;
constexpr std::uint64_t kStage1 = 0xA1FA;

std::uint64_t rss_data_purpose(std::size_t d) { return 100 + 2 * d; }
std::uint64_t rss_fit_purpose(std::size_t d) { return 101 + 2 * d; }

FitResult post_process(ChainOutput chain, const SamplerSettings& settings)
{
    FitResult fit;
    fit.draws = relabel_ordered(burn_thin(chain.draws, static_cast<std::size_t>(settings.burn_in),
                                          static_cast<std::size_t>(settings.thin)));
    fit.summary = summarize_posterior(fit.draws, settings.level);
    fit.alpha = std::move(chain.alpha);
    fit.tally = chain.tally;
    return fit;
}

// Judged unit of a set: position of the r-th smallest (or largest) concomitant.
Eigen::Index judged_position(const std::vector<double>& concomitant, int r, bool descending)
{
    std::vector<Eigen::Index> order(concomitant.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
        return descending ? concomitant[a] > concomitant[b] : concomitant[a] < concomitant[b];
    });
    return order[static_cast<std::size_t>(r - 1)];
}

int true_rank_in_set(const std::vector<double>& outcome, Eigen::Index pos)
{
    int rank = 1;
    for (std::size_t k = 0; k < outcome.size(); ++k) {
        const auto kk = static_cast<Eigen::Index>(k);
        if (outcome[k] < outcome[pos] || (outcome[k] == outcome[pos] && kk < pos)) {
            ++rank;
        }
    }
    return rank;
}

std::size_t draw_index(RandomStream& stream, std::size_t size)
{
    std::uniform_int_distribution<std::size_t> pick(0, size - 1);
    return pick(stream.engine());
}

// Unit indices for one replicate: distinct when sampling without replacement.
std::vector<std::size_t> draw_units(RandomStream& stream, std::size_t population, std::size_t count,
                                    bool with_replacement)
{
    std::vector<std::size_t> units(count);
    if (with_replacement) {
        for (auto& u : units) {
            u = draw_index(stream, population);
        }
        return units;
    }
    if (count > population) {
        throw DataError("population of " + std::to_string(population) + " units cannot supply " +
                        std::to_string(count) + " distinct units");
    }
    std::vector<std::size_t> pool(population);
    std::iota(pool.begin(), pool.end(), 0);
    for (std::size_t k = 0; k < count; ++k) {
        std::swap(pool[k], pool[k + draw_index(stream, population - k)]);
        units[k] = pool[k];
    }
    return units;
}

RssDataset rank_population(RandomStream& stream, const Population& pop, int set_size, int cycles, double rho,
                           bool with_replacement)
{
    const std::size_t H = static_cast<std::size_t>(set_size);
    const auto units = draw_units(stream, static_cast<std::size_t>(pop.outcome.size()),
                                  H * H * static_cast<std::size_t>(cycles), with_replacement);
    RssDataset data{Eigen::MatrixXd(cycles, set_size), Eigen::MatrixXi(cycles, set_size)};
    std::size_t next = 0;
    for (int i = 0; i < cycles; ++i) {
        for (int r = 1; r <= set_size; ++r) {
            std::vector<double> x(H), z(H);
            for (std::size_t k = 0; k < H; ++k) {
                x[k] = pop.outcome[static_cast<Eigen::Index>(units[next])];
                z[k] = pop.concomitant[static_cast<Eigen::Index>(units[next])];
                ++next;
            }
            const Eigen::Index pos = judged_position(z, r, rho < 0.0);
            data.values(i, r - 1) = x[static_cast<std::size_t>(pos)];
            (*data.true_ranks)(i, r - 1) = true_rank_in_set(x, pos);
        }
    }
    return data;
}

MisplacementMatrix population_stage1(RandomStream& stream, const Population& pop, int set_size, double rho,
                                     int reps)
{
    const std::size_t H = static_cast<std::size_t>(set_size);
    Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(set_size, set_size);
    for (int c = 0; c < reps; ++c) {
        for (int r = 1; r <= set_size; ++r) {
            std::vector<double> x(H), z(H);
            for (std::size_t k = 0; k < H; ++k) {
                const auto u = static_cast<Eigen::Index>(draw_index(stream, static_cast<std::size_t>(pop.outcome.size())));
                x[k] = pop.outcome[u];
                z[k] = pop.concomitant[u];
            }
            const Eigen::Index pos = judged_position(z, r, rho < 0.0);
            counts(r - 1, true_rank_in_set(x, pos) - 1) += 1.0;
        }
    }
    return {project_doubly_stochastic(counts / static_cast<double>(reps))};
}

RankerConfig ranker_for(const StudyConfig& config, double rho)
{
    return {rho, config.ranker_sigma.value_or(default_ranker_scale(config.truth))};
}

std::string design_label(const Design& d)
{
    std::ostringstream os;
    os << "RSS H=" << d.set_size << " rho=" << d.rho;
    return os.str();
}

std::string failure_text(const std::string& where, const std::exception& e)
{
    if (const auto* nc = dynamic_cast<const NonConvergence*>(&e)) {
        return where + ": EM did not converge in " + std::to_string(nc->iterations) + " iterations";
    }
    return where + ": " + e.what();
}

StudyReport run_replicates(const StudyConfig& config, std::vector<Design> designs, std::optional<int> only,
                           const Population* population)
{
    StudyReport report;
    report.truth = config.truth;
    report.designs = std::move(designs);
    if (population) {
        report.population_size = static_cast<long>(population->outcome.size());
    }

    std::vector<int> indices;
    if (only) {
        if (*only < 1 || *only > config.replicates) {
            throw ConfigError("replicate index outside 1.." + std::to_string(config.replicates));
        }
        indices.push_back(*only);
    } else {
        indices.resize(static_cast<std::size_t>(config.replicates));
        std::iota(indices.begin(), indices.end(), 1);
    }
    report.replicates.resize(indices.size());

    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto work = [&]() {
        for (std::size_t k = next++; k < indices.size(); k = next++) {
            try {
                report.replicates[k] = run_replicate(config, report.designs, indices[k], population);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) {
                    error = std::current_exception();
                }
            }
        }
    };
    const int workers = std::max(1, std::min<int>(config.workers, static_cast<int>(indices.size())));
    if (workers == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) {
            pool.emplace_back(work);
        }
        for (auto& t : pool) {
            t.join();
        }
    }
    if (error) {
        std::rethrow_exception(error);
    }
    finalize_report(report, config.max_failure_fraction);
    return report;
}

std::string fmt(double v, int precision = 17)
{
    std::ostringstream os;
    os << std::setprecision(precision) << v;
    return os.str();
}

void write_file(const std::filesystem::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw DataError("cannot write '" + path.string() + "'");
    }
    out << text;
}

std::vector<EstimateRecord> replicate_records(const StudyReport& report, const ReplicateOutcome& rep)
{
    const Eigen::VectorXd truth = estimand_values(report.truth);
    std::vector<EstimateRecord> out;
    auto add = [&](const std::string& method, int H, double rho, const PosteriorSummary& s) {
        for (std::size_t e = 0; e < s.estimands.size(); ++e) {
            const EstimandSummary& est = s.estimands[e];
            out.push_back({method, H, rho, rep.replicate, est.name, est.mode, est.interval.low, est.interval.high,
                           truth[static_cast<Eigen::Index>(e)]});
        }
    };
    if (rep.srs) {
        add("SRS", 0, 0.0, *rep.srs);
    }
    for (std::size_t d = 0; d < rep.rss.size(); ++d) {
        if (rep.rss[d]) {
            add("RSS", report.designs[d].set_size, report.designs[d].rho, *rep.rss[d]);
        }
    }
    return out;
}

std::vector<std::string> split_csv_line(const std::string& line)
{
    std::vector<std::string> fields;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ',')) {
        if (!field.empty() && field.back() == '\r') {
            field.pop_back();
        }
        fields.push_back(field);
    }
    if (!line.empty() && line.back() == ',') {
        fields.emplace_back();
    }
    return fields;
}

double parse_number(const std::string& text, int line_no)
{
    try {
        std::size_t used = 0;
        const double v = std::stod(text, &used);
        if (used == text.size()) {
            return v;
        }
    } catch (const std::exception&) {
    }
    throw DataError("line " + std::to_string(line_no) + ": '" + text + "' is not a number");
}

using GroupKey = std::tuple<std::string, int, double>;

// Groups records by (method, H, rho) keeping first-seen order; inside a group, by replicate.
std::vector<std::pair<GroupKey, std::map<int, std::vector<EstimateRecord>>>> group_records(
    const std::vector<EstimateRecord>& records)
{
    std::vector<std::pair<GroupKey, std::map<int, std::vector<EstimateRecord>>>> groups;
    for (const auto& rec : records) {
        const GroupKey key{rec.method, rec.set_size, rec.rho};
        auto it = std::find_if(groups.begin(), groups.end(), [&](const auto& g) { return g.first == key; });
        if (it == groups.end()) {
            groups.push_back({key, {}});
            it = std::prev(groups.end());
        }
        it->second[rec.replicate].push_back(rec);
    }
    return groups;
}

std::string h_text(const GroupKey& key)
{
    return std::get<0>(key) == "SRS" ? "-" : std::to_string(std::get<1>(key));
}

std::string rho_text(const GroupKey& key)
{
    return std::get<0>(key) == "SRS" ? "-" : fmt(std::get<2>(key), 6);
}

}  // namespace

FitResult fit_srs(const Eigen::VectorXd& values, Eigen::Index components, VarianceModel model,
                  const SamplerSettings& settings, RandomStream& stream)
{
    const KMeansInit init = kmeans_init(values, components, model);
    return post_process(run_srs_chain(values, init.start, init.hyper, settings.iterations, stream), settings);
}

FitResult fit_rss(const RssDataset& data, Eigen::Index components, VarianceModel model,
                  const SamplerSettings& settings, RandomStream& stream)
{
    const KMeansInit init = kmeans_init(data.pooled(), components, model);
    return post_process(run_rss_chain(data, init.start, init.hyper, settings.iterations, stream, settings.em),
                        settings);
}

std::vector<Design> stage1_designs(const StudyConfig& config)
{
    std::vector<Design> designs;
    for (int H : config.set_sizes) {
        for (double rho : config.rhos) {
            const std::size_t d = designs.size();
            RandomStream stream = RandomStream::derive(config.seed, kStage1, d);
            designs.push_back(
                {H, rho, estimate_alpha_stage1(stream, config.truth, H, ranker_for(config, rho), config.stage1_reps)});
        }
    }
    return designs;
}

ReplicateOutcome run_replicate(const StudyConfig& config, const std::vector<Design>& designs, int replicate,
                               const Population* population)
{
    const auto k = static_cast<std::uint64_t>(replicate);
    const Eigen::Index J = config.truth.components();
    const VarianceModel model = config.truth.model;
    ReplicateOutcome out;
    out.replicate = replicate;

    {
        RandomStream data_stream = RandomStream::derive(config.seed, k, kSrsData);
        Eigen::VectorXd values;
        if (population) {
            const auto units = draw_units(data_stream, static_cast<std::size_t>(population->outcome.size()),
                                          static_cast<std::size_t>(config.total_size),
                                          population->with_replacement);
            values.resize(config.total_size);
            for (std::size_t u = 0; u < units.size(); ++u) {
                values[static_cast<Eigen::Index>(u)] = population->outcome[static_cast<Eigen::Index>(units[u])];
            }
        } else {
            values = draw_mixture_sample(data_stream, config.truth, config.total_size);
        }
        RandomStream fit_stream = RandomStream::derive(config.seed, k, kSrsFit);
        try {
            out.srs = fit_srs(values, J, model, config.sampler, fit_stream).summary;
        } catch (const std::exception& e) {
            out.failures.push_back(failure_text("SRS", e));
        }
    }

    out.rss.resize(designs.size());
    out.alpha_hat.resize(designs.size());
    out.em_capped.assign(designs.size(), 0);
    for (std::size_t d = 0; d < designs.size(); ++d) {
        const Design& design = designs[d];
        const int cycles = config.total_size / design.set_size;
        RandomStream data_stream = RandomStream::derive(config.seed, k, rss_data_purpose(d));
        const RssDataset data = population ? rank_population(data_stream, *population, design.set_size, cycles,
                                                             design.rho, population->with_replacement)
                                           : draw_rss_dataset(data_stream, config.truth, design.set_size, cycles,
                                                              design.alpha);
        RandomStream fit_stream = RandomStream::derive(config.seed, k, rss_fit_purpose(d));
        try {
            FitResult fit = fit_rss(data, J, model, config.sampler, fit_stream);
            out.rss[d] = std::move(fit.summary);
            out.alpha_hat[d] = fit.alpha->alpha;
            out.em_capped[d] = fit.tally.em_capped;
        } catch (const std::exception& e) {
            out.failures.push_back(failure_text(design_label(design), e));
        }
    }
    return out;
}

void finalize_report(StudyReport& report, double max_failure_fraction)
{
    const Eigen::VectorXd truth = estimand_values(report.truth);
    const double total = static_cast<double>(report.replicates.size());
    std::vector<PosteriorSummary> srs;
    for (const auto& rep : report.replicates) {
        if (rep.srs) {
            srs.push_back(*rep.srs);
        }
    }
    report.srs_excluded = static_cast<int>(report.replicates.size() - srs.size());
    report.srs_rows = srs.size() >= 2 ? summarize_replicates(srs, truth) : std::vector<StudySummaryRow>{};
    report.budget_exceeded = total > 0 && report.srs_excluded / total > max_failure_fraction;

    report.rss_rows.assign(report.designs.size(), {});
    report.rss_excluded.assign(report.designs.size(), 0);
    for (std::size_t d = 0; d < report.designs.size(); ++d) {
        std::vector<PosteriorSummary> rss;
        for (const auto& rep : report.replicates) {
            if (d < rep.rss.size() && rep.rss[d]) {
                rss.push_back(*rep.rss[d]);
            }
        }
        report.rss_excluded[d] = static_cast<int>(report.replicates.size() - rss.size());
        if (rss.size() >= 2) {
            report.rss_rows[d] = summarize_replicates(rss, truth);
        }
        if (total > 0 && report.rss_excluded[d] / total > max_failure_fraction) {
            report.budget_exceeded = true;
        }
    }
}

StudyReport run_study(const StudyConfig& config, std::optional<int> only)
{
    config.validate();
    return run_replicates(config, stage1_designs(config), only, nullptr);
}

Population read_population_csv(std::istream& in, const std::string& outcome_column,
                               const std::string& concomitant_column)
{
    std::string line;
    if (!std::getline(in, line)) {
        throw DataError("population file is empty");
    }
    const auto header = split_csv_line(line);
    const auto find = [&](const std::string& name) {
        const auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) {
            throw DataError("line 1: no column named '" + name + "'");
        }
        return static_cast<std::size_t>(it - header.begin());
    };
    const std::size_t xo = find(outcome_column);
    const std::size_t zo = find(concomitant_column);
    std::vector<double> x, z;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") {
            continue;
        }
        const auto fields = split_csv_line(line);
        if (fields.size() != header.size()) {
            throw DataError("line " + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                            " fields, found " + std::to_string(fields.size()));
        }
        x.push_back(parse_number(fields[xo], line_no));
        z.push_back(parse_number(fields[zo], line_no));
        if (!std::isfinite(x.back()) || !std::isfinite(z.back())) {
            throw DataError("line " + std::to_string(line_no) + ": non-finite value");
        }
    }
    if (x.empty()) {
        throw DataError("population file has no data rows");
    }
    Population pop;
    pop.outcome = Eigen::Map<Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size()));
    pop.concomitant = Eigen::Map<Eigen::VectorXd>(z.data(), static_cast<Eigen::Index>(z.size()));
    return pop;
}

StudyReport run_case_study(const CaseStudyConfig& config, std::optional<int> only)
{
    config.validate();
    if (!config.dataset) {
        return run_study(config.study, only);
    }
    std::ifstream in(*config.dataset);
    if (!in) {
        throw DataError("cannot open dataset '" + *config.dataset + "'");
    }
    const Population pop = read_population_csv(in, config.outcome_column, config.concomitant_column);
    const StudyConfig& study = config.study;
    std::vector<Design> designs;
    for (int H : study.set_sizes) {
        for (double rho : study.rhos) {
            RandomStream stream = RandomStream::derive(study.seed, kStage1, designs.size());
            designs.push_back({H, rho, population_stage1(stream, pop, H, rho, study.stage1_reps)});
        }
    }
    if (!config.with_replacement) {
        const int most = *std::max_element(study.set_sizes.begin(), study.set_sizes.end());
        if (static_cast<long>(study.total_size) * most > pop.outcome.size()) {
            throw DataError("population of " + std::to_string(pop.outcome.size()) +
                            " units is too small for sampling without replacement");
        }
    }
    Population sampled = pop;
    sampled.with_replacement = config.with_replacement;
    return run_replicates(study, std::move(designs), only, &sampled);
}

std::vector<EstimateRecord> estimate_records(const StudyReport& report)
{
    std::vector<EstimateRecord> out;
    for (const auto& rep : report.replicates) {
        auto recs = replicate_records(report, rep);
        out.insert(out.end(), recs.begin(), recs.end());
    }
    return out;
}

void write_estimates_csv(std::ostream& out, const std::vector<EstimateRecord>& records)
{
    out << "method,H,rho,replicate,estimand,estimate,ci_low,ci_high,truth\n";
    for (const auto& r : records) {
        out << r.method << ',' << r.set_size << ',' << fmt(r.rho) << ',' << r.replicate << ',' << r.estimand << ','
            << fmt(r.estimate) << ',' << fmt(r.ci_low) << ',' << fmt(r.ci_high) << ',' << fmt(r.truth) << '\n';
    }
}

std::vector<EstimateRecord> read_estimates_csv(std::istream& in)
{
    std::string line;
    if (!std::getline(in, line)) {
        throw DataError("estimates file is empty");
    }
    if (!line.empty() && line.back() == '\r') {
        line.pop_back();
    }
    if (line != "method,H,rho,replicate,estimand,estimate,ci_low,ci_high,truth") {
        throw DataError("line 1: unexpected header '" + line + "'");
    }
    std::vector<EstimateRecord> out;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") {
            continue;
        }
        const auto f = split_csv_line(line);
        if (f.size() != 9) {
            throw DataError("line " + std::to_string(line_no) + ": expected 9 fields, found " +
                            std::to_string(f.size()));
        }
        if (f[0] != "SRS" && f[0] != "RSS") {
            throw DataError("line " + std::to_string(line_no) + ": unknown method '" + f[0] + "'");
        }
        EstimateRecord r;
        r.method = f[0];
        r.set_size = static_cast<int>(parse_number(f[1], line_no));
        r.rho = parse_number(f[2], line_no);
        r.replicate = static_cast<int>(parse_number(f[3], line_no));
        r.estimand = f[4];
        r.estimate = parse_number(f[5], line_no);
        r.ci_low = parse_number(f[6], line_no);
        r.ci_high = parse_number(f[7], line_no);
        r.truth = parse_number(f[8], line_no);
        out.push_back(std::move(r));
    }
    return out;
}

void write_summary_csv(std::ostream& out, const std::vector<EstimateRecord>& records)
{
    out << "Method,H,rho,Estimand,SE_L,SE_M,SE_U,CI_L,CI_M,CI_U,Coverage\n";
    for (const auto& [key, reps] : group_records(records)) {
        if (reps.size() < 2) {
            continue;
        }
        std::vector<PosteriorSummary> summaries;
        Eigen::VectorXd truth;
        for (const auto& [index, recs] : reps) {
            PosteriorSummary s;
            truth.resize(static_cast<Eigen::Index>(recs.size()));
            for (std::size_t e = 0; e < recs.size(); ++e) {
                s.estimands.push_back({recs[e].estimand, recs[e].estimate, {recs[e].ci_low, recs[e].ci_high, 0.95}});
                truth[static_cast<Eigen::Index>(e)] = recs[e].truth;
            }
            if (!summaries.empty() && summaries.front().estimands.size() != s.estimands.size()) {
                throw DataError("replicate " + std::to_string(index) + " has a different set of estimands");
            }
            summaries.push_back(std::move(s));
        }
        for (const auto& row : summarize_replicates(summaries, truth)) {
            out << std::get<0>(key) << ',' << h_text(key) << ',' << rho_text(key) << ',' << row.estimand << ','
                << fmt(row.se_low, 6) << ',' << fmt(row.se_mid, 6) << ',' << fmt(row.se_high, 6) << ','
                << fmt(row.ci_low, 6) << ',' << fmt(row.ci_mid, 6) << ',' << fmt(row.ci_high, 6) << ','
                << fmt(row.coverage, 6) << '\n';
        }
    }
}

void emit_plot_data(std::ostream& out, const std::vector<EstimateRecord>& records)
{
    out << "method,H,rho,estimand,min,q1,median,q3,max,whisker_low,whisker_high\n";
    for (const auto& [key, reps] : group_records(records)) {
        if (reps.size() < 5) {
            throw DataError("box statistics need at least five replicates per method");
        }
        std::vector<std::string> names;
        std::map<std::string, std::vector<double>> values;
        for (const auto& [index, recs] : reps) {
            for (const auto& r : recs) {
                if (!values.count(r.estimand)) {
                    names.push_back(r.estimand);
                }
                values[r.estimand].push_back(r.estimate);
            }
        }
        for (const auto& name : names) {
            const BoxStats b = box_stats(values[name]);
            out << std::get<0>(key) << ',' << h_text(key) << ',' << rho_text(key) << ',' << name << ','
                << fmt(b.min, 8) << ',' << fmt(b.q1, 8) << ',' << fmt(b.median, 8) << ',' << fmt(b.q3, 8) << ','
                << fmt(b.max, 8) << ',' << fmt(b.whisker_low, 8) << ',' << fmt(b.whisker_high, 8) << '\n';
        }
    }
}

void write_fit_summary(std::ostream& out, const PosteriorSummary& summary)
{
    out << "estimand,mode,ci_low,ci_high,level\n";
    for (const auto& e : summary.estimands) {
        out << e.name << ',' << fmt(e.mode) << ',' << fmt(e.interval.low) << ',' << fmt(e.interval.high) << ','
            << fmt(e.interval.level) << '\n';
    }
}

void write_report(const StudyReport& report, const StudyConfig& config, const std::string& dir,
                  const std::string& kind)
{
    namespace fs = std::filesystem;
    const fs::path root(dir);
    fs::create_directories(root / "replicates");

    for (const auto& rep : report.replicates) {
        std::ostringstream os;
        write_estimates_csv(os, replicate_records(report, rep));
        std::ostringstream name;
        name << "rep_" << std::setw(5) << std::setfill('0') << rep.replicate << ".csv";
        write_file(root / "replicates" / name.str(), os.str());
    }
    if (report.replicates.size() == 1 && config.replicates > 1) {
        return;
    }

    const auto records = estimate_records(report);
    {
        std::ostringstream os;
        write_estimates_csv(os, records);
        write_file(root / "replicates.csv", os.str());
    }
    {
        std::ostringstream os;
        write_summary_csv(os, records);
        write_file(root / "summary.csv", os.str());
    }
    {
        std::ostringstream os;
        os << "H,rho,judgment_rank,true_rank,alpha\n";
        for (const auto& d : report.designs) {
            for (int r = 0; r < d.set_size; ++r) {
                for (int h = 0; h < d.set_size; ++h) {
                    os << d.set_size << ',' << fmt(d.rho, 6) << ',' << r + 1 << ',' << h + 1 << ','
                       << fmt(d.alpha.alpha(r, h)) << '\n';
                }
            }
        }
        write_file(root / "stage1_alpha.csv", os.str());
    }
    {
        std::ostringstream os;
        os << "H,rho,judgment_rank,true_rank,true_value,mean_abs_bias,mse,replicates\n";
        for (std::size_t d = 0; d < report.designs.size(); ++d) {
            const Design& design = report.designs[d];
            const int H = design.set_size;
            Eigen::MatrixXd abs_bias = Eigen::MatrixXd::Zero(H, H);
            Eigen::MatrixXd sq = Eigen::MatrixXd::Zero(H, H);
            int count = 0;
            for (const auto& rep : report.replicates) {
                if (d < rep.alpha_hat.size() && rep.alpha_hat[d]) {
                    const Eigen::MatrixXd diff = *rep.alpha_hat[d] - design.alpha.alpha;
                    abs_bias += diff.cwiseAbs();
                    sq += diff.cwiseAbs2();
                    ++count;
                }
            }
            for (int r = 0; r < H; ++r) {
                for (int h = 0; h < H; ++h) {
                    os << H << ',' << fmt(design.rho, 6) << ',' << r + 1 << ',' << h + 1 << ','
                       << fmt(design.alpha.alpha(r, h), 6) << ',';
                    if (count > 0) {
                        os << fmt(abs_bias(r, h) / count, 6) << ',' << fmt(sq(r, h) / count, 6);
                    } else {
                        os << "nan,nan";
                    }
                    os << ',' << count << '\n';
                }
            }
        }
        write_file(root / "alpha_recovery.csv", os.str());
    }
    {
        std::ostringstream os;
        os << "replicate,failure\n";
        for (const auto& rep : report.replicates) {
            for (const auto& f : rep.failures) {
                os << rep.replicate << ',' << f << '\n';
            }
        }
        write_file(root / "failures.csv", os.str());
    }
    if (report.replicates.size() >= 5) {
        std::ostringstream os;
        emit_plot_data(os, records);
        write_file(root / "boxplot.csv", os.str());
    }

    nlohmann::ordered_json manifest;
    manifest["kind"] = kind;
    manifest["version"] = kVersion;
    manifest["eigen_version"] = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                                "." + std::to_string(EIGEN_MINOR_VERSION);
    manifest["seed"] = config.seed;
    nlohmann::ordered_json truth;
    truth["variance_model"] = config.truth.model == VarianceModel::Homoscedastic ? "homoscedastic" : "heteroscedastic";
    truth["weights"] = std::vector<double>(config.truth.weights.data(),
                                           config.truth.weights.data() + config.truth.weights.size());
    truth["means"] = std::vector<double>(config.truth.means.data(), config.truth.means.data() + config.truth.means.size());
    truth["variances"] = std::vector<double>(config.truth.variances.data(),
                                             config.truth.variances.data() + config.truth.variances.size());
    nlohmann::ordered_json cfg;
    cfg["truth"] = truth;
    cfg["total_size"] = config.total_size;
    cfg["set_sizes"] = config.set_sizes;
    cfg["rhos"] = config.rhos;
    cfg["ranker_sigma"] = config.ranker_sigma.value_or(default_ranker_scale(config.truth));
    cfg["replicates"] = config.replicates;
    cfg["iterations"] = config.sampler.iterations;
    cfg["burn_in"] = config.sampler.burn_in;
    cfg["thin"] = config.sampler.thin;
    cfg["level"] = config.sampler.level;
    cfg["em_tol"] = config.sampler.em.tol;
    cfg["em_max_iter"] = config.sampler.em.max_iter;
    cfg["em_on_cap"] = config.sampler.em.throw_on_cap ? "abort" : "continue";
    cfg["stage1_reps"] = config.stage1_reps;
    cfg["max_failure_fraction"] = config.max_failure_fraction;
    manifest["config"] = cfg;
    nlohmann::ordered_json excl;
    excl["SRS"] = report.srs_excluded;
    for (std::size_t d = 0; d < report.designs.size(); ++d) {
        excl[design_label(report.designs[d])] = report.rss_excluded[d];
    }
    manifest["excluded"] = excl;
    nlohmann::ordered_json capped;
    for (std::size_t d = 0; d < report.designs.size(); ++d) {
        long total = 0;
        for (const auto& rep : report.replicates) {
            total += d < rep.em_capped.size() ? rep.em_capped[d] : 0;
        }
        capped[design_label(report.designs[d])] = total;
    }
    manifest["em_steps_at_cap"] = capped;
    manifest["budget_exceeded"] = report.budget_exceeded;
    manifest["replicates_run"] = report.replicates.size();
    if (report.population_size) {
        manifest["population_size"] = *report.population_size;
    }
    write_file(root / "manifest.json", manifest.dump(2) + "\n");
}

}  // namespace rssmix
