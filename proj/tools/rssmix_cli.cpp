#include "rssmix/config.hpp"
#include "rssmix/errors.hpp"
#include "rssmix/experiment.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

using namespace rssmix;

namespace {

enum ExitCode { kOk = 0, kFailure = 1, kConfig = 2, kData = 3, kNonConvergence = 4 };

struct GlobalOptions {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<int> workers;
    bool paper_scale = false;
};

KeyValueConfig load_config(const GlobalOptions& g)
{
    KeyValueConfig kv = g.config.empty() ? KeyValueConfig{} : KeyValueConfig::load(g.config);
    if (g.seed) {
        kv.set("seed", std::to_string(*g.seed));
    }
    if (g.workers) {
        kv.set("workers", std::to_string(*g.workers));
    }
    return kv;
}

StudyConfig study_from(const GlobalOptions& g)
{
    StudyConfig c = study_config_from(load_config(g));
    if (g.paper_scale) {
        c.apply_paper_scale();
    }
    return c;
}

// Output to a file, or stdout when the path is empty or "-".
template <class Fn>
void with_output(const std::string& path, Fn&& fn)
{
    if (path.empty() || path == "-") {
        fn(std::cout);
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw DataError("cannot write '" + path + "'");
    }
    fn(out);
}

std::ifstream open_input(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open '" + path + "'");
    }
    return in;
}

// One-column (or `value`-column) CSV of measurements.
Eigen::VectorXd read_values_csv(std::istream& in)
{
    std::string line;
    if (!std::getline(in, line)) {
        throw DataError("data file is empty");
    }
    std::vector<std::string> header;
    {
        std::istringstream hs(line);
        std::string f;
        while (std::getline(hs, f, ',')) {
            header.push_back(f);
        }
    }
    std::size_t column = 0;
    for (std::size_t k = 0; k < header.size(); ++k) {
        if (header[k] == "value") {
            column = k;
        }
    }
    std::vector<double> values;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        std::istringstream ls(line);
        std::string f;
        for (std::size_t k = 0; k <= column; ++k) {
            if (!std::getline(ls, f, ',')) {
                throw DataError("line " + std::to_string(line_no) + ": missing value column");
            }
        }
        try {
            std::size_t used = 0;
            values.push_back(std::stod(f, &used));
            if (used != f.size() && f.substr(used) != "\r") {
                throw std::invalid_argument(f);
            }
        } catch (const std::exception&) {
            throw DataError("line " + std::to_string(line_no) + ": '" + f + "' is not a number");
        }
    }
    if (values.size() < 2) {
        throw DataError("need at least two measurements");
    }
    return Eigen::Map<Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

void print_report(const StudyReport& report, const std::string& dir)
{
    std::cout << "replicates: " << report.replicates.size() << "\n";
    std::cout << "excluded SRS: " << report.srs_excluded << "\n";
    for (std::size_t d = 0; d < report.designs.size(); ++d) {
        std::cout << "excluded RSS H=" << report.designs[d].set_size << " rho=" << report.designs[d].rho << ": "
                  << report.rss_excluded[d] << "\n";
    }
    std::cout << "output: " << dir << "\n";
}

int finish_report(const StudyReport& report)
{
    if (report.budget_exceeded) {
        std::cerr << "error: excluded replicates exceed max_failure_fraction\n";
        return kNonConvergence;
    }
    return kOk;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Bayesian mixture estimation from ranked set samples"};
    app.require_subcommand(1);
    app.fallthrough();

    GlobalOptions g;
    app.add_option("--config", g.config, "key = value configuration file");
    app.add_option("--seed", g.seed, "master seed");
    app.add_option("--workers", g.workers, "worker threads for replicates");
    app.add_flag("--paper-scale", g.paper_scale, "15000/5000/5 chains and 2000 replicates");

    std::string output;
    std::string data_path;
    std::string alpha_path;
    std::string chain_path;
    std::string design = "rss";
    std::optional<int> replicate;

    auto* stage1 = app.add_subcommand("stage1-alpha", "estimate misplacement matrices by simulation");
    stage1->add_option("-o,--output", output, "CSV output (default stdout)");

    auto* simulate = app.add_subcommand("simulate", "draw one SRS or RSS dataset");
    simulate->add_option("--design", design, "rss or srs")->check(CLI::IsMember({"rss", "srs"}));
    simulate->add_option("--alpha", alpha_path, "misplacement matrix CSV; default ranks on a concomitant");
    simulate->add_option("-o,--output", output, "CSV output (default stdout)");

    auto* fit_srs_cmd = app.add_subcommand("fit-srs", "fit a mixture to a simple random sample");
    fit_srs_cmd->add_option("--data", data_path, "CSV with a value column")->required();
    fit_srs_cmd->add_option("--chain", chain_path, "write retained draws here");
    fit_srs_cmd->add_option("-o,--output", output, "summary CSV (default stdout)");

    auto* fit_rss_cmd = app.add_subcommand("fit-rss", "fit a mixture to a ranked set sample");
    fit_rss_cmd->add_option("--data", data_path, "CSV cycle,judgment_rank,value")->required();
    fit_rss_cmd->add_option("--chain", chain_path, "write retained draws here");
    fit_rss_cmd->add_option("--alpha-out", alpha_path, "write the final misplacement estimate here");
    fit_rss_cmd->add_option("-o,--output", output, "summary CSV (default stdout)");

    auto* study = app.add_subcommand("study", "two-stage simulation study");
    study->add_option("-o,--output", output, "output directory (overrides output_dir)");
    study->add_option("--replicate", replicate, "run only this replicate (1-based)");

    auto* case_study = app.add_subcommand("case-study", "case study on a surrogate or finite population");
    case_study->add_option("--dataset", data_path, "population CSV (overrides dataset)");
    case_study->add_option("-o,--output", output, "output directory (overrides output_dir)");
    case_study->add_option("--replicate", replicate, "run only this replicate (1-based)");

    std::string input;
    auto* summarize = app.add_subcommand("summarize", "summary table from replicates.csv");
    summarize->add_option("--input", input, "replicates.csv")->required();
    summarize->add_option("-o,--output", output, "CSV output (default stdout)");

    auto* plot = app.add_subcommand("plot-data", "box statistics from replicates.csv");
    plot->add_option("--input", input, "replicates.csv")->required();
    plot->add_option("-o,--output", output, "CSV output (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfig;
    }

    try {
        if (*stage1) {
            const StudyConfig c = study_from(g);
            const auto designs = stage1_designs(c);
            with_output(output, [&](std::ostream& out) {
                out << "H,rho,judgment_rank,true_rank,alpha\n" << std::setprecision(10);
                for (const auto& d : designs) {
                    for (int r = 0; r < d.set_size; ++r) {
                        for (int h = 0; h < d.set_size; ++h) {
                            out << d.set_size << ',' << d.rho << ',' << r + 1 << ',' << h + 1 << ','
                                << d.alpha.alpha(r, h) << '\n';
                        }
                    }
                }
            });
        } else if (*simulate) {
            const StudyConfig c = study_from(g);
            RandomStream stream(c.seed);
            if (design == "srs") {
                const Eigen::VectorXd x = draw_mixture_sample(stream, c.truth, c.total_size);
                with_output(output, [&](std::ostream& out) {
                    out << "value\n" << std::setprecision(17);
                    for (Eigen::Index k = 0; k < x.size(); ++k) {
                        out << x[k] << '\n';
                    }
                });
            } else {
                const int H = c.set_sizes.front();
                RssDataset data;
                if (alpha_path.empty()) {
                    const RankerConfig ranker{c.rhos.front(), c.ranker_sigma.value_or(default_ranker_scale(c.truth))};
                    data = draw_rss_dataset(stream, c.truth, H, c.total_size / H, ranker);
                } else {
                    auto in = open_input(alpha_path);
                    const MisplacementMatrix alpha{read_matrix_csv(in)};
                    if (alpha.set_size() != H) {
                        throw ConfigError("misplacement matrix size does not match the set size");
                    }
                    data = draw_rss_dataset(stream, c.truth, H, c.total_size / H, alpha);
                }
                with_output(output, [&](std::ostream& out) { write_rss_csv(out, data); });
            }
        } else if (*fit_srs_cmd || *fit_rss_cmd) {
            const StudyConfig c = study_from(g);
            RandomStream stream(c.seed);
            auto in = open_input(data_path);
            FitResult fit;
            if (*fit_srs_cmd) {
                fit = fit_srs(read_values_csv(in), c.truth.components(), c.truth.model, c.sampler, stream);
            } else {
                fit = fit_rss(read_rss_csv(in), c.truth.components(), c.truth.model, c.sampler, stream);
                if (!alpha_path.empty()) {
                    with_output(alpha_path, [&](std::ostream& out) { write_matrix_csv(out, fit.alpha->alpha); });
                }
            }
            if (!chain_path.empty()) {
                with_output(chain_path, [&](std::ostream& out) { write_chain_csv(out, fit.draws); });
            }
            with_output(output, [&](std::ostream& out) { write_fit_summary(out, fit.summary); });
        } else if (*study) {
            const StudyConfig c = study_from(g);
            const std::string dir = output.empty() ? c.output_dir : output;
            const StudyReport report = run_study(c, replicate);
            write_report(report, c, dir, "study");
            print_report(report, dir);
            return finish_report(report);
        } else if (*case_study) {
            KeyValueConfig kv = load_config(g);
            if (!data_path.empty()) {
                kv.set("dataset", data_path);
            }
            CaseStudyConfig c = case_study_config_from(kv);
            if (g.paper_scale) {
                c.study.apply_paper_scale();
            }
            const std::string dir = output.empty() ? c.study.output_dir : output;
            const StudyReport report = run_case_study(c, replicate);
            write_report(report, c.study, dir, c.dataset ? "case-study-dataset" : "case-study-surrogate");
            print_report(report, dir);
            if (report.population_size) {
                std::cout << "population size: " << *report.population_size << "\n";
            }
            return finish_report(report);
        } else if (*summarize || *plot) {
            auto in = open_input(input);
            const auto records = read_estimates_csv(in);
            with_output(output, [&](std::ostream& out) {
                if (*summarize) {
                    write_summary_csv(out, records);
                } else {
                    emit_plot_data(out, records);
                }
            });
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfig;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kData;
    } catch (const NonConvergence& e) {
        std::cerr << "non-convergence: " << e.what() << "\n";
        return kNonConvergence;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kFailure;
    }
    return kOk;
}
