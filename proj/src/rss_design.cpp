#include "rssmix/rss_design.hpp"

#include "rssmix/errors.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace rssmix {

MisplacementMatrix MisplacementMatrix::identity(int set_size)
{
    return {Eigen::MatrixXd::Identity(set_size, set_size)};
}

MisplacementMatrix MisplacementMatrix::uniform(int set_size)
{
    return {Eigen::MatrixXd::Constant(set_size, set_size, 1.0 / set_size)};
}

void MisplacementMatrix::validate(double tol) const
{
    if (alpha.rows() < 1 || alpha.rows() != alpha.cols()) {
        throw std::invalid_argument("misplacement matrix must be square and non-empty");
    }
    if ((alpha.array() < 0.0).any() || (alpha.array() > 1.0 + tol).any() || !alpha.allFinite()) {
        throw std::invalid_argument("misplacement probabilities must lie in [0,1]");
    }
    const double row_dev = (alpha.rowwise().sum().array() - 1.0).abs().maxCoeff();
    const double col_dev = (alpha.colwise().sum().array() - 1.0).abs().maxCoeff();
    if (row_dev > tol || col_dev > tol) {
        std::ostringstream msg;
        msg << "misplacement matrix is not doubly stochastic (row deviation " << row_dev
            << ", column deviation " << col_dev << ")";
        throw std::invalid_argument(msg.str());
    }
}

Eigen::MatrixXd project_doubly_stochastic(Eigen::MatrixXd m, double tol, int max_iter)
{
    if (m.rows() != m.cols() || (m.array() < 0.0).any()) {
        throw std::invalid_argument("projection needs a square nonnegative matrix");
    }
    for (int sweep = 0; sweep < max_iter; ++sweep) {
        const Eigen::VectorXd rows = m.rowwise().sum();
        if ((rows.array() <= 0.0).any()) {
            throw std::invalid_argument("projection needs a positive entry in every row");
        }
        m = rows.cwiseInverse().asDiagonal() * m;
        const Eigen::RowVectorXd cols = m.colwise().sum();
        if ((cols.array() <= 0.0).any()) {
            throw std::invalid_argument("projection needs a positive entry in every column");
        }
        m = m * cols.cwiseInverse().asDiagonal();
        const double row_dev = (m.rowwise().sum().array() - 1.0).abs().maxCoeff();
        if (row_dev <= tol) {
            break;
        }
    }
    return m;
}

Eigen::VectorXd RssDataset::pooled() const
{
    Eigen::VectorXd out(values.size());
    for (int i = 0; i < cycles(); ++i) {
        for (int r = 0; r < set_size(); ++r) {
            out[i * set_size() + r] = values(i, r);
        }
    }
    return out;
}

void RssDataset::validate() const
{
    if (values.rows() < 1 || values.cols() < 1) {
        throw DataError("RSS dataset is empty");
    }
    if (!values.allFinite()) {
        throw DataError("RSS dataset contains non-finite values");
    }
    if (true_ranks) {
        if (true_ranks->rows() != values.rows() || true_ranks->cols() != values.cols()) {
            throw DataError("true rank matrix does not match the value matrix");
        }
        if ((true_ranks->array() < 1).any() || (true_ranks->array() > set_size()).any()) {
            throw DataError("true ranks must lie in [1, H]");
        }
    }
}

void RankerConfig::validate() const
{
    if (!(std::abs(rho) > 0.0) || std::abs(rho) > 1.0) {
        throw std::invalid_argument("ranker correlation must satisfy 0 < |rho| <= 1");
    }
    if (!(sigma > 0.0)) {
        throw std::invalid_argument("ranker noise scale must be positive");
    }
}

double RankerConfig::noise_variance() const
{
    const double r2 = rho * rho;
    return (1.0 - r2) / r2 * sigma * sigma;
}

double default_ranker_scale(const MixtureParams& params)
{
    double pooled = 0.0;
    for (Eigen::Index j = 0; j < params.components(); ++j) {
        pooled += params.weights[j] * params.variance(j);
    }
    return 0.6 * std::sqrt(pooled);
}

double draw_mixture(RandomStream& stream, const MixtureParams& params)
{
    const int j = draw_categorical(stream, params.weights);
    return draw_normal(stream, params.means[j], params.variance(j));
}

Eigen::VectorXd draw_mixture_sample(RandomStream& stream, const MixtureParams& params, Eigen::Index count)
{
    Eigen::VectorXd out(count);
    for (Eigen::Index k = 0; k < count; ++k) {
        out[k] = draw_mixture(stream, params);
    }
    return out;
}

namespace {

// 1-based rank of values[k] within values, ties broken by position.
int rank_within(const Eigen::VectorXd& values, Eigen::Index k)
{
    int rank = 1;
    for (Eigen::Index m = 0; m < values.size(); ++m) {
        if (values[m] < values[k] || (values[m] == values[k] && m < k)) {
            ++rank;
        }
    }
    return rank;
}

std::pair<double, int> judged_unit(RandomStream& stream, const MixtureParams& params, int set_size,
                                   const RankerConfig& ranker, int judgment_rank)
{
    const Eigen::VectorXd units = draw_mixture_sample(stream, params, set_size);
    const double noise_var = ranker.noise_variance();
    const double sign = ranker.rho < 0.0 ? -1.0 : 1.0;
    Eigen::VectorXd concomitant(set_size);
    for (int k = 0; k < set_size; ++k) {
        const double eps = noise_var > 0.0 ? draw_normal(stream, 0.0, noise_var) : 0.0;
        concomitant[k] = sign * (units[k] + eps);
    }
    // Negatively correlated concomitants are ranked in descending order.
    std::vector<int> order(set_size);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return sign * concomitant[a] < sign * concomitant[b];
    });
    const int chosen = order[judgment_rank - 1];
    return {units[chosen], rank_within(units, chosen)};
}

}  // namespace

RssCycle draw_rss_cycle(RandomStream& stream, const MixtureParams& params, int set_size,
                        const RankerConfig& ranker)
{
    if (set_size < 1) {
        throw std::invalid_argument("set size must be at least 1");
    }
    ranker.validate();
    RssCycle cycle{Eigen::VectorXd(set_size), Eigen::VectorXi(set_size)};
    for (int r = 1; r <= set_size; ++r) {
        const auto [value, rank] = judged_unit(stream, params, set_size, ranker, r);
        cycle.values[r - 1] = value;
        cycle.true_ranks[r - 1] = rank;
    }
    return cycle;
}

MisplacementMatrix estimate_alpha_stage1(RandomStream& stream, const MixtureParams& params, int set_size,
                                         const RankerConfig& ranker, int reps)
{
    if (reps < 1) {
        throw std::invalid_argument("stage-1 replication count must be at least 1");
    }
    Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(set_size, set_size);
    for (int rep = 0; rep < reps; ++rep) {
        const RssCycle cycle = draw_rss_cycle(stream, params, set_size, ranker);
        for (int r = 0; r < set_size; ++r) {
            counts(r, cycle.true_ranks[r] - 1) += 1.0;
        }
    }
    MisplacementMatrix out{project_doubly_stochastic(counts / static_cast<double>(reps))};
    return out;
}

RssDataset draw_rss_dataset(RandomStream& stream, const MixtureParams& params, int set_size, int cycles,
                            const RankerConfig& ranker)
{
    if (cycles < 1) {
        throw std::invalid_argument("an RSS dataset needs at least one cycle");
    }
    RssDataset data{Eigen::MatrixXd(cycles, set_size), Eigen::MatrixXi(cycles, set_size)};
    for (int i = 0; i < cycles; ++i) {
        const RssCycle cycle = draw_rss_cycle(stream, params, set_size, ranker);
        data.values.row(i) = cycle.values.transpose();
        data.true_ranks->row(i) = cycle.true_ranks.transpose();
    }
    return data;
}

RssDataset draw_rss_dataset(RandomStream& stream, const MixtureParams& params, int set_size, int cycles,
                            const MisplacementMatrix& alpha)
{
    if (cycles < 1) {
        throw std::invalid_argument("an RSS dataset needs at least one cycle");
    }
    if (alpha.set_size() != set_size) {
        throw std::invalid_argument("misplacement matrix size differs from the set size");
    }
    alpha.validate(1e-6);
    RssDataset data{Eigen::MatrixXd(cycles, set_size), Eigen::MatrixXi(cycles, set_size)};
    std::vector<double> units(set_size);
    for (int i = 0; i < cycles; ++i) {
        for (int r = 0; r < set_size; ++r) {
            const int h = draw_categorical(stream, alpha.alpha.row(r).transpose());
            for (auto& u : units) {
                u = draw_mixture(stream, params);
            }
            std::nth_element(units.begin(), units.begin() + h, units.end());
            data.values(i, r) = units[h];
            (*data.true_ranks)(i, r) = h + 1;
        }
    }
    return data;
}

void write_rss_csv(std::ostream& out, const RssDataset& data)
{
    out << "cycle,judgment_rank,value";
    if (data.true_ranks) {
        out << ",true_rank";
    }
    out << '\n';
    out << std::setprecision(17);
    for (int i = 0; i < data.cycles(); ++i) {
        for (int r = 0; r < data.set_size(); ++r) {
            out << (i + 1) << ',' << (r + 1) << ',' << data.values(i, r);
            if (data.true_ranks) {
                out << ',' << (*data.true_ranks)(i, r);
            }
            out << '\n';
        }
    }
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line)
{
    std::vector<std::string> fields;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ',')) {
        const auto first = field.find_first_not_of(" \t\r");
        const auto last = field.find_last_not_of(" \t\r");
        fields.push_back(first == std::string::npos ? std::string() : field.substr(first, last - first + 1));
    }
    if (!line.empty() && line.back() == ',') {
        fields.emplace_back();
    }
    return fields;
}

double parse_double(const std::string& text, int line_no)
{
    try {
        std::size_t used = 0;
        const double v = std::stod(text, &used);
        if (used != text.size() || !std::isfinite(v)) {
            throw std::invalid_argument(text);
        }
        return v;
    } catch (const std::exception&) {
        throw DataError("line " + std::to_string(line_no) + ": cannot parse number '" + text + "'");
    }
}

long parse_int(const std::string& text, int line_no)
{
    const double v = parse_double(text, line_no);
    if (v != std::floor(v)) {
        throw DataError("line " + std::to_string(line_no) + ": expected an integer, got '" + text + "'");
    }
    return static_cast<long>(v);
}

}  // namespace

RssDataset read_rss_csv(std::istream& in)
{
    std::string line;
    int line_no = 0;
    if (!std::getline(in, line)) {
        throw DataError("RSS file is empty");
    }
    ++line_no;
    const auto header = split_csv_line(line);
    if (header.size() < 3 || header[0] != "cycle" || header[1] != "judgment_rank" || header[2] != "value") {
        throw DataError("line 1: expected header 'cycle,judgment_rank,value[,true_rank]'");
    }
    const bool has_true = header.size() >= 4 && header[3] == "true_rank";

    struct Row {
        long cycle;
        long rank;
        double value;
        long true_rank;
    };
    std::vector<Row> rows;
    long max_cycle = 0;
    long max_rank = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        const auto fields = split_csv_line(line);
        if (fields.size() != header.size()) {
            throw DataError("line " + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                            " fields, found " + std::to_string(fields.size()));
        }
        Row row{parse_int(fields[0], line_no), parse_int(fields[1], line_no), parse_double(fields[2], line_no),
                has_true ? parse_int(fields[3], line_no) : 0};
        if (row.cycle < 1 || row.rank < 1) {
            throw DataError("line " + std::to_string(line_no) + ": cycle and rank are 1-based");
        }
        max_cycle = std::max(max_cycle, row.cycle);
        max_rank = std::max(max_rank, row.rank);
        rows.push_back(row);
    }
    if (rows.empty()) {
        throw DataError("RSS file has no observations");
    }
    if (static_cast<long>(rows.size()) != max_cycle * max_rank) {
        throw DataError("RSS design is unbalanced: " + std::to_string(rows.size()) + " rows for " +
                        std::to_string(max_cycle) + " cycles of set size " + std::to_string(max_rank));
    }
    RssDataset data;
    data.values = Eigen::MatrixXd::Constant(max_cycle, max_rank, std::numeric_limits<double>::quiet_NaN());
    if (has_true) {
        data.true_ranks = Eigen::MatrixXi::Zero(max_cycle, max_rank);
    }
    for (const auto& row : rows) {
        double& slot = data.values(row.cycle - 1, row.rank - 1);
        if (!std::isnan(slot)) {
            throw DataError("duplicate observation for cycle " + std::to_string(row.cycle) + ", rank " +
                            std::to_string(row.rank));
        }
        slot = row.value;
        if (has_true) {
            (*data.true_ranks)(row.cycle - 1, row.rank - 1) = static_cast<int>(row.true_rank);
        }
    }
    data.validate();
    return data;
}

void write_matrix_csv(std::ostream& out, const Eigen::MatrixXd& m)
{
    out << std::setprecision(17);
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            out << (c ? "," : "") << m(r, c);
        }
        out << '\n';
    }
}

Eigen::MatrixXd read_matrix_csv(std::istream& in)
{
    std::vector<std::vector<double>> rows;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        std::vector<double> row;
        for (const auto& f : split_csv_line(line)) {
            row.push_back(parse_double(f, line_no));
        }
        if (!rows.empty() && row.size() != rows.front().size()) {
            throw DataError("line " + std::to_string(line_no) + ": ragged matrix row");
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) {
        throw DataError("matrix file is empty");
    }
    Eigen::MatrixXd m(rows.size(), rows.front().size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t c = 0; c < rows[r].size(); ++c) {
            m(r, c) = rows[r][c];
        }
    }
    return m;
}

}  // namespace rssmix
