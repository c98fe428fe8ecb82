#include "rssmix/config.hpp"

#include "rssmix/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace rssmix {

namespace {

std::string trim(const std::string& s)
{
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

double to_double(const std::string& key, const std::string& text)
{
    try {
        std::size_t used = 0;
        const double v = std::stod(text, &used);
        if (trim(text.substr(used)).empty() && std::isfinite(v)) {
            return v;
        }
    } catch (const std::exception&) {
    }
    throw ConfigError("config key '" + key + "': expected a number, got '" + text + "'");
}

long to_int(const std::string& key, const std::string& text)
{
    const double v = to_double(key, text);
    if (v != std::floor(v)) {
        throw ConfigError("config key '" + key + "': expected an integer, got '" + text + "'");
    }
    return static_cast<long>(v);
}

std::vector<std::string> split_list(const std::string& text)
{
    std::vector<std::string> out;
    std::istringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        item = trim(item);
        if (!item.empty()) {
            out.push_back(item);
        }
    }
    return out;
}

Eigen::VectorXd to_vector(const std::vector<double>& v)
{
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

KeyValueConfig KeyValueConfig::parse(std::istream& in)
{
    KeyValueConfig cfg;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) {
            line.erase(hash);
        }
        line = trim(line);
        if (line.empty()) {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config line " + std::to_string(line_no) + ": expected 'key = value'");
        }
        const std::string key = trim(line.substr(0, eq));
        if (key.empty()) {
            throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
        }
        cfg.values_[key] = trim(line.substr(eq + 1));
    }
    return cfg;
}

KeyValueConfig KeyValueConfig::load(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config file '" + path + "'");
    }
    return parse(in);
}

std::string KeyValueConfig::get_string(const std::string& key, const std::string& fallback) const
{
    touched_[key] = true;
    const auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
}

double KeyValueConfig::get_double(const std::string& key, double fallback) const
{
    touched_[key] = true;
    const auto it = values_.find(key);
    return it == values_.end() ? fallback : to_double(key, it->second);
}

long KeyValueConfig::get_int(const std::string& key, long fallback) const
{
    touched_[key] = true;
    const auto it = values_.find(key);
    return it == values_.end() ? fallback : to_int(key, it->second);
}

bool KeyValueConfig::get_bool(const std::string& key, bool fallback) const
{
    touched_[key] = true;
    const auto it = values_.find(key);
    if (it == values_.end()) {
        return fallback;
    }
    if (it->second == "true" || it->second == "1" || it->second == "yes") {
        return true;
    }
    if (it->second == "false" || it->second == "0" || it->second == "no") {
        return false;
    }
    throw ConfigError("config key '" + key + "': expected true/false, got '" + it->second + "'");
}

std::vector<double> KeyValueConfig::get_doubles(const std::string& key, const std::vector<double>& fallback) const
{
    touched_[key] = true;
    const auto it = values_.find(key);
    if (it == values_.end()) {
        return fallback;
    }
    std::vector<double> out;
    for (const auto& item : split_list(it->second)) {
        out.push_back(to_double(key, item));
    }
    return out;
}

std::vector<int> KeyValueConfig::get_ints(const std::string& key, const std::vector<int>& fallback) const
{
    touched_[key] = true;
    const auto it = values_.find(key);
    if (it == values_.end()) {
        return fallback;
    }
    std::vector<int> out;
    for (const auto& item : split_list(it->second)) {
        out.push_back(static_cast<int>(to_int(key, item)));
    }
    return out;
}

std::vector<std::string> KeyValueConfig::unused_keys() const
{
    std::vector<std::string> out;
    for (const auto& [key, value] : values_) {
        if (!touched_.count(key)) {
            out.push_back(key);
        }
    }
    return out;
}

void StudyConfig::apply_paper_scale()
{
    sampler.iterations = 15000;
    sampler.burn_in = 5000;
    sampler.thin = 5;
    replicates = 2000;
}

void StudyConfig::validate() const
{
    try {
        truth.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("truth parameters: ") + e.what());
    }
    if (set_sizes.empty() || rhos.empty()) {
        throw ConfigError("at least one set size and one ranking correlation are required");
    }
    for (int H : set_sizes) {
        if (H < 1) {
            throw ConfigError("set sizes must be positive");
        }
        if (total_size % H != 0) {
            throw ConfigError("total_size " + std::to_string(total_size) + " is not divisible by set size " +
                              std::to_string(H));
        }
    }
    for (double rho : rhos) {
        if (!(std::abs(rho) > 0.0) || std::abs(rho) > 1.0) {
            throw ConfigError("ranking correlations must satisfy 0 < |rho| <= 1");
        }
    }
    if (ranker_sigma && !(*ranker_sigma > 0.0)) {
        throw ConfigError("ranker_sigma must be positive");
    }
    if (total_size < truth.components()) {
        throw ConfigError("total_size must be at least the number of components");
    }
    if (replicates < 1 || stage1_reps < 1) {
        throw ConfigError("replicates and stage1_reps must be positive");
    }
    if (sampler.thin < 1 || sampler.burn_in < 0 || sampler.iterations <= sampler.burn_in) {
        throw ConfigError("need iterations > burn_in >= 0 and thin >= 1");
    }
    if ((sampler.iterations - sampler.burn_in + sampler.thin - 1) / sampler.thin < 2) {
        throw ConfigError("fewer than two draws survive burn-in and thinning");
    }
    if (!(sampler.level > 0.0 && sampler.level < 1.0)) {
        throw ConfigError("level must lie in (0,1)");
    }
    if (!(sampler.em.tol > 0.0) || sampler.em.max_iter < 1) {
        throw ConfigError("em_tol must be positive and em_max_iter at least 1");
    }
    if (workers < 1) {
        throw ConfigError("workers must be at least 1");
    }
    if (max_failure_fraction < 0.0 || max_failure_fraction > 1.0) {
        throw ConfigError("max_failure_fraction must lie in [0,1]");
    }
}

void CaseStudyConfig::validate() const
{
    study.validate();
    if (dataset && dataset->empty()) {
        throw ConfigError("dataset path is empty");
    }
}

MixtureParams study1_truth()
{
    return MixtureParams::homoscedastic(Eigen::Vector2d(0.7, 0.3), Eigen::Vector2d(0.0, 5.0), 1.0);
}

MixtureParams bone_surrogate_truth()
{
    return MixtureParams::homoscedastic(Eigen::Vector2d(0.87, 0.13), Eigen::Vector2d(4.69, 6.34), 0.83 * 0.83);
}

std::optional<MixtureParams> truth_from(const KeyValueConfig& kv)
{
    const bool any = kv.has("weights") || kv.has("means") || kv.has("variances") || kv.has("sds");
    const auto weights = kv.get_doubles("weights", {});
    const auto means = kv.get_doubles("means", {});
    auto variances = kv.get_doubles("variances", {});
    const auto sds = kv.get_doubles("sds", {});
    const std::string model = kv.get_string("variance_model", "");
    if (!any) {
        return std::nullopt;
    }
    if (!sds.empty()) {
        if (!variances.empty()) {
            throw ConfigError("give either 'variances' or 'sds', not both");
        }
        for (double s : sds) {
            variances.push_back(s * s);
        }
    }
    if (weights.empty() || means.empty() || variances.empty()) {
        throw ConfigError("truth needs 'weights', 'means' and 'variances' (or 'sds')");
    }
    const bool shared = model.empty() ? variances.size() == 1 && weights.size() > 1 : model == "homoscedastic";
    if (!model.empty() && model != "homoscedastic" && model != "heteroscedastic") {
        throw ConfigError("variance_model must be 'homoscedastic' or 'heteroscedastic'");
    }
    try {
        if (shared) {
            if (variances.size() != 1) {
                throw ConfigError("homoscedastic truth takes a single variance");
            }
            return MixtureParams::homoscedastic(to_vector(weights), to_vector(means), variances.front());
        }
        if (variances.size() == 1 && weights.size() > 1) {
            variances.assign(weights.size(), variances.front());
        }
        return MixtureParams::heteroscedastic(to_vector(weights), to_vector(means), to_vector(variances));
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("truth parameters: ") + e.what());
    }
}

SamplerSettings sampler_settings_from(const KeyValueConfig& kv)
{
    SamplerSettings s;
    s.iterations = static_cast<int>(kv.get_int("iterations", s.iterations));
    s.burn_in = static_cast<int>(kv.get_int("burn_in", s.burn_in));
    s.thin = static_cast<int>(kv.get_int("thin", s.thin));
    s.level = kv.get_double("level", s.level);
    s.em.tol = kv.get_double("em_tol", s.em.tol);
    s.em.max_iter = static_cast<int>(kv.get_int("em_max_iter", s.em.max_iter));
    const std::string on_cap = kv.get_string("em_on_cap", "continue");
    if (on_cap != "continue" && on_cap != "abort") {
        throw ConfigError("em_on_cap must be 'continue' or 'abort'");
    }
    s.em.throw_on_cap = on_cap == "abort";
    return s;
}

namespace {

void read_study_fields(const KeyValueConfig& kv, StudyConfig& c)
{
    c.total_size = static_cast<int>(kv.get_int("total_size", c.total_size));
    c.set_sizes = kv.get_ints("set_sizes", c.set_sizes);
    c.rhos = kv.get_doubles("rhos", c.rhos);
    if (kv.has("ranker_sigma")) {
        c.ranker_sigma = kv.get_double("ranker_sigma", 1.0);
    }
    c.replicates = static_cast<int>(kv.get_int("replicates", c.replicates));
    c.sampler = sampler_settings_from(kv);
    c.stage1_reps = static_cast<int>(kv.get_int("stage1_reps", c.stage1_reps));
    c.seed = static_cast<std::uint64_t>(kv.get_int("seed", static_cast<long>(c.seed)));
    c.output_dir = kv.get_string("output_dir", c.output_dir);
    c.max_failure_fraction = kv.get_double("max_failure_fraction", c.max_failure_fraction);
    c.workers = static_cast<int>(kv.get_int("workers", c.workers));
}

void reject_unknown(const KeyValueConfig& kv)
{
    const auto unused = kv.unused_keys();
    if (!unused.empty()) {
        throw ConfigError("unknown config key '" + unused.front() + "'");
    }
}

}  // namespace

StudyConfig study_config_from(const KeyValueConfig& kv)
{
    StudyConfig c;
    c.truth = truth_from(kv).value_or(study1_truth());
    read_study_fields(kv, c);
    reject_unknown(kv);
    c.validate();
    return c;
}

CaseStudyConfig case_study_config_from(const KeyValueConfig& kv)
{
    CaseStudyConfig c;
    c.study.truth = truth_from(kv).value_or(bone_surrogate_truth());
    c.study.set_sizes = {2, 3};
    c.study.rhos = {-0.49};
    read_study_fields(kv, c.study);
    if (kv.has("dataset")) {
        c.dataset = kv.get_string("dataset", "");
    }
    c.outcome_column = kv.get_string("outcome_column", c.outcome_column);
    c.concomitant_column = kv.get_string("concomitant_column", c.concomitant_column);
    c.with_replacement = kv.get_bool("with_replacement", c.with_replacement);
    reject_unknown(kv);
    c.validate();
    return c;
}

}  // namespace rssmix
