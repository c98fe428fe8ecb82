#pragma once

#include "rssmix/distributions.hpp"
#include "rssmix/em_alpha.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace rssmix {

/// Flat `key = value` text; `#` starts a comment, lists are comma separated.
class KeyValueConfig {
public:
    static KeyValueConfig parse(std::istream& in);
    static KeyValueConfig load(const std::string& path);

    bool has(const std::string& key) const { return values_.count(key) != 0; }
    void set(const std::string& key, const std::string& value) { values_[key] = value; }

    std::string get_string(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key, double fallback) const;
    long get_int(const std::string& key, long fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    std::vector<double> get_doubles(const std::string& key, const std::vector<double>& fallback) const;
    std::vector<int> get_ints(const std::string& key, const std::vector<int>& fallback) const;

    /// Keys never read through a getter; used to reject typos.
    std::vector<std::string> unused_keys() const;

private:
    std::map<std::string, std::string> values_;
    mutable std::map<std::string, bool> touched_;
};

struct SamplerSettings {
    int iterations = 3000;
    int burn_in = 1000;
    int thin = 5;
    double level = 0.95;
    /// Chains keep going when one EM step hits its cap (`em_on_cap = continue`);
    /// `em_on_cap = abort` makes the replicate fail instead.
    EmOptions em{1e-7, 100, false};
};

struct StudyConfig {
    MixtureParams truth;
    int total_size = 24;
    std::vector<int> set_sizes{3};
    std::vector<double> rhos{0.9};
    std::optional<double> ranker_sigma;
    int replicates = 200;
    SamplerSettings sampler;
    int stage1_reps = 5000;
    std::uint64_t seed = 1;
    std::string output_dir = "study_out";
    double max_failure_fraction = 0.1;
    int workers = 1;

    /// 15000 iterations, 5000 burn-in, thin 5, 2000 replicates.
    void apply_paper_scale();
    /// Throws ConfigError.
    void validate() const;
};

struct CaseStudyConfig {
    StudyConfig study;
    std::optional<std::string> dataset;
    std::string outcome_column = "outcome";
    std::string concomitant_column = "concomitant";
    bool with_replacement = false;

    void validate() const;
};

/// Two-component homoscedastic study population (0.7, 0, 5, 1).
MixtureParams study1_truth();
/// Surrogate bone-density population (0.87, 4.69, 6.34, 0.83).
MixtureParams bone_surrogate_truth();

StudyConfig study_config_from(const KeyValueConfig& kv);
CaseStudyConfig case_study_config_from(const KeyValueConfig& kv);

/// Truth parameters from `weights`, `means`, `variances` (and optional `variance_model`).
std::optional<MixtureParams> truth_from(const KeyValueConfig& kv);
SamplerSettings sampler_settings_from(const KeyValueConfig& kv);

}  // namespace rssmix
