#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>

namespace rssmix {

/// A seeded random stream. Every sampler in the library takes one explicitly;
/// nothing draws from global state. One stream must not be shared between threads.
class RandomStream {
public:
    using engine_type = std::mt19937_64;

    explicit RandomStream(std::uint64_t seed);

    /// Child stream keyed by (master seed, index, purpose). Two calls with the same
    /// key yield identical sequences regardless of what other streams were drawn.
    static RandomStream derive(std::uint64_t master, std::uint64_t index, std::uint64_t purpose = 0);

    engine_type& engine() { return engine_; }

    /// Uniform on the open interval (0, 1).
    double uniform();

private:
    explicit RandomStream(std::seed_seq& seq) : engine_(seq) {}
    engine_type engine_;
};

double draw_normal(RandomStream& stream, double mean, double variance);

/// Gamma with (shape, rate).
double draw_gamma(RandomStream& stream, double shape, double rate);

/// Inverse gamma with (shape, rate): if G ~ Gamma(shape, rate) then 1/G. Mean is rate/(shape-1).
double draw_inverse_gamma(RandomStream& stream, double shape, double rate);

Eigen::VectorXd draw_dirichlet(RandomStream& stream, const Eigen::VectorXd& concentration);

/// Index in [0, probs.size()). probs need not be normalized but must be nonnegative
/// with a positive total.
int draw_categorical(RandomStream& stream, const Eigen::VectorXd& probs);

/// Counts over probs.size() cells summing to `trials`; sequential conditional binomials.
Eigen::VectorXi draw_multinomial(RandomStream& stream, int trials, const Eigen::VectorXd& probs);

}  // namespace rssmix
