#include "rssmix/random.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rssmix {

namespace {

std::uint32_t low32(std::uint64_t v) { return static_cast<std::uint32_t>(v & 0xffffffffULL); }
std::uint32_t high32(std::uint64_t v) { return static_cast<std::uint32_t>(v >> 32); }

void check_probabilities(const Eigen::VectorXd& probs)
{
    if (probs.size() == 0) {
        throw std::invalid_argument("probability vector is empty");
    }
    for (Eigen::Index k = 0; k < probs.size(); ++k) {
        if (!(probs[k] >= 0.0) || !std::isfinite(probs[k])) {
            throw std::invalid_argument("probabilities must be finite and nonnegative");
        }
    }
    if (!(probs.sum() > 0.0)) {
        throw std::invalid_argument("probabilities must have positive total mass");
    }
}

}  // namespace

RandomStream::RandomStream(std::uint64_t seed)
{
    std::seed_seq seq{low32(seed), high32(seed)};
    engine_.seed(seq);
}

RandomStream RandomStream::derive(std::uint64_t master, std::uint64_t index, std::uint64_t purpose)
{
    // Fixed tag keeps derived streams disjoint from RandomStream(seed) with the same words.
    std::seed_seq seq{low32(master), high32(master), low32(index), high32(index),
                      low32(purpose), high32(purpose), 0x5eedu};
    return RandomStream(seq);
}

double RandomStream::uniform()
{
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    double u = dist(engine_);
    while (u <= 0.0) {
        u = dist(engine_);
    }
    return u;
}

double draw_normal(RandomStream& stream, double mean, double variance)
{
    if (!(variance > 0.0)) {
        throw std::invalid_argument("normal variance must be positive");
    }
    std::normal_distribution<double> dist(mean, std::sqrt(variance));
    return dist(stream.engine());
}

double draw_gamma(RandomStream& stream, double shape, double rate)
{
    if (!(shape > 0.0) || !(rate > 0.0)) {
        throw std::invalid_argument("gamma shape and rate must be positive");
    }
    std::gamma_distribution<double> dist(shape, 1.0 / rate);
    return dist(stream.engine());
}

double draw_inverse_gamma(RandomStream& stream, double shape, double rate)
{
    if (!(shape > 0.0) || !(rate > 0.0)) {
        throw std::invalid_argument("inverse gamma shape and rate must be positive");
    }
    std::gamma_distribution<double> dist(shape, 1.0);
    double g = dist(stream.engine());
    while (g <= 0.0) {
        g = dist(stream.engine());
    }
    return rate / g;
}

Eigen::VectorXd draw_dirichlet(RandomStream& stream, const Eigen::VectorXd& concentration)
{
    if (concentration.size() == 0) {
        throw std::invalid_argument("dirichlet concentration is empty");
    }
    Eigen::VectorXd draws(concentration.size());
    for (Eigen::Index k = 0; k < concentration.size(); ++k) {
        if (!(concentration[k] > 0.0)) {
            throw std::invalid_argument("dirichlet concentration must be positive");
        }
        std::gamma_distribution<double> dist(concentration[k], 1.0);
        draws[k] = dist(stream.engine());
    }
    double total = draws.sum();
    if (!(total > 0.0)) {
        // Every gamma underflowed (tiny concentrations); fall back to the largest one.
        Eigen::Index best = 0;
        concentration.maxCoeff(&best);
        draws.setZero();
        draws[best] = 1.0;
        return draws;
    }
    return draws / total;
}

int draw_categorical(RandomStream& stream, const Eigen::VectorXd& probs)
{
    check_probabilities(probs);
    const double target = stream.uniform() * probs.sum();
    double cumulative = 0.0;
    int last_positive = 0;
    for (Eigen::Index k = 0; k < probs.size(); ++k) {
        if (probs[k] > 0.0) {
            last_positive = static_cast<int>(k);
        }
        cumulative += probs[k];
        if (target < cumulative) {
            return static_cast<int>(k);
        }
    }
    return last_positive;
}

Eigen::VectorXi draw_multinomial(RandomStream& stream, int trials, const Eigen::VectorXd& probs)
{
    if (trials < 0) {
        throw std::invalid_argument("multinomial trials must be nonnegative");
    }
    check_probabilities(probs);
    const Eigen::Index cells = probs.size();
    Eigen::VectorXi counts = Eigen::VectorXi::Zero(cells);
    int remaining = trials;
    double mass = probs.sum();
    for (Eigen::Index k = 0; k + 1 < cells && remaining > 0; ++k) {
        const double p = mass > 0.0 ? std::clamp(probs[k] / mass, 0.0, 1.0) : 0.0;
        std::binomial_distribution<int> dist(remaining, p);
        counts[k] = dist(stream.engine());
        remaining -= counts[k];
        mass -= probs[k];
    }
    counts[cells - 1] += remaining;
    return counts;
}

}  // namespace rssmix
