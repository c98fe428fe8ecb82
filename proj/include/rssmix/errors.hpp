#pragma once

#include <stdexcept>
#include <string>

namespace rssmix {

/// Bad or missing configuration value.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Unreadable or malformed input data.
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// The embedded EM for the misplacement matrix hit its iteration cap.
struct NonConvergence : std::runtime_error {
    NonConvergence(const std::string& what, int iterations)
        : std::runtime_error(what), iterations(iterations)
    {
    }
    int iterations;
};

}  // namespace rssmix
