#pragma once

#include <stdexcept>
#include <string>

namespace pmsde {

/// Invalid inputs: bad model parameters, mismatched grids, malformed configs.
class ValidationError : public std::invalid_argument {
public:
    explicit ValidationError(const std::string& msg) : std::invalid_argument(msg) {}
};

/// Runtime numerical failure: exploded paths, singular matrices, non-convergence.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace pmsde
