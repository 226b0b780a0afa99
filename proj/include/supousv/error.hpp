#pragma once

#include <stdexcept>
#include <string>

namespace supousv {

/// Parameter outside the mathematical domain of a measure or formula.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Invalid or incomplete configuration (config files, simulation settings).
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Malformed input data: CSV rows, time series invariants.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An iterative method stopped before meeting its tolerance.
class ConvergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace supousv
