#pragma once

#include <stdexcept>
#include <string>

namespace tailrisk {

/// Malformed input text (CSV, TOML, command line values).
class parse_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Structurally valid input that violates a data invariant.
class validation_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Numerical failure inside an estimator or study.
class estimation_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace tailrisk
