#pragma once

#include <stdexcept>
#include <string>

namespace ppcr {

/// Malformed arguments: dimension mismatches, out-of-range parameters.
class InvalidInput : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// The privacy-preserving Fisher information is singular, so no unbiased
/// estimator with finite covariance exists.
class NotIdentifiable : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Operation is not defined for the requested noise family or mechanism class.
class Unsupported : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// No noise scale satisfies the requested budget over the requested region.
class CalibrationInfeasible : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace ppcr
