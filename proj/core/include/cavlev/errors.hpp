#pragma once

#include <stdexcept>
#include <string>

namespace cavlev {

/// Input lies outside the physical domain of an operation (unstable cavity,
/// grazing tilt, non-positive mass, ...).
class DomainError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A solver or quadrature failed to converge; the message carries the
/// diagnostic values (both estimates, condition numbers, last good point).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace cavlev
