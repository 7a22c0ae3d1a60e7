#pragma once

#include <stdexcept>
#include <string>

namespace supmech {

/// Base class for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DimensionMismatch : Error {
    using Error::Error;
};

struct GridMismatch : Error {
    using Error::Error;
};

/// A value failed a type invariant (non-Hermitian input, bad trace, NaN, ...).
struct InvariantViolation : Error {
    using Error::Error;
};

struct DegenerateSpectrum : Error {
    using Error::Error;
};

struct OverlappingDomains : Error {
    using Error::Error;
};

struct DuplicateLabel : Error {
    using Error::Error;
};

struct ZeroLabel : Error {
    using Error::Error;
};

struct EmptyDomain : Error {
    using Error::Error;
};

struct EmptyReadyDomain : Error {
    using Error::Error;
};

struct CflViolation : Error {
    using Error::Error;
};

struct MassLeak : Error {
    using Error::Error;
};

struct UnsupportedCoupling : Error {
    using Error::Error;
};

struct GeometryInfeasible : Error {
    using Error::Error;
};

struct CalibrationFailure : Error {
    using Error::Error;
};

struct ParseError : Error {
    using Error::Error;
};

}  // namespace supmech
