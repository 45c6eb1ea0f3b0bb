#pragma once

#include <stdexcept>
#include <string>

namespace ecrank {

// Base class for all library errors.
struct Error : std::runtime_error {
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

struct DomainError : Error {
    using Error::Error;
};

struct SingularCurveError : Error {
    using Error::Error;
};

struct BadReductionPrimeError : Error {
    using Error::Error;
};

struct GoodReductionPrimeError : Error {
    using Error::Error;
};

struct IncompleteFactorizationError : Error {
    using Error::Error;
};

struct PointNotOnCurveError : Error {
    using Error::Error;
};

struct InsufficientApDataError : Error {
    using Error::Error;
};

struct DeltaOutOfRangeError : Error {
    using Error::Error;
};

struct SingularCubicError : Error {
    using Error::Error;
};

struct PointAtSingularityError : Error {
    using Error::Error;
};

struct DegenerateConfigurationError : Error {
    using Error::Error;
};

struct ParseError : Error {
    using Error::Error;
};

struct ValidationError : Error {
    using Error::Error;
};

struct ConductorExceedsMaxError : Error {
    using Error::Error;
};

struct EmptySplitError : Error {
    using Error::Error;
};

struct MissingClassError : Error {
    using Error::Error;
};

struct ShapeMismatchError : Error {
    using Error::Error;
};

struct ConfigInvariantViolationError : Error {
    using Error::Error;
};

struct NonfiniteLossError : Error {
    using Error::Error;
};

struct ArchMismatchError : Error {
    using Error::Error;
};

struct IoError : Error {
    using Error::Error;
};

}  // namespace ecrank
