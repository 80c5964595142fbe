#pragma once

#include <stdexcept>
#include <string>

namespace oos {

/// Base class for every error thrown by this library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Problems with input *text* (files, CSV, config syntax). CLI maps these to
/// exit code 2; everything else derived from Error is a domain violation
/// and maps to exit code 3.
struct InputError : Error {
    using Error::Error;
};

struct FileError : InputError {
    using InputError::InputError;
};

struct CsvFormatError : InputError {
    using InputError::InputError;
};

struct ConfigFormatError : InputError {
    using InputError::InputError;
};

// Dataset construction.
struct EmptyInputError : Error {
    using Error::Error;
};
struct SingleSourceError : Error {
    using Error::Error;
};
struct EmptySourceError : Error {
    using Error::Error;
};
struct DuplicateLabelError : Error {
    using Error::Error;
};
struct NonFiniteValueError : Error {
    using Error::Error;
};

// Rules and losses.
struct EmptySampleError : Error {
    using Error::Error;
};

// Proportions / normal-theory parameters.
struct InvalidProportionsError : Error {
    using Error::Error;
};
struct InvalidParamsError : Error {
    using Error::Error;
};
struct IncompleteComponentsError : Error {
    using Error::Error;
};
struct InvalidCovarianceError : Error {
    using Error::Error;
};

// Variance tools.
struct InvalidMomentsError : Error {
    using Error::Error;
};
struct TooFewObservationsError : Error {
    using Error::Error;
};
struct TooFewReplicatesError : Error {
    using Error::Error;
};
struct TooFewBootstrapError : Error {
    using Error::Error;
};
struct TooFewPerSourceError : Error {
    using Error::Error;
};

// Simulation.
struct InvalidDistributionError : Error {
    using Error::Error;
};
struct NonIntegralAllocationError : Error {
    using Error::Error;
};
struct InvalidConfigError : Error {
    using Error::Error;
};

}  // namespace oos
