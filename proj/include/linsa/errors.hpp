#pragma once

#include <stdexcept>
#include <string>

namespace linsa {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Input matrix has non-finite entries or an unusable shape.
struct InvalidMatrix : Error {
    using Error::Error;
};

/// Argument violates a documented contract (dimension mismatch, bad range).
struct InvalidInput : Error {
    using Error::Error;
};

/// A dense solver or decomposition failed or is too ill-conditioned to trust.
struct NumericalFailure : Error {
    using Error::Error;
};

/// Requested an eigenvalue-1 object but the eigenspace is empty or defective.
struct EmptyEigenspace : Error {
    using Error::Error;
};

struct PreconditionViolated : Error {
    using Error::Error;
};

/// Requested quantity is undefined in the current regime.
struct NotApplicable : Error {
    using Error::Error;
};

struct InsufficientData : Error {
    using Error::Error;
};

struct IoError : Error {
    using Error::Error;
};

} // namespace linsa
