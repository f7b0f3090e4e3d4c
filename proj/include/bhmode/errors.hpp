/**
 * @brief Error taxonomy shared by all modules.
 *
 * The CLI maps these onto exit codes: precondition/domain failures -> 2,
 * tolerance failures -> 3, I/O failures -> 4.
 */
#pragma once

#include <stdexcept>
#include <string>

namespace bhmode {

/// Invalid input or parameter outside a module's stated precondition.
struct PreconditionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Evaluation outside the mathematical domain (e.g. at/below the horizon).
struct DomainError : PreconditionError {
  using PreconditionError::PreconditionError;
};

/// The physically meaningful failure path: fluxes of the horizon and infinity
/// solutions have opposite signs, so no flux equalization exists.
struct NotSuperradiantError : PreconditionError {
  using PreconditionError::PreconditionError;
};

/// Ellipse pair with coinciding semi-axes; no usable common-tangent family.
struct DegenerateEllipsesError : PreconditionError {
  using PreconditionError::PreconditionError;
};

/// Requested construction window violates the length bound.
struct WindowTooShortError : PreconditionError {
  using PreconditionError::PreconditionError;
};

/// Deformation profile outside its admissible class.
struct InvalidProfileError : PreconditionError {
  using PreconditionError::PreconditionError;
};

/// A numeric tolerance stated in the construction contract was not met.
struct ToleranceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Degree/winding test inconclusive after retries.
struct RootNotCertifiedError : ToleranceError {
  using ToleranceError::ToleranceError;
};

/// Adaptive integration failed (step underflow, overflow guard, ...).
struct IntegrationError : ToleranceError {
  using ToleranceError::ToleranceError;
};

/// Picard iteration failed to contract.
struct NoContractionError : ToleranceError {
  using ToleranceError::ToleranceError;
};

/// h^2 <= 0 somewhere: growth rate too large or notch depth mis-set.
struct PositivityViolatedError : ToleranceError {
  using ToleranceError::ToleranceError;
};

/// Filesystem / serialization failure.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace bhmode
