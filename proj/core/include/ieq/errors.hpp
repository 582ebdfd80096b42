#pragma once

#include <stdexcept>
#include <string>

namespace ieq {

struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Dimension or value contract violations on inputs.
struct ShapeError : Error {
  using Error::Error;
};

// gamma * ||A|| >= 1: the fixed-point map is not a contraction.
struct NonContractiveError : Error {
  using Error::Error;
};

// A solver hit its iteration cap with residual above tolerance in a context
// that demands convergence.
struct NotConvergedError : Error {
  using Error::Error;
};

struct UnconvergedAdjointError : Error {
  using Error::Error;
};

// Entrywise nonnegativity required (closed-form equilibrium).
struct NegativeEntriesError : Error {
  using Error::Error;
};

struct SingularError : Error {
  using Error::Error;
};

// Dense assembly refused above the size gate.
struct TooLargeError : Error {
  using Error::Error;
};

// Finite differences rejected: a preactivation sits within the kink margin.
struct KinkProximityError : Error {
  using Error::Error;
};

struct GammaTooLargeError : Error {
  using Error::Error;
};

struct WidthTooSmallError : Error {
  using Error::Error;
};

struct DegenerateFeaturesError : Error {
  using Error::Error;
};

struct BetaCapExceededError : Error {
  using Error::Error;
};

struct StepSizeRejectedError : Error {
  using Error::Error;
};

struct DivergenceError : Error {
  using Error::Error;
};

struct ZeroRowError : Error {
  using Error::Error;
};

struct InsufficientClassSamplesError : Error {
  using Error::Error;
};

// IDX file problems.
struct BadMagicError : Error {
  using Error::Error;
};

struct TruncatedFileError : Error {
  using Error::Error;
};

struct UnsupportedTypeCodeError : Error {
  using Error::Error;
};

struct IoError : Error {
  using Error::Error;
};

}  // namespace ieq
