#pragma once

#include <stdexcept>

namespace plateau_flow {

/// Argument outside the domain where a closed form is defined.
struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

/// Invalid parameters or infeasible constraint data.
struct ParameterError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Solver or factorisation failure.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Operation called in the wrong state (e.g. disc extraction on a cylinder).
struct UsageError : std::logic_error {
  using std::logic_error::logic_error;
};

/// Unreadable or malformed input file; carries the offending line when known.
struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace plateau_flow
