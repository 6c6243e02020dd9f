#pragma once

#include <stdexcept>
#include <string>

namespace mprim {

// Precondition / dimension failures. These indicate caller bugs.
struct ContractViolation : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Jacobian (near-)rank loss where an exact inverse was requested.
struct SingularityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Inverse-kinematics target outside the reachable workspace.
struct OutOfWorkspaceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Linear-solve failure (should not occur for a valid chain).
struct SolveError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Counters for degeneracies that are handled by returning a neutral value
// instead of throwing. Control loops must not abort mid-rollout, so these
// paths return zero and bump a counter that tests can inspect.
struct Diagnostics {
  static inline thread_local long degenerate_forcing = 0;
  static inline thread_local long zero_weight_columns = 0;
  static inline thread_local long capped_repulsion = 0;

  static void reset() {
    degenerate_forcing = 0;
    zero_weight_columns = 0;
    capped_repulsion = 0;
  }
};

// Quintic point-to-point profile 10u^3 - 15u^4 + 6u^5 on u in [0, 1],
// with its derivatives w.r.t. u.
inline double minjerk(double u) { return ((6.0 * u - 15.0) * u + 10.0) * u * u * u; }
inline double minjerk_d(double u) { return ((30.0 * u - 60.0) * u + 30.0) * u * u; }
inline double minjerk_dd(double u) { return ((120.0 * u - 180.0) * u + 60.0) * u; }

}  // namespace mprim
