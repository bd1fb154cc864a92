#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace omni {

enum class Errc {
  zero_inverse,
  dimension_mismatch,
  too_large,
  constraint_violation,
  negative_weight,
  unit_mismatch,
  non_termination,
  infeasible_beta,
  invalid_n,
  non_integer_rates,
  infeasible_rates,
  unknown_receiver,
  field_too_small,
  construction_failed,
  inconsistent_observations,
  non_convergence,
  invalid_input,
};

constexpr std::string_view errc_name(Errc c) {
  switch (c) {
    case Errc::zero_inverse: return "ZeroInverse";
    case Errc::dimension_mismatch: return "DimensionMismatch";
    case Errc::too_large: return "TooLarge";
    case Errc::constraint_violation: return "ConstraintViolation";
    case Errc::negative_weight: return "NegativeWeight";
    case Errc::unit_mismatch: return "UnitMismatch";
    case Errc::non_termination: return "NonTermination";
    case Errc::infeasible_beta: return "InfeasibleBeta";
    case Errc::invalid_n: return "InvalidN";
    case Errc::non_integer_rates: return "NonIntegerRates";
    case Errc::infeasible_rates: return "InfeasibleRates";
    case Errc::unknown_receiver: return "UnknownReceiver";
    case Errc::field_too_small: return "FieldTooSmall";
    case Errc::construction_failed: return "ConstructionFailed";
    case Errc::inconsistent_observations: return "InconsistentObservations";
    case Errc::non_convergence: return "NonConvergence";
    case Errc::invalid_input: return "InvalidInput";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above so
/// callers (the CLI in particular) can map it to a stable exit status.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace omni
