#include "ergotorus/errors.hpp"

namespace ergotorus {

const char* errc_name(errc code) noexcept {
  switch (code) {
    case errc::invalid_input: return "InvalidInput";
    case errc::config_error: return "ConfigError";
    case errc::not_volume_preserving: return "NotVolumePreserving";
    case errc::not_hyperbolic: return "NotHyperbolic";
    case errc::not_periodic: return "NotPeriodic";
    case errc::aperture_infinite: return "ApertureInfinite";
    case errc::cone_gap_infeasible: return "ConeGapInfeasible";
    case errc::rotation_too_large: return "RotationTooLarge";
    case errc::bound_infeasible: return "BoundInfeasible";
    case errc::scale_too_large: return "ScaleTooLarge";
    case errc::construction_inconsistent: return "ConstructionInconsistent";
    case errc::surgery_mismatch: return "SurgeryMismatch";
    case errc::balls_not_disjoint: return "BallsNotDisjoint";
    case errc::adjustment_breaks_order: return "AdjustmentBreaksOrder";
    case errc::integration_failure: return "IntegrationFailure";
    case errc::underflow: return "Underflow";
    case errc::inconclusive: return "Inconclusive";
  }
  return "Unknown";
}

Error::Error(errc code, const std::string& what)
    : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

void raise(errc code, const std::string& what) { throw Error(code, what); }

void require(bool cond, const std::string& what) {
  if (!cond) raise(errc::invalid_input, what);
}

}  // namespace ergotorus
