#pragma once

#include <stdexcept>
#include <string>

namespace ergotorus {

// Failure conditions surfaced by the toolkit. Each value names the reason a
// precondition or certificate could not be established, not the call site.
enum class errc {
  invalid_input,
  config_error,
  not_volume_preserving,
  not_hyperbolic,
  not_periodic,
  aperture_infinite,
  cone_gap_infeasible,
  rotation_too_large,
  bound_infeasible,
  scale_too_large,
  construction_inconsistent,
  surgery_mismatch,
  balls_not_disjoint,
  adjustment_breaks_order,
  integration_failure,
  underflow,
  inconclusive,
};

const char* errc_name(errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(errc code, const std::string& what);
  errc code() const noexcept { return code_; }

 private:
  errc code_;
};

[[noreturn]] void raise(errc code, const std::string& what);

// Throws invalid_input unless cond holds.
void require(bool cond, const std::string& what);

}  // namespace ergotorus
