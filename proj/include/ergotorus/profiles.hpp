#pragma once

#include <array>

#include "ergotorus/errors.hpp"

namespace ergotorus {

struct ProfileSample {
  double value = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;
};

// C^2 odd bump with an exactly linear core:
//   psi(t) = slope * t           for |t| <= core
//   psi(t) = 0                   for |t| >= support
// joined by a quintic bridge matching value, slope and curvature at both
// knots. Inside the core the evaluation is literally slope*t, so maps built
// on top of the core are exactly linear there.
class BumpProfile {
 public:
  BumpProfile();  // identically zero
  BumpProfile(double support, double core, double slope);

  ProfileSample sample(double t) const;
  double value(double t) const { return sample(t).value; }

  double support_radius() const { return support_; }
  double core_radius() const { return core_; }
  double slope() const { return slope_; }

  // dense-scan suprema over the support (grid of scan_points; the bridge is a
  // quintic, so the scan error is negligible at the default density)
  double sup_abs() const { return sup_abs_; }
  double sup_d1() const { return sup_d1_; }
  double sup_d2() const { return sup_d2_; }
  double sup_value_times_d2() const { return sup_vd2_; }

  static constexpr int scan_points = 100001;

 private:
  double support_ = 1.0, core_ = 0.1, slope_ = 0.0;
  // bridge quintic q(s) on s = (|t| - core) / (support - core) in [0, 1];
  // normalized coordinates keep the coefficients well conditioned at any scale
  std::array<double, 6> bridge_{};
  double sup_abs_ = 0.0, sup_d1_ = 0.0, sup_d2_ = 0.0, sup_vd2_ = 0.0;

  void rescan();
};

// Result of the bounded-bump search: the core is halved until the measured
// sup |psi * psi''| meets the requested bound.
struct BumpBuild {
  BumpProfile profile;
  double achieved_sup = 0.0;  // measured sup |psi * psi''|
  int shrink_steps = 0;       // times the core was halved
};

// Throws bound_infeasible if the bound cannot be met before the core
// collapses below support * 1e-3.
BumpBuild build_bump(double support, double core, double slope, double sup_bound);

// C^2 even window: 1 on [-core, core], 0 outside [-support, support],
// monotone quintic smoothstep transition on each side.
class PlateauWindow {
 public:
  PlateauWindow();  // 1 on [-0.1, 0.1], 0 outside [-1, 1]
  PlateauWindow(double support, double core);

  ProfileSample sample(double t) const;
  double value(double t) const { return sample(t).value; }

  double support_radius() const { return support_; }
  double core_radius() const { return core_; }
  // max |d/dt| over the transition: 15/8 divided by the transition width
  double sup_d1() const;

 private:
  double support_, core_;
};

// Unit-time plateau for the deformation: full twist on the core interval in
// x, fading to zero at the support radius.
using TimeRamp = PlateauWindow;

}  // namespace ergotorus
