#include "ergotorus/profiles.hpp"

#include <cmath>

namespace ergotorus {

namespace {

// quintic smoothstep on [0,1]: S(0)=0, S(1)=1, flat to second order at both ends
inline double sstep(double u) { return u * u * u * (10.0 + u * (-15.0 + 6.0 * u)); }
inline double sstep_d1(double u) { return 30.0 * u * u * (1.0 + u * (-2.0 + u)); }
inline double sstep_d2(double u) { return 60.0 * u * (1.0 + u * (-3.0 + 2.0 * u)); }

}  // namespace

BumpProfile::BumpProfile() : support_(1.0), core_(0.1), slope_(0.0) { rescan(); }

BumpProfile::BumpProfile(double support, double core, double slope)
    : support_(support), core_(core), slope_(slope) {
  require(support > 0.0, "bump support must be positive");
  require(core > 0.0 && core < support, "bump core must lie in (0, support)");
  require(std::isfinite(slope), "bump slope must be finite");

  // Bridge in normalized coordinates: q(s) on [0, 1] with
  //   q(0) = slope*core, q'(0) = slope*w, q''(0) = 0, q(1) = q'(1) = q''(1) = 0,
  // where w = support - core. The quintic Hermite basis gives the closed
  // form; a power-basis solve in u = |t| - core loses the boundary condition
  // to rounding once w is small, leaving a profile that fails to vanish.
  const double w = support - core;
  const double c0 = slope * core;
  const double g = slope * w;
  bridge_[0] = c0;
  bridge_[1] = g;
  bridge_[2] = 0.0;
  bridge_[3] = -10.0 * c0 - 6.0 * g;
  bridge_[4] = 15.0 * c0 + 8.0 * g;
  bridge_[5] = -6.0 * c0 - 3.0 * g;
  rescan();
}

ProfileSample BumpProfile::sample(double t) const {
  const double a = std::abs(t);
  if (a >= support_) return {0.0, 0.0, 0.0};
  if (a <= core_) return {slope_ * t, slope_, 0.0};
  const double w = support_ - core_;
  const double s = (a - core_) / w;
  const double sign = t >= 0.0 ? 1.0 : -1.0;
  double v = 0.0, d1 = 0.0, d2 = 0.0;
  for (int k = 5; k >= 0; --k) v = v * s + bridge_[static_cast<std::size_t>(k)];
  for (int k = 5; k >= 1; --k) d1 = d1 * s + static_cast<double>(k) * bridge_[static_cast<std::size_t>(k)];
  for (int k = 5; k >= 2; --k)
    d2 = d2 * s + static_cast<double>(k * (k - 1)) * bridge_[static_cast<std::size_t>(k)];
  // odd extension: value and curvature flip sign, slope does not
  return {sign * v, d1 / w, sign * d2 / (w * w)};
}

void BumpProfile::rescan() {
  sup_abs_ = sup_d1_ = sup_d2_ = sup_vd2_ = 0.0;
  for (int i = 0; i < scan_points; ++i) {
    double t = support_ * static_cast<double>(i) / static_cast<double>(scan_points - 1);
    ProfileSample s = sample(t);
    sup_abs_ = std::max(sup_abs_, std::abs(s.value));
    sup_d1_ = std::max(sup_d1_, std::abs(s.d1));
    sup_d2_ = std::max(sup_d2_, std::abs(s.d2));
    sup_vd2_ = std::max(sup_vd2_, std::abs(s.value * s.d2));
  }
}

BumpBuild build_bump(double support, double core, double slope, double sup_bound) {
  require(sup_bound > 0.0, "bump curvature product bound must be positive");
  const double core_floor = support * 1e-3;
  int shrinks = 0;
  double c = core;
  for (;;) {
    BumpProfile candidate(support, c, slope);
    double achieved = candidate.sup_value_times_d2();
    if (achieved <= sup_bound) return BumpBuild{candidate, achieved, shrinks};
    if (c * 0.5 < core_floor)
      raise(errc::bound_infeasible,
            "sup |psi psi''| cannot meet the bound at this support radius; enlarge the "
            "support or relax the bound");
    c *= 0.5;
    ++shrinks;
  }
}

PlateauWindow::PlateauWindow() : support_(1.0), core_(0.1) {}

PlateauWindow::PlateauWindow(double support, double core) : support_(support), core_(core) {
  require(support > 0.0, "window support must be positive");
  require(core > 0.0 && core < support, "window core must lie in (0, support)");
}

ProfileSample PlateauWindow::sample(double t) const {
  const double a = std::abs(t);
  if (a <= core_) return {1.0, 0.0, 0.0};
  if (a >= support_) return {0.0, 0.0, 0.0};
  const double w = support_ - core_;
  const double u = (support_ - a) / w;
  const double sign = t >= 0.0 ? 1.0 : -1.0;
  return {sstep(u), -sign * sstep_d1(u) / w, sstep_d2(u) / (w * w)};
}

double PlateauWindow::sup_d1() const { return 1.875 / (support_ - core_); }

}  // namespace ergotorus
