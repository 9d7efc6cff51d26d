#pragma once

#include <memory>
#include <vector>

#include "ergotorus/maps.hpp"
#include "ergotorus/profiles.hpp"
#include "ergotorus/shear.hpp"

namespace ergotorus {

// Eigenvalues of the base linearization at the surgery point, ordered
// unstable / weak stable / strong stable.
struct SpectrumTriple {
  double mu = 2.0;
  double rho = 5.0 / 6.0;
  double lambda = 0.6;

  // 0 < lambda <= rho < 1 < mu and mu*rho*lambda = 1 within 1e-12.
  // lambda == rho is the degenerate case: both stable rates already sit at
  // mu^{-1/2} and the shear stage is skipped.
  void validate() const;
  SpectrumTriple powered(int n) const;
  bool degenerate() const;
};

// Shear rate: the unique eta with (rho/eta, lambda*eta) = (mu^{-1/2}, mu^{-1/2}).
// Equals 1 exactly in the degenerate case.
double solve_eta(const SpectrumTriple& s);

// Midpoint of the admissible cone-contraction interval ((a_k + rho*gamma)/mu, gamma).
// Throws cone_gap_infeasible when the interval is empty.
double cone_xi(double mu, double rho, double gamma, double a_k);

struct EigenFrame {
  Mat3 basis;  // orthonormal eigenvectors as columns, eigenvalues descending
  SpectrumTriple triple;
};

// Orthonormal eigenframe of the base differential at p. The linearization
// must be symmetric with simple positive top eigenvalue; symmetry is what
// makes the chart isometric, so radii and cone apertures mean the same thing
// in chart and torus coordinates. The returned triple is raw (not validated
// against the SpectrumTriple ordering; the center value may be 1).
EigenFrame eigenframe_at(const SmoothMap& base, const TorusPoint& p);

struct DeformationParams {
  double eps_support = 0.1;  // ramp and shear-profile support (chart units)
  double eps_core = 0.02;    // linear-core radius of ramp and profiles
  // Relative cap: sup |psi psi''| must stay below curvature_bound * s0^2,
  // where s0 is the profile slope. The ratio is scale free and has a floor
  // near 0.75 as the core shrinks, so 1.0 pins the shape without being
  // unattainable; the builder halves the core until the cap is met.
  double curvature_bound = 1.0;
  double a = 0.05;                // yz rescale of the shear block
  double gamma = 1.0;             // unstable cone half-aperture
  double theta = 0.3;             // yz rotation angle on the plateau
  double rot_plateau = 0.015;
  double rot_support = 0.03;
  int cone_samples = 4096;  // stratified differential samples for the certificate
  int aperture_rays = 32;
  IntegratorOptions integrator;
  int threads = 1;

  void validate() const;
};

struct ConeCertificate {
  double gamma = 0.0;
  double xi = 0.0;             // designed contraction before the rotation
  double xi_rot = 0.0;         // allowance after the rotation, xi < xi_rot < gamma
  double a_k = 0.0;            // bound on the x-coupling entries (a * K)
  double rho_eff = 0.0;        // sampled sup of the pre-rotation yz-block norm
  double aperture_pre = 0.0;   // sampled max image aperture before rotation
  double aperture_post = 0.0;  // same for the full map
  double max_det_error = 0.0;  // max |det DF - 1| over the samples
  int samples = 0;
};

struct DeformationBuild {
  std::shared_ptr<const LocalMap> local;  // F: chart-coordinate deformation
  SpectrumTriple triple;
  double eta = 1.0;
  BumpBuild bump1, bump2;  // shear profiles, slopes -sqrt(log eta), +sqrt(log eta)
  double k_bound = 0.0;    // K: sup|t'| * sup|X|, 10% inflated
  ConeCertificate cone;
  double support_radius = 0.0;      // all nonlinearity inside this chart ball
  double linear_core_radius = 0.0;  // exactly linear on this ball (fixed matrix)
  double origin_diag_error = 0.0;   // |DF1(0) - diag(mu, mu^-1/2, mu^-1/2)|_max

  double h_drift() const { return local ? local->integration_drift() : 0.0; }
};

// Builds the chart-local deformation: shear flow under the time ramp, the
// rescaled block, and the localized yz rotation, together with the sampled
// cone certificate. Throws scale_too_large, cone_gap_infeasible,
// rotation_too_large, construction_inconsistent, bound_infeasible.
DeformationBuild build_deformation(const SpectrumTriple& s, const DeformationParams& p);

struct SurgeryPlan {
  TorusPoint point;  // fixed or periodic point of the base
  int period = 1;
  double ball_radius = 0.12;  // agreement ball; must exceed the deformation support
  double chart_radius = 0.0;  // 0 = min(1.2 * ball_radius, 0.5)
  DeformationParams params;
  double disjoint_margin = 1.05;  // clearance factor for the orbit-ball check
  int shell_samples = 512;
};

struct SurgeredSystem {
  SmoothMap map;  // f = base . glue
  SmoothMap base;
  TorusPoint point;
  int period = 1;
  Chart chart;
  double ball_radius = 0.0;
  DeformationBuild deformation;
  Mat3 power_linearization;          // differential of base^period at the point
  double min_orbit_clearance = 0.0;  // smallest pairwise gap factor (period > 1)
  EigResult return_spectrum;         // spectrum of Df^period at the point
};

// Full surgery at a fixed or periodic point: checks periodicity and
// orbit-ball disjointness, builds the deformation for the powered spectrum,
// resolves it against base^period, and composes the glue with one copy of
// the base so the result agrees with the base outside the ball.
SurgeredSystem deform_at_point(const SmoothMap& base, const SurgeryPlan& plan);

struct AdjustmentParams {
  double sigma = 0.35;        // index shift: unstable gains e^sigma, center drops to e^-sigma
  double box_support = 0.18;  // per-axis support of the adjustment box
  double box_core = 0.09;     // per-axis linear core
  // Relative cap on sup |psi psi''| / sigma, same convention as the
  // deformation. Loose by default: no cone estimate consumes it here, it only
  // keeps the flow tame, and a tight cap shrinks the cores and with them the
  // exact-linearity ball that later surgeries sit inside.
  double curvature_bound = 12.0;
  double ball_radius = 0.0;  // 0 = 1.05 * box corner radius
  int shell_samples = 512;
  IntegratorOptions integrator;

  void validate() const;
};

struct AdjustedSystem {
  SmoothMap map;  // h' = h . glue
  TorusPoint point;
  Chart chart;
  SpectrumTriple triple;  // spectrum of Dh'(p), product pinned to 1
  double gate_radius = 0.0;
  double linear_core_radius = 0.0;  // exact-linearity certificate ball at p
  BumpBuild bump1, bump2;
  std::shared_ptr<const LocalMap> local;

  double h_drift() const { return local ? local->integration_drift() : 0.0; }
};

// Pre-step for product examples whose center eigenvalue is exactly 1:
// composes h with a volume-preserving shear in the (unstable, center) plane,
// localized in a box at the fixed point p, shifting the spectrum from
// {mu_h, 1, lambda_h} to {mu_h e^sigma, e^-sigma, lambda_h}. The result
// carries a linear_on certificate at p, so the main surgery can run on it.
// Throws adjustment_breaks_order when e^-sigma <= lambda_h.
AdjustedSystem index_adjust(const SmoothMap& h, const TorusPoint& p,
                            const AdjustmentParams& prm);

}  // namespace ergotorus
