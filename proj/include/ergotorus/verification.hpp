#pragma once

#include <array>
#include <complex>
#include <string>

#include "ergotorus/geometry.hpp"
#include "ergotorus/maps.hpp"

namespace ergotorus {

// Finite-time map-level checks: volume preservation, cone invariance,
// domination, periodic spectrum, perturbation support, and the composite
// membership test for the deformation class. Every check samples
// deterministically (low-discrepancy sequences, fixed reduction order), so a
// report depends only on its inputs, never on thread count or scheduling.

enum class Verdict { pass, fail, inconclusive };

// Outcome of one check. The margin convention is per check and documented at
// each entry point. A non-passing report always carries the witness point and
// the raw value that decided the verdict. wall_seconds is informational and
// never participates in digests or comparisons.
struct VerificationReport {
  std::string name;
  Verdict verdict = Verdict::fail;
  double margin = 0.0;
  TorusPoint worst{};
  double worst_value = 0.0;
  long long samples = 0;
  double tolerance = 0.0;
  double offset = 0.0;  // finite-time constant n0, domination checks only
  double wall_seconds = 0.0;
  std::string detail;

  bool passed() const { return verdict == Verdict::pass; }
};

struct VolumeCheckOptions {
  int threads = 1;
};

// Max |det Df - 1| over n_samples low-discrepancy points. Margin is that
// worst deviation itself; passes iff it is <= tol.
VerificationReport check_volume(const SmoothMap& map, long long n_samples, double tol,
                                const VolumeCheckOptions& opt = {});

struct ConeCheckOptions {
  Mat3 frame = Mat3::Identity();  // orthonormal; cone axis = first column
  int threads = 1;
};

// Pushes Df(x) into the frame and measures the image aperture of the boundary
// of C_gamma (axis 0) at n_points sample points with n_boundary rays each.
// Margin is the minimum relative gap (xi - aperture) / xi; passes iff every
// aperture is <= xi. A straddling or degenerate image counts as an infinite
// aperture and fails with that witness rather than raising.
VerificationReport check_cone_invariance(const SmoothMap& map, double gamma, double xi,
                                         long long n_points, int n_boundary,
                                         const ConeCheckOptions& opt = {});

struct DominationCheckOptions {
  double gamma = 1.0;             // cone around the frame's first column
  Mat3 frame = Mat3::Identity();  // orthonormal
  int threads = 1;
};

// Finite-time domination of the top singular direction: at each sample the
// n_time-step cocycle product D is formed and the gap sigma1/sigma2 compared
// against 2^(n_time - n0). The report's offset is the smallest integer n0 >= 0
// that makes the inequality hold at every sample. Passes iff n0 <= n_time / 2
// and the top singular direction stays inside C_gamma; a larger offset is
// inconclusive (the horizon cannot resolve the gap), never a failure. Margin
// is (n_time/2 - n0) / (n_time/2).
VerificationReport check_domination(const SmoothMap& map, int n_time, long long n_points,
                                    const DominationCheckOptions& opt = {});

// Eigenvalues of the differential of map^period at p, modulus-descending.
struct FixedPointSpectrum {
  std::array<std::complex<double>, 3> values;
  std::array<double, 3> moduli{};
  std::array<double, 3> arguments{};
  // complex stable pair: no one-dimensional invariant line splits the stable
  // bundle at p, so the splitting cannot refine beyond uu + cs there
  bool stable_pair_complex = false;
};

// Requires map^period(p) = p within 1e-10 (not_periodic otherwise).
FixedPointSpectrum fixed_point_spectrum(const SmoothMap& map, const TorusPoint& p,
                                        int period = 1);

struct SupportCheckOptions {
  long long n_samples = 10000;  // low-discrepancy points, kept iff outside the ball
  int shell_samples = 2048;     // extra points on spheres just outside the ball
  double tol = 1e-12;
  int threads = 1;
};

// Max torus distance between map and base over points outside the ball,
// including dense shells just outside its boundary. Margin is the worst
// distance; the construction glues surgeries bit-exactly, so constructed maps
// report margin exactly 0.
VerificationReport check_support(const SmoothMap& map, const SmoothMap& base,
                                 const Ball& ball, const SupportCheckOptions& opt = {});

// Tube around the local stable disk of p, as a chart-aligned slab:
// |c_u| < tube_radius and hypot(c_y, c_z) < stable_radius in chart
// coordinates. Open, contains the chart center, and fits inside the chart
// ball.
struct RegionSpec {
  Chart chart;
  double tube_radius = 0.0;
  double stable_radius = 0.0;

  void validate() const;
  bool contains(const TorusPoint& q) const;
};

struct VMembershipOptions {
  // condition (1): cone invariance + domination
  double gamma = 1.0;
  double xi = 0.0;  // from the construction certificate
  long long cone_points = 4096;
  int cone_rays = 32;
  int domination_time = 30;
  long long domination_points = 1024;
  // condition (2): transversality from inside the tube
  int tube_grid = 6;            // per-axis grid over the slab
  int growth_generations = 12;
  double growth_window = 170.0;  // arc length kept per curve; the expected
                                 // crossing count scales with window * disk area
  double growth_h_max = 1e-3;
  double angle_min = 1e-3;  // crossing-angle threshold, radians
  // condition (3): three-way splitting on orbit segments avoiding the tube
  int n_grid = 64;          // per-axis grid over the torus
  int threads = 1;
};

// Composite membership check for the deformation class, at the fixed point p
// with the tube region U = region. Condition (1) re-verifies cone invariance
// (aperture xi) and domination in the region frame; condition (2) grows local
// unstable curves from a grid inside the tube and requires each to cross the
// stable disk transversely; condition (3) takes grid points whose forward and
// backward n_time-orbits avoid the tube and requires a three-way singular
// value splitting along the 2*n_time segment, with directions matching the
// uu/c/ss cone axes of the frame. Fails with the first failing condition
// index in detail; margin is the minimum margin across conditions.
VerificationReport check_V_membership(const SmoothMap& map, const RegionSpec& region,
                                      const TorusPoint& p, int n_time,
                                      const VMembershipOptions& opt = {});

}  // namespace ergotorus
