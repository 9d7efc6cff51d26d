#pragma once

#include <cstddef>
#include <vector>

#include "ergotorus/construction.hpp"
#include "ergotorus/geometry.hpp"
#include "ergotorus/maps.hpp"

namespace ergotorus {

// Polyline approximation of a local strong-unstable curve, grown by iterating
// a short seed segment. Adjacent samples are spaced at most h_max apart and
// points[seed_index] is the image of the seed point under map^generations.
struct UnstableCurve {
  std::vector<TorusPoint> points;
  std::size_t seed_index = 0;
  TorusPoint seed{};
  double arc_length = 0.0;
  int generations = 0;
  double h_max = 0.0;
};

struct GrowthOptions {
  int direction_horizon = 30;        // backward horizon for the seed direction
  double inconclusive_above = 1e-3;  // forwarded to the direction estimate
  int max_split_depth = 48;          // refinement bisections per source segment
};

// Seeds a length-1e-6 segment along the estimated strong-unstable direction
// at x, applies the map N times, and after each application refines the image
// to spacing <= h_max by bisecting source segments and keeps at most arc L/2
// on each side of the image of x. Memory stays at O(L / h_max) points.
UnstableCurve grow_unstable_curve(const SmoothMap& map, const TorusPoint& x,
                                  double L, int N, double h_max,
                                  const GrowthOptions& opt = {});

// Flat disk {u = 0, |(s,t)| < radius} in an orthonormal chart; axis 0 is the
// transverse (unstable) direction, axes 1 and 2 span the plane.
struct StableDisk {
  TorusPoint center;
  Chart chart;
  double radius = 0.0;

  void validate() const;
};

// The exact-invariance disk of a surgered system: its linear-core ball, where
// the map is a fixed linear contraction on the plane.
StableDisk core_stable_disk(const SurgeredSystem& sys);

// Larger disk on the same invariant plane. The construction keeps the whole
// plane {u = 0} invariant (the local stages all fix it and the base is linear
// outside the ball), so radius is limited by the chart, not the core; pair
// with stable_disk_attraction to confirm the plane contracts to the point.
StableDisk leaf_stable_disk(const SurgeredSystem& sys, double radius);

struct DiskAttraction {
  double max_final_distance = 0.0;  // farthest sample from the center after n steps
  double max_plane_drift = 0.0;     // largest |u| seen along the sampled orbits
};

// Forward-iterates n_samples low-discrepancy disk points for n steps. Keep n
// moderate: transverse rounding is amplified by the unstable rate every step,
// so long horizons measure that amplification instead of the dynamics.
DiskAttraction stable_disk_attraction(const SmoothMap& map, const StableDisk& disk,
                                      int n, int n_samples);

struct Crossing {
  TorusPoint point;         // interpolated crossing location
  double angle = 0.0;       // between the segment and the plane, radians
  double radial = 0.0;      // distance from the disk center within the plane
  std::size_t segment = 0;  // polyline segment index
};

struct HitReport {
  std::vector<Crossing> transverse;
  std::vector<Crossing> tangential;  // crossings below the angle threshold

  bool hit() const { return !transverse.empty(); }
};

// Plane crossings of the polyline inside the disk radius, split by crossing
// angle. Chart coordinates use shortest torus displacement, so crossings near
// a fundamental-domain seam are found; segments whose chart chord is long are
// wrap artifacts and are skipped.
HitReport transverse_hit(const UnstableCurve& curve, const StableDisk& disk,
                         double angle_min = 1e-3);

// Cubic grid of cell centers ((i+1/2)/n, (j+1/2)/n, (k+1/2)/n).
struct GridSpec {
  int per_axis = 16;

  long long size() const {
    const long long m = per_axis;
    return m * m * m;
  }
  TorusPoint point(long long flat) const;
  void validate() const;
};

struct CoverageOptions {
  double h_max = 0.02;
  double angle_min = 1e-3;
  GrowthOptions growth;
  int threads = 1;
};

struct CoverageReport {
  int grid_per_axis = 0;
  int horizon = 0;     // N
  double budget = 0.0; // L
  long long hits = 0;
  long long total = 0;
  double coverage = 0.0;
  std::vector<long long> failure_indices;  // ascending flat grid indices
  std::vector<TorusPoint> failures;
};

// For every grid point, grows the unstable curve (budget N, L) and tests for
// a transverse hit of the disk; failures over-approximate the bad set at this
// horizon. Deterministic for fixed options regardless of thread count.
CoverageReport phc_plus_coverage(const SmoothMap& map, const StableDisk& disk,
                                 const GridSpec& grid, int N, double L,
                                 const CoverageOptions& opt = {});

struct BadSetSequence {
  std::vector<CoverageReport> reports;  // one per horizon, in input order
  // Failure clouds should shrink as the horizon grows. Pruning keeps only an
  // arc-L window around the orbit of each grid point, so a hit can slide out
  // of the window at a later horizon; that shows up here as a warning, not a
  // failure.
  long long escaped_points = 0;
  bool refinement_warning = false;
};

BadSetSequence bad_set_estimate(const SmoothMap& map, const StableDisk& disk,
                                const GridSpec& grid, const std::vector<int>& horizons,
                                double L, const CoverageOptions& opt = {});

// Box-visit fraction of one unstable curve over a cubic partition. This is a
// proxy for backward-class coverage (the 2D stable manifolds of generic
// points are out of numerical reach), not a measurement of it.
struct BoxCoverage {
  int boxes_per_axis = 32;
  long long visited = 0;
  long long total = 0;
  double fraction = 0.0;
  bool proxy = true;
};

BoxCoverage unstable_box_coverage(const SmoothMap& map, const TorusPoint& p,
                                  double L, int N, const CoverageOptions& opt = {});

}  // namespace ergotorus
