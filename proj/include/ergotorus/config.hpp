#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ergotorus/construction.hpp"
#include "ergotorus/maps.hpp"

namespace ergotorus {

// Declarative description of one experiment: which torus automorphism to
// start from, how to deform it, and the budgets of every pipeline stage.
// The JSON form round-trips losslessly; every field has a default, so a
// partial file is a valid config. Parsing and static review live here,
// execution lives in runner.hpp.

struct BaseConfig {
  std::string kind = "matrix3";  // "matrix3" | "product2"
  IntegerMatrixSpec matrix3;     // active when kind == "matrix3"
  IntegerMatrix2Spec product2;   // 2x2 block extended by the identity on z
};

// Optional spectrum pre-step for product bases whose center rate is exactly 1.
struct AdjustmentConfig {
  bool enabled = false;
  double sigma = 0.35;
  double box_support = 0.18;
  double box_core = 0.09;
  double curvature_bound = 12.0;
  double ball_radius = 0.0;  // 0 = derived from the box corner
  int shell_samples = 512;
  IntegratorOptions integrator;
};

struct ConstructionConfig {
  bool enabled = true;
  TorusPoint point{};
  int period = 1;
  double ball_radius = 0.12;
  double chart_radius = 0.0;  // 0 = min(1.2 * ball_radius, 0.5)
  double disjoint_margin = 1.05;
  int shell_samples = 512;
  DeformationParams params;  // params.threads is supplied by the run
  AdjustmentConfig adjustment;
};

// Budgets for the composite membership check around the deformation point.
struct MembershipConfig {
  bool enabled = false;
  double tube_radius = 0.0;  // 0 = widest slab that fits the chart
  double stable_radius = 0.0;
  int n_time = 30;
  int n_grid = 32;
  int tube_grid = 6;
  int growth_generations = 12;
  double growth_window = 170.0;
  double growth_h_max = 1e-3;
  double angle_min = 1e-3;
  long long cone_points = 4096;
  int cone_rays = 32;
  int domination_time = 30;
  long long domination_points = 1024;
};

struct VerifyConfig {
  bool enabled = true;
  long long volume_samples = 10000;
  double volume_tol = 1e-8;
  long long cone_points = 10000;
  int cone_rays = 64;
  double xi = 0.0;     // 0 = take the construction certificate
  double gamma = 1.0;  // cone half-aperture when no construction supplies one
  int domination_time = 30;
  long long domination_points = 1024;
  long long support_samples = 10000;
  int support_shell_samples = 2048;
  double h_drift_tol = 1e-9;
  MembershipConfig membership;
};

struct LyapunovConfig {
  bool enabled = true;
  long long horizon = 100000;      // constructed map
  long long base_horizon = 10000;  // undeformed base, eigenframe-seeded
  int renorm_every = 1;
  int trace_points = 100;
  double base_tol = 1e-6;  // base exponents against the eigenvalue logs
  double sum_tol = 1e-3;   // |sum of exponents| budget, the volume sentinel
  long long cs_horizon = 10000;  // 0 skips the center-stable averages
  int cs_lookahead = 40;
};

struct CoverageRun {
  int horizon = 0;
  double window = 0.0;
};

struct ManifoldConfig {
  bool enabled = true;
  int grid = 16;
  std::vector<int> ladder = {8, 16};  // horizons of the main coverage sweep
  double window = 25.0;
  double h_max = 0.02;
  double disk_radius = 0.3;
  double angle_min = 1e-3;
  double min_coverage = 0.99;      // verdict threshold at the last rung
  std::vector<CoverageRun> extra;  // additional (horizon, window) report rows
};

struct ErgodicityConfig {
  bool enabled = true;
  int ensemble = 300;
  std::vector<long long> horizons = {1000, 10000};
  bool contrast = false;  // measure against the undeformed base map
};

struct ExperimentConfig {
  std::string name = "custom";
  std::uint64_t seed = 0;
  std::string out_dir = "out";
  int threads = 1;
  BaseConfig base;
  ConstructionConfig construction;
  VerifyConfig verify;
  LyapunovConfig lyapunov;
  ManifoldConfig manifolds;
  ErgodicityConfig ergodicity;
};

// Pretty JSON with a fixed key order and a trailing newline. A run's config
// digest is the digest of exactly this string.
std::string serialize_config(const ExperimentConfig& config);

// Inverse of serialize_config. Missing fields keep their defaults; malformed
// JSON, unknown keys and wrong types raise config_error naming the field
// path.
ExperimentConfig parse_config(const std::string& text);

ExperimentConfig load_config_file(const std::string& path);

struct Diagnostic {
  std::string path;  // dotted field path, e.g. "construction.params.eps_core"
  std::string message;
};

// Static review: range checks on every field plus the cheap construction
// predictions (profile scan for the coupling bound, cone-gap feasibility,
// orbit-ball clearance). Returns findings instead of throwing; an empty list
// means run() will accept the config.
std::vector<Diagnostic> validate(const ExperimentConfig& config);

std::vector<std::string> preset_names();

// Shipped configurations: "bv-t3", "catxid", "linear-only". Unknown names
// raise config_error.
ExperimentConfig preset(const std::string& name);

}  // namespace ergotorus
