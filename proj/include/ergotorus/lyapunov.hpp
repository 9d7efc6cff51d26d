#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "ergotorus/geometry.hpp"
#include "ergotorus/maps.hpp"

namespace ergotorus {

struct ExponentTracePoint {
  long long step = 0;
  std::array<double, 3> running{};  // descending
};

// Finite-time Lyapunov exponents from one orbit, sorted descending, with a
// running-average trace for convergence plots.
struct ExponentEstimate {
  std::array<double, 3> exponents{};
  long long horizon = 0;
  TorusPoint initial{};
  std::vector<ExponentTracePoint> trace;

  double sum() const { return exponents[0] + exponents[1] + exponents[2]; }
};

struct BenettinOptions {
  int renorm_every = 1;   // steps between re-orthonormalizations
  int trace_points = 100; // cap on checkpoints recorded in the trace
  // Starting frame, orthonormalized before the first step. The default
  // identity carries an O(1/n) alignment bias on non-diagonal cocycles; a
  // frame aligned with an invariant splitting removes it, which is what makes
  // exact-linear baselines land on the eigenvalue logs at short horizons.
  Mat3 initial_frame = Mat3::Identity();
};

// Benettin triple: push an orthonormal frame through the differential cocycle,
// re-orthonormalize every renorm_every steps, average the stretch logs.
// Requires n >= 100. Raises underflow when a frame column collapses below
// representable range before a renormalization catches it.
ExponentEstimate benettin_exponents(const SmoothMap& map, const TorusPoint& x0,
                                    long long n, const BenettinOptions& opt = {});

// One-point splitting estimate: unit strong-unstable direction and unit normal
// of the center-stable plane, with an angle gap between the full- and
// half-horizon estimates as the convergence bound.
struct SplittingEstimate {
  Vec3 unstable = Vec3::UnitX();
  Vec3 cs_normal = Vec3::UnitX();
  int horizon = 0;
  double convergence = 0.0;
};

struct OseledetsOptions {
  double inconclusive_above = 1e-3;  // convergence bound beyond which we refuse
};

// The unstable direction comes from pushing a generic vector forward along the
// backward orbit ending at x; the center-stable normal from pulling a generic
// covector back along the forward orbit starting at x. Requires n >= 20.
// Raises inconclusive when either estimate moves more than
// opt.inconclusive_above between horizons n/2 and n.
SplittingEstimate oseledets_directions(const SmoothMap& map, const TorusPoint& x,
                                       int n, const OseledetsOptions& opt = {});

// The unstable half of oseledets_directions alone, for callers that do not
// need the center-stable normal. Same horizon and convergence rules.
Vec3 unstable_direction(const SmoothMap& map, const TorusPoint& x, int n,
                        double inconclusive_above = 1e-3);

struct CsAverageOptions {
  int lookahead = 40;                // pullback window for the plane estimate
  double inconclusive_above = 1e-3;  // per-point normal agreement requirement
};

// Birkhoff average of log of the norm of the differential restricted to the
// estimated center-stable plane. The plane at each orbit point is estimated by
// covector pullback over a lookahead window; windows of length L and L/2 must
// agree at every point or the run raises inconclusive.
double cs_birkhoff_average(const SmoothMap& map, const TorusPoint& x0,
                           long long n, const CsAverageOptions& opt = {});

struct SurveyOptions {
  double delta = 1e-3;  // middle exponent modulus above this counts as nonuniform
  int renorm_every = 1;
  int threads = 1;
};

// Ensemble of Benettin runs from a seeded low-discrepancy point set.
struct ExponentSurvey {
  std::vector<std::array<double, 3>> exponents;  // one triple per member
  double nuh_fraction = 0.0;  // fraction with |middle exponent| > delta
  double delta = 1e-3;
  long long horizon = 0;
  std::uint64_t seed = 0;
};

// Requires ensemble_size >= 10 and n >= 100. Deterministic for a fixed seed
// regardless of opt.threads.
ExponentSurvey exponent_survey(const SmoothMap& map, int ensemble_size,
                               long long n, std::uint64_t seed,
                               const SurveyOptions& opt = {});

struct Histogram {
  double lo = 0.0;
  double hi = 0.0;
  std::vector<long long> counts;  // equal-width bins over [lo, hi]
};

// Distribution of one exponent component (0, 1, or 2) across survey members.
Histogram survey_histogram(const ExponentSurvey& survey, int component, int bins);

}  // namespace ergotorus
