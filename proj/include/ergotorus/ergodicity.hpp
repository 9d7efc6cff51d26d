#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "ergotorus/geometry.hpp"
#include "ergotorus/maps.hpp"

namespace ergotorus {

// Pointwise observable with a known exact space average over the torus.
struct Observable {
  std::string label;
  std::function<double(const TorusPoint&)> rule;
  double space_average = 0.0;
};

// cos (or sin) of 2*pi*(k . q) for an integer frequency triple k != 0; exact
// space average 0.
Observable trig_observable(bool cosine, long long kx, long long ky, long long kz);

Observable constant_observable(double value);

// {cos[1,0,0], cos[0,1,0], cos[0,0,1], cos[1,1,1]}: probes along each
// coordinate plus a mixed frequency, covering the expanding and neutral
// directions of the shipped map families.
std::vector<Observable> default_observables();

// (1/n) * sum_{j<n} obs(f^j(x0))
double birkhoff_average(const SmoothMap& map, const Observable& obs,
                        const TorusPoint& x0, long long n);

struct DispersionReport {
  std::string label;
  int ensemble_size = 0;
  long long horizon = 0;
  std::uint64_t seed = 0;
  double space_average = 0.0;
  std::vector<double> member_averages;  // by member index
  double mean = 0.0;
  double deviation = 0.0;  // cross-member standard deviation
};

struct EnsembleOptions {
  int threads = 1;
};

// Cross-member spread of time averages over a seeded uniform ensemble. Member
// i's start point depends only on (seed, i), never on the ensemble size, so
// enlarging the ensemble extends rather than reshuffles it. For maps with an
// invariant coordinate the deviation stalls at the spatial spread of the
// observable; shrinking deviation is consistent with (never proof of)
// ergodicity at the horizon.
DispersionReport dispersion_experiment(const SmoothMap& map, const Observable& obs,
                                       int ensemble_size, long long n,
                                       std::uint64_t seed,
                                       const EnsembleOptions& opt = {});

struct ContrastCell {
  std::string label;
  long long horizon = 0;
  double base_deviation = 0.0;
  double deformed_deviation = 0.0;
  double ratio = 1.0;  // deformed / base; 1 when both vanish
};

// Side-by-side dispersion of two maps over an observable set and a horizon
// ladder. Cells are observable-major, horizon-minor. One orbit pass per
// member serves every observable and every horizon.
struct ContrastReport {
  int ensemble_size = 0;
  std::uint64_t seed = 0;
  std::vector<long long> horizons;
  std::vector<ContrastCell> cells;
};

ContrastReport ergodicity_contrast(const SmoothMap& base, const SmoothMap& deformed,
                                   const std::vector<Observable>& observables,
                                   const std::vector<long long>& horizons,
                                   int ensemble_size, std::uint64_t seed,
                                   const EnsembleOptions& opt = {});

}  // namespace ergotorus
