#include "ergotorus/ergodicity.hpp"

#include <cmath>
#include <limits>

#include "ergotorus/errors.hpp"
#include "ergotorus/parallel.hpp"
#include "ergotorus/rng.hpp"

namespace ergotorus {

namespace {

TorusPoint member_start(std::uint64_t seed, int member) {
  Rng rng(seed, static_cast<std::uint64_t>(member));
  const double x = rng.uniform01();
  const double y = rng.uniform01();
  const double z = rng.uniform01();
  return TorusPoint{x, y, z};
}

// Running time averages of every observable along one orbit, recorded at each
// horizon of the sorted ladder. Returns [horizon][observable].
std::vector<std::vector<double>> orbit_averages(const SmoothMap& map,
                                                const std::vector<Observable>& set,
                                                const TorusPoint& x0,
                                                const std::vector<long long>& horizons) {
  std::vector<std::vector<double>> out(horizons.size(),
                                       std::vector<double>(set.size(), 0.0));
  std::vector<double> sums(set.size(), 0.0);
  TorusPoint q = x0;
  std::size_t next = 0;
  const long long n_max = horizons.back();
  for (long long j = 0; j < n_max; ++j) {
    for (std::size_t o = 0; o < set.size(); ++o) sums[o] += set[o].rule(q);
    q = map.eval(q);
    while (next < horizons.size() && horizons[next] == j + 1) {
      for (std::size_t o = 0; o < set.size(); ++o)
        out[next][o] = sums[o] / static_cast<double>(j + 1);
      ++next;
    }
  }
  return out;
}

void check_horizons(const std::vector<long long>& horizons) {
  require(!horizons.empty(), "need at least one horizon");
  for (std::size_t i = 0; i < horizons.size(); ++i) {
    require(horizons[i] >= 1, "horizons must be positive");
    if (i > 0) require(horizons[i] > horizons[i - 1], "horizons must increase");
  }
}

double stddev(const std::vector<double>& v) {
  double mean = 0.0;
  for (double a : v) mean += a;
  mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double a : v) ss += (a - mean) * (a - mean);
  return std::sqrt(ss / static_cast<double>(v.size()));
}

// member-major matrix of orbit averages, row i = member i's averages
// flattened horizon-major: [member][h * n_obs + o]
std::vector<std::vector<double>> ensemble_matrix(
    const SmoothMap& map, const std::vector<Observable>& set, int ensemble_size,
    const std::vector<long long>& horizons, std::uint64_t seed, int threads) {
  auto blocks = run_blocks<std::vector<std::vector<double>>>(
      static_cast<std::size_t>(ensemble_size), 16, threads,
      [&](std::size_t, std::size_t lo, std::size_t hi) {
        std::vector<std::vector<double>> block;
        block.reserve(hi - lo);
        for (std::size_t i = lo; i < hi; ++i) {
          auto m = orbit_averages(map, set, member_start(seed, static_cast<int>(i)),
                                  horizons);
          std::vector<double> flat;
          flat.reserve(horizons.size() * set.size());
          for (const auto& row : m)
            flat.insert(flat.end(), row.begin(), row.end());
          block.push_back(std::move(flat));
        }
        return block;
      });
  std::vector<std::vector<double>> rows;
  rows.reserve(static_cast<std::size_t>(ensemble_size));
  for (auto& b : blocks)
    for (auto& r : b) rows.push_back(std::move(r));
  return rows;
}

}  // namespace

Observable trig_observable(bool cosine, long long kx, long long ky, long long kz) {
  require(kx != 0 || ky != 0 || kz != 0, "frequency triple must be nonzero");
  Observable obs;
  obs.label = std::string(cosine ? "cos[" : "sin[") + std::to_string(kx) + "," +
              std::to_string(ky) + "," + std::to_string(kz) + "]";
  const double fx = static_cast<double>(kx);
  const double fy = static_cast<double>(ky);
  const double fz = static_cast<double>(kz);
  if (cosine)
    obs.rule = [fx, fy, fz](const TorusPoint& q) {
      return std::cos(2.0 * M_PI * (fx * q.x + fy * q.y + fz * q.z));
    };
  else
    obs.rule = [fx, fy, fz](const TorusPoint& q) {
      return std::sin(2.0 * M_PI * (fx * q.x + fy * q.y + fz * q.z));
    };
  obs.space_average = 0.0;
  return obs;
}

Observable constant_observable(double value) {
  Observable obs;
  obs.label = "const[" + std::to_string(value) + "]";
  obs.rule = [value](const TorusPoint&) { return value; };
  obs.space_average = value;
  return obs;
}

std::vector<Observable> default_observables() {
  return {trig_observable(true, 1, 0, 0), trig_observable(true, 0, 1, 0),
          trig_observable(true, 0, 0, 1), trig_observable(true, 1, 1, 1)};
}

double birkhoff_average(const SmoothMap& map, const Observable& obs,
                        const TorusPoint& x0, long long n) {
  require(map.valid(), "map must be nonempty");
  require(static_cast<bool>(obs.rule), "observable must have a rule");
  require(n >= 1, "horizon must be positive");
  double sum = 0.0;
  TorusPoint q = x0;
  for (long long j = 0; j < n; ++j) {
    sum += obs.rule(q);
    q = map.eval(q);
  }
  return sum / static_cast<double>(n);
}

DispersionReport dispersion_experiment(const SmoothMap& map, const Observable& obs,
                                       int ensemble_size, long long n,
                                       std::uint64_t seed,
                                       const EnsembleOptions& opt) {
  require(map.valid(), "map must be nonempty");
  require(static_cast<bool>(obs.rule), "observable must have a rule");
  require(ensemble_size >= 30, "ensemble too small for a spread estimate");
  require(n >= 1, "horizon must be positive");

  const std::vector<Observable> set{obs};
  const std::vector<long long> horizons{n};
  auto matrix = ensemble_matrix(map, set, ensemble_size, horizons, seed,
                                opt.threads);

  DispersionReport rep;
  rep.label = obs.label;
  rep.ensemble_size = ensemble_size;
  rep.horizon = n;
  rep.seed = seed;
  rep.space_average = obs.space_average;
  rep.member_averages.reserve(matrix.size());
  for (const auto& row : matrix) rep.member_averages.push_back(row[0]);
  double mean = 0.0;
  for (double a : rep.member_averages) mean += a;
  rep.mean = mean / static_cast<double>(ensemble_size);
  rep.deviation = stddev(rep.member_averages);
  return rep;
}

ContrastReport ergodicity_contrast(const SmoothMap& base, const SmoothMap& deformed,
                                   const std::vector<Observable>& observables,
                                   const std::vector<long long>& horizons,
                                   int ensemble_size, std::uint64_t seed,
                                   const EnsembleOptions& opt) {
  require(base.valid() && deformed.valid(), "maps must be nonempty");
  require(!observables.empty(), "need at least one observable");
  for (const Observable& obs : observables)
    require(static_cast<bool>(obs.rule), "observable must have a rule");
  check_horizons(horizons);
  require(ensemble_size >= 30, "ensemble too small for a spread estimate");

  const auto mb =
      ensemble_matrix(base, observables, ensemble_size, horizons, seed, opt.threads);
  const auto md = ensemble_matrix(deformed, observables, ensemble_size, horizons,
                                  seed, opt.threads);

  ContrastReport rep;
  rep.ensemble_size = ensemble_size;
  rep.seed = seed;
  rep.horizons = horizons;
  std::vector<double> column(static_cast<std::size_t>(ensemble_size));
  for (std::size_t o = 0; o < observables.size(); ++o) {
    for (std::size_t h = 0; h < horizons.size(); ++h) {
      ContrastCell cell;
      cell.label = observables[o].label;
      cell.horizon = horizons[h];
      const std::size_t flat = h * observables.size() + o;
      for (int i = 0; i < ensemble_size; ++i) column[i] = mb[i][flat];
      cell.base_deviation = stddev(column);
      for (int i = 0; i < ensemble_size; ++i) column[i] = md[i][flat];
      cell.deformed_deviation = stddev(column);
      if (cell.base_deviation > 0.0)
        cell.ratio = cell.deformed_deviation / cell.base_deviation;
      else
        cell.ratio = cell.deformed_deviation == 0.0
                         ? 1.0
                         : std::numeric_limits<double>::infinity();
      rep.cells.push_back(std::move(cell));
    }
  }
  return rep;
}

}  // namespace ergotorus
