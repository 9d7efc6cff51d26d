#include "ergotorus/manifolds.hpp"

#include <algorithm>
#include <cmath>

#include "ergotorus/errors.hpp"
#include "ergotorus/lyapunov.hpp"
#include "ergotorus/parallel.hpp"
#include "ergotorus/rng.hpp"

namespace ergotorus {

namespace {

TorusPoint chord_midpoint(const TorusPoint& a, const TorusPoint& b) {
  return wrap(a.vec() + 0.5 * displacement(a, b));
}

// Appends refined image samples of the source segment (a, b], bisecting the
// source chord until image spacing fits h_max. Returns false once the arc
// budget is spent; fa/fb are the already-computed images of a/b.
bool emit_refined(const SmoothMap& map, const TorusPoint& a, const TorusPoint& b,
                  const TorusPoint& fa, const TorusPoint& fb, int depth, double h_max,
                  double& arc, double cap, std::vector<TorusPoint>& out) {
  const double d = torus_distance(fa, fb);
  if (d <= h_max) {
    if (arc + d > cap) return false;
    arc += d;
    out.push_back(fb);
    return true;
  }
  if (depth <= 0)
    raise(errc::integration_failure, "curve refinement exceeded the split depth");
  const TorusPoint m = chord_midpoint(a, b);
  const TorusPoint fm = map.eval(m);
  return emit_refined(map, a, m, fa, fm, depth - 1, h_max, arc, cap, out) &&
         emit_refined(map, m, b, fm, fb, depth - 1, h_max, arc, cap, out);
}

// One map application to the whole polyline, refined and pruned to arc L/2 on
// each side of the image of the tracked seed sample.
void advance_generation(const SmoothMap& map, UnstableCurve& c, double L, double h_max,
                        int max_depth) {
  const std::vector<TorusPoint>& src = c.points;
  const std::size_t si = c.seed_index;
  const TorusPoint fs = map.eval(src[si]);
  const double cap = 0.5 * L;

  std::vector<TorusPoint> right;
  double arc_r = 0.0;
  {
    TorusPoint a = src[si];
    TorusPoint fa = fs;
    for (std::size_t i = si + 1; i < src.size(); ++i) {
      const TorusPoint b = src[i];
      const TorusPoint fb = map.eval(b);
      if (!emit_refined(map, a, b, fa, fb, max_depth, h_max, arc_r, cap, right)) break;
      a = b;
      fa = fb;
    }
  }

  std::vector<TorusPoint> left;  // emitted walking away from the seed
  double arc_l = 0.0;
  {
    TorusPoint a = src[si];
    TorusPoint fa = fs;
    for (std::size_t i = si; i-- > 0;) {
      const TorusPoint b = src[i];
      const TorusPoint fb = map.eval(b);
      if (!emit_refined(map, a, b, fa, fb, max_depth, h_max, arc_l, cap, left)) break;
      a = b;
      fa = fb;
    }
  }

  std::vector<TorusPoint> next;
  next.reserve(left.size() + right.size() + 1);
  for (std::size_t i = left.size(); i-- > 0;) next.push_back(left[i]);
  next.push_back(fs);
  for (const TorusPoint& q : right) next.push_back(q);

  c.points = std::move(next);
  c.seed_index = left.size();
  c.arc_length = arc_l + arc_r;
}

}  // namespace

UnstableCurve grow_unstable_curve(const SmoothMap& map, const TorusPoint& x, double L,
                                  int N, double h_max, const GrowthOptions& opt) {
  require(map.valid(), "map must be nonempty");
  require(L >= 1e-6, "arc budget must cover the seed segment");
  require(N >= 0, "generation count must be nonnegative");
  require(h_max > 0.0 && h_max <= 0.1, "sample spacing must lie in (0, 0.1]");
  require(L / h_max <= 2e6, "arc budget too fine for the spacing");
  require(opt.max_split_depth >= 4, "split depth too small");

  const Vec3 dir = unstable_direction(map, x, opt.direction_horizon, opt.inconclusive_above);

  UnstableCurve curve;
  curve.seed = x;
  curve.h_max = h_max;

  const double half_len = 5e-7;
  const int m = std::max(1, static_cast<int>(std::ceil(half_len / h_max)));
  curve.points.reserve(static_cast<std::size_t>(2 * m + 1));
  for (int i = -m; i <= m; ++i)
    curve.points.push_back(wrap(x.vec() + (half_len * static_cast<double>(i) / m) * dir));
  curve.seed_index = static_cast<std::size_t>(m);
  curve.arc_length = 0.0;
  for (std::size_t i = 0; i + 1 < curve.points.size(); ++i)
    curve.arc_length += torus_distance(curve.points[i], curve.points[i + 1]);

  for (int g = 0; g < N; ++g) advance_generation(map, curve, L, h_max, opt.max_split_depth);
  curve.generations = N;
  return curve;
}

void StableDisk::validate() const {
  chart.validate(1e-9);
  require(radius > 0.0, "disk radius must be positive");
  require(radius <= chart.radius, "disk must fit inside its chart");
}

StableDisk core_stable_disk(const SurgeredSystem& sys) {
  StableDisk d;
  d.center = sys.point;
  d.chart = sys.chart;
  d.radius = sys.deformation.linear_core_radius;
  d.validate();
  return d;
}

StableDisk leaf_stable_disk(const SurgeredSystem& sys, double radius) {
  require(radius > 0.0 && radius <= 0.45, "leaf disk radius must lie in (0, 0.45]");
  StableDisk d;
  d.center = sys.point;
  d.chart = sys.chart;
  d.chart.radius = 0.45;
  d.radius = radius;
  d.validate();
  return d;
}

DiskAttraction stable_disk_attraction(const SmoothMap& map, const StableDisk& disk,
                                      int n, int n_samples) {
  require(map.valid(), "map must be nonempty");
  disk.validate();
  require(n >= 1, "horizon must be positive");
  require(n_samples >= 1, "need at least one sample");

  DiskAttraction out;
  for (int i = 0; i < n_samples; ++i) {
    const double r = disk.radius * std::sqrt(radical_inverse(static_cast<std::uint64_t>(i) + 1, 2));
    const double phi = 2.0 * M_PI * radical_inverse(static_cast<std::uint64_t>(i) + 1, 3);
    TorusPoint q = disk.chart.from_chart(Vec3(0.0, r * std::cos(phi), r * std::sin(phi)));
    for (int s = 0; s < n; ++s) {
      q = map.eval(q);
      const Vec3 c = disk.chart.to_chart(q);
      out.max_plane_drift = std::max(out.max_plane_drift, std::abs(c[0]));
    }
    out.max_final_distance =
        std::max(out.max_final_distance, torus_distance(q, disk.center));
  }
  return out;
}

HitReport transverse_hit(const UnstableCurve& curve, const StableDisk& disk,
                         double angle_min) {
  disk.validate();
  require(angle_min > 0.0, "angle threshold must be positive");

  HitReport rep;
  if (curve.points.size() < 2) return rep;

  const double chord_cap = 0.3;  // longer chart chords are wrap artifacts
  Vec3 ca = disk.chart.to_chart(curve.points[0]);
  for (std::size_t i = 0; i + 1 < curve.points.size(); ++i) {
    const Vec3 cb = disk.chart.to_chart(curve.points[i + 1]);
    const Vec3 chord = cb - ca;
    const double len = chord.norm();
    if (len > chord_cap || len == 0.0) {
      ca = cb;
      continue;
    }
    const double ua = ca[0];
    const double ub = cb[0];
    // half-open sign convention so a sample landing exactly on the plane is
    // counted by one segment only
    const bool crosses = (ua < 0.0 && ub >= 0.0) || (ua > 0.0 && ub <= 0.0);
    if (crosses) {
      const double t = ua / (ua - ub);
      const Vec3 cpos = ca + t * chord;
      const double radial = std::hypot(cpos[1], cpos[2]);
      if (radial <= disk.radius) {
        Crossing c;
        c.point = disk.chart.from_chart(cpos);
        c.angle = std::asin(std::min(1.0, std::abs(chord[0]) / len));
        c.radial = radial;
        c.segment = i;
        (c.angle >= angle_min ? rep.transverse : rep.tangential).push_back(c);
      }
    }
    ca = cb;
  }
  return rep;
}

void GridSpec::validate() const {
  require(per_axis >= 1 && per_axis <= 1024, "grid per_axis must lie in [1, 1024]");
}

TorusPoint GridSpec::point(long long flat) const {
  const long long m = per_axis;
  const long long i = flat / (m * m);
  const long long j = (flat / m) % m;
  const long long k = flat % m;
  const double d = 1.0 / static_cast<double>(m);
  return TorusPoint{(static_cast<double>(i) + 0.5) * d, (static_cast<double>(j) + 0.5) * d,
                    (static_cast<double>(k) + 0.5) * d};
}

CoverageReport phc_plus_coverage(const SmoothMap& map, const StableDisk& disk,
                                 const GridSpec& grid, int N, double L,
                                 const CoverageOptions& opt) {
  require(map.valid(), "map must be nonempty");
  disk.validate();
  grid.validate();
  require(N >= 0, "horizon must be nonnegative");

  const long long total = grid.size();
  struct BlockOut {
    long long hits = 0;
    std::vector<long long> failures;
  };
  auto blocks = run_blocks<BlockOut>(
      static_cast<std::size_t>(total), 64, opt.threads,
      [&](std::size_t, std::size_t lo, std::size_t hi) {
        BlockOut out;
        for (std::size_t f = lo; f < hi; ++f) {
          const TorusPoint x = grid.point(static_cast<long long>(f));
          UnstableCurve curve = grow_unstable_curve(map, x, L, N, opt.h_max, opt.growth);
          if (transverse_hit(curve, disk, opt.angle_min).hit())
            ++out.hits;
          else
            out.failures.push_back(static_cast<long long>(f));
        }
        return out;
      });

  CoverageReport rep;
  rep.grid_per_axis = grid.per_axis;
  rep.horizon = N;
  rep.budget = L;
  rep.total = total;
  for (const BlockOut& b : blocks) {
    rep.hits += b.hits;
    rep.failure_indices.insert(rep.failure_indices.end(), b.failures.begin(),
                               b.failures.end());
  }
  rep.coverage =
      total > 0 ? static_cast<double>(rep.hits) / static_cast<double>(total) : 0.0;
  rep.failures.reserve(rep.failure_indices.size());
  for (long long f : rep.failure_indices) rep.failures.push_back(grid.point(f));
  return rep;
}

BadSetSequence bad_set_estimate(const SmoothMap& map, const StableDisk& disk,
                                const GridSpec& grid, const std::vector<int>& horizons,
                                double L, const CoverageOptions& opt) {
  require(!horizons.empty(), "need at least one horizon");
  for (std::size_t i = 0; i < horizons.size(); ++i) {
    require(horizons[i] >= 0, "horizons must be nonnegative");
    if (i > 0) require(horizons[i] > horizons[i - 1], "horizons must increase");
  }

  BadSetSequence seq;
  seq.reports.reserve(horizons.size());
  for (int N : horizons)
    seq.reports.push_back(phc_plus_coverage(map, disk, grid, N, L, opt));

  for (std::size_t k = 1; k < seq.reports.size(); ++k) {
    const std::vector<long long>& prev = seq.reports[k - 1].failure_indices;
    const std::vector<long long>& cur = seq.reports[k].failure_indices;
    std::size_t p = 0;
    for (long long f : cur) {
      while (p < prev.size() && prev[p] < f) ++p;
      if (p >= prev.size() || prev[p] != f) ++seq.escaped_points;
    }
  }
  seq.refinement_warning = seq.escaped_points > 0;
  return seq;
}

BoxCoverage unstable_box_coverage(const SmoothMap& map, const TorusPoint& p, double L,
                                  int N, const CoverageOptions& opt) {
  BoxCoverage box;
  const int b = box.boxes_per_axis;
  require(opt.h_max <= 1.0 / static_cast<double>(b),
          "sample spacing must resolve the box partition");

  UnstableCurve curve = grow_unstable_curve(map, p, L, N, opt.h_max, opt.growth);
  std::vector<char> seen(static_cast<std::size_t>(b) * b * b, 0);
  for (const TorusPoint& q : curve.points) {
    const int ix = std::min(b - 1, static_cast<int>(q.x * b));
    const int iy = std::min(b - 1, static_cast<int>(q.y * b));
    const int iz = std::min(b - 1, static_cast<int>(q.z * b));
    seen[(static_cast<std::size_t>(ix) * b + iy) * b + iz] = 1;
  }
  for (char s : seen) box.visited += s;
  box.total = static_cast<long long>(seen.size());
  box.fraction = static_cast<double>(box.visited) / static_cast<double>(box.total);
  return box;
}

}  // namespace ergotorus
