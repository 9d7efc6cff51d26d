#include "ergotorus/verification.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "ergotorus/manifolds.hpp"
#include "ergotorus/parallel.hpp"
#include "ergotorus/rng.hpp"

namespace ergotorus {

namespace {

constexpr std::size_t kBlock = 256;

TorusPoint halton_torus_point(std::uint64_t index) {
  double u[3];
  Halton3::point(index, u);
  return TorusPoint{u[0], u[1], u[2]};
}

// unit direction from two radical inverses; area-uniform on the sphere
Vec3 halton_sphere_dir(std::uint64_t index) {
  const double z = 1.0 - 2.0 * radical_inverse(index + 1, 2);
  const double phi = 2.0 * M_PI * radical_inverse(index + 1, 3);
  const double s = std::sqrt(std::max(0.0, 1.0 - z * z));
  return Vec3(s * std::cos(phi), s * std::sin(phi), z);
}

struct Timer {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
};

void check_frame(const Mat3& frame) {
  double dev = (frame.transpose() * frame - Mat3::Identity()).cwiseAbs().maxCoeff();
  if (dev > 1e-9) raise(errc::invalid_input, "frame must be orthonormal");
}

// worst sample of a block; ties resolve to the lowest index so reductions do
// not depend on the thread count
struct Extreme {
  double value = -std::numeric_limits<double>::infinity();
  std::uint64_t index = 0;
  bool seen = false;

  void offer(double v, std::uint64_t i) {
    if (!seen || v > value) {
      value = v;
      index = i;
      seen = true;
    }
  }
  void merge(const Extreme& other) {
    if (other.seen && (!seen || other.value > value)) *this = other;
  }
};

}  // namespace

VerificationReport check_volume(const SmoothMap& map, long long n_samples, double tol,
                                const VolumeCheckOptions& opt) {
  require(map.valid(), "map is empty");
  if (n_samples < 1) raise(errc::invalid_input, "need at least one sample");
  if (!(tol >= 0.0)) raise(errc::invalid_input, "tolerance must be nonnegative");
  Timer timer;

  auto blocks = run_blocks<Extreme>(
      static_cast<std::size_t>(n_samples), kBlock, opt.threads,
      [&](std::size_t, std::size_t lo, std::size_t hi) {
        Extreme w;
        for (std::size_t i = lo; i < hi; ++i) {
          TorusPoint q = halton_torus_point(i);
          w.offer(std::abs(map.differential(q).determinant() - 1.0), i);
        }
        return w;
      });
  Extreme worst;
  for (const Extreme& b : blocks) worst.merge(b);

  VerificationReport rep;
  rep.name = "volume";
  rep.samples = n_samples;
  rep.tolerance = tol;
  rep.worst = halton_torus_point(worst.index);
  rep.worst_value = worst.value;
  rep.margin = worst.value;
  rep.verdict = worst.value <= tol ? Verdict::pass : Verdict::fail;
  rep.wall_seconds = timer.seconds();
  return rep;
}

VerificationReport check_cone_invariance(const SmoothMap& map, double gamma, double xi,
                                         long long n_points, int n_boundary,
                                         const ConeCheckOptions& opt) {
  require(map.valid(), "map is empty");
  if (!(gamma > 0.0) || !(xi > 0.0) || !(xi < gamma))
    raise(errc::invalid_input, "cone check needs 0 < xi < gamma");
  if (n_points < 1) raise(errc::invalid_input, "need at least one sample point");
  if (n_boundary < 8) raise(errc::invalid_input, "need at least 8 boundary rays");
  check_frame(opt.frame);
  Timer timer;
  const ConeSpec cone{0, gamma};
  const double inf = std::numeric_limits<double>::infinity();

  auto blocks = run_blocks<Extreme>(
      static_cast<std::size_t>(n_points), kBlock, opt.threads,
      [&](std::size_t, std::size_t lo, std::size_t hi) {
        Extreme w;
        for (std::size_t i = lo; i < hi; ++i) {
          TorusPoint q = halton_torus_point(i);
          Mat3 a = opt.frame.transpose() * map.differential(q) * opt.frame;
          double aperture;
          try {
            aperture = cone_image_aperture(a, cone, n_boundary);
          } catch (const Error&) {
            aperture = inf;  // image straddles or touches the orthogonal plane
          }
          w.offer(aperture, i);
        }
        return w;
      });
  Extreme worst;
  for (const Extreme& b : blocks) worst.merge(b);

  VerificationReport rep;
  rep.name = "cone-invariance";
  rep.samples = n_points;
  rep.tolerance = xi;
  rep.worst = halton_torus_point(worst.index);
  rep.worst_value = worst.value;
  rep.margin = (xi - worst.value) / xi;
  rep.verdict = worst.value <= xi ? Verdict::pass : Verdict::fail;
  if (std::isinf(worst.value)) rep.detail = "image cone leaves the half-space";
  rep.wall_seconds = timer.seconds();
  return rep;
}

VerificationReport check_domination(const SmoothMap& map, int n_time, long long n_points,
                                    const DominationCheckOptions& opt) {
  require(map.valid(), "map is empty");
  if (n_time < 1) raise(errc::invalid_input, "domination horizon must be >= 1");
  if (n_points < 1) raise(errc::invalid_input, "need at least one sample point");
  if (!(opt.gamma > 0.0)) raise(errc::invalid_input, "cone aperture must be positive");
  check_frame(opt.frame);
  Timer timer;
  const ConeSpec cone{0, opt.gamma};
  const double inf = std::numeric_limits<double>::infinity();

  struct BlockOut {
    Extreme inv_gap;       // maximizing 1/gap locates the minimal gap
    Extreme cone_violation;  // value unused; index of the first violation
  };
  auto blocks = run_blocks<BlockOut>(
      static_cast<std::size_t>(n_points), kBlock, opt.threads,
      [&](std::size_t, std::size_t lo, std::size_t hi) {
        BlockOut out;
        for (std::size_t i = lo; i < hi; ++i) {
          TorusPoint q = halton_torus_point(i);
          TorusPoint x = q;
          Mat3 d = Mat3::Identity();
          for (int k = 0; k < n_time; ++k) {
            d = map.differential(x) * d;
            x = map.eval(x);
            // only singular value ratios are used, so rescaling is free
            double m = d.cwiseAbs().maxCoeff();
            if (m > 1e250) d /= m;
          }
          Eigen::JacobiSVD<Mat3> svd(d, Eigen::ComputeFullU);
          const double s1 = svd.singularValues()(0);
          const double s2 = svd.singularValues()(1);
          const double gap = s2 > 0.0 ? s1 / s2 : inf;
          out.inv_gap.offer(1.0 / gap, i);
          Vec3 top = opt.frame.transpose() * svd.matrixU().col(0);
          if (!cone_contains(cone, top) && !out.cone_violation.seen)
            out.cone_violation.offer(0.0, i);
        }
        return out;
      });
  Extreme inv_gap;
  Extreme cone_violation;
  for (const BlockOut& b : blocks) {
    inv_gap.merge(b.inv_gap);
    if (b.cone_violation.seen && !cone_violation.seen) cone_violation = b.cone_violation;
  }

  const double min_gap = 1.0 / inv_gap.value;
  double n0 = 0.0;
  if (std::isfinite(min_gap))
    n0 = std::max(0.0, std::ceil(static_cast<double>(n_time) - std::log2(min_gap)));
  const double n_half = 0.5 * static_cast<double>(n_time);

  VerificationReport rep;
  rep.name = "domination";
  rep.samples = n_points;
  rep.tolerance = n_half;  // offset budget
  rep.offset = n0;
  rep.worst_value = min_gap;
  rep.margin = (n_half - n0) / n_half;
  if (cone_violation.seen) {
    rep.verdict = Verdict::fail;
    rep.worst = halton_torus_point(cone_violation.index);
    rep.detail = "top singular direction leaves the cone";
  } else {
    rep.worst = halton_torus_point(inv_gap.index);
    if (n0 <= n_half) {
      rep.verdict = Verdict::pass;
    } else {
      rep.verdict = Verdict::inconclusive;
      rep.detail = "horizon too short to resolve the gap";
    }
  }
  rep.wall_seconds = timer.seconds();
  return rep;
}

FixedPointSpectrum fixed_point_spectrum(const SmoothMap& map, const TorusPoint& p,
                                        int period) {
  require(map.valid(), "map is empty");
  if (period < 1) raise(errc::invalid_input, "period must be >= 1");
  if (torus_distance(map.iterate(p, period), p) > 1e-10)
    raise(errc::not_periodic, "point does not return at the stated period");

  Mat3 d = Mat3::Identity();
  TorusPoint x = p;
  for (int k = 0; k < period; ++k) {
    d = map.differential(x) * d;
    x = map.eval(x);
  }
  EigResult eig = eigen_decomposition(d);

  FixedPointSpectrum out;
  out.values = eig.values;
  for (std::size_t i = 0; i < 3; ++i) {
    out.moduli[i] = std::abs(out.values[i]);
    out.arguments[i] = std::arg(out.values[i]);
  }
  const std::complex<double> a = out.values[1];
  const std::complex<double> b = out.values[2];
  out.stable_pair_complex = std::abs(a.imag()) > 1e-10 * std::abs(a) &&
                            std::abs(a - std::conj(b)) <= 1e-8 * std::abs(a);
  return out;
}

VerificationReport check_support(const SmoothMap& map, const SmoothMap& base,
                                 const Ball& ball, const SupportCheckOptions& opt) {
  require(map.valid() && base.valid(), "map is empty");
  if (!(ball.radius >= 0.0)) raise(errc::invalid_input, "ball radius must be nonnegative");
  if (!(opt.tol >= 0.0)) raise(errc::invalid_input, "tolerance must be nonnegative");
  if (opt.n_samples < 0 || opt.shell_samples < 0 ||
      opt.n_samples + opt.shell_samples < 1)
    raise(errc::invalid_input, "need at least one sample");
  Timer timer;

  // shells hug the boundary from outside; the innermost factor leaves enough
  // slack that torus and chart norms cannot disagree about the side
  static constexpr double kShellFactors[3] = {1.0 + 1e-9, 1.0 + 1e-6, 1.0 + 1e-3};
  const std::uint64_t n_free = static_cast<std::uint64_t>(opt.n_samples);
  const std::uint64_t total = n_free + static_cast<std::uint64_t>(opt.shell_samples);

  auto sample_point = [&](std::uint64_t i) -> TorusPoint {
    if (i < n_free) return halton_torus_point(i);
    const std::uint64_t j = i - n_free;
    const double r = ball.radius * kShellFactors[j % 3];
    return wrap(ball.center.vec() + r * halton_sphere_dir(j));
  };

  struct BlockOut {
    Extreme dev;
    long long kept = 0;
  };
  auto blocks = run_blocks<BlockOut>(
      total, kBlock, opt.threads, [&](std::size_t, std::size_t lo, std::size_t hi) {
        BlockOut out;
        for (std::size_t i = lo; i < hi; ++i) {
          TorusPoint q = sample_point(i);
          if (i < n_free && torus_distance(q, ball.center) <= ball.radius * (1.0 + 1e-12))
            continue;
          out.dev.offer(torus_distance(map.eval(q), base.eval(q)), i);
          ++out.kept;
        }
        return out;
      });
  Extreme worst;
  long long kept = 0;
  for (const BlockOut& b : blocks) {
    worst.merge(b.dev);
    kept += b.kept;
  }
  if (kept == 0) raise(errc::invalid_input, "ball swallowed every sample");

  VerificationReport rep;
  rep.name = "support";
  rep.samples = kept;
  rep.tolerance = opt.tol;
  rep.worst = sample_point(worst.index);
  rep.worst_value = worst.value;
  rep.margin = worst.value;
  rep.verdict = worst.value <= opt.tol ? Verdict::pass : Verdict::fail;
  rep.wall_seconds = timer.seconds();
  return rep;
}

void RegionSpec::validate() const {
  chart.validate(1e-9);
  if (!(tube_radius > 0.0) || !(stable_radius > 0.0))
    raise(errc::invalid_input, "tube and stable radii must be positive");
  if (std::hypot(tube_radius, stable_radius) > chart.radius)
    raise(errc::invalid_input, "tube must fit inside the chart ball");
}

bool RegionSpec::contains(const TorusPoint& q) const {
  Vec3 c = chart.to_chart(q);
  return std::abs(c[0]) < tube_radius && std::hypot(c[1], c[2]) < stable_radius;
}

VerificationReport check_V_membership(const SmoothMap& map, const RegionSpec& region,
                                      const TorusPoint& p, int n_time,
                                      const VMembershipOptions& opt) {
  require(map.valid(), "map is empty");
  region.validate();
  if (n_time < 1) raise(errc::invalid_input, "avoidance horizon must be >= 1");
  if (opt.tube_grid < 1) raise(errc::invalid_input, "tube grid must be >= 1");
  if (opt.growth_generations < 0)
    raise(errc::invalid_input, "growth generations must be >= 0");
  if (!(opt.angle_min > 0.0))
    raise(errc::invalid_input, "crossing angle threshold must be positive");
  if (torus_distance(region.chart.center, p) > 1e-9)
    raise(errc::invalid_input, "region chart must be centered at the fixed point");
  if (torus_distance(map.eval(p), p) > 1e-10)
    raise(errc::not_periodic, "membership test expects a fixed point");
  const GridSpec grid{opt.n_grid};
  grid.validate();
  const double inf = std::numeric_limits<double>::infinity();
  Timer timer;

  VerificationReport rep;
  rep.name = "V-membership";
  rep.tolerance = opt.xi;
  double margin = inf;
  long long samples = 0;
  std::string pending;  // first inconclusive condition, if any

  // remembers the weakest witness across conditions for the passing report
  auto weakest = [&](double m, const TorusPoint& w, double v) {
    if (m < margin) {
      margin = m;
      rep.worst = w;
      rep.worst_value = v;
    }
  };
  auto finish = [&]() {
    rep.margin = margin;
    rep.samples = samples;
    rep.wall_seconds = timer.seconds();
    return rep;
  };
  auto fail = [&](int condition, const std::string& why, double m,
                  const TorusPoint& w, double v) {
    margin = std::min(margin, m);
    rep.worst = w;
    rep.worst_value = v;
    rep.verdict = Verdict::fail;
    rep.detail = "condition " + std::to_string(condition) + " failed: " + why;
    return finish();
  };

  // (1) cone invariance and domination, both seen from the region frame
  {
    ConeCheckOptions copt;
    copt.frame = region.chart.basis;
    copt.threads = opt.threads;
    VerificationReport cone = check_cone_invariance(map, opt.gamma, opt.xi,
                                                    opt.cone_points, opt.cone_rays, copt);
    samples += cone.samples;
    if (cone.verdict == Verdict::fail)
      return fail(1, cone.detail.empty() ? "cone aperture exceeds the certificate"
                                         : cone.detail,
                  cone.margin, cone.worst, cone.worst_value);
    weakest(cone.margin, cone.worst, cone.worst_value);

    DominationCheckOptions dopt;
    dopt.gamma = opt.gamma;
    dopt.frame = region.chart.basis;
    dopt.threads = opt.threads;
    VerificationReport dom = check_domination(map, opt.domination_time,
                                              opt.domination_points, dopt);
    samples += dom.samples;
    if (dom.verdict == Verdict::fail)
      return fail(1, dom.detail, dom.margin, dom.worst, dom.worst_value);
    if (dom.verdict == Verdict::inconclusive && pending.empty())
      pending = "condition 1 inconclusive: " + dom.detail;
    weakest(dom.margin, dom.worst, dom.worst_value);
  }

  // (2) local unstable curves from a grid over the tube must cross the
  // stable disk transversely
  {
    StableDisk disk{p, region.chart, region.stable_radius};
    std::vector<TorusPoint> seeds;
    const int g = opt.tube_grid;
    for (int i = 0; i < g; ++i)
      for (int j = 0; j < g; ++j)
        for (int k = 0; k < g; ++k) {
          const double u = region.tube_radius * ((2.0 * i + 1.0) / g - 1.0);
          const double a = region.stable_radius * ((2.0 * j + 1.0) / g - 1.0);
          const double b = region.stable_radius * ((2.0 * k + 1.0) / g - 1.0);
          if (std::hypot(a, b) >= region.stable_radius) continue;  // corner cells
          seeds.push_back(region.chart.from_chart(Vec3(u, a, b)));
        }
    samples += static_cast<long long>(seeds.size());

    struct CurveOut {
      Extreme miss;         // index of a curve with no transverse crossing
      double miss_angle = 0.0;  // its best tangential angle, 0 when it never hits
      Extreme inv_angle;    // maximizing 1/angle locates the weakest best crossing
    };
    auto blocks = run_blocks<CurveOut>(
        seeds.size(), 1, opt.threads, [&](std::size_t, std::size_t lo, std::size_t hi) {
          CurveOut out;
          for (std::size_t i = lo; i < hi; ++i) {
            UnstableCurve curve =
                grow_unstable_curve(map, seeds[i], opt.growth_window,
                                    opt.growth_generations, opt.growth_h_max);
            HitReport hits = transverse_hit(curve, disk, opt.angle_min);
            double best = 0.0;
            if (hits.transverse.empty()) {
              for (const Crossing& c : hits.tangential) best = std::max(best, c.angle);
              if (!out.miss.seen) {
                out.miss.offer(0.0, i);
                out.miss_angle = best;
              }
            } else {
              for (const Crossing& c : hits.transverse) best = std::max(best, c.angle);
              out.inv_angle.offer(1.0 / best, i);
            }
          }
          return out;
        });
    Extreme miss;
    double miss_angle = 0.0;
    Extreme inv_angle;
    for (const CurveOut& b : blocks) {
      if (b.miss.seen && !miss.seen) {
        miss = b.miss;
        miss_angle = b.miss_angle;
      }
      inv_angle.merge(b.inv_angle);
    }
    const double half_turn = 0.5 * M_PI;
    if (miss.seen)
      return fail(2, "no transverse crossing of the stable disk",
                  (miss_angle - opt.angle_min) / half_turn, seeds[miss.index],
                  miss_angle);
    const double weakest_angle = 1.0 / inv_angle.value;
    weakest((weakest_angle - opt.angle_min) / half_turn, seeds[inv_angle.index],
            weakest_angle);
  }

  // (3) three-way splitting on grid orbits that avoid the tube for n_time
  // steps both ways. The 2*n_time cocycle starts at the backward endpoint and
  // is accumulated through QR renormalization: a raw product drowns the
  // middle and bottom singular values in the rounding noise of the top one.
  // Seeding the frame with the region basis makes an exactly-linear segment
  // keep it bit-for-bit, and after the sweep the frame approximates the left
  // singular directions with an error of the order of the inverse gaps.
  {
    const int horizon = 2 * n_time;
    struct SegOut {
      Extreme neg_gap;        // -log2 min(s1/s2, s2/s3), maximal = tightest
      Extreme dir_violation;  // first frame column outside its cone; value =
                              // offending perp/axis ratio
      long long kept = 0;
    };
    auto blocks = run_blocks<SegOut>(
        static_cast<std::size_t>(grid.size()), kBlock, opt.threads,
        [&](std::size_t, std::size_t lo, std::size_t hi) {
          SegOut out;
          for (std::size_t idx = lo; idx < hi; ++idx) {
            const TorusPoint x = grid.point(static_cast<long long>(idx));
            if (region.contains(x)) continue;
            TorusPoint fwd = x;
            TorusPoint back = x;
            bool avoid = true;
            for (int k = 0; k < n_time && avoid; ++k) {
              fwd = map.eval(fwd);
              back = map.inverse(back);
              avoid = !region.contains(fwd) && !region.contains(back);
            }
            if (!avoid) continue;
            ++out.kept;
            TorusPoint y = back;
            Mat3 q = region.chart.basis;
            double logs[3] = {0.0, 0.0, 0.0};
            bool collapsed = false;
            for (int k = 0; k < horizon && !collapsed; ++k) {
              Eigen::HouseholderQR<Mat3> qr(map.differential(y) * q);
              y = map.eval(y);
              q = qr.householderQ();
              const Mat3 r = qr.matrixQR();
              for (int i = 0; i < 3; ++i) {
                const double d = std::abs(r(i, i));
                if (d > 1e-300)
                  logs[i] += std::log(d);
                else
                  collapsed = true;  // unreachable for volume-preserving maps
              }
            }
            if (collapsed) {
              out.neg_gap.offer(inf, idx);
              continue;
            }
            constexpr double kLog2e = 1.4426950408889634;
            const double gap_log2 =
                std::min(logs[0] - logs[1], logs[1] - logs[2]) * kLog2e;
            out.neg_gap.offer(-gap_log2, idx);
            if (!out.dir_violation.seen) {
              for (int axis = 0; axis < 3 && !out.dir_violation.seen; ++axis) {
                Vec3 v = region.chart.basis.transpose() * q.col(axis);
                const double along = std::abs(v[axis]);
                v[axis] = 0.0;
                const double ratio = along > 0.0 ? v.norm() / along : inf;
                if (ratio > opt.gamma) out.dir_violation.offer(ratio, idx);
              }
            }
          }
          return out;
        });
    Extreme neg_gap;
    Extreme dir_violation;
    long long kept = 0;
    for (const SegOut& b : blocks) {
      neg_gap.merge(b.neg_gap);
      if (b.dir_violation.seen && !dir_violation.seen) dir_violation = b.dir_violation;
      kept += b.kept;
    }
    samples += kept;
    if (dir_violation.seen)
      return fail(3, "singular directions leave the frame cones",
                  (opt.gamma - dir_violation.value) / opt.gamma,
                  grid.point(static_cast<long long>(dir_violation.index)),
                  dir_violation.value);
    if (kept == 0) {
      if (pending.empty())
        pending = "condition 3 inconclusive: no grid orbit avoids the tube at this horizon";
      weakest(0.0, p, 0.0);
    } else {
      const double min_gap_log2 = -neg_gap.value;
      const double n0 = std::max(0.0, std::ceil(horizon - min_gap_log2));
      rep.offset = n0;
      const double n_half = static_cast<double>(n_time);
      if (n0 > n_half && pending.empty())
        pending = "condition 3 inconclusive: horizon too short to resolve the splitting";
      weakest((n_half - n0) / n_half,
              grid.point(static_cast<long long>(neg_gap.index)), std::exp2(min_gap_log2));
    }
  }

  rep.verdict = pending.empty() ? Verdict::pass : Verdict::inconclusive;
  rep.detail = pending;
  return finish();
}

}  // namespace ergotorus
