#include "ergotorus/lyapunov.hpp"

#include <Eigen/QR>
#include <algorithm>
#include <cmath>
#include <functional>

#include "ergotorus/errors.hpp"
#include "ergotorus/parallel.hpp"
#include "ergotorus/rng.hpp"

namespace ergotorus {

namespace {

// Fixed generic probe; estimates forget the seed direction exponentially fast,
// so any unit vector off the coordinate planes serves.
const Vec3 kProbe = Vec3(0.521, 0.6043, 0.6027).normalized();

// angle between the lines spanned by two unit vectors, in [0, pi/2]
double line_angle(const Vec3& a, const Vec3& b) {
  double c = std::abs(a.dot(b));
  if (c > 1.0) c = 1.0;
  return std::acos(c);
}

Vec3 normalized_or_raise(const Vec3& v, const char* what) {
  const double n = v.norm();
  if (!std::isfinite(n) || !(n > 1e-300)) raise(errc::underflow, what);
  return v / n;
}

// deterministic representative of a line: largest-magnitude component positive
Vec3 canonical_sign(Vec3 v) {
  int k = 0;
  for (int i = 1; i < 3; ++i)
    if (std::abs(v[i]) > std::abs(v[k])) k = i;
  if (v[k] < 0.0) v = -v;
  return v;
}

std::array<double, 3> sorted_desc(std::array<double, 3> a) {
  std::sort(a.begin(), a.end(), std::greater<double>());
  return a;
}

}  // namespace

ExponentEstimate benettin_exponents(const SmoothMap& map, const TorusPoint& x0,
                                    long long n, const BenettinOptions& opt) {
  require(map.valid(), "map must be nonempty");
  require(n >= 100, "exponent horizon must be at least 100");
  require(opt.renorm_every >= 1, "renorm cadence must be positive");
  require(opt.trace_points >= 1, "trace must keep at least one point");

  ExponentEstimate est;
  est.horizon = n;
  est.initial = x0;

  const long long renorms = (n + opt.renorm_every - 1) / opt.renorm_every;
  const long long stride = std::max<long long>(1, renorms / opt.trace_points);

  TorusPoint x = x0;
  Mat3 frame = opt.initial_frame;
  require(frame.allFinite() && std::abs(frame.determinant()) > 1e-12,
          "initial frame must be nonsingular");
  {
    // only the column directions matter; the discarded R never enters the sums
    Eigen::HouseholderQR<Mat3> qr(frame);
    Mat3 q = qr.householderQ();
    const Mat3 r = qr.matrixQR();
    for (int i = 0; i < 3; ++i)
      if (r(i, i) < 0.0) q.col(i) = -q.col(i);
    frame = q;
  }
  std::array<double, 3> sums{0.0, 0.0, 0.0};
  long long renorm_count = 0;
  for (long long step = 1; step <= n; ++step) {
    frame = map.differential(x) * frame;
    x = map.eval(x);
    if (step % opt.renorm_every != 0 && step != n) continue;

    if (!frame.allFinite())
      raise(errc::underflow, "cocycle block left representable range; renormalize more often");
    Eigen::HouseholderQR<Mat3> qr(frame);
    Mat3 q = qr.householderQ();
    const Mat3 r = qr.matrixQR();
    for (int i = 0; i < 3; ++i) {
      double d = r(i, i);
      if (d < 0.0) {
        q.col(i) = -q.col(i);
        d = -d;
      }
      if (!(d > 1e-300))
        raise(errc::underflow, "frame column collapsed; renormalize more often");
      sums[i] += std::log(d);
    }
    frame = q;

    ++renorm_count;
    if (renorm_count % stride == 0 || step == n) {
      std::array<double, 3> running;
      for (int i = 0; i < 3; ++i) running[i] = sums[i] / static_cast<double>(step);
      if (est.trace.empty() || est.trace.back().step != step)
        est.trace.push_back({step, sorted_desc(running)});
    }
  }

  std::array<double, 3> avg;
  for (int i = 0; i < 3; ++i) avg[i] = sums[i] / static_cast<double>(n);
  est.exponents = sorted_desc(avg);
  return est;
}

namespace {

struct DirectionEstimate {
  Vec3 direction;
  double angle = 0.0;  // gap between the full- and half-horizon estimates
};

// push the probe forward along the backward orbit, so it arrives at x having
// forgotten everything but the most expanded direction
DirectionEstimate push_forward_direction(const SmoothMap& map, const TorusPoint& x, int n) {
  const int half = n / 2;
  std::vector<TorusPoint> orbit(static_cast<std::size_t>(n) + 1);
  orbit[0] = x;
  for (int j = 1; j <= n; ++j)
    orbit[static_cast<std::size_t>(j)] = map.inverse(orbit[static_cast<std::size_t>(j - 1)]);

  Vec3 v = kProbe;       // seeded at f^{-n}(x)
  Vec3 v_half = kProbe;  // seeded at f^{-n/2}(x), same probe
  for (int j = n; j >= 1; --j) {
    const Mat3 d = map.differential(orbit[static_cast<std::size_t>(j)]);
    v = normalized_or_raise(d * v, "pushed direction vanished");
    if (j <= half) v_half = normalized_or_raise(d * v_half, "pushed direction vanished");
  }
  return {v, line_angle(v, v_half)};
}

}  // namespace

Vec3 unstable_direction(const SmoothMap& map, const TorusPoint& x, int n,
                        double inconclusive_above) {
  require(map.valid(), "map must be nonempty");
  require(n >= 20, "direction horizon must be at least 20");
  require(inconclusive_above > 0.0, "convergence threshold must be positive");
  DirectionEstimate est = push_forward_direction(map, x, n);
  if (est.angle > inconclusive_above)
    raise(errc::inconclusive,
          "direction estimates at the full and half horizon disagree; increase the horizon");
  return canonical_sign(est.direction);
}

SplittingEstimate oseledets_directions(const SmoothMap& map, const TorusPoint& x,
                                       int n, const OseledetsOptions& opt) {
  require(map.valid(), "map must be nonempty");
  require(n >= 20, "direction horizon must be at least 20");
  require(opt.inconclusive_above > 0.0, "convergence threshold must be positive");

  const int half = n / 2;
  DirectionEstimate push = push_forward_direction(map, x, n);

  // center-stable normal: normals pull back by the transpose, and the pullback
  // power iteration from the far end of the forward orbit converges onto the
  // normal of the most contracted plane
  std::vector<TorusPoint> orbit(static_cast<std::size_t>(n));
  orbit[0] = x;
  for (int j = 1; j < n; ++j)
    orbit[static_cast<std::size_t>(j)] = map.eval(orbit[static_cast<std::size_t>(j - 1)]);

  Vec3 u = kProbe;       // seeded past f^{n}(x)
  Vec3 u_half = kProbe;  // seeded past f^{n/2}(x)
  for (int j = n - 1; j >= 0; --j) {
    const Mat3 dt = map.differential(orbit[static_cast<std::size_t>(j)]).transpose();
    u = normalized_or_raise(dt * u, "pulled normal vanished");
    if (j < half) u_half = normalized_or_raise(dt * u_half, "pulled normal vanished");
  }

  SplittingEstimate est;
  est.unstable = canonical_sign(push.direction);
  est.cs_normal = canonical_sign(u);
  est.horizon = n;
  est.convergence = std::max(push.angle, line_angle(u, u_half));
  if (est.convergence > opt.inconclusive_above)
    raise(errc::inconclusive,
          "direction estimates at the full and half horizon disagree; increase the horizon");
  return est;
}

double cs_birkhoff_average(const SmoothMap& map, const TorusPoint& x0, long long n,
                           const CsAverageOptions& opt) {
  require(map.valid(), "map must be nonempty");
  require(n >= 1, "average horizon must be positive");
  require(opt.lookahead >= 4, "lookahead must be at least 4");
  require(opt.inconclusive_above > 0.0, "convergence threshold must be positive");

  const long long look = opt.lookahead;
  const long long look_half = look / 2;

  // differentials over the sliding window [j, j+look), ring-indexed by k % look
  std::vector<Mat3> ring(static_cast<std::size_t>(look));
  TorusPoint cursor = x0;
  for (long long k = 0; k < look; ++k) {
    ring[static_cast<std::size_t>(k)] = map.differential(cursor);
    cursor = map.eval(cursor);
  }

  double sum = 0.0;
  for (long long j = 0; j < n; ++j) {
    // plane normal at x_j by covector pullback over the window; the half
    // window runs alongside so disagreement is caught at every point
    Vec3 u = kProbe;
    for (long long k = j + look - 1; k >= j + look_half; --k)
      u = normalized_or_raise(ring[static_cast<std::size_t>(k % look)].transpose() * u,
                              "pulled normal vanished");
    Vec3 u_half = kProbe;
    for (long long k = j + look_half - 1; k >= j; --k) {
      const Mat3 dt = ring[static_cast<std::size_t>(k % look)].transpose();
      u = normalized_or_raise(dt * u, "pulled normal vanished");
      u_half = normalized_or_raise(dt * u_half, "pulled normal vanished");
    }
    if (line_angle(u, u_half) > opt.inconclusive_above)
      raise(errc::inconclusive,
            "center-stable plane estimate did not settle within the lookahead window");

    // largest singular value of the differential restricted to the plane
    // normal to u, via the 2x2 Gram matrix of an orthonormal plane basis
    const Vec3 pick = std::abs(u[0]) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
    const Vec3 b1 = u.cross(pick).normalized();
    const Vec3 b2 = u.cross(b1);
    const Mat3& dj = ring[static_cast<std::size_t>(j % look)];
    const Vec3 m1 = dj * b1;
    const Vec3 m2 = dj * b2;
    const double g11 = m1.squaredNorm();
    const double g22 = m2.squaredNorm();
    const double g12 = m1.dot(m2);
    const double disc =
        std::sqrt(std::max(0.0, (g11 - g22) * (g11 - g22) + 4.0 * g12 * g12));
    const double smax2 = 0.5 * (g11 + g22 + disc);
    if (!(smax2 > 1e-300)) raise(errc::underflow, "restricted differential vanished");
    sum += 0.5 * std::log(smax2);

    ring[static_cast<std::size_t>(j % look)] = map.differential(cursor);
    cursor = map.eval(cursor);
  }
  return sum / static_cast<double>(n);
}

ExponentSurvey exponent_survey(const SmoothMap& map, int ensemble_size, long long n,
                               std::uint64_t seed, const SurveyOptions& opt) {
  require(map.valid(), "map must be nonempty");
  require(ensemble_size >= 10, "ensemble needs at least 10 members");
  require(opt.delta > 0.0, "delta must be positive");

  // seeded rotation of a low-discrepancy set: keeps the equidistribution while
  // distinct seeds sample distinct ensembles
  Rng rng(seed, 0);
  const double shift[3] = {rng.uniform01(), rng.uniform01(), rng.uniform01()};

  BenettinOptions member_opt;
  member_opt.renorm_every = opt.renorm_every;
  member_opt.trace_points = 1;

  using Block = std::vector<std::array<double, 3>>;
  auto blocks = run_blocks<Block>(
      static_cast<std::size_t>(ensemble_size), 8, opt.threads,
      [&](std::size_t, std::size_t lo, std::size_t hi) {
        Block out;
        out.reserve(hi - lo);
        for (std::size_t i = lo; i < hi; ++i) {
          double h[3];
          Halton3::point(i, h);
          const TorusPoint x0 = wrap(h[0] + shift[0], h[1] + shift[1], h[2] + shift[2]);
          out.push_back(benettin_exponents(map, x0, n, member_opt).exponents);
        }
        return out;
      });

  ExponentSurvey survey;
  survey.delta = opt.delta;
  survey.horizon = n;
  survey.seed = seed;
  survey.exponents.reserve(static_cast<std::size_t>(ensemble_size));
  for (const auto& block : blocks)
    for (const auto& e : block) survey.exponents.push_back(e);

  long long nuh = 0;
  for (const auto& e : survey.exponents)
    if (std::abs(e[1]) > opt.delta) ++nuh;
  survey.nuh_fraction = static_cast<double>(nuh) / static_cast<double>(ensemble_size);
  return survey;
}

Histogram survey_histogram(const ExponentSurvey& survey, int component, int bins) {
  require(component >= 0 && component < 3, "component must be 0, 1, or 2");
  require(bins >= 1, "bins must be positive");
  require(!survey.exponents.empty(), "survey has no members");

  double lo = survey.exponents[0][static_cast<std::size_t>(component)];
  double hi = lo;
  for (const auto& e : survey.exponents) {
    lo = std::min(lo, e[static_cast<std::size_t>(component)]);
    hi = std::max(hi, e[static_cast<std::size_t>(component)]);
  }

  Histogram h;
  h.lo = lo;
  h.hi = hi;
  h.counts.assign(static_cast<std::size_t>(bins), 0);
  const double width = hi - lo;
  for (const auto& e : survey.exponents) {
    int b = 0;
    if (width > 0.0) {
      b = static_cast<int>((e[static_cast<std::size_t>(component)] - lo) / width *
                           static_cast<double>(bins));
      if (b >= bins) b = bins - 1;
      if (b < 0) b = 0;
    }
    h.counts[static_cast<std::size_t>(b)] += 1;
  }
  return h;
}

}  // namespace ergotorus
