#include "ergotorus/construction.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "ergotorus/parallel.hpp"
#include "ergotorus/rng.hpp"

namespace ergotorus {

namespace {

constexpr double kProductTol = 1e-12;

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

void SpectrumTriple::validate() const {
  if (!(mu > 0.0 && rho > 0.0 && lambda > 0.0))
    raise(errc::invalid_input, "spectrum must be positive");
  if (!(lambda <= rho && rho < 1.0 && 1.0 < mu))
    raise(errc::invalid_input,
          "spectrum must satisfy 0 < lambda <= rho < 1 < mu, got (" + fmt(mu) + ", " +
              fmt(rho) + ", " + fmt(lambda) + ")");
  double prod = mu * rho * lambda;
  if (std::abs(prod - 1.0) > kProductTol)
    raise(errc::not_volume_preserving,
          "spectrum product is " + fmt(prod) + ", expected 1");
}

SpectrumTriple SpectrumTriple::powered(int n) const {
  require(n >= 1, "power must be positive");
  return SpectrumTriple{std::pow(mu, n), std::pow(rho, n), std::pow(lambda, n)};
}

bool SpectrumTriple::degenerate() const { return std::abs(rho - lambda) <= 1e-12 * rho; }

double solve_eta(const SpectrumTriple& s) {
  s.validate();
  if (s.degenerate()) return 1.0;
  return 1.0 / (s.lambda * std::sqrt(s.mu));
}

double cone_xi(double mu, double rho, double gamma, double a_k) {
  require(mu > 1.0 && rho > 0.0 && gamma > 0.0 && a_k >= 0.0, "bad cone inputs");
  double lo = (a_k + rho * gamma) / mu;
  if (lo >= gamma)
    raise(errc::cone_gap_infeasible,
          "no admissible cone contraction: (a_k + rho*gamma)/mu = " + fmt(lo) +
              " >= gamma = " + fmt(gamma));
  return 0.5 * (lo + gamma);
}

EigenFrame eigenframe_at(const SmoothMap& base, const TorusPoint& p) {
  Mat3 a = base.differential(p);
  double scale = a.cwiseAbs().maxCoeff();
  require(scale > 0.0, "zero linearization");
  if ((a - a.transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale)
    raise(errc::invalid_input,
          "linearization at the surgery point must be symmetric, so that the "
          "eigenframe chart is an isometry");
  Eigen::SelfAdjointEigenSolver<Mat3> es(a);
  require(es.info() == Eigen::Success, "eigensolver failed");
  Vec3 vals = es.eigenvalues();  // ascending
  if (vals[0] <= 0.0)
    raise(errc::invalid_input, "linearization must have positive spectrum");
  if (!(vals[2] > vals[1] * (1.0 + 1e-9)))
    raise(errc::not_hyperbolic, "unstable eigenvalue must be simple");
  EigenFrame out;
  out.triple = SpectrumTriple{vals[2], vals[1], vals[0]};
  out.basis.col(0) = es.eigenvectors().col(2);
  out.basis.col(1) = es.eigenvectors().col(1);
  out.basis.col(2) = es.eigenvectors().col(0);
  if (out.basis.determinant() < 0.0) out.basis.col(2) = -out.basis.col(2);
  return out;
}

void DeformationParams::validate() const {
  require(eps_core > 0.0 && eps_core < eps_support, "need 0 < eps_core < eps_support");
  require(curvature_bound > 0.0, "curvature bound must be positive");
  require(a > 0.0, "rescale must be positive");
  require(gamma > 0.0, "cone aperture must be positive");
  require(std::abs(theta) < 1.5, "rotation angle out of range");
  if (theta != 0.0) {
    require(rot_plateau > 0.0 && rot_plateau < rot_support,
            "need 0 < rot_plateau < rot_support");
    require(rot_support <= eps_support, "rotation support must fit in eps_support");
  }
  require(cone_samples >= 64, "certificate needs at least 64 samples");
  require(aperture_rays >= 8, "aperture needs at least 8 rays");
}

namespace {

// Chart-local deformation F = F1 . rot:
//   rot: yz rotation by theta * Wx(x) * Wr(|yz|), a plateau-localized twist
//   F1:  (x, y, z) -> (mu x, a * flow(t(x), (rho y / a, lambda z / a)))
// Everything outside the nonlinearity box and the rotation cylinder reduces
// to the diagonal linearization, and the origin is exactly fixed.
class DeformLocal final : public LocalMap {
 public:
  struct Setup {
    SpectrumTriple s;
    double a = 1.0;
    std::shared_ptr<const ShearFlow> flow;  // null: degenerate, shear skipped
    TimeRamp ramp{1.0, 0.1};
    double theta = 0.0;
    PlateauWindow rot_x{1.0, 0.1};
    PlateauWindow rot_r{1.0, 0.1};
    double gate = 0.0;
    Mat3 lam = Mat3::Identity();
  };

  explicit DeformLocal(Setup st) : st_(std::move(st)) {}

  Vec3 eval(const Vec3& c) const override { return forward(rotate(c, +1.0)); }
  Vec3 inverse(const Vec3& d) const override { return rotate(backward(d), -1.0); }
  Mat3 differential(const Vec3& c) const override {
    return dforward(rotate(c, +1.0)) * drotate(c);
  }
  Mat3 linearization() const override { return st_.lam; }
  double support_radius() const override { return st_.gate; }
  double integration_drift() const override {
    return st_.flow ? st_.flow->max_relative_h_drift() : 0.0;
  }

  // pre-rotation pieces, used by the certificate sweep
  Vec3 forward(const Vec3& c) const {
    double x = st_.s.mu * c[0];
    if (!st_.flow) return Vec3(x, st_.s.rho * c[1], st_.s.lambda * c[2]);
    ProfileSample t = st_.ramp.sample(c[0]);
    Vec2 v(st_.s.rho * c[1] / st_.a, st_.s.lambda * c[2] / st_.a);
    if (t.value != 0.0 && !st_.flow->field().outside_support(v))
      v = st_.flow->flow(t.value, v);
    return Vec3(x, st_.a * v[0], st_.a * v[1]);
  }

  Mat3 dforward(const Vec3& c) const {
    Mat3 d = Mat3::Zero();
    d(0, 0) = st_.s.mu;
    if (!st_.flow) {
      d(1, 1) = st_.s.rho;
      d(2, 2) = st_.s.lambda;
      return d;
    }
    ProfileSample t = st_.ramp.sample(c[0]);
    Vec2 v(st_.s.rho * c[1] / st_.a, st_.s.lambda * c[2] / st_.a);
    Mat2 m = Mat2::Identity();
    if (t.value != 0.0 && !st_.flow->field().outside_support(v)) {
      FlowResult fr = st_.flow->flow_with_differential(t.value, v);
      m = fr.differential;
      if (t.d1 != 0.0) {
        Vec2 xv = st_.flow->field().eval(fr.point);
        d(1, 0) = st_.a * t.d1 * xv[0];
        d(2, 0) = st_.a * t.d1 * xv[1];
      }
    }
    d(1, 1) = m(0, 0) * st_.s.rho;
    d(1, 2) = m(0, 1) * st_.s.lambda;
    d(2, 1) = m(1, 0) * st_.s.rho;
    d(2, 2) = m(1, 1) * st_.s.lambda;
    return d;
  }

 private:
  Vec3 backward(const Vec3& d) const {
    double x = d[0] / st_.s.mu;
    if (!st_.flow) return Vec3(x, d[1] / st_.s.rho, d[2] / st_.s.lambda);
    ProfileSample t = st_.ramp.sample(x);
    Vec2 w(d[1] / st_.a, d[2] / st_.a);
    if (t.value != 0.0 && !st_.flow->field().outside_support(w))
      w = st_.flow->flow(-t.value, w);
    return Vec3(x, st_.a * w[0] / st_.s.rho, st_.a * w[1] / st_.s.lambda);
  }

  double angle_windows(double x, double r, double* wx_d1, double* wr_d1, double* wx_v,
                       double* wr_v) const {
    ProfileSample wx = st_.rot_x.sample(x);
    ProfileSample wr = st_.rot_r.sample(r);
    if (wx_d1) {
      *wx_d1 = wx.d1;
      *wr_d1 = wr.d1;
      *wx_v = wx.value;
      *wr_v = wr.value;
    }
    return st_.theta * wx.value * wr.value;
  }

  Vec3 rotate(const Vec3& c, double sign) const {
    if (st_.theta == 0.0) return c;
    double r = std::hypot(c[1], c[2]);
    double th = angle_windows(c[0], r, nullptr, nullptr, nullptr, nullptr);
    if (th == 0.0) return c;
    th *= sign;
    double cs = std::cos(th), sn = std::sin(th);
    return Vec3(c[0], cs * c[1] - sn * c[2], sn * c[1] + cs * c[2]);
  }

  Mat3 drotate(const Vec3& c) const {
    Mat3 d = Mat3::Identity();
    if (st_.theta == 0.0) return d;
    double r = std::hypot(c[1], c[2]);
    double wx_d1, wr_d1, wx_v, wr_v;
    double th = angle_windows(c[0], r, &wx_d1, &wr_d1, &wx_v, &wr_v);
    if (wx_v == 0.0 || wr_v == 0.0) return d;  // windows vanish with their slopes
    double cs = std::cos(th), sn = std::sin(th);
    double dthx = st_.theta * wx_d1 * wr_v;
    double gy = 0.0, gz = 0.0;
    if (r > 0.0 && wr_d1 != 0.0) {
      double dthr = st_.theta * wx_v * wr_d1;
      gy = dthr * c[1] / r;
      gz = dthr * c[2] / r;
    }
    double uy = -sn * c[1] - cs * c[2];  // angle derivative of the rotated y
    double uz = cs * c[1] - sn * c[2];
    d(1, 0) = uy * dthx;
    d(2, 0) = uz * dthx;
    d(1, 1) = cs + uy * gy;
    d(1, 2) = -sn + uy * gz;
    d(2, 1) = sn + uz * gy;
    d(2, 2) = cs + uz * gz;
    return d;
  }

  Setup st_;
};

// (unstable, center)-plane shear with a window in the stable coordinate:
//   (c1, c2, c3) -> (flow(w(c3), (c1, c2)), c3).
// The window only reparametrizes time, so the first integral is conserved,
// every slice is area preserving, and the support box maps onto itself.
class AdjustLocal final : public LocalMap {
 public:
  AdjustLocal(std::shared_ptr<const ShearFlow> flow, PlateauWindow window, double gate)
      : flow_(std::move(flow)), win_(window), gate_(gate) {}

  Vec3 eval(const Vec3& c) const override {
    double w = win_.value(c[2]);
    Vec2 v(c[0], c[1]);
    if (w != 0.0 && !flow_->field().outside_support(v)) v = flow_->flow(w, v);
    return Vec3(v[0], v[1], c[2]);
  }

  Vec3 inverse(const Vec3& d) const override {
    double w = win_.value(d[2]);
    Vec2 v(d[0], d[1]);
    if (w != 0.0 && !flow_->field().outside_support(v)) v = flow_->flow(-w, v);
    return Vec3(v[0], v[1], d[2]);
  }

  Mat3 differential(const Vec3& c) const override {
    Mat3 d = Mat3::Identity();
    ProfileSample w = win_.sample(c[2]);
    Vec2 v(c[0], c[1]);
    if (w.value == 0.0 || flow_->field().outside_support(v)) return d;
    FlowResult fr = flow_->flow_with_differential(w.value, v);
    d(0, 0) = fr.differential(0, 0);
    d(0, 1) = fr.differential(0, 1);
    d(1, 0) = fr.differential(1, 0);
    d(1, 1) = fr.differential(1, 1);
    if (w.d1 != 0.0) {
      Vec2 xv = flow_->field().eval(fr.point);
      d(0, 2) = w.d1 * xv[0];
      d(1, 2) = w.d1 * xv[1];
    }
    return d;
  }

  Mat3 linearization() const override { return Mat3::Identity(); }
  double support_radius() const override { return gate_; }
  double integration_drift() const override { return flow_->max_relative_h_drift(); }

 private:
  std::shared_ptr<const ShearFlow> flow_;
  PlateauWindow win_;
  double gate_;
};

Vec3 halton_box_point(std::uint64_t k, const Vec3& half) {
  double u[3];
  Halton3::point(k, u);
  return Vec3(half[0] * (2.0 * u[0] - 1.0), half[1] * (2.0 * u[1] - 1.0),
              half[2] * (2.0 * u[2] - 1.0));
}

Vec3 halton_ball_point(std::uint64_t k, double radius) {
  double u[3];
  Halton3::point(k, u);
  double z = 2.0 * u[0] - 1.0;
  double rr = std::sqrt(std::max(0.0, 1.0 - z * z));
  double phi = 2.0 * M_PI * u[1];
  double rad = radius * std::cbrt(u[2]);
  return Vec3(rad * rr * std::cos(phi), rad * rr * std::sin(phi), rad * z);
}

double block_norm2(const Mat3& m) {
  Mat2 b;
  b << m(1, 1), m(1, 2), m(2, 1), m(2, 2);
  Eigen::JacobiSVD<Mat2> svd(b);
  return svd.singularValues()[0];
}

double block_det(const Mat3& m) { return m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1); }

struct CertBlock {
  double ap_pre = 0.0, ap_post = 0.0, rho_eff = 0.0, det_err = 0.0, jac_err = 0.0;
};

}  // namespace

DeformationBuild build_deformation(const SpectrumTriple& s, const DeformationParams& p) {
  s.validate();
  p.validate();

  DeformationBuild out;
  out.triple = s;
  out.eta = solve_eta(s);

  DeformLocal::Setup setup;
  setup.s = s;
  setup.a = p.a;
  setup.theta = p.theta;
  setup.lam = Mat3::Zero();
  setup.lam(0, 0) = s.mu;
  setup.lam(1, 1) = s.rho;
  setup.lam(2, 2) = s.lambda;
  setup.ramp = TimeRamp(p.eps_support, p.eps_core);
  if (p.theta != 0.0) {
    setup.rot_x = PlateauWindow(p.rot_support, p.rot_plateau);
    setup.rot_r = PlateauWindow(p.rot_support, p.rot_plateau);
  }

  double gate_shear = 0.0;
  Vec3 shear_box = Vec3::Zero();
  if (!s.degenerate()) {
    double slope = std::sqrt(std::max(0.0, std::log(out.eta)));
    // the cap scales with slope^2: sup |psi psi''| / s0^2 is a pure shape
    // ratio with a floor near 0.75, so an absolute bound cannot be a default
    double cap = p.curvature_bound * slope * slope;
    out.bump1 = build_bump(p.eps_support, p.eps_core, -slope, cap);
    out.bump2 = build_bump(p.eps_support, p.eps_core, slope, cap);
    setup.flow = std::make_shared<ShearFlow>(
        ShearField{out.bump1.profile, out.bump2.profile}, p.integrator);

    const BumpProfile& b1 = out.bump1.profile;
    const BumpProfile& b2 = out.bump2.profile;
    double sup_x = std::max(b1.sup_abs() * b2.sup_d1(), b1.sup_d1() * b2.sup_abs());
    out.k_bound = 1.1 * setup.ramp.sup_d1() * sup_x;

    shear_box = Vec3(p.eps_support, p.a * b1.support_radius() / s.rho,
                     p.a * b2.support_radius() / s.lambda);
    gate_shear = shear_box.norm();
  }
  double a_k = p.a * out.k_bound;
  if (a_k >= p.eps_support)
    raise(errc::scale_too_large, "a*K = " + fmt(a_k) + " must stay below eps_support = " +
                                     fmt(p.eps_support) + "; shrink a");

  double gate_rot = p.theta != 0.0 ? std::hypot(p.rot_support, p.rot_support) : 0.0;
  setup.gate = std::max(gate_shear, gate_rot);
  out.support_radius = setup.gate;

  out.cone.gamma = p.gamma;
  out.cone.a_k = a_k;
  out.cone.xi = cone_xi(s.mu, s.rho, p.gamma, a_k);
  out.cone.xi_rot = 0.5 * (out.cone.xi + p.gamma);

  auto full = std::make_shared<DeformLocal>(setup);
  out.local = full;

  // exactly linear region: the ramp core, the part of the shear core that
  // stays in the core for the whole flow time, and the rotation plateau
  if (setup.flow) {
    double c1 = out.bump1.profile.core_radius();
    double c2 = out.bump2.profile.core_radius();
    out.linear_core_radius = std::min(
        {p.eps_core, p.a * c1 / s.rho, p.a * c2 / (s.lambda * out.eta)});
  } else {
    out.linear_core_radius = setup.gate;
  }
  if (p.theta != 0.0)
    out.linear_core_radius = std::min(out.linear_core_radius, p.rot_plateau);

  if (setup.gate == 0.0) {
    // fully degenerate: the local map is the linearization itself
    out.cone.rho_eff = s.rho;
    out.cone.aperture_pre = out.cone.aperture_post = s.rho * p.gamma / s.mu;
    out.origin_diag_error = 0.0;
    return out;
  }

  DeformLocal::Setup pre_setup = setup;
  pre_setup.theta = 0.0;
  auto pre = std::make_shared<DeformLocal>(pre_setup);

  // origin differential against the diagonal target
  {
    Mat3 d0 = pre->differential(Vec3::Zero());
    double half = 1.0 / std::sqrt(s.mu);
    Mat3 want = Mat3::Zero();
    want(0, 0) = s.mu;
    want(1, 1) = half;
    want(2, 2) = half;
    out.origin_diag_error = (d0 - want).cwiseAbs().maxCoeff();
    if (out.origin_diag_error > 1e-10)
      raise(errc::construction_inconsistent,
            "origin differential misses diag(mu, mu^-1/2, mu^-1/2) by " +
                fmt(out.origin_diag_error));
  }

  // stratified certificate sweep: nonlinearity box, rotation box, gate ball
  struct Stratum {
    bool ball = false;
    Vec3 half = Vec3::Zero();
  };
  std::vector<Stratum> strata;
  if (setup.flow) strata.push_back({false, shear_box});
  if (p.theta != 0.0)
    strata.push_back({false, Vec3(p.rot_support, p.rot_support, p.rot_support)});
  strata.push_back({true, Vec3::Zero()});

  ConeSpec cone{0, p.gamma};
  const int rays = p.aperture_rays;
  const std::size_t total = static_cast<std::size_t>(p.cone_samples);
  const double gate = setup.gate;
  auto blocks = run_blocks<CertBlock>(
      total, 64, p.threads, [&](std::size_t, std::size_t lo, std::size_t hi) {
        CertBlock acc;
        for (std::size_t k = lo; k < hi; ++k) {
          const Stratum& st = strata[k % strata.size()];
          std::uint64_t idx = k / strata.size();
          Vec3 c = st.ball ? halton_ball_point(idx, gate) : halton_box_point(idx, st.half);
          Mat3 dpre = pre->differential(c);
          acc.rho_eff = std::max(acc.rho_eff, block_norm2(dpre));
          acc.det_err = std::max(acc.det_err, std::abs(dpre.determinant() - 1.0));
          acc.jac_err = std::max(acc.jac_err, std::abs(s.mu * block_det(dpre) - 1.0));
          try {
            acc.ap_pre = std::max(acc.ap_pre, cone_image_aperture(dpre, cone, rays));
          } catch (const Error&) {
            acc.ap_pre = std::numeric_limits<double>::infinity();
          }
          if (p.theta != 0.0) {
            Mat3 dpost = full->differential(c);
            acc.det_err = std::max(acc.det_err, std::abs(dpost.determinant() - 1.0));
            try {
              acc.ap_post = std::max(acc.ap_post, cone_image_aperture(dpost, cone, rays));
            } catch (const Error&) {
              acc.ap_post = std::numeric_limits<double>::infinity();
            }
          }
        }
        return acc;
      });

  CertBlock m;
  for (const CertBlock& b : blocks) {
    m.ap_pre = std::max(m.ap_pre, b.ap_pre);
    m.ap_post = std::max(m.ap_post, b.ap_post);
    m.rho_eff = std::max(m.rho_eff, b.rho_eff);
    m.det_err = std::max(m.det_err, b.det_err);
    m.jac_err = std::max(m.jac_err, b.jac_err);
  }
  out.cone.samples = p.cone_samples;
  out.cone.rho_eff = m.rho_eff;
  out.cone.aperture_pre = m.ap_pre;
  out.cone.aperture_post = p.theta != 0.0 ? m.ap_post : m.ap_pre;
  out.cone.max_det_error = m.det_err;

  if (m.det_err > 1e-8)
    raise(errc::construction_inconsistent,
          "sampled |det - 1| reaches " + fmt(m.det_err));
  if (m.jac_err > 1e-8)
    raise(errc::construction_inconsistent,
          "sampled yz-block Jacobian deviates from 1/mu by " + fmt(m.jac_err / s.mu));
  if (!(m.ap_pre <= out.cone.xi))
    raise(errc::construction_inconsistent,
          "sampled cone aperture " + fmt(m.ap_pre) + " exceeds the designed bound " +
              fmt(out.cone.xi));
  if (!(out.cone.aperture_post <= out.cone.xi_rot))
    raise(errc::rotation_too_large,
          "rotated cone aperture " + fmt(out.cone.aperture_post) +
              " exceeds the allowance " + fmt(out.cone.xi_rot) + "; shrink theta");
  return out;
}

SurgeredSystem deform_at_point(const SmoothMap& base, const SurgeryPlan& plan) {
  require(base.valid(), "surgery base is empty");
  require(plan.period >= 1, "period must be positive");
  require(plan.ball_radius > 0.0, "ball radius must be positive");

  if (torus_distance(base.iterate(plan.point, plan.period), plan.point) > 1e-9)
    raise(errc::not_periodic, "point does not return after the declared period");

  EigenFrame frame = eigenframe_at(base, plan.point);
  SpectrumTriple powered = frame.triple.powered(plan.period);

  SurgeredSystem out;
  out.base = base;
  out.point = plan.point;
  out.period = plan.period;
  out.ball_radius = plan.ball_radius;
  out.min_orbit_clearance = 0.0;

  // orbit differential and conservative orbit-ball clearance
  std::vector<TorusPoint> orbit{plan.point};
  std::vector<double> growth{1.0};
  Mat3 base_pow = Mat3::Identity();
  for (int i = 1; i < plan.period; ++i) {
    base_pow = base.differential(orbit.back()) * base_pow;
    orbit.push_back(base.eval(orbit.back()));
    growth.push_back(singular_values(base_pow)[0]);
  }
  base_pow = base.differential(orbit.back()) * base_pow;
  out.power_linearization = base_pow;

  if (plan.period > 1) {
    double clearance = std::numeric_limits<double>::infinity();
    for (int i = 0; i < plan.period; ++i) {
      for (int j = i + 1; j < plan.period; ++j) {
        double dist = torus_distance(orbit[i], orbit[j]);
        double need = (growth[i] + growth[j]) * plan.ball_radius;
        if (dist < need * plan.disjoint_margin)
          raise(errc::balls_not_disjoint,
                "orbit balls " + std::to_string(i) + " and " + std::to_string(j) +
                    " overlap: distance " + fmt(dist) + " < required " +
                    fmt(need * plan.disjoint_margin));
        clearance = std::min(clearance, dist / need);
      }
    }
    out.min_orbit_clearance = clearance;
  }

  out.deformation = build_deformation(powered, plan.params);
  if (out.deformation.support_radius >= plan.ball_radius)
    raise(errc::invalid_input,
          "deformation support " + fmt(out.deformation.support_radius) +
              " must stay inside the surgery ball " + fmt(plan.ball_radius));

  double chart_r =
      plan.chart_radius > 0.0 ? plan.chart_radius : std::min(1.2 * plan.ball_radius, 0.5);
  require(chart_r >= plan.ball_radius && chart_r <= 0.5,
          "chart radius must cover the ball and stay below 1/2");
  out.chart = Chart{plan.point, frame.basis, chart_r};

  if (out.deformation.support_radius > 0.0) {
    SmoothMap fn = base;
    for (int i = 1; i < plan.period; ++i) fn = compose(base, fn);

    LocalSurgerySpec ss;
    ss.chart = out.chart;
    ss.ball_radius = plan.ball_radius;
    ss.local = out.deformation.local;
    ss.shell_samples = plan.shell_samples;
    SurgeryResolution res = resolve_surgery(fn, ss);

    RearrangementSpec rs;
    rs.chart = out.chart;
    rs.lam = res.chart_linearization;
    rs.ball_radius = plan.ball_radius;
    rs.local = out.deformation.local;
    rs.shell_samples = plan.shell_samples;
    rs.label = "glue";
    SmoothMap glue = make_rearrangement(rs);
    SmoothMap f = compose(base, glue);

    SupportInfo info;
    info.linear_outside = base.support().linear_outside;
    info.balls = base.support().balls;
    info.balls.push_back(Ball{plan.point, out.deformation.support_radius});
    for (const LocalLinearity& fact : base.support().linear_on)
      if (torus_distance(fact.center, plan.point) >= fact.radius + plan.ball_radius)
        info.linear_on.push_back(fact);
    out.map = with_support(f, std::move(info));
  } else {
    out.map = base;  // nothing to glue
  }

  // spectrum of Df^n at the point, against the designed local model
  Mat3 prod = Mat3::Identity();
  TorusPoint x = plan.point;
  for (int i = 0; i < plan.period; ++i) {
    prod = out.map.differential(x) * prod;
    x = out.map.eval(x);
  }
  out.return_spectrum = eigen_decomposition(prod);

  const auto& v0 = out.return_spectrum.values[0];
  if (std::abs(v0.imag()) > 1e-8 * std::abs(v0) ||
      std::abs(v0.real() - powered.mu) > 1e-8 * powered.mu)
    raise(errc::construction_inconsistent,
          "unstable return eigenvalue drifted from the designed " + fmt(powered.mu));
  double half = 1.0 / std::sqrt(powered.mu);
  for (int k = 1; k < 3; ++k) {
    const auto& v = out.return_spectrum.values[k];
    if (std::abs(std::abs(v) - half) > 1e-8)
      raise(errc::construction_inconsistent,
            "contracting return pair drifted from modulus " + fmt(half));
    if (std::abs(v.imag()) <= 1e-9 * std::abs(v) && v.real() <= 0.0)
      raise(errc::construction_inconsistent,
            "return spectrum has a nonpositive real eigenvalue");
  }
  return out;
}

void AdjustmentParams::validate() const {
  require(sigma >= 0.0, "sigma must be nonnegative");
  require(box_core > 0.0 && box_core < box_support, "need 0 < box_core < box_support");
  require(curvature_bound > 0.0, "curvature bound must be positive");
  require(shell_samples >= 16, "shell check needs at least 16 samples");
}

AdjustedSystem index_adjust(const SmoothMap& h, const TorusPoint& p,
                            const AdjustmentParams& prm) {
  require(h.valid(), "adjustment base is empty");
  prm.validate();
  if (torus_distance(h.eval(p), p) > 1e-9)
    raise(errc::not_periodic, "adjustment point must be fixed");

  EigenFrame frame = eigenframe_at(h, p);
  if (std::abs(frame.triple.rho - 1.0) > 1e-9)
    raise(errc::invalid_input, "index adjustment expects center eigenvalue 1, got " +
                                   fmt(frame.triple.rho));
  require(frame.triple.mu > 1.0 && frame.triple.lambda < 1.0,
          "adjustment expects expanding/neutral/contracting spectrum");

  AdjustedSystem out;
  out.point = p;

  if (prm.sigma == 0.0) {
    out.map = h;
    out.triple = frame.triple;
    out.chart = Chart{p, frame.basis, 0.5};
    return out;
  }
  if (std::exp(-prm.sigma) <= frame.triple.lambda * (1.0 + 1e-9))
    raise(errc::adjustment_breaks_order,
          "center rate e^-sigma = " + fmt(std::exp(-prm.sigma)) +
              " must stay above the stable eigenvalue " + fmt(frame.triple.lambda));

  double slope = std::sqrt(prm.sigma);
  double cap = prm.curvature_bound * prm.sigma;  // relative cap, see the params
  out.bump1 = build_bump(prm.box_support, prm.box_core, slope, cap);
  out.bump2 = build_bump(prm.box_support, prm.box_core, slope, cap);
  auto flow = std::make_shared<ShearFlow>(
      ShearField{out.bump1.profile, out.bump2.profile}, prm.integrator);
  PlateauWindow window(prm.box_support, prm.box_core);
  double gate = std::sqrt(3.0) * prm.box_support;
  auto local = std::make_shared<AdjustLocal>(flow, window, gate);
  out.local = local;
  out.gate_radius = gate;

  double ball = prm.ball_radius > 0.0 ? prm.ball_radius : 1.05 * gate;
  require(ball > gate, "adjustment ball must exceed the box radius " + fmt(gate));
  double chart_r = std::min(0.5, 1.1 * ball);
  require(ball <= chart_r, "adjustment ball must fit inside a valid chart");
  out.chart = Chart{p, frame.basis, chart_r};

  RearrangementSpec rs;
  rs.chart = out.chart;
  rs.lam = Mat3::Identity();
  rs.ball_radius = ball;
  rs.local = local;
  rs.shell_samples = prm.shell_samples;
  rs.label = "index-adjust";
  SmoothMap glue = make_rearrangement(rs);
  SmoothMap hp = compose(h, glue);

  Mat3 a_new = h.differential(p) * glue.differential(p);
  EigResult eig = eigen_decomposition(a_new);
  for (const auto& v : eig.values) {
    if (std::abs(v.imag()) > 1e-9 * std::abs(v) || v.real() <= 0.0)
      raise(errc::construction_inconsistent,
            "adjusted spectrum must be real positive");
  }
  double mu2 = eig.values[0].real();
  double rho2 = eig.values[1].real();
  double want_mu = frame.triple.mu * std::exp(prm.sigma);
  double want_rho = std::exp(-prm.sigma);
  if (std::abs(mu2 - want_mu) > 1e-8 * want_mu || std::abs(rho2 - want_rho) > 1e-8)
    raise(errc::construction_inconsistent,
          "adjusted spectrum (" + fmt(mu2) + ", " + fmt(rho2) +
              ") drifted from the designed (" + fmt(want_mu) + ", " + fmt(want_rho) + ")");
  out.triple = SpectrumTriple{mu2, rho2, 1.0 / (mu2 * rho2)};  // product pinned to 1
  out.triple.validate();

  // the unstable coordinate expands by e^sigma inside the flow, so the exact
  // linearity certificate shrinks accordingly
  double c1 = out.bump1.profile.core_radius();
  double c2 = out.bump2.profile.core_radius();
  out.linear_core_radius =
      std::min({c1 * std::exp(-prm.sigma), c2, window.core_radius()});

  SupportInfo info;
  info.linear_outside = h.support().linear_outside;
  info.balls = h.support().balls;
  info.balls.push_back(Ball{p, gate});
  for (const LocalLinearity& fact : h.support().linear_on)
    if (torus_distance(fact.center, p) >= fact.radius + ball)
      info.linear_on.push_back(fact);
  info.linear_on.push_back(LocalLinearity{p, out.linear_core_radius, a_new});
  out.map = with_support(hp, std::move(info));
  return out;
}

}  // namespace ergotorus
