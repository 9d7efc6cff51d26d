#include "ergotorus/shear.hpp"

#include <cmath>

namespace ergotorus {

namespace {

constexpr double kSqrt3 = 1.7320508075688772;
// two-stage Gauss tableau
constexpr double kA11 = 0.25;
constexpr double kA12 = 0.25 - kSqrt3 / 6.0;
constexpr double kA21 = 0.25 + kSqrt3 / 6.0;
constexpr double kA22 = 0.25;

struct FieldEval {
  Vec2 x;
  Mat2 jac;
};

inline FieldEval eval_full(const ShearField& f, const Vec2& q) {
  ProfileSample a = f.psi1.sample(q[0]);
  ProfileSample b = f.psi2.sample(q[1]);
  FieldEval out;
  out.x = Vec2(a.value * b.d1, -a.d1 * b.value);
  out.jac << a.d1 * b.d1, a.value * b.d2, -a.d2 * b.value, -a.d1 * b.d1;
  return out;
}

}  // namespace

ShearFlow::ShearFlow(ShearField field, IntegratorOptions opt)
    : field_(std::move(field)), opt_(opt) {
  require(opt_.step > 0.0, "integrator step must be positive");
  require(opt_.newton_tol > 0.0, "stage tolerance must be positive");
  require(opt_.max_newton >= 0, "stage iteration count must be nonnegative");
  h_scale_ = field_.h_scale();
  if (!(h_scale_ > 0.0)) h_scale_ = 1.0;
}

void ShearFlow::record_drift(double rel) const {
  double cur = drift_.load(std::memory_order_relaxed);
  while (rel > cur && !drift_.compare_exchange_weak(cur, rel, std::memory_order_relaxed)) {
  }
}

Vec2 ShearFlow::flow(double t, const Vec2& q) const { return integrate(t, q, false).point; }

FlowResult ShearFlow::flow_with_differential(double t, const Vec2& q) const {
  return integrate(t, q, true);
}

FlowResult ShearFlow::integrate(double t, const Vec2& q0, bool with_differential) const {
  FlowResult out;
  out.point = q0;
  if (t == 0.0 || field_.outside_support(q0)) return out;

  const int nsteps = static_cast<int>(std::ceil(std::abs(t) / opt_.step));
  const double h = t / static_cast<double>(nsteps);
  const double h0 = field_.hamiltonian(q0);

  Vec2 q = q0;
  Mat2 m = Mat2::Identity();
  double drift = 0.0;

  for (int k = 0; k < nsteps; ++k) {
    if (opt_.method == IntegratorMethod::gauss2) {
      // stage values k1, k2 solve the collocation equations
      Vec2 k1 = field_.eval(q);
      Vec2 k2 = k1;
      Mat2 d1, d2;
      bool converged = false;
      for (int it = 0; it <= opt_.max_newton; ++it) {
        FieldEval f1 = eval_full(field_, q + h * (kA11 * k1 + kA12 * k2));
        FieldEval f2 = eval_full(field_, q + h * (kA21 * k1 + kA22 * k2));
        d1 = f1.jac;
        d2 = f2.jac;
        Vec2 r1 = k1 - f1.x;
        Vec2 r2 = k2 - f2.x;
        double res = std::max(r1.cwiseAbs().maxCoeff(), r2.cwiseAbs().maxCoeff());
        if (res <= opt_.newton_tol) {
          converged = true;
          break;
        }
        if (it == opt_.max_newton) break;
        Eigen::Matrix4d jac = Eigen::Matrix4d::Identity();
        jac.block<2, 2>(0, 0) -= h * kA11 * d1;
        jac.block<2, 2>(0, 2) = -h * kA12 * d1;
        jac.block<2, 2>(2, 0) = -h * kA21 * d2;
        jac.block<2, 2>(2, 2) -= h * kA22 * d2;
        Eigen::Vector4d res4;
        res4 << r1[0], r1[1], r2[0], r2[1];
        Eigen::Vector4d delta = jac.partialPivLu().solve(res4);
        k1 -= delta.head<2>();
        k2 -= delta.tail<2>();
      }
      if (!converged)
        raise(errc::integration_failure, "collocation stages did not reach tolerance");
      q += 0.5 * h * (k1 + k2);
      if (with_differential) {
        // linear stage system for the variational matrix, same coefficient
        // matrix as the converged Newton system
        Eigen::Matrix4d sys = Eigen::Matrix4d::Identity();
        sys.block<2, 2>(0, 0) -= h * kA11 * d1;
        sys.block<2, 2>(0, 2) = -h * kA12 * d1;
        sys.block<2, 2>(2, 0) = -h * kA21 * d2;
        sys.block<2, 2>(2, 2) -= h * kA22 * d2;
        Eigen::PartialPivLU<Eigen::Matrix4d> lu(sys);
        Mat2 l1, l2;
        for (int c = 0; c < 2; ++c) {
          Eigen::Vector4d rhs;
          rhs.head<2>() = d1 * m.col(c);
          rhs.tail<2>() = d2 * m.col(c);
          Eigen::Vector4d sol = lu.solve(rhs);
          l1.col(c) = sol.head<2>();
          l2.col(c) = sol.tail<2>();
        }
        m += 0.5 * h * (l1 + l2);
      }
    } else {
      // implicit midpoint: m solves m = q + (h/2) X(m)
      Vec2 mid = q + 0.5 * h * field_.eval(q);
      Mat2 dmid;
      bool converged = false;
      for (int it = 0; it <= opt_.max_newton; ++it) {
        FieldEval f = eval_full(field_, mid);
        dmid = f.jac;
        Vec2 r = mid - q - 0.5 * h * f.x;
        if (r.cwiseAbs().maxCoeff() <= opt_.newton_tol) {
          converged = true;
          break;
        }
        if (it == opt_.max_newton) break;
        Mat2 jac = Mat2::Identity() - 0.5 * h * f.jac;
        mid -= jac.partialPivLu().solve(r);
      }
      if (!converged)
        raise(errc::integration_failure, "midpoint iteration did not reach tolerance");
      q = 2.0 * mid - q;
      if (with_differential) {
        Mat2 minus = Mat2::Identity() - 0.5 * h * dmid;
        Mat2 plus = Mat2::Identity() + 0.5 * h * dmid;
        m = minus.partialPivLu().solve(plus * m);
      }
    }
    drift = std::max(drift, std::abs(field_.hamiltonian(q) - h0));
  }

  out.point = q;
  out.differential = m;
  out.steps = nsteps;
  out.h_drift = drift / h_scale_;
  record_drift(out.h_drift);
  return out;
}

}  // namespace ergotorus
