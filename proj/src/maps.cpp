#include "ergotorus/maps.hpp"

#include <cmath>
#include <sstream>

#include "ergotorus/rng.hpp"

namespace ergotorus {

namespace {

long long det3(const long long m[3][3]) {
  return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
         m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
         m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
}

// adjugate of an integer matrix; equals the inverse when det = +1
void adjugate3(const long long m[3][3], long long out[3][3]) {
  out[0][0] = m[1][1] * m[2][2] - m[1][2] * m[2][1];
  out[0][1] = m[0][2] * m[2][1] - m[0][1] * m[2][2];
  out[0][2] = m[0][1] * m[1][2] - m[0][2] * m[1][1];
  out[1][0] = m[1][2] * m[2][0] - m[1][0] * m[2][2];
  out[1][1] = m[0][0] * m[2][2] - m[0][2] * m[2][0];
  out[1][2] = m[0][2] * m[1][0] - m[0][0] * m[1][2];
  out[2][0] = m[1][0] * m[2][1] - m[1][1] * m[2][0];
  out[2][1] = m[0][1] * m[2][0] - m[0][0] * m[2][1];
  out[2][2] = m[0][0] * m[1][1] - m[0][1] * m[1][0];
}

Mat3 to_mat3(const long long m[3][3]) {
  Mat3 out;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) out(i, j) = static_cast<double>(m[i][j]);
  return out;
}

std::string matrix_label(const char* head, const Mat3& m) {
  std::ostringstream os;
  os << head << "[";
  for (int i = 0; i < 3; ++i) {
    os << (i ? ";" : "");
    for (int j = 0; j < 3; ++j) os << (j ? "," : "") << m(i, j);
  }
  os << "]";
  return os.str();
}

struct LinearNode final : MapNode {
  Mat3 fwd, inv;

  TorusPoint eval(const TorusPoint& q) const override { return wrap(fwd * q.vec()); }
  Mat3 differential(const TorusPoint&) const override { return fwd; }
  TorusPoint inverse(const TorusPoint& q) const override { return wrap(inv * q.vec()); }
};

struct TranslationNode final : MapNode {
  Vec3 offset;

  TorusPoint eval(const TorusPoint& q) const override { return wrap(q.vec() + offset); }
  Mat3 differential(const TorusPoint&) const override { return Mat3::Identity(); }
  TorusPoint inverse(const TorusPoint& q) const override { return wrap(q.vec() - offset); }
};

struct ComposeNode final : MapNode {
  SmoothMap outer, inner;

  TorusPoint eval(const TorusPoint& q) const override { return outer.eval(inner.eval(q)); }
  Mat3 differential(const TorusPoint& q) const override {
    TorusPoint mid = inner.eval(q);
    return outer.differential(mid) * inner.differential(q);
  }
  TorusPoint inverse(const TorusPoint& q) const override {
    return inner.inverse(outer.inverse(q));
  }
};

struct ForwardNode final : MapNode {
  SmoothMap base;

  TorusPoint eval(const TorusPoint& q) const override { return base.eval(q); }
  Mat3 differential(const TorusPoint& q) const override { return base.differential(q); }
  TorusPoint inverse(const TorusPoint& q) const override { return base.inverse(q); }
};

struct RulesNode final : MapNode {
  std::function<TorusPoint(const TorusPoint&)> eval_fn;
  std::function<Mat3(const TorusPoint&)> diff_fn;
  std::function<TorusPoint(const TorusPoint&)> inv_fn;

  TorusPoint eval(const TorusPoint& q) const override { return eval_fn(q); }
  Mat3 differential(const TorusPoint& q) const override { return diff_fn(q); }
  TorusPoint inverse(const TorusPoint& q) const override {
    require(static_cast<bool>(inv_fn), "map has no inverse rule");
    return inv_fn(q);
  }
};

// Ball rearrangement: identity outside the gate radius, and inside the gate
//   q  ->  chart^-1( lam^-1 . F( chart(q) ) ).
// When F equals lam outside its support this carries the gate ball onto
// itself and glues to the identity; composing with a base map whose chart
// linearization is lam realizes the surgered map base . s.
struct RearrangementNode final : MapNode {
  TorusPoint center;
  Mat3 basis;        // orthonormal chart frame
  double gate = 0.0;  // = local support radius
  std::shared_ptr<const LocalMap> local;
  Mat3 lam = Mat3::Identity(), lam_inv = Mat3::Identity();

  TorusPoint eval(const TorusPoint& q) const override {
    Vec3 d = displacement(center, q);
    if (d.squaredNorm() >= gate * gate) return q;
    Vec3 c = basis.transpose() * d;
    return wrap(center.vec() + basis * (lam_inv * local->eval(c)));
  }

  Mat3 differential(const TorusPoint& q) const override {
    Vec3 d = displacement(center, q);
    if (d.squaredNorm() >= gate * gate) return Mat3::Identity();
    Vec3 c = basis.transpose() * d;
    return basis * (lam_inv * local->differential(c)) * basis.transpose();
  }

  TorusPoint inverse(const TorusPoint& q) const override {
    Vec3 d = displacement(center, q);
    if (d.squaredNorm() >= gate * gate) return q;
    Vec3 c2 = basis.transpose() * d;
    return wrap(center.vec() + basis * local->inverse(lam * c2));
  }
};

void sphere_direction(std::uint64_t k, Vec3& dir) {
  double u = radical_inverse(k + 1, 2);
  double v = radical_inverse(k + 1, 3);
  double z = 2.0 * u - 1.0;
  double r = std::sqrt(std::max(0.0, 1.0 - z * z));
  double phi = 2.0 * M_PI * v;
  dir = Vec3(r * std::cos(phi), r * std::sin(phi), z);
}

// Base linearization on the prospective surgery ball, or an error when the
// base is not exactly linear there.
Mat3 base_linearization_on_ball(const SmoothMap& base, const TorusPoint& center,
                                double radius) {
  const SupportInfo& info = base.support();
  for (const LocalLinearity& fact : info.linear_on) {
    if (torus_distance(fact.center, center) <= 1e-12 && fact.radius >= radius)
      return fact.matrix;
  }
  if (!info.linear_outside)
    raise(errc::invalid_input,
          "base map carries no linearity information on the surgery ball");
  for (const Ball& b : info.balls) {
    double sep = torus_distance(b.center, center);
    if (sep < b.radius + radius)
      raise(errc::balls_not_disjoint,
            "surgery ball overlaps an existing perturbation ball and no linearity "
            "certificate covers it");
  }
  return *info.linear_outside;
}

}  // namespace

TorusPoint SmoothMap::iterate(const TorusPoint& q, int n) const {
  TorusPoint p = q;
  if (n >= 0)
    for (int i = 0; i < n; ++i) p = eval(p);
  else
    for (int i = 0; i < -n; ++i) p = inverse(p);
  return p;
}

SmoothMap linear_anosov(const IntegerMatrixSpec& spec) {
  long long det = det3(spec.entries);
  if (det != 1)
    raise(errc::not_volume_preserving,
          "integer matrix determinant is " + std::to_string(det) + ", expected +1");
  auto node = std::make_shared<LinearNode>();
  node->fwd = to_mat3(spec.entries);
  long long adj[3][3];
  adjugate3(spec.entries, adj);
  node->inv = to_mat3(adj);

  EigResult eig = eigen_decomposition(node->fwd);
  for (const auto& v : eig.values) {
    if (std::abs(std::abs(v) - 1.0) <= 1e-9)
      raise(errc::not_hyperbolic, "eigenvalue modulus within 1e-9 of the unit circle");
  }
  node->label = matrix_label("aut", node->fwd);
  node->support.linear_outside = node->fwd;
  return SmoothMap(node);
}

SmoothMap product_with_identity(const IntegerMatrix2Spec& spec) {
  const auto& m = spec.entries;
  long long det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
  if (det != 1)
    raise(errc::not_volume_preserving,
          "2x2 block determinant is " + std::to_string(det) + ", expected +1");
  long long tr = m[0][0] + m[1][1];
  if (tr <= 2 && tr >= -2)
    raise(errc::not_hyperbolic, "2x2 block with |trace| <= 2 is not hyperbolic");
  auto node = std::make_shared<LinearNode>();
  node->fwd << static_cast<double>(m[0][0]), static_cast<double>(m[0][1]), 0.0,
      static_cast<double>(m[1][0]), static_cast<double>(m[1][1]), 0.0, 0.0, 0.0, 1.0;
  // det = +1: the integer inverse of the block is its adjugate
  node->inv << static_cast<double>(m[1][1]), static_cast<double>(-m[0][1]), 0.0,
      static_cast<double>(-m[1][0]), static_cast<double>(m[0][0]), 0.0, 0.0, 0.0, 1.0;
  node->label = matrix_label("prod", node->fwd);
  node->support.linear_outside = node->fwd;
  return SmoothMap(node);
}

SmoothMap translation(const Vec3& offset) {
  auto node = std::make_shared<TranslationNode>();
  node->offset = offset;
  std::ostringstream os;
  os << "shift[" << offset[0] << "," << offset[1] << "," << offset[2] << "]";
  node->label = os.str();
  // not linear over the torus group unless zero; leave support unknown
  return SmoothMap(node);
}

SmoothMap compose(const SmoothMap& outer, const SmoothMap& inner) {
  require(outer.valid() && inner.valid(), "compose needs two valid maps");
  auto node = std::make_shared<ComposeNode>();
  node->outer = outer;
  node->inner = inner;
  node->label = outer.label() + " . " + inner.label();
  const SupportInfo& so = outer.support();
  const SupportInfo& si = inner.support();
  if (so.linear_outside && si.linear_outside) {
    node->support.linear_outside = (*so.linear_outside) * (*si.linear_outside);
    node->support.balls = si.balls;
    if (!so.balls.empty()) {
      double amp = singular_values(si.linear_outside->inverse())[0];
      for (const Ball& b : so.balls)
        node->support.balls.push_back(Ball{inner.inverse(b.center), amp * b.radius});
    }
  }
  return SmoothMap(node);
}

SmoothMap from_rules(std::string label, std::function<TorusPoint(const TorusPoint&)> eval,
                     std::function<Mat3(const TorusPoint&)> differential,
                     std::function<TorusPoint(const TorusPoint&)> inverse) {
  require(static_cast<bool>(eval) && static_cast<bool>(differential),
          "rule map needs eval and differential");
  auto node = std::make_shared<RulesNode>();
  node->eval_fn = std::move(eval);
  node->diff_fn = std::move(differential);
  node->inv_fn = std::move(inverse);
  node->label = std::move(label);
  return SmoothMap(node);
}

SmoothMap with_support(const SmoothMap& map, SupportInfo info) {
  require(map.valid(), "cannot annotate an empty map");
  auto node = std::make_shared<ForwardNode>();
  node->base = map;
  node->label = map.label();
  node->support = std::move(info);
  return SmoothMap(node);
}

SurgeryResolution resolve_surgery(const SmoothMap& base, const LocalSurgerySpec& spec) {
  require(base.valid(), "surgery base is empty");
  require(static_cast<bool>(spec.local), "surgery needs a local map");
  spec.chart.validate();
  require(spec.ball_radius > 0.0 && spec.ball_radius <= spec.chart.radius,
          "surgery ball must lie inside the chart");

  SurgeryResolution res;
  res.gate_radius = spec.local->support_radius();
  require(res.gate_radius >= 0.0 && res.gate_radius <= spec.ball_radius,
          "local support must not exceed the surgery ball");

  res.torus_linearization = base_linearization_on_ball(base, spec.chart.center, spec.ball_radius);
  res.chart_linearization = spec.chart.push(res.torus_linearization);

  Mat3 claimed = spec.local->linearization();
  double scale = std::max(1.0, res.chart_linearization.cwiseAbs().maxCoeff());
  if ((claimed - res.chart_linearization).cwiseAbs().maxCoeff() > 1e-9 * scale)
    raise(errc::surgery_mismatch,
          "local linearization disagrees with the base linearization in chart coordinates");
  return res;
}

SmoothMap make_rearrangement(const RearrangementSpec& spec) {
  require(static_cast<bool>(spec.local), "rearrangement needs a local map");
  spec.chart.validate();
  require(spec.ball_radius > 0.0 && spec.ball_radius <= spec.chart.radius,
          "rearrangement ball must lie inside the chart");
  const double gate = spec.local->support_radius();
  require(gate >= 0.0 && gate <= spec.ball_radius,
          "local support must not exceed the rearrangement ball");
  require(spec.shell_samples >= 16, "shell check needs at least 16 samples");

  Mat3 claimed = spec.local->linearization();
  double scale = std::max(1.0, spec.lam.cwiseAbs().maxCoeff());
  if ((claimed - spec.lam).cwiseAbs().maxCoeff() > 1e-9 * scale)
    raise(errc::surgery_mismatch,
          "local linearization disagrees with the normalizing linearization");

  if (gate > 0.0) {
    // agreement shell: the local map must coincide with its linearization on
    // the whole band between its support sphere and the declared ball, or the
    // glue would clip part of the deformation
    const double hi = spec.ball_radius * (1.0 - 1e-12);
    const double lo = gate * (1.0 + 1e-12);
    if (lo >= hi)
      raise(errc::surgery_mismatch,
            "no agreement shell between the local support and the rearrangement ball");
    for (int k = 0; k < spec.shell_samples; ++k) {
      Vec3 dir;
      sphere_direction(static_cast<std::uint64_t>(k), dir);
      double r = lo + (hi - lo) * radical_inverse(static_cast<std::uint64_t>(k) + 1, 5);
      Vec3 c = r * dir;
      Vec3 image = spec.local->eval(c);
      Vec3 linear = spec.lam * c;
      double tol = spec.shell_tol * std::max(1.0, linear.norm());
      if ((image - linear).norm() > tol)
        raise(errc::surgery_mismatch,
              "local map does not match its linearization on the agreement shell");
    }
  }

  auto node = std::make_shared<RearrangementNode>();
  node->center = spec.chart.center;
  node->basis = spec.chart.basis;
  node->gate = gate;
  node->local = spec.local;
  node->lam = spec.lam;
  node->lam_inv = spec.lam.inverse();
  node->label = spec.label;
  node->support.linear_outside = Mat3::Identity();
  if (gate > 0.0) node->support.balls.push_back(Ball{spec.chart.center, gate});
  return SmoothMap(node);
}

SmoothMap apply_surgery(const SmoothMap& base, const LocalSurgerySpec& spec) {
  SurgeryResolution res = resolve_surgery(base, spec);
  const double gate = res.gate_radius;
  if (gate == 0.0) return base;  // trivial deformation

  RearrangementSpec rs;
  rs.chart = spec.chart;
  rs.lam = res.chart_linearization;
  rs.ball_radius = spec.ball_radius;
  rs.local = spec.local;
  rs.shell_samples = spec.shell_samples;
  rs.shell_tol = spec.shell_tol;
  rs.label = "rearr@" + base.label();
  SmoothMap glue = make_rearrangement(rs);

  auto composite = std::make_shared<ComposeNode>();
  composite->outer = base;
  composite->inner = glue;
  composite->label = base.label() + " # surgery";
  composite->support.linear_outside = base.support().linear_outside;
  composite->support.balls = base.support().balls;
  composite->support.balls.push_back(Ball{spec.chart.center, gate});
  // linearity certificates touching the new ball no longer hold
  for (const LocalLinearity& fact : base.support().linear_on) {
    double sep = torus_distance(fact.center, spec.chart.center);
    if (sep >= fact.radius + spec.ball_radius) composite->support.linear_on.push_back(fact);
  }
  return SmoothMap(composite);
}

}  // namespace ergotorus
