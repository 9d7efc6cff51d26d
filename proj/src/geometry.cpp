#include "ergotorus/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace ergotorus {

namespace {

inline double wrap1(double v) {
  double r = v - std::floor(v);
  if (r >= 1.0) r -= 1.0;  // tiny negatives round up to 1.0 after the subtraction
  return r;
}

// shift into [-1/2, 1/2)
inline double center1(double d) { return d - std::floor(d + 0.5); }

}  // namespace

TorusPoint wrap(const Vec3& v) { return TorusPoint{wrap1(v[0]), wrap1(v[1]), wrap1(v[2])}; }

TorusPoint wrap(double x, double y, double z) { return wrap(Vec3(x, y, z)); }

Vec3 displacement(const TorusPoint& a, const TorusPoint& b) {
  return Vec3(center1(b.x - a.x), center1(b.y - a.y), center1(b.z - a.z));
}

double torus_distance(const TorusPoint& a, const TorusPoint& b) {
  return displacement(a, b).norm();
}

void Chart::validate(double tol) const {
  Mat3 gram = basis.transpose() * basis;
  double dev = (gram - Mat3::Identity()).cwiseAbs().maxCoeff();
  if (dev > tol) raise(errc::invalid_input, "chart basis is not orthonormal");
  if (!(radius > 0.0) || radius > 0.5)
    raise(errc::invalid_input, "chart radius must lie in (0, 1/2]");
}

bool cone_contains(const ConeSpec& cone, const Vec3& v) {
  require(cone.axis >= 0 && cone.axis < 3, "cone axis out of range");
  require(cone.gamma > 0.0, "cone aperture must be positive");
  int p1 = (cone.axis + 1) % 3;
  int p2 = (cone.axis + 2) % 3;
  double perp = std::hypot(v[p1], v[p2]);
  return perp <= cone.gamma * std::abs(v[cone.axis]);
}

double cone_image_aperture(const Mat3& a, const ConeSpec& cone, int n_samples) {
  require(cone.axis >= 0 && cone.axis < 3, "cone axis out of range");
  require(cone.gamma > 0.0, "cone aperture must be positive");
  require(n_samples >= 8, "need at least 8 boundary samples");
  const int ax = cone.axis;
  const int p1 = (ax + 1) % 3;
  const int p2 = (ax + 2) % 3;
  const double scale = std::max(a.cwiseAbs().maxCoeff(), 1e-300);

  double worst = 0.0;
  int denom_sign = 0;
  for (int k = 0; k < n_samples; ++k) {
    double t = 2.0 * M_PI * static_cast<double>(k) / static_cast<double>(n_samples);
    Vec3 v = Vec3::Zero();
    v[ax] = 1.0;
    v[p1] = cone.gamma * std::cos(t);
    v[p2] = cone.gamma * std::sin(t);
    Vec3 image = a * v;
    double denom = image[ax];
    double num = std::hypot(image[p1], image[p2]);
    if (std::abs(denom) <= 1e-14 * scale)
      raise(errc::aperture_infinite, "image ray meets the axis-orthogonal plane");
    int sign = denom > 0.0 ? 1 : -1;
    if (denom_sign == 0) denom_sign = sign;
    if (sign != denom_sign)
      raise(errc::aperture_infinite, "image cone straddles the axis-orthogonal plane");
    worst = std::max(worst, num / std::abs(denom));
  }
  return worst;
}

EigResult eigen_decomposition(const Mat3& m) {
  Eigen::EigenSolver<Mat3> solver(m, true);
  if (solver.info() != Eigen::Success)
    raise(errc::invalid_input, "eigenvalue iteration failed to converge");
  EigResult out;
  Eigen::Vector3cd vals = solver.eigenvalues();
  Eigen::Matrix3cd vecs = solver.eigenvectors();
  std::array<int, 3> order = {0, 1, 2};
  std::sort(order.begin(), order.end(),
            [&](int i, int j) { return std::abs(vals[i]) > std::abs(vals[j]); });
  for (int i = 0; i < 3; ++i) {
    out.values[static_cast<std::size_t>(i)] = vals[order[static_cast<std::size_t>(i)]];
    out.vectors.col(i) = vecs.col(order[static_cast<std::size_t>(i)]);
  }
  Eigen::JacobiSVD<Eigen::Matrix3cd> svd(out.vectors);
  double smin = svd.singularValues()(2);
  out.vector_condition = smin > 0.0 ? svd.singularValues()(0) / smin
                                    : std::numeric_limits<double>::infinity();
  return out;
}

std::array<double, 3> singular_values(const Mat3& m) {
  Eigen::JacobiSVD<Mat3> svd(m);
  return {svd.singularValues()(0), svd.singularValues()(1), svd.singularValues()(2)};
}

}  // namespace ergotorus
