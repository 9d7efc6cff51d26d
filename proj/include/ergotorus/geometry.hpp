#pragma once

#include <Eigen/Dense>
#include <array>
#include <complex>

#include "ergotorus/errors.hpp"

namespace ergotorus {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;

// Point on the 3-torus R^3/Z^3, each coordinate held in [0,1).
struct TorusPoint {
  double x = 0.0, y = 0.0, z = 0.0;

  Vec3 vec() const { return Vec3(x, y, z); }
  double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }
  bool operator==(const TorusPoint& o) const { return x == o.x && y == o.y && z == o.z; }
};

// Componentwise reduction mod 1 into [0,1).
TorusPoint wrap(const Vec3& v);
TorusPoint wrap(double x, double y, double z);

// Shortest representative of b - a, components in [-1/2, 1/2). On the cut
// locus (a component distance of exactly 1/2) the negative representative is
// chosen, so antisymmetry may fail there by a full period.
Vec3 displacement(const TorusPoint& a, const TorusPoint& b);

double torus_distance(const TorusPoint& a, const TorusPoint& b);

// Orthonormal affine frame at a point; chart coordinates are isometric to the
// torus metric within the injectivity radius. Columns of basis are the frame.
struct Chart {
  TorusPoint center;
  Mat3 basis = Mat3::Identity();
  double radius = 0.5;

  Vec3 to_chart(const TorusPoint& q) const { return basis.transpose() * displacement(center, q); }
  TorusPoint from_chart(const Vec3& c) const { return wrap(center.vec() + basis * c); }
  // conjugate a differential taken in torus coordinates into chart coordinates
  Mat3 push(const Mat3& m) const { return basis.transpose() * m * basis; }
  Mat3 pull(const Mat3& m) const { return basis * m * basis.transpose(); }

  // Orthonormality within tol and radius inside the injectivity radius.
  void validate(double tol = 1e-12) const;
};

// Cone of aperture gamma around a coordinate axis:
//   { v : || v_perp || <= gamma * |v_axis| }.
struct ConeSpec {
  int axis = 0;
  double gamma = 1.0;
};

bool cone_contains(const ConeSpec& cone, const Vec3& v);

// Largest ratio ||(Av)_perp|| / |(Av)_axis| over n_samples boundary rays of
// the cone; this is the aperture of a cone containing the image (boundary
// sampling suffices: the ratio is quasi-convex over the cone section). Rays
// are t_k = 2*pi*k/n, so doubling n refines the same sample set and the
// result is monotone under doubling. Throws aperture_infinite when the image
// touches the axis-orthogonal plane.
double cone_image_aperture(const Mat3& a, const ConeSpec& cone, int n_samples);

struct EigResult {
  std::array<std::complex<double>, 3> values;  // sorted by modulus, descending
  Eigen::Matrix3cd vectors;                    // columns match values
  double vector_condition = 0.0;               // condition number of the eigenvector matrix
};

EigResult eigen_decomposition(const Mat3& m);

std::array<double, 3> singular_values(const Mat3& m);  // descending

}  // namespace ergotorus
