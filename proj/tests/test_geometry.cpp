#include <doctest.h>

#include <cmath>

#include "ergotorus/geometry.hpp"
#include "ergotorus/rng.hpp"

using namespace ergotorus;

TEST_SUITE_BEGIN("geometry");

TEST_CASE("wrap reduces componentwise into [0,1)") {
  TorusPoint p = wrap(1.25, -0.5, 3.0);
  CHECK(p.x == 0.25);
  CHECK(p.y == 0.5);
  CHECK(p.z == 0.0);
}

TEST_CASE("wrap is idempotent and lands in [0,1)") {
  Rng rng(7);
  for (int i = 0; i < 1000; ++i) {
    Vec3 v(rng.uniform(-50.0, 50.0), rng.uniform(-50.0, 50.0), rng.uniform(-50.0, 50.0));
    TorusPoint p = wrap(v);
    for (int c = 0; c < 3; ++c) {
      CHECK(p[c] >= 0.0);
      CHECK(p[c] < 1.0);
    }
    TorusPoint q = wrap(p.vec());
    CHECK(q == p);
  }
}

TEST_CASE("wrap handles values a hair below zero") {
  TorusPoint p = wrap(-1e-17, 0.0, 0.0);
  CHECK(p.x >= 0.0);
  CHECK(p.x < 1.0);
}

TEST_CASE("displacement picks the shortest representative") {
  TorusPoint a = wrap(0.9, 0.1, 0.5);
  TorusPoint b = wrap(0.1, 0.9, 0.5);
  Vec3 d = displacement(a, b);
  CHECK(d[0] == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(d[1] == doctest::Approx(-0.2).epsilon(1e-15));
  CHECK(d[2] == 0.0);
}

TEST_CASE("antipodal displacement uses the [-1/2,1/2) convention") {
  TorusPoint a = wrap(0.0, 0.0, 0.0);
  TorusPoint b = wrap(0.5, 0.5, 0.5);
  Vec3 d = displacement(a, b);
  CHECK(d[0] == -0.5);
  CHECK(d[1] == -0.5);
  CHECK(d[2] == -0.5);
}

TEST_CASE("displacement is antisymmetric away from the cut locus") {
  Rng rng(11);
  for (int i = 0; i < 1000; ++i) {
    TorusPoint a = wrap(rng.uniform01(), rng.uniform01(), rng.uniform01());
    TorusPoint b = wrap(rng.uniform01(), rng.uniform01(), rng.uniform01());
    Vec3 dab = displacement(a, b);
    if (dab.cwiseAbs().maxCoeff() > 0.499) continue;
    Vec3 dba = displacement(b, a);
    CHECK((dab + dba).cwiseAbs().maxCoeff() <= 1e-15);
  }
}

TEST_CASE("displacement norm bounds torus distance") {
  Rng rng(13);
  for (int i = 0; i < 200; ++i) {
    TorusPoint a = wrap(rng.uniform01(), rng.uniform01(), rng.uniform01());
    TorusPoint b = wrap(rng.uniform01(), rng.uniform01(), rng.uniform01());
    CHECK(torus_distance(a, b) <= std::sqrt(3.0) / 2.0 + 1e-15);
    CHECK(torus_distance(a, a) == 0.0);
  }
}

TEST_CASE("chart round-trips points inside its radius") {
  Chart chart;
  chart.center = wrap(0.3, 0.7, 0.1);
  // orthonormal basis from a rotation
  double c = std::cos(0.4), s = std::sin(0.4);
  chart.basis << c, -s, 0, s, c, 0, 0, 0, 1;
  chart.radius = 0.4;
  chart.validate();
  Rng rng(3);
  for (int i = 0; i < 500; ++i) {
    Vec3 local(rng.uniform(-0.4, 0.4), rng.uniform(-0.4, 0.4), rng.uniform(-0.2, 0.2));
    if (local.norm() >= 0.49) continue;
    TorusPoint q = chart.from_chart(local);
    Vec3 back = chart.to_chart(q);
    CHECK((back - local).cwiseAbs().maxCoeff() <= 1e-14);
    // isometry: chart coordinates preserve distance to the center
    CHECK(torus_distance(chart.center, q) == doctest::Approx(local.norm()).epsilon(1e-12));
  }
}

TEST_CASE("chart validation rejects skewed bases") {
  Chart chart;
  chart.basis << 1, 0.2, 0, 0, 1, 0, 0, 0, 1;
  CHECK_THROWS_AS(chart.validate(), Error);
}

TEST_CASE("cone membership matches the defining inequality") {
  ConeSpec cone{0, 1.0};
  CHECK(cone_contains(cone, Vec3(1.0, 0.6, 0.8)));        // boundary counts
  CHECK(cone_contains(cone, Vec3(-2.0, 1.0, 1.0)));
  CHECK_FALSE(cone_contains(cone, Vec3(1.0, 0.9, 0.9)));
  CHECK_FALSE(cone_contains(cone, Vec3(0.0, 1e-12, 0.0)));
}

TEST_CASE("cone membership is scale invariant over six orders") {
  ConeSpec cone{0, 0.75};
  Vec3 inside(1.0, 0.3, 0.4);
  Vec3 outside(1.0, 0.7, 0.4);
  for (double s = 1e-3; s <= 1e3 + 1; s *= 10.0) {
    CHECK(cone_contains(cone, s * inside));
    CHECK(cone_contains(cone, -s * inside));
    CHECK_FALSE(cone_contains(cone, s * outside));
  }
}

TEST_CASE("aperture of a diagonal contraction-expansion pair") {
  Mat3 a = Vec3(2.0, 0.5, 0.5).asDiagonal();
  double ap = cone_image_aperture(a, ConeSpec{0, 1.0}, 64);
  CHECK(ap == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("aperture of the identity equals the input aperture") {
  double ap = cone_image_aperture(Mat3::Identity(), ConeSpec{0, 0.7}, 64);
  CHECK(ap == doctest::Approx(0.7).epsilon(1e-12));
}

TEST_CASE("aperture is monotone under sample doubling and converges") {
  Mat3 a;
  a << 2.0, 0.1, -0.05, 0.3, 0.45, 0.2, -0.2, 0.1, 0.55;
  ConeSpec cone{0, 1.0};
  double prev = cone_image_aperture(a, cone, 16);
  for (int n = 32; n <= 4096; n *= 2) {
    double cur = cone_image_aperture(a, cone, n);
    CHECK(cur >= prev - 1e-300);
    prev = cur;
  }
  double a10 = cone_image_aperture(a, cone, 1 << 10);
  double a12 = cone_image_aperture(a, cone, 1 << 12);
  CHECK(std::abs(a12 - a10) <= 1e-6);
}

TEST_CASE("aperture infinite when the image folds over the axis plane") {
  Mat3 a = Vec3(1e-16, 1.0, 1.0).asDiagonal();
  CHECK_THROWS_AS(cone_image_aperture(a, ConeSpec{0, 1.0}, 64), Error);
  // rotation by pi/2 sends the axis into the perpendicular plane
  Mat3 r;
  r << 0, -1, 0, 1, 0, 0, 0, 0, 1;
  CHECK_THROWS_AS(cone_image_aperture(r, ConeSpec{0, 0.2}, 64), Error);
}

TEST_CASE("eigen decomposition sorts by modulus and reports conditioning") {
  Mat3 m;
  m << 1, -1, 1, -1, 2, -2, 1, -2, 3;
  EigResult eig = eigen_decomposition(m);
  CHECK(std::abs(eig.values[0]) == doctest::Approx(5.048917339522303).epsilon(1e-13));
  CHECK(std::abs(eig.values[1]) == doctest::Approx(0.6431041321077907).epsilon(1e-13));
  CHECK(std::abs(eig.values[2]) == doctest::Approx(0.3079785283699042).epsilon(1e-13));
  CHECK(eig.values[0].imag() == doctest::Approx(0.0).epsilon(1e-14));
  // symmetric matrix: orthonormal eigenbasis, condition number 1
  CHECK(eig.vector_condition == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("singular values are descending and multiply to |det|") {
  Mat3 m;
  m << 2, 1, 0, 1, 1, 0, 0, 0, 1;
  auto sv = singular_values(m);
  CHECK(sv[0] >= sv[1]);
  CHECK(sv[1] >= sv[2]);
  CHECK(sv[0] * sv[1] * sv[2] == doctest::Approx(std::abs(m.determinant())).epsilon(1e-12));
}

TEST_SUITE_END();
