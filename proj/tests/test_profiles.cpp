#include <doctest.h>

#include <cmath>

#include "ergotorus/profiles.hpp"
#include "ergotorus/rng.hpp"

using namespace ergotorus;

TEST_SUITE_BEGIN("profiles");

TEST_CASE("bump is exactly linear on the core") {
  BumpProfile psi(0.1, 0.02, 0.6067440114897277);
  for (double t : {0.0, 0.005, -0.005, 0.02, -0.02, 0.0123456}) {
    ProfileSample s = psi.sample(t);
    CHECK(s.value == 0.6067440114897277 * t);
    CHECK(s.d1 == 0.6067440114897277);
    CHECK(s.d2 == 0.0);
  }
}

TEST_CASE("bump vanishes identically outside the support") {
  BumpProfile psi(0.1, 0.02, -0.5);
  for (double t : {0.1, -0.1, 0.100000001, 0.5, -2.0}) {
    ProfileSample s = psi.sample(t);
    CHECK(s.value == 0.0);
    CHECK(s.d1 == 0.0);
    CHECK(s.d2 == 0.0);
  }
}

TEST_CASE("bump is odd") {
  BumpProfile psi(0.08, 0.01, 0.7);
  Rng rng(5);
  for (int i = 0; i < 200; ++i) {
    double t = rng.uniform(0.0, 0.1);
    ProfileSample p = psi.sample(t);
    ProfileSample n = psi.sample(-t);
    CHECK(n.value == -p.value);
    CHECK(n.d1 == p.d1);
    CHECK(n.d2 == -p.d2);
  }
}

TEST_CASE("bump is C2 at both knots") {
  BumpProfile psi(0.1, 0.02, 0.6);
  // inner knot: the bridge was built to match the linear core exactly
  ProfileSample in = psi.sample(0.02);
  ProfileSample out = psi.sample(0.02 * (1.0 + 1e-13));
  CHECK(std::abs(out.value - in.value) <= 1e-12);
  CHECK(std::abs(out.d1 - in.d1) <= 1e-10);
  CHECK(std::abs(out.d2 - in.d2) <= 1e-8);
  // outer knot: the bridge decays to zero with flat slope and curvature
  ProfileSample near_end = psi.sample(0.1 * (1.0 - 1e-13));
  CHECK(std::abs(near_end.value) <= 1e-12);
  CHECK(std::abs(near_end.d1) <= 1e-10);
  CHECK(std::abs(near_end.d2) <= 1e-8);
}

TEST_CASE("bump derivatives match finite differences") {
  BumpProfile psi(0.1, 0.02, 0.6067440114897277);
  Rng rng(17);
  const double h = 1e-6;
  // second differences amplify evaluation roundoff by 4/h^2, so they need a
  // larger step than first differences to stay above the noise floor
  const double h2 = 1e-5;
  for (int i = 0; i < 500; ++i) {
    double t = rng.uniform(-0.12, 0.12);
    ProfileSample s = psi.sample(t);
    double fd1 = (psi.value(t + h) - psi.value(t - h)) / (2.0 * h);
    double fd2 = (psi.value(t + h2) - 2.0 * psi.value(t) + psi.value(t - h2)) / (h2 * h2);
    CHECK(std::abs(s.d1 - fd1) <= 1e-6);
    CHECK(std::abs(s.d2 - fd2) <= 1e-4);
  }
}

TEST_CASE("zero slope gives the zero profile") {
  BumpProfile psi(0.1, 0.02, 0.0);
  Rng rng(23);
  for (int i = 0; i < 100; ++i) {
    double t = rng.uniform(-0.12, 0.12);
    CHECK(psi.value(t) == 0.0);
  }
  CHECK(psi.sup_abs() == 0.0);
  CHECK(psi.sup_value_times_d2() == 0.0);
}

TEST_CASE("scan suprema agree with an independent denser scan") {
  BumpProfile psi(0.1, 0.03, 0.8);
  double sup_abs = 0.0, sup_vd2 = 0.0;
  const int n = 300001;
  for (int i = 0; i < n; ++i) {
    double t = 0.1 * static_cast<double>(i) / static_cast<double>(n - 1);
    ProfileSample s = psi.sample(t);
    sup_abs = std::max(sup_abs, std::abs(s.value));
    sup_vd2 = std::max(sup_vd2, std::abs(s.value * s.d2));
  }
  CHECK(psi.sup_abs() == doctest::Approx(sup_abs).epsilon(1e-6));
  CHECK(psi.sup_value_times_d2() == doctest::Approx(sup_vd2).epsilon(1e-4));
}

TEST_CASE("build_bump keeps the core when the bound is generous") {
  BumpBuild built = build_bump(0.1, 0.02, 0.6, 1.0);
  CHECK(built.shrink_steps == 0);
  CHECK(built.profile.core_radius() == 0.02);
  CHECK(built.achieved_sup <= 1.0);
}

TEST_CASE("build_bump shrinks the core to meet a tight bound") {
  BumpBuild loose = build_bump(0.1, 0.04, 0.8, 10.0);
  CHECK(loose.shrink_steps == 0);
  // sup |psi psi''| falls as the core shrinks but has a positive floor near
  // 0.75 * slope^2 (0.48 here), so the tight bound must sit above that
  BumpBuild tight = build_bump(0.1, 0.04, 0.8, 0.7);
  CHECK(tight.shrink_steps > 0);
  CHECK(tight.profile.core_radius() < 0.04);
  CHECK(tight.achieved_sup <= 0.7);
  CHECK(tight.achieved_sup < loose.achieved_sup);
}

TEST_CASE("build_bump reports infeasible bounds") {
  CHECK_THROWS_AS(build_bump(0.1, 0.02, 0.8, 1e-12), Error);
  try {
    build_bump(0.1, 0.02, 0.8, 1e-12);
  } catch (const Error& e) {
    CHECK(e.code() == errc::bound_infeasible);
  }
}

TEST_CASE("bump rejects degenerate shapes") {
  CHECK_THROWS_AS(BumpProfile(0.0, 0.0, 1.0), Error);
  CHECK_THROWS_AS(BumpProfile(0.1, 0.1, 1.0), Error);
  CHECK_THROWS_AS(BumpProfile(0.1, 0.2, 1.0), Error);
}

TEST_CASE("plateau window is exactly 1 on the core and 0 outside") {
  PlateauWindow w(0.1, 0.02);
  for (double t : {0.0, 0.01, -0.02, 0.02}) {
    ProfileSample s = w.sample(t);
    CHECK(s.value == 1.0);
    CHECK(s.d1 == 0.0);
    CHECK(s.d2 == 0.0);
  }
  for (double t : {0.1, -0.1, 0.2, -5.0}) {
    ProfileSample s = w.sample(t);
    CHECK(s.value == 0.0);
    CHECK(s.d1 == 0.0);
    CHECK(s.d2 == 0.0);
  }
}

TEST_CASE("plateau window transition is monotone and within the slope bound") {
  PlateauWindow w(0.1, 0.02);
  double prev = 1.0;
  for (int i = 1; i <= 1000; ++i) {
    double t = 0.02 + (0.1 - 0.02) * static_cast<double>(i) / 1000.0;
    ProfileSample s = w.sample(t);
    CHECK(s.value <= prev + 1e-15);
    CHECK(s.value >= 0.0);
    CHECK(s.value <= 1.0);
    CHECK(std::abs(s.d1) <= w.sup_d1() * (1.0 + 1e-12));
    prev = s.value;
  }
}

TEST_CASE("plateau window is C2 at the knots") {
  PlateauWindow w(0.1, 0.02);
  ProfileSample in = w.sample(0.02 * (1.0 + 1e-13));
  CHECK(std::abs(in.value - 1.0) <= 1e-12);
  CHECK(std::abs(in.d1) <= 1e-10);
  CHECK(std::abs(in.d2) <= 1e-8);
  ProfileSample out = w.sample(0.1 * (1.0 - 1e-13));
  CHECK(std::abs(out.value) <= 1e-12);
  CHECK(std::abs(out.d1) <= 1e-10);
  CHECK(std::abs(out.d2) <= 1e-8);
}

TEST_CASE("plateau derivatives match finite differences") {
  PlateauWindow w(0.1, 0.02);
  Rng rng(29);
  const double h = 1e-6;
  for (int i = 0; i < 300; ++i) {
    double t = rng.uniform(-0.12, 0.12);
    ProfileSample s = w.sample(t);
    double fd1 = (w.value(t + h) - w.value(t - h)) / (2.0 * h);
    CHECK(std::abs(s.d1 - fd1) <= 1e-5);
  }
}

TEST_SUITE_END();
