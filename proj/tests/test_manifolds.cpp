#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>

#include "ergotorus/construction.hpp"
#include "ergotorus/manifolds.hpp"
#include "ergotorus/maps.hpp"

using namespace ergotorus;

namespace {

IntegerMatrixSpec bv_spec() {
  IntegerMatrixSpec spec;
  const long long e[3][3] = {{1, -1, 1}, {-1, 2, -2}, {1, -2, 3}};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) spec.entries[i][j] = e[i][j];
  return spec;
}

IntegerMatrix2Spec cat_spec() {
  IntegerMatrix2Spec s;
  s.entries[0][0] = 2;
  s.entries[0][1] = 1;
  s.entries[1][0] = 1;
  s.entries[1][1] = 1;
  return s;
}

constexpr double kMu = 5.048917339522303;
constexpr double kRho = 0.6431041321077907;

const SmoothMap& bv_map() {
  static const SmoothMap map = linear_anosov(bv_spec());
  return map;
}

const SurgeredSystem& bv_system() {
  static const SurgeredSystem sys = [] {
    SurgeryPlan plan;
    plan.point = TorusPoint{0.0, 0.0, 0.0};
    plan.params.threads = 4;
    return deform_at_point(bv_map(), plan);
  }();
  return sys;
}

// disk spanning the stable plane of the origin in the automorphism's eigenframe
StableDisk origin_eigen_disk(double radius) {
  EigenFrame frame = eigenframe_at(bv_map(), TorusPoint{0.0, 0.0, 0.0});
  StableDisk d;
  d.center = TorusPoint{0.0, 0.0, 0.0};
  d.chart = Chart{d.center, frame.basis, 0.45};
  d.radius = radius;
  return d;
}

double line_angle(const Vec3& a, const Vec3& b) {
  double c = std::abs(a.normalized().dot(b.normalized()));
  if (c > 1.0) c = 1.0;
  return std::acos(c);
}

std::optional<errc> expect_errc(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return std::nullopt;
}

// consecutive chord vectors, shortest representatives
std::vector<Vec3> chords(const UnstableCurve& c) {
  std::vector<Vec3> out;
  for (std::size_t i = 0; i + 1 < c.points.size(); ++i)
    out.push_back(displacement(c.points[i], c.points[i + 1]));
  return out;
}

UnstableCurve hand_curve(std::vector<TorusPoint> pts) {
  UnstableCurve c;
  c.points = std::move(pts);
  c.seed_index = 0;
  c.seed = c.points.front();
  c.h_max = 0.5;
  return c;
}

}  // namespace

TEST_SUITE_BEGIN("manifolds");

TEST_CASE("curve growth follows the straight expanding eigenline") {
  const TorusPoint x{0.3, 0.7, 0.2};
  const Vec3 v1 = eigenframe_at(bv_map(), x).basis.col(0);

  UnstableCurve c = grow_unstable_curve(bv_map(), x, 0.5, 8, 5e-3);
  CHECK(c.generations == 8);
  CHECK(c.h_max == 5e-3);
  CHECK(c.points.size() > 50);
  CHECK(c.seed_index < c.points.size());
  CHECK(c.points[c.seed_index] == bv_map().iterate(x, 8));
  CHECK(c.seed == x);
  CHECK(c.arc_length <= 0.5);

  double max_angle = 0.0;
  double max_gap = 0.0;
  double arc = 0.0;
  for (const Vec3& ch : chords(c)) {
    max_angle = std::max(max_angle, line_angle(ch, v1));
    max_gap = std::max(max_gap, ch.norm());
    arc += ch.norm();
  }
  CHECK(max_angle <= 1e-10);
  CHECK(max_gap <= 5e-3 + 1e-15);
  CHECK(arc == doctest::Approx(c.arc_length).epsilon(1e-12));
}

TEST_CASE("one generation stretches the seed segment by the top eigenvalue") {
  const TorusPoint x{0.3, 0.7, 0.2};
  UnstableCurve c0 = grow_unstable_curve(bv_map(), x, 0.5, 0, 5e-3);
  UnstableCurve c1 = grow_unstable_curve(bv_map(), x, 0.5, 1, 5e-3);
  CHECK(c0.arc_length == doctest::Approx(1e-6).epsilon(1e-9));
  CHECK(c1.arc_length / c0.arc_length == doctest::Approx(kMu).epsilon(1e-9));
}

TEST_CASE("product dynamics keeps the curve inside its start slice") {
  SmoothMap map = product_with_identity(cat_spec());
  const TorusPoint x{0.3, 0.8, 0.37};
  UnstableCurve c = grow_unstable_curve(map, x, 0.4, 10, 2e-3);

  const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
  const Vec3 u = Vec3(phi, 1.0, 0.0).normalized();
  double max_angle = 0.0;
  for (const Vec3& ch : chords(c)) max_angle = std::max(max_angle, line_angle(ch, u));
  CHECK(max_angle <= 1e-8);
  for (const TorusPoint& q : c.points) CHECK(std::abs(q.z - 0.37) <= 1e-12);
}

TEST_CASE("curve through the deformed fixed point stays on the expanding axis") {
  const SurgeredSystem& sys = bv_system();
  const Mat3 B = sys.chart.basis;

  // short horizon: every sample still lies inside the surgery chart
  UnstableCurve c3 = grow_unstable_curve(sys.map, sys.point, 0.01, 3, 5e-3);
  for (const Vec3& ch : chords(c3)) CHECK(line_angle(ch, B.col(0)) <= 1e-11);
  for (const TorusPoint& q : c3.points) {
    const Vec3 cc = sys.chart.to_chart(q);
    CHECK(std::abs(cc[1]) <= 1e-13);
    CHECK(std::abs(cc[2]) <= 1e-13);
  }

  // long horizon: the curve leaves the chart; chords keep to the certified cone
  UnstableCurve c12 = grow_unstable_curve(sys.map, sys.point, 0.2, 12, 5e-3);
  CHECK(c12.arc_length == doctest::Approx(0.2).epsilon(0.1));
  const ConeSpec cone{0, sys.deformation.cone.xi};
  for (const Vec3& ch : chords(c12)) CHECK(cone_contains(cone, B.transpose() * ch));
}

TEST_CASE("plane crossings are classified by angle and radius") {
  StableDisk disk;
  disk.center = TorusPoint{0.5, 0.5, 0.5};
  disk.chart = Chart{disk.center, Mat3::Identity(), 0.4};
  disk.radius = 0.3;

  SUBCASE("perpendicular chord through the center") {
    HitReport r = transverse_hit(
        hand_curve({TorusPoint{0.45, 0.5, 0.5}, TorusPoint{0.55, 0.5, 0.5}}), disk);
    REQUIRE(r.transverse.size() == 1);
    CHECK(r.tangential.empty());
    CHECK(r.hit());
    CHECK(r.transverse[0].angle == doctest::Approx(M_PI / 2).epsilon(1e-12));
    CHECK(r.transverse[0].radial <= 1e-15);
    CHECK(r.transverse[0].segment == 0);
    CHECK(torus_distance(r.transverse[0].point, disk.center) <= 1e-12);
  }
  SUBCASE("chord parallel to the plane never crosses") {
    HitReport r = transverse_hit(
        hand_curve({TorusPoint{0.51, 0.4, 0.5}, TorusPoint{0.51, 0.6, 0.5}}), disk);
    CHECK(!r.hit());
    CHECK(r.tangential.empty());
  }
  SUBCASE("grazing chord lands in the tangential list") {
    HitReport r = transverse_hit(
        hand_curve({wrap(0.5 - 1e-5, 0.4, 0.5), wrap(0.5 + 1e-5, 0.6, 0.5)}), disk);
    CHECK(!r.hit());
    REQUIRE(r.tangential.size() == 1);
    CHECK(r.tangential[0].angle < 1e-3);
  }
  SUBCASE("crossing outside the disk radius is discarded") {
    HitReport r = transverse_hit(
        hand_curve({TorusPoint{0.45, 0.81, 0.5}, TorusPoint{0.55, 0.81, 0.5}}), disk);
    CHECK(!r.hit());
    CHECK(r.tangential.empty());
  }
  SUBCASE("crossings through the wrap seam are found") {
    StableDisk seam;
    seam.center = TorusPoint{0.02, 0.5, 0.5};
    seam.chart = Chart{seam.center, Mat3::Identity(), 0.4};
    seam.radius = 0.3;
    HitReport r = transverse_hit(
        hand_curve({TorusPoint{0.99, 0.5, 0.5}, TorusPoint{0.05, 0.5, 0.5}}), seam);
    REQUIRE(r.transverse.size() == 1);
    CHECK(torus_distance(r.transverse[0].point, seam.center) <= 1e-12);
  }
  SUBCASE("a long chart chord is treated as a wrap artifact") {
    HitReport r = transverse_hit(
        hand_curve({TorusPoint{0.45, 0.5, 0.5}, TorusPoint{0.95, 0.5, 0.5}}), disk);
    CHECK(!r.hit());
    CHECK(r.tangential.empty());
  }
}

TEST_CASE("grid cells decode to cell centers") {
  GridSpec g{3};
  g.validate();
  CHECK(g.size() == 27);
  const TorusPoint p0 = g.point(0);
  CHECK(p0.x == doctest::Approx(1.0 / 6).epsilon(1e-15));
  CHECK(p0.y == doctest::Approx(1.0 / 6).epsilon(1e-15));
  CHECK(p0.z == doctest::Approx(1.0 / 6).epsilon(1e-15));
  const TorusPoint p7 = g.point(7);  // i=0, j=2, k=1
  CHECK(p7.x == doctest::Approx(1.0 / 6).epsilon(1e-15));
  CHECK(p7.y == doctest::Approx(5.0 / 6).epsilon(1e-15));
  CHECK(p7.z == doctest::Approx(0.5).epsilon(1e-15));
  const TorusPoint p26 = g.point(26);
  CHECK(p26.x == doctest::Approx(5.0 / 6).epsilon(1e-15));
}

TEST_CASE("coverage of the automorphism rises along both ladders") {
  StableDisk disk = origin_eigen_disk(0.35);
  GridSpec grid{5};
  CoverageOptions opt;
  opt.threads = 4;

  const double c8 = phc_plus_coverage(bv_map(), disk, grid, 8, 14.0, opt).coverage;
  const double c9 = phc_plus_coverage(bv_map(), disk, grid, 9, 14.0, opt).coverage;
  CoverageReport r12 = phc_plus_coverage(bv_map(), disk, grid, 12, 14.0, opt);

  CHECK(c8 < c9);
  CHECK(c9 < r12.coverage);
  CHECK(r12.coverage >= 0.95);
  CHECK(r12.total == 125);
  CHECK(r12.hits + static_cast<long long>(r12.failure_indices.size()) == r12.total);
  CHECK(std::is_sorted(r12.failure_indices.begin(), r12.failure_indices.end()));
  CHECK(r12.failures.size() == r12.failure_indices.size());

  const double l35 = phc_plus_coverage(bv_map(), disk, grid, 12, 3.5, opt).coverage;
  const double l7 = phc_plus_coverage(bv_map(), disk, grid, 12, 7.0, opt).coverage;
  CHECK(l35 <= l7);
  CHECK(l7 <= r12.coverage);
  CHECK(l35 < r12.coverage);
}

TEST_CASE("product dynamics caps coverage at the reachable slices") {
  // disk axes: expanding direction transverse, contracting direction and the
  // neutral axis spanning the plane; slices farther than the disk radius in
  // the neutral coordinate are unreachable
  const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
  Mat3 basis;
  basis.col(0) = Vec3(phi, 1.0, 0.0).normalized();
  basis.col(1) = Vec3(-1.0, phi, 0.0).normalized();
  basis.col(2) = Vec3(0.0, 0.0, 1.0);
  StableDisk disk;
  disk.center = TorusPoint{0.0, 0.0, 0.0};
  disk.chart = Chart{disk.center, basis, 0.45};
  disk.radius = 0.3;

  SmoothMap map = product_with_identity(cat_spec());
  GridSpec grid{6};
  CoverageOptions opt;
  opt.threads = 4;
  CoverageReport rep = phc_plus_coverage(map, disk, grid, 18, 14.0, opt);

  CHECK(rep.coverage <= 4.0 / 6.0 + 1e-12);
  CHECK(rep.coverage >= 0.55);
  for (long long flat = 0; flat < rep.total; ++flat) {
    const long long k = flat % 6;
    if (k == 2 || k == 3) {
      const bool failed = std::binary_search(rep.failure_indices.begin(),
                                             rep.failure_indices.end(), flat);
      CHECK(failed);
    }
  }
}

TEST_CASE("leaf disk is attracting and nearly fully covered for the deformed map") {
  const SurgeredSystem& sys = bv_system();
  StableDisk disk = leaf_stable_disk(sys, 0.3);
  CHECK(disk.chart.radius == 0.45);

  // finite-horizon attraction check backing the large disk; the horizon stays
  // moderate because transverse rounding is amplified by the expanding rate
  DiskAttraction att = stable_disk_attraction(sys.map, disk, 12, 64);
  CHECK(att.max_plane_drift <= 1e-6);
  CHECK(att.max_final_distance <= 0.3 * std::pow(kRho, 12) * 3.0);

  GridSpec grid{5};
  CoverageOptions opt;
  opt.threads = 4;
  CoverageReport rep = phc_plus_coverage(sys.map, disk, grid, 12, 16.0, opt);
  CHECK(rep.coverage >= 0.9);

  StableDisk core = core_stable_disk(sys);
  CHECK(core.radius == sys.deformation.linear_core_radius);
  CHECK(core.radius < disk.radius);
}

TEST_CASE("failure sets shrink along increasing horizons") {
  StableDisk disk = origin_eigen_disk(0.35);
  GridSpec grid{4};
  CoverageOptions opt;
  opt.threads = 4;

  BadSetSequence seq =
      bad_set_estimate(bv_map(), disk, grid, {0, 10, 12}, 20.0, opt);
  REQUIRE(seq.reports.size() == 3);
  CHECK(seq.reports[0].horizon == 0);
  CHECK(seq.reports[2].horizon == 12);

  // a hairline seed segment cannot reach the disk from generic cell centers
  CHECK(seq.reports[0].coverage == 0.0);
  CHECK(seq.reports[0].failure_indices.size() == 64);
  CHECK(seq.reports[1].failure_indices.size() <= 12);
  CHECK(seq.reports[2].failure_indices.size() <= 3);
  CHECK(seq.reports[2].failure_indices.size() <=
        seq.reports[1].failure_indices.size());
  CHECK(seq.escaped_points <= 2);
  CHECK(seq.refinement_warning == (seq.escaped_points > 0));
}

TEST_CASE("coverage failures are window artifacts, not leaf properties") {
  StableDisk disk = origin_eigen_disk(0.35);
  GridSpec grid{3};
  CoverageOptions opt;
  opt.threads = 4;
  CoverageReport rep = phc_plus_coverage(bv_map(), disk, grid, 12, 3.0, opt);
  REQUIRE(!rep.failure_indices.empty());

  const TorusPoint xf = rep.failures[0];
  UnstableCurve cf = grow_unstable_curve(bv_map(), xf, 3.0, 12, opt.h_max);
  CHECK(!transverse_hit(cf, disk, opt.angle_min).hit());

  // re-rooting the window at other samples of the same curve finds the disk
  int hits = 0;
  const std::size_t stride = cf.points.size() / 7;
  for (int k = 1; k <= 6; ++k) {
    const TorusPoint y = cf.points[k * stride];
    UnstableCurve cy = grow_unstable_curve(bv_map(), y, 3.0, 12, opt.h_max);
    if (transverse_hit(cy, disk, opt.angle_min).hit()) ++hits;
  }
  CHECK(hits >= 2);
}

TEST_CASE("box occupancy of a single curve matches a line's footprint") {
  CoverageOptions opt;
  BoxCoverage b20 =
      unstable_box_coverage(bv_map(), TorusPoint{0.0, 0.0, 0.0}, 20.0, 12, opt);
  BoxCoverage b10 =
      unstable_box_coverage(bv_map(), TorusPoint{0.0, 0.0, 0.0}, 10.0, 12, opt);
  CHECK(b20.total == 32LL * 32 * 32);
  CHECK(b20.proxy);
  CHECK(b20.fraction > 0.015);
  CHECK(b20.fraction < 0.05);
  CHECK(b20.fraction >= b10.fraction + 0.005);
}

TEST_CASE("coverage runs are thread-count independent") {
  const SurgeredSystem& sys = bv_system();
  StableDisk disk = leaf_stable_disk(sys, 0.3);
  GridSpec grid{4};
  CoverageOptions one;
  one.threads = 1;
  CoverageOptions three;
  three.threads = 3;
  CoverageReport a = phc_plus_coverage(sys.map, disk, grid, 10, 8.0, one);
  CoverageReport b = phc_plus_coverage(sys.map, disk, grid, 10, 8.0, three);
  CHECK(a.coverage == b.coverage);
  CHECK(a.hits == b.hits);
  CHECK(a.failure_indices == b.failure_indices);
}

TEST_CASE("degenerate budgets and grids are rejected") {
  StableDisk disk = origin_eigen_disk(0.35);
  const TorusPoint x{0.3, 0.7, 0.2};

  CHECK(expect_errc([&] { grow_unstable_curve(bv_map(), x, 5e-7, 3, 0.01); }) ==
        errc::invalid_input);
  CHECK(expect_errc([&] { grow_unstable_curve(bv_map(), x, 1.0, -1, 0.01); }) ==
        errc::invalid_input);
  CHECK(expect_errc([&] { grow_unstable_curve(bv_map(), x, 1.0, 3, 0.0); }) ==
        errc::invalid_input);
  CHECK(expect_errc([&] { grow_unstable_curve(bv_map(), x, 1.0, 3, 0.2); }) ==
        errc::invalid_input);
  CHECK(expect_errc([&] { grow_unstable_curve(bv_map(), x, 10.0, 3, 1e-6); }) ==
        errc::invalid_input);
  GrowthOptions shallow;
  shallow.max_split_depth = 3;
  CHECK(expect_errc([&] { grow_unstable_curve(bv_map(), x, 1.0, 3, 0.01, shallow); }) ==
        errc::invalid_input);

  UnstableCurve c = grow_unstable_curve(bv_map(), x, 0.1, 2, 0.01);
  CHECK(expect_errc([&] { transverse_hit(c, disk, 0.0); }) == errc::invalid_input);

  StableDisk bad = disk;
  bad.radius = 0.0;
  CHECK(expect_errc([&] { bad.validate(); }) == errc::invalid_input);
  bad.radius = 0.46;
  CHECK(expect_errc([&] { bad.validate(); }) == errc::invalid_input);

  CHECK(expect_errc([&] { GridSpec{0}.validate(); }) == errc::invalid_input);
  CHECK(expect_errc([&] { GridSpec{2000}.validate(); }) == errc::invalid_input);

  GridSpec grid{2};
  CoverageOptions opt;
  CHECK(expect_errc([&] { phc_plus_coverage(bv_map(), disk, grid, -1, 1.0, opt); }) ==
        errc::invalid_input);
  CHECK(expect_errc([&] {
          bad_set_estimate(bv_map(), disk, grid, {}, 1.0, opt);
        }) == errc::invalid_input);
  CHECK(expect_errc([&] {
          bad_set_estimate(bv_map(), disk, grid, {3, 3}, 1.0, opt);
        }) == errc::invalid_input);
  CHECK(expect_errc([&] {
          bad_set_estimate(bv_map(), disk, grid, {5, 2}, 1.0, opt);
        }) == errc::invalid_input);
  CHECK(expect_errc([&] {
          bad_set_estimate(bv_map(), disk, grid, {-1, 2}, 1.0, opt);
        }) == errc::invalid_input);

  const SurgeredSystem& sys = bv_system();
  CHECK(expect_errc([&] { leaf_stable_disk(sys, 0.0); }) == errc::invalid_input);
  CHECK(expect_errc([&] { leaf_stable_disk(sys, 0.5); }) == errc::invalid_input);
  StableDisk leaf = leaf_stable_disk(sys, 0.3);
  CHECK(expect_errc([&] { stable_disk_attraction(sys.map, leaf, 0, 8); }) ==
        errc::invalid_input);
  CHECK(expect_errc([&] { stable_disk_attraction(sys.map, leaf, 5, 0); }) ==
        errc::invalid_input);

  CoverageOptions coarse;
  coarse.h_max = 0.05;  // cannot resolve the 1/32 box partition
  CHECK(expect_errc([&] {
          unstable_box_coverage(bv_map(), x, 2.0, 8, coarse);
        }) == errc::invalid_input);
}

TEST_CASE("refinement beyond the split depth is reported, not looped") {
  SmoothMap a2 = compose(bv_map(), bv_map());
  SmoothMap a4 = compose(a2, a2);
  GrowthOptions opt;
  opt.max_split_depth = 5;
  CHECK(expect_errc([&] { grow_unstable_curve(a4, TorusPoint{0.3, 0.7, 0.2}, 2.0, 3,
                                              0.02, opt); }) ==
        errc::integration_failure);
}

TEST_SUITE_END();
