// scratch timing probe, not part of the build
#include <chrono>
#include <cstdio>

#include "ergotorus/construction.hpp"
#include "ergotorus/manifolds.hpp"
#include "ergotorus/maps.hpp"

using namespace ergotorus;

static IntegerMatrixSpec bv_spec() {
  IntegerMatrixSpec s;
  const long long m[3][3] = {{1, -1, 1}, {-1, 2, -2}, {1, -2, 3}};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) s.entries[i][j] = m[i][j];
  return s;
}

int main(int argc, char** argv) {
  const int grid = argc > 1 ? std::atoi(argv[1]) : 8;
  const int N = argc > 2 ? std::atoi(argv[2]) : 30;
  const double L = argc > 3 ? std::atof(argv[3]) : 50.0;
  const double h = argc > 4 ? std::atof(argv[4]) : 0.04;

  auto t0 = std::chrono::steady_clock::now();
  SurgeryPlan plan;
  plan.point = TorusPoint{0, 0, 0};
  SurgeredSystem sys = deform_at_point(linear_anosov(bv_spec()), plan);
  auto t1 = std::chrono::steady_clock::now();
  std::printf("construct: %.2f s\n", std::chrono::duration<double>(t1 - t0).count());

  StableDisk disk = leaf_stable_disk(sys, 0.3);
  CoverageOptions opt;
  opt.h_max = h;
  opt.threads = 1;
  CoverageReport rep = phc_plus_coverage(sys.map, disk, GridSpec{grid}, N, L, opt);
  auto t2 = std::chrono::steady_clock::now();
  std::printf("coverage grid=%d N=%d L=%.0f h=%.3f: cov=%.6f misses=%lld wall=%.2f s\n",
              grid, N, L, h, rep.coverage, rep.total - rep.hits,
              std::chrono::duration<double>(t2 - t1).count());
  return 0;
}
