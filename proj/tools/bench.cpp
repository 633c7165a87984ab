// SPDX-License-Identifier: Apache-2.0
//
// Compares the serial reference implementations against the OpenMP-parallel
// kernels and verifies that both produce identical results.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "dlt/convex.hpp"
#include "dlt/entropic.hpp"
#include "dlt/grid.hpp"

using namespace dlt;

namespace {

double now_seconds() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

template <typename F>
double timed(F&& fn, int reps) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    double t0 = now_seconds();
    fn();
    best = std::min(best, now_seconds() - t0);
  }
  return best;
}

void bench_brute_force(int n, int d, int reps) {
  ConvexFunction f = make_builtin("quadratic", d);
  CartesianGrid grid = CartesianGrid::uniform(-2.0, 2.0, n, d);
  GridField field = GridField::tabulate(grid, f.value);

  GridField serial_out, parallel_out;
  double ts = timed([&] { serial_out = brute_force_conjugate(field, grid, false); },
                    reps);
  double tp = timed([&] { parallel_out = brute_force_conjugate(field, grid, true); },
                    reps);
  double max_diff = 0.0;
  for (std::size_t i = 0; i < serial_out.values.size(); ++i)
    max_diff = std::max(max_diff, std::fabs(serial_out.values[i] -
                                            parallel_out.values[i]));
  std::printf("brute_force_conjugate  N=%d d=%d  serial %.4fs  parallel %.4fs"
              "  speedup %.2fx  max|diff| %.3g\n",
              n, d, ts, tp, ts / tp, max_diff);
}

void bench_log_sum_exp(std::size_t n, int reps) {
  std::vector<double> v(n);
  Rng r(3);
  for (auto& x : v) x = r.normal() * 50.0;
  double out = 0.0;
  double t = timed([&] { out = log_sum_exp(v); }, reps);
  std::printf("log_sum_exp            n=%zu  %.4fs  (value %.6f)\n", n, t, out);
}

}  // namespace

int main(int argc, char** argv) {
  int n = argc > 1 ? std::atoi(argv[1]) : 40;
  int reps = argc > 2 ? std::atoi(argv[2]) : 3;
#ifdef _OPENMP
  std::printf("OpenMP enabled, max threads %d\n", omp_get_max_threads());
#else
  std::printf("OpenMP not available; parallel path runs serially\n");
#endif
  bench_brute_force(n, 2, reps);
  bench_brute_force(8, 3, reps);
  bench_log_sum_exp(std::size_t(1) << 22, reps);
  return 0;
}
