// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "dlt/hopf.hpp"
#include "doctest.h"

using namespace dlt;

TEST_CASE("analytic quadratic solution values") {
  CHECK(analytic_quadratic_solution(Vec{1.0, 1.0}, 1.0) ==
        doctest::Approx(0.5));
  CHECK(analytic_quadratic_solution(Vec{0.7, -0.3}, 0.0) ==
        doctest::Approx(0.5 * (0.49 + 0.09)));
  CHECK(analytic_quadratic_solution(Vec{0.0, 0.0}, 1.7) == doctest::Approx(0.0));
  CHECK_THROWS(analytic_quadratic_solution(Vec{1.0}, -0.1));
}

TEST_CASE("hopf reference matches the analytic solution at (1,1), t=1") {
  HopfProblem prob = HopfProblem::quadratic_quadratic(2);
  HopfReferenceResult r = hopf_reference(prob, Vec{1.0, 1.0}, 1.0);
  CHECK(r.converged);
  CHECK(r.value == doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("hopf reference at t=0 recovers the initial condition") {
  HopfProblem prob = HopfProblem::quadratic_quadratic(2);
  Vec x{0.8, -1.1};
  HopfReferenceResult r = hopf_reference(prob, x, 0.0);
  CHECK(r.converged);
  CHECK(r.value == doctest::Approx(prob.g.value(x)).epsilon(1e-6));
}

TEST_CASE("hopf reference on a 5x5x3 lattice, d=2") {
  HopfProblem prob = HopfProblem::quadratic_quadratic(2);
  for (double t : {0.0, 1.0, 2.0})
    for (int i = 0; i < 5; ++i)
      for (int j = 0; j < 5; ++j) {
        Vec x{-2.0 + i, -2.0 + j};
        HopfReferenceResult r = hopf_reference(prob, x, t);
        CHECK(r.converged);
        CHECK(std::fabs(r.value - analytic_quadratic_solution(x, t)) <= 1e-6);
      }
}

TEST_CASE("u(0,t) = 0 and strict decrease in t for x != 0") {
  Vec zero{0.0, 0.0};
  for (double t : {0.0, 0.5, 1.0, 2.0})
    CHECK(analytic_quadratic_solution(zero, t) == doctest::Approx(0.0));
  Vec x{1.0, 0.5};
  double prev = 1e300;
  for (double t : {0.0, 0.5, 1.0, 2.0}) {
    double u = analytic_quadratic_solution(x, t);
    CHECK(u < prev);
    prev = u;
  }
}

TEST_CASE("time pairs: closed-form gradient and target identity") {
  HopfProblem prob = HopfProblem::quadratic_quadratic(2);
  Rng rng(17);
  auto triplets = sample_time_pairs(prob, 200, rng);
  REQUIRE(triplets.size() == 200);
  int t_zero = 0;
  for (const auto& s : triplets) {
    CHECK(s.t >= 0.0);
    CHECK(s.t <= prob.horizon);
    if (s.t == 0.0) ++t_zero;
    for (double v : s.x) {
      CHECK(v >= -prob.box_a);
      CHECK(v <= prob.box_a);
    }
    // p = x / (1 + t).
    for (std::size_t i = 0; i < s.x.size(); ++i)
      CHECK(s.p[i] == doctest::Approx(s.x[i] / (1.0 + s.t)).epsilon(1e-12));
    // Hopf target identity: <x,p> - g*(p) - tH(p) = u(x,t).
    double target = dot(s.x, s.p) - prob.g_star(s.p) -
                    s.t * prob.hamiltonian(s.p);
    CHECK(target ==
          doctest::Approx(analytic_quadratic_solution(s.x, s.t))
              .epsilon(1e-12));
  }
  // Fixed 20% of the batch pinned at t = 0.
  CHECK(t_zero == 40);
}

TEST_CASE("sample_time_pairs at t=0 gives p = grad g(x)") {
  HopfProblem prob = HopfProblem::quadratic_quadratic(2);
  Rng rng(3);
  auto triplets = sample_time_pairs(prob, 50, rng);
  for (const auto& s : triplets) {
    if (s.t != 0.0) continue;
    Vec g = prob.g.gradient(s.x);
    CHECK(s.p[0] == doctest::Approx(g[0]).epsilon(1e-12));
    CHECK(s.p[1] == doctest::Approx(g[1]).epsilon(1e-12));
  }
}

TEST_CASE("non-quadratic sampling without an inverse net throws") {
  HopfProblem prob = HopfProblem::quadratic_quadratic(2);
  prob.quadratic_case = false;
  Rng rng(5);
  CHECK_THROWS(sample_time_pairs(prob, 10, rng));
}

TEST_CASE("analytic solution wrapped as a model scores near-zero metrics") {
  HopfProblem prob = HopfProblem::quadratic_quadratic(2);
  SpaceTimeFn exact;
  exact.value = [](const Vec& x, double t) {
    return analytic_quadratic_solution(x, t);
  };
  exact.grad_x = [](const Vec& x, double t) {
    Vec g(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) g[i] = x[i] / (1.0 + t);
    return g;
  };
  std::vector<Vec> pts;
  Rng r(2);
  for (int k = 0; k < 40; ++k)
    pts.push_back(Vec{r.uniform(-2.0, 2.0), r.uniform(-2.0, 2.0)});
  HjMetrics m = hj_metrics(exact, prob, pts, {0.5, 1.0});
  CHECK(m.l2_error <= 1e-6);
  CHECK(m.pde_residual <= 1e-6);
  CHECK(m.ic_error <= 1e-6);
  CHECK_FALSE(m.flagged);
}

TEST_CASE("time finite difference agrees with the analytic time derivative") {
  // d/dt u = -sum x^2 / (2 (1+t)^2).
  Vec x{1.2, -0.4};
  for (double t : {0.3, 1.0, 1.7}) {
    double h = 1e-4;
    double fd = (analytic_quadratic_solution(x, t + h) -
                 analytic_quadratic_solution(x, t - h)) /
                (2 * h);
    double exact = -(x[0] * x[0] + x[1] * x[1]) / (2 * (1 + t) * (1 + t));
    CHECK(fd == doctest::Approx(exact).epsilon(1e-6));
  }
}

TEST_CASE("constant-zero model: closed-form ic_error in 1-D") {
  // E[(x^2/2)^2] for x ~ U(-2,2): E[x^4]/4 = (16/5)/4 = 0.8, so the metric
  // is sqrt(0.8) = 0.8944...
  HopfProblem prob = HopfProblem::quadratic_quadratic(1);
  SpaceTimeFn zero;
  zero.value = [](const Vec&, double) { return 0.0; };
  zero.grad_x = [](const Vec& x, double) { return Vec(x.size(), 0.0); };
  // Dense deterministic evaluation points make the quadrature accurate.
  std::vector<Vec> pts;
  int n = 4000;
  for (int i = 0; i < n; ++i)
    pts.push_back(Vec{-2.0 + 4.0 * (i + 0.5) / n});
  HjMetrics m = hj_metrics(zero, prob, pts, {1.0});
  CHECK(m.ic_error == doctest::Approx(std::sqrt(0.8)).epsilon(1e-3));
}

TEST_CASE("short time-DLT run is deterministic and reduces the loss") {
  HopfProblem prob = HopfProblem::quadratic_quadratic(2);
  ArchSpec spec = ArchSpec::make(Family::ResNet, 3, 16);
  TimeDltConfig cfg;
  cfg.steps = 400;
  cfg.batch_size = 64;
  cfg.seed = 4;
  TrainReport a = train_time_dlt(prob, spec, cfg);
  TrainReport b = train_time_dlt(prob, spec, cfg);
  CHECK(a.loss_history == b.loss_history);
  REQUIRE(!a.loss_history.empty());
  CHECK(a.final_loss < a.loss_history.front().second);
  CHECK_THROWS(train_time_dlt(prob, ArchSpec::make(Family::ResNet, 2, 16), cfg));
}
