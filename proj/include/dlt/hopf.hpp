// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "dlt/convex.hpp"
#include "dlt/net.hpp"
#include "dlt/train.hpp"

namespace dlt {

// Hamilton-Jacobi Cauchy problem solved through the Hopf formula
// u(x, t) = (g* + tH)*(x) = sup_p { <x, p> - g*(p) - tH(p) }.
struct HopfProblem {
  int dim = 0;
  ConvexFunction g;            // initial condition
  ScalarFn g_star;             // closed-form conjugate of g
  VectorFn g_star_grad;
  ScalarFn hamiltonian;
  VectorFn hamiltonian_grad;
  double box_a = 2.0;          // space box (-a, a)^d
  double horizon = 2.0;        // time horizon T
  bool quadratic_case = false; // enables closed-form gradient sampling

  static HopfProblem quadratic_quadratic(int dim, double box_a = 2.0,
                                         double horizon = 2.0);
};

// u(x,t) = sum x_i^2 / (2 (1 + t)) for the quadratic/quadratic problem.
double analytic_quadratic_solution(const Vec& x, double t);

struct HopfReferenceResult {
  double value = 0.0;
  bool converged = false;
  double grad_norm = 0.0;
};

// Numerical Hopf value by minimizing phi(p) = g*(p) + tH(p) - <x, p> with
// multi-start gradient descent and backtracking line search; returns -min phi.
HopfReferenceResult hopf_reference(const HopfProblem& prob, const Vec& x,
                                   double t, int max_iters = 500);

struct TimeSample {
  Vec x;
  Vec p;  // gradient of the true solution at (x, t)
  double t;
};

// (x, p, t) triplets: x uniform in the box, t uniform on [0, T] with a fixed
// fraction pinned at t = 0; p from the closed form x/(1+t) in the quadratic
// case, otherwise through the supplied time-parameterized inverse network.
std::vector<TimeSample> sample_time_pairs(const HopfProblem& prob,
                                          std::size_t n, Rng& rng,
                                          const NetworkModel* inverse_net = nullptr,
                                          double t0_fraction = 0.2);

struct TimeDltConfig {
  long long steps = 20000;
  int batch_size = 256;
  double lr = 1e-3;
  std::uint64_t seed = 7;
  int log_interval = 100;
};

// Trains F(x, t) ~ <x,p> - g*(p) - tH(p) on fresh triplet batches.
TrainReport train_time_dlt(const HopfProblem& prob, const ArchSpec& spec,
                           const TimeDltConfig& cfg,
                           const NetworkModel* inverse_net = nullptr);

// Space-time candidate solution: value plus spatial gradient.
struct SpaceTimeFn {
  std::function<double(const Vec& x, double t)> value;
  std::function<Vec(const Vec& x, double t)> grad_x;
};

SpaceTimeFn model_space_time_fn(const NetworkModel& model);

struct HjMetrics {
  double l2_error = 0.0;
  double pde_residual = 0.0;
  double ic_error = 0.0;
  double reference_nonconverged_fraction = 0.0;
  bool flagged = false;  // > 5% of reference solves failed to converge
};

// L2 error against the analytic (quadratic) or reference solution at the
// given time slices; PDE residual with central-difference d/dt (step 1e-4);
// initial-condition error at t = 0.
HjMetrics hj_metrics(const SpaceTimeFn& u, const HopfProblem& prob,
                     const std::vector<Vec>& eval_points,
                     const std::vector<double>& t_slices);

}  // namespace dlt
