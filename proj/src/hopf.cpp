// SPDX-License-Identifier: Apache-2.0
#include "dlt/hopf.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace dlt {

HopfProblem HopfProblem::quadratic_quadratic(int dim, double box_a,
                                             double horizon) {
  HopfProblem p;
  p.dim = dim;
  p.g = make_builtin("quadratic", dim);
  p.g_star = [](const Vec& y) { return 0.5 * dot(y, y); };
  p.g_star_grad = [](const Vec& y) { return y; };
  p.hamiltonian = [](const Vec& y) { return 0.5 * dot(y, y); };
  p.hamiltonian_grad = [](const Vec& y) { return y; };
  p.box_a = box_a;
  p.horizon = horizon;
  p.quadratic_case = true;
  return p;
}

double analytic_quadratic_solution(const Vec& x, double t) {
  if (t < 0.0) throw std::invalid_argument("t must be >= 0");
  return 0.5 * dot(x, x) / (1.0 + t);
}

HopfReferenceResult hopf_reference(const HopfProblem& prob, const Vec& x,
                                   double t, int max_iters) {
  auto phi = [&](const Vec& p) {
    return prob.g_star(p) + t * prob.hamiltonian(p) - dot(x, p);
  };
  auto phi_grad = [&](const Vec& p) {
    Vec g = prob.g_star_grad(p);
    Vec h = prob.hamiltonian_grad(p);
    for (int i = 0; i < prob.dim; ++i) g[i] += t * h[i] - x[i];
    return g;
  };

  // Multi-start: origin, x, x/(1+t), and two jittered copies.
  std::vector<Vec> starts;
  starts.push_back(Vec(prob.dim, 0.0));
  starts.push_back(x);
  { Vec s(x); for (double& v : s) v /= (1.0 + t); starts.push_back(s); }
  Rng rng = Rng(17).split(0x40f);
  for (int k = 0; k < 2; ++k) {
    Vec s(x);
    for (double& v : s) v = v / (1.0 + t) + 0.3 * rng.normal();
    starts.push_back(s);
  }

  HopfReferenceResult best;
  best.value = -std::numeric_limits<double>::infinity();
  best.grad_norm = std::numeric_limits<double>::infinity();
  for (const Vec& s0 : starts) {
    Vec p = s0;
    double fp = phi(p);
    bool converged = false;
    double gnorm = 0.0;
    for (int it = 0; it < max_iters; ++it) {
      Vec g = phi_grad(p);
      gnorm = norm2(g);
      if (gnorm <= 1e-8) {
        converged = true;
        break;
      }
      // Backtracking line search (Armijo).
      double step = 1.0;
      bool moved = false;
      for (int ls = 0; ls < 60; ++ls) {
        Vec q(p);
        for (int i = 0; i < prob.dim; ++i) q[i] -= step * g[i];
        double fq = phi(q);
        if (std::isfinite(fq) && fq <= fp - 1e-4 * step * gnorm * gnorm) {
          p = std::move(q);
          fp = fq;
          moved = true;
          break;
        }
        step *= 0.5;
      }
      if (!moved) break;
    }
    if (-fp > best.value) {
      best.value = -fp;
      best.grad_norm = gnorm;
    }
    best.converged = best.converged || converged;
  }
  return best;
}

std::vector<TimeSample> sample_time_pairs(const HopfProblem& prob,
                                          std::size_t n, Rng& rng,
                                          const NetworkModel* inverse_net,
                                          double t0_fraction) {
  if (!prob.quadratic_case && inverse_net == nullptr)
    throw std::invalid_argument(
        "sample_time_pairs: non-quadratic problems need an inverse network");
  std::vector<TimeSample> out;
  out.reserve(n);
  const std::size_t n_t0 =
      static_cast<std::size_t>(t0_fraction * static_cast<double>(n));
  for (std::size_t i = 0; i < n; ++i) {
    TimeSample s;
    s.x.resize(prob.dim);
    for (int a = 0; a < prob.dim; ++a)
      s.x[a] = rng.uniform(-prob.box_a, prob.box_a);
    s.t = i < n_t0 ? 0.0 : rng.uniform(0.0, prob.horizon);
    if (prob.quadratic_case) {
      s.p.resize(prob.dim);
      for (int a = 0; a < prob.dim; ++a) s.p[a] = s.x[a] / (1.0 + s.t);
    } else {
      Vec in(s.x);
      in.push_back(s.t);
      s.p = forward_vec(*inverse_net, in);
    }
    out.push_back(std::move(s));
  }
  return out;
}

TrainReport train_time_dlt(const HopfProblem& prob, const ArchSpec& spec,
                           const TimeDltConfig& cfg,
                           const NetworkModel* inverse_net) {
  if (spec.input_dim != prob.dim + 1)
    throw std::invalid_argument("train_time_dlt: input_dim must be d + 1");
  TrainReport report;
  report.model = init_network(spec, cfg.seed);
  AdamState opt = AdamState::create(report.model, cfg.lr);
  Rng rng = Rng(cfg.seed).split(0x7d17);

  auto t0 = std::chrono::steady_clock::now();
  report.stop_reason = StopReason::MaxSteps;
  for (long long step = 1; step <= cfg.steps; ++step) {
    std::vector<TimeSample> batch =
        sample_time_pairs(prob, cfg.batch_size, rng, inverse_net);
    Matrix in(cfg.batch_size, prob.dim + 1);
    std::vector<double> targets(cfg.batch_size);
    for (int b = 0; b < cfg.batch_size; ++b) {
      const TimeSample& s = batch[b];
      for (int a = 0; a < prob.dim; ++a) in.at(b, a) = s.x[a];
      in.at(b, prob.dim) = s.t;
      targets[b] = dot(s.x, s.p) - prob.g_star(s.p) -
                   s.t * prob.hamiltonian(s.p);
    }
    double loss = 0.0;
    std::vector<double> grad;
    try {
      grad = grad_params_mse(report.model, in, targets, &loss);
      adam_step(report.model, opt, grad);
    } catch (const std::runtime_error&) {
      report.stop_reason = StopReason::Divergence;
      report.steps = step;
      break;
    }
    report.final_loss = loss;
    report.steps = step;
    if (step % cfg.log_interval == 0 || step == 1)
      report.loss_history.emplace_back(step, loss);
  }
  report.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return report;
}

SpaceTimeFn model_space_time_fn(const NetworkModel& model) {
  SpaceTimeFn fn;
  fn.value = [model](const Vec& x, double t) {
    Vec in(x);
    in.push_back(t);
    return forward_scalar(model, in);
  };
  fn.grad_x = [model](const Vec& x, double t) {
    Vec in(x);
    in.push_back(t);
    Vec g = grad_input(model, in);
    g.pop_back();  // drop the time component
    return g;
  };
  return fn;
}

HjMetrics hj_metrics(const SpaceTimeFn& u, const HopfProblem& prob,
                     const std::vector<Vec>& eval_points,
                     const std::vector<double>& t_slices) {
  if (eval_points.empty() || t_slices.empty())
    throw std::invalid_argument("hj_metrics: empty evaluation set");
  HjMetrics m;
  const double dt = 1e-4;
  double sq_l2 = 0.0, sq_pde = 0.0, sq_ic = 0.0;
  std::size_t n_ref = 0, n_fail = 0;

  for (double t : t_slices) {
    for (const Vec& x : eval_points) {
      double ref;
      if (prob.quadratic_case) {
        ref = analytic_quadratic_solution(x, t);
      } else {
        HopfReferenceResult r = hopf_reference(prob, x, t);
        ++n_ref;
        if (!r.converged) ++n_fail;
        ref = r.value;
      }
      double val = u.value(x, t);
      sq_l2 += (val - ref) * (val - ref);

      double tm = std::max(0.0, t - dt);
      double ut = (u.value(x, t + dt) - u.value(x, tm)) / (t + dt - tm);
      Vec gx = u.grad_x(x, t);
      double res = ut + prob.hamiltonian(gx);
      sq_pde += res * res;
    }
  }
  for (const Vec& x : eval_points) {
    double r = u.value(x, 0.0) - prob.g.value(x);
    sq_ic += r * r;
  }
  const double n_xt = static_cast<double>(eval_points.size() * t_slices.size());
  m.l2_error = std::sqrt(sq_l2 / n_xt);
  m.pde_residual = std::sqrt(sq_pde / n_xt);
  m.ic_error = std::sqrt(sq_ic / static_cast<double>(eval_points.size()));
  m.reference_nonconverged_fraction =
      n_ref > 0 ? static_cast<double>(n_fail) / static_cast<double>(n_ref) : 0.0;
  m.flagged = m.reference_nonconverged_fraction > 0.05;
  return m;
}

}  // namespace dlt
