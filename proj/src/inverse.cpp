// SPDX-License-Identifier: Apache-2.0
#include "dlt/inverse.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

namespace dlt {

nlohmann::json InverseTrainConfig::to_json() const {
  return {{"pretrain_steps", pretrain_steps},
          {"refine_steps", refine_steps},
          {"mix_lambda", mix_lambda},
          {"lr", lr},
          {"lr_halve_every", lr_halve_every},
          {"pretrain_batch", pretrain_batch},
          {"refine_batch", refine_batch},
          {"seed", seed}};
}

InverseTrainConfig InverseTrainConfig::from_json(const nlohmann::json& j) {
  InverseTrainConfig c;
  c.pretrain_steps = j.value("pretrain_steps", 20000LL);
  c.refine_steps = j.value("refine_steps", 40000LL);
  c.mix_lambda = j.value("mix_lambda", 0.5);
  c.lr = j.value("lr", 1e-3);
  c.lr_halve_every = j.value("lr_halve_every", 20000LL);
  c.pretrain_batch = j.value("pretrain_batch", 0);
  c.refine_batch = j.value("refine_batch", 0);
  c.seed = j.value("seed", 7u);
  if (c.mix_lambda < 0.0 || c.mix_lambda > 1.0)
    throw std::invalid_argument("mix_lambda must be in [0, 1]");
  return c;
}

VectorFn model_vec_fn(const NetworkModel& model) {
  return [model](const Vec& x) { return forward_vec(model, x); };
}

namespace {

int effective_batch(int configured, int dim) {
  return configured > 0 ? configured : std::min(128 * dim, 4096);
}

// MSE gradient for a vector-output model: loss = mean_i ||out_i - T_i||^2.
double vector_mse_step(NetworkModel& h, AdamState& opt, const Matrix& in,
                       const Matrix& targets) {
  ForwardCache cache;
  Matrix out = forward_cached(h, in, cache);
  Matrix d_out(out.rows, out.cols);
  double loss = 0.0;
  for (int r = 0; r < out.rows; ++r)
    for (int c = 0; c < out.cols; ++c) {
      double res = out.at(r, c) - targets.at(r, c);
      loss += res * res;
      d_out.at(r, c) = 2.0 * res / out.rows;
    }
  loss /= out.rows;
  std::vector<double> grad(h.params.size(), 0.0);
  backward(h, in, cache, d_out, &grad, nullptr);
  adam_step(h, opt, grad);
  return loss;
}

}  // namespace

InverseReport pretrain_inverse(NetworkModel& h, const ConvexFunction& f,
                               Sampler primal_sampler,
                               const InverseTrainConfig& cfg) {
  if (h.spec.output_dim != f.dim)
    throw std::invalid_argument("pretrain_inverse: output_dim != f.dim");
  const int batch = effective_batch(cfg.pretrain_batch, f.dim);
  AdamState opt = AdamState::create(h, cfg.lr);
  InverseReport report;
  auto t0 = std::chrono::steady_clock::now();
  for (long long step = 1; step <= cfg.pretrain_steps; ++step) {
    Matrix ys(batch, f.dim), xs(batch, f.dim);
    for (int b = 0; b < batch; ++b) {
      Vec x = primal_sampler.next();
      Vec y = f.gradient(x);
      std::copy(y.begin(), y.end(), ys.row(b));
      std::copy(x.begin(), x.end(), xs.row(b));
    }
    double loss = vector_mse_step(h, opt, ys, xs);
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

InverseReport refine_inverse(NetworkModel& h, const ConvexFunction& f,
                             Sampler dual_sampler,
                             const InverseTrainConfig& cfg) {
  const int d = f.dim;
  const int batch = effective_batch(cfg.refine_batch, d);
  AdamState opt = AdamState::create(h, cfg.lr);
  InverseReport report;
  int consecutive_empty = 0;
  double omitted_sum = 0.0;
  auto t0 = std::chrono::steady_clock::now();

  for (long long step = 1; step <= cfg.refine_steps; ++step) {
    if (cfg.lr_halve_every > 0)
      opt.lr = cfg.lr * std::pow(0.5, static_cast<double>((step - 1) /
                                                          cfg.lr_halve_every));
    Matrix ys(batch, d);
    for (int b = 0; b < batch; ++b) {
      Vec y = dual_sampler.next();
      std::copy(y.begin(), y.end(), ys.row(b));
    }
    ForwardCache cache1;
    Matrix xhat = forward_cached(h, ys, cache1);

    // Omit rows mapped outside the domain.
    std::vector<int> keep;
    keep.reserve(batch);
    for (int b = 0; b < batch; ++b) {
      Vec xb(xhat.row(b), xhat.row(b) + d);
      if (f.domain.contains(xb)) keep.push_back(b);
    }
    omitted_sum += 1.0 - static_cast<double>(keep.size()) / batch;
    if (keep.empty()) {
      if (++consecutive_empty >= 10)
        throw std::runtime_error(
            "refine_inverse: all points omitted for 10 consecutive steps");
      continue;
    }
    consecutive_empty = 0;
    const int nk = static_cast<int>(keep.size());

    Matrix ys_k(nk, d);
    Matrix d_out1(batch, d);  // upstream for the first forward (zero on drops)
    Matrix mapped(nk, d);     // grad f(xhat), dual points for the min1 term
    Matrix xhat_k(nk, d);
    double loss2 = 0.0;
    for (int r = 0; r < nk; ++r) {
      int b = keep[r];
      Vec xb(xhat.row(b), xhat.row(b) + d);
      Vec gf = f.gradient(xb);
      Vec r2(d);
      for (int c = 0; c < d; ++c) {
        r2[c] = gf[c] - ys.at(b, c);
        loss2 += r2[c] * r2[c];
        mapped.at(r, c) = gf[c];
        xhat_k.at(r, c) = xhat.at(b, c);
        ys_k.at(r, c) = ys.at(b, c);
      }
      // d/d xhat of ||grad f(xhat) - y||^2 = 2 H_f(xhat) (grad f(xhat) - y)
      Vec hv = hessian_apply(f, xb, r2);
      for (int c = 0; c < d; ++c)
        d_out1.at(b, c) = (1.0 - cfg.mix_lambda) * 2.0 * hv[c] / nk;
    }
    loss2 /= nk;

    std::vector<double> grad(h.params.size(), 0.0);
    backward(h, ys, cache1, d_out1, &grad, nullptr);

    // (min1) on the mapped points, x_hat treated as data.
    ForwardCache cache2;
    Matrix x2 = forward_cached(h, mapped, cache2);
    Matrix d_out2(nk, d);
    double loss1 = 0.0;
    for (int r = 0; r < nk; ++r)
      for (int c = 0; c < d; ++c) {
        double res = x2.at(r, c) - xhat_k.at(r, c);
        loss1 += res * res;
        d_out2.at(r, c) = cfg.mix_lambda * 2.0 * res / nk;
      }
    loss1 /= nk;
    backward(h, mapped, cache2, d_out2, &grad, nullptr);

    adam_step(h, opt, grad);
    double loss = cfg.mix_lambda * loss1 + (1.0 - cfg.mix_lambda) * loss2;
    report.final_loss = loss2;  // the (min2) term is the stopping metric
    report.steps = step;
    if (step % cfg.log_interval == 0 || step == 1)
      report.loss_history.emplace_back(step, loss);
  }
  report.mean_omitted_fraction =
      report.steps > 0 ? omitted_sum / report.steps : 0.0;
  report.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return report;
}

double inverse_quality(const VectorFn& h, const ConvexFunction& f,
                       const std::vector<Vec>& dual_test, double side_length) {
  if (dual_test.empty())
    throw std::invalid_argument("inverse_quality: empty test set");
  std::size_t kept = 0;
  double acc = 0.0;
  for (const Vec& y : dual_test) {
    Vec x = h(y);
    if (!f.domain.contains(x)) continue;
    Vec gf = f.gradient(x);
    double s = 0.0;
    for (std::size_t c = 0; c < y.size(); ++c)
      s += (gf[c] - y[c]) * (gf[c] - y[c]);
    acc += std::sqrt(s);
    ++kept;
  }
  if (kept * 2 < dual_test.size())
    throw std::runtime_error("inverse_quality: more than 50% excluded");
  double mean = acc / static_cast<double>(kept);
  return 2.0 / (side_length * std::sqrt(static_cast<double>(f.dim))) * mean;
}

std::pair<std::vector<Vec>, std::vector<Vec>> generate_matched_sets(
    const VectorFn& h, const ConvexFunction& f, Sampler& dual_sampler,
    std::size_t n_train, std::size_t n_test) {
  const std::size_t total = n_train + n_test;
  std::vector<Vec> retained;
  retained.reserve(total);
  for (std::size_t i = 0; i < total; ++i) {
    Vec x = h(dual_sampler.next());
    if (f.domain.contains(x)) retained.push_back(std::move(x));
  }
  if (retained.size() * 2 < total)
    throw std::runtime_error("generate_matched_sets: retained count too low");
  std::size_t train_n = retained.size() * n_train / total;
  std::vector<Vec> train(retained.begin(), retained.begin() + train_n);
  std::vector<Vec> test(retained.begin() + train_n, retained.end());
  return {std::move(train), std::move(test)};
}

}  // namespace dlt
