// SPDX-License-Identifier: Apache-2.0
#include "dlt/train.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace dlt {

nlohmann::json TrainConfig::to_json() const {
  const char* kind = loss_kind == LossKind::Implicit ? "implicit"
                     : loss_kind == LossKind::Direct ? "direct"
                                                     : "proxy";
  return {{"batch_size", batch_size},
          {"max_steps", max_steps},
          {"early_stop_threshold", early_stop_threshold},
          {"lr", lr},
          {"seed", seed},
          {"loss_kind", kind},
          {"log_interval", log_interval}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
  TrainConfig c;
  c.batch_size = j.value("batch_size", 0);
  c.max_steps = j.value("max_steps", 50000LL);
  c.early_stop_threshold = j.value("early_stop_threshold", 1e-6);
  c.lr = j.value("lr", 1e-3);
  c.seed = j.value("seed", 7u);
  c.log_interval = j.value("log_interval", 100);
  std::string kind = j.value("loss_kind", "implicit");
  if (kind == "implicit")
    c.loss_kind = LossKind::Implicit;
  else if (kind == "direct")
    c.loss_kind = LossKind::Direct;
  else if (kind == "proxy")
    c.loss_kind = LossKind::Proxy;
  else
    throw std::invalid_argument("unknown loss_kind: " + kind);
  if (c.early_stop_threshold <= 0.0)
    throw std::invalid_argument("early_stop_threshold must be > 0");
  return c;
}

nlohmann::json TrainReport::to_json() const {
  const char* reason = stop_reason == StopReason::Threshold ? "threshold"
                       : stop_reason == StopReason::MaxSteps ? "max-steps"
                                                             : "divergence";
  return {{"steps", steps},
          {"seconds", seconds},
          {"stop_reason", reason},
          {"final_loss", final_loss}};
}

namespace {

// Implicit residual target: <x, grad f(x)> - f(x), the exact value of
// f*(grad f(x)).
double implicit_target(const ConvexFunction& f, const Vec& x, Vec* y_out) {
  Vec y = f.gradient(x);
  for (double yi : y)
    if (!std::isfinite(yi))
      throw std::runtime_error("non-finite gradient of f at a sample");
  double t = dot(x, y) - f.value(x);
  if (y_out) *y_out = std::move(y);
  return t;
}

}  // namespace

double implicit_loss(const ScalarFn& g, const ConvexFunction& f,
                     const std::vector<Vec>& xs) {
  if (xs.empty()) throw std::invalid_argument("implicit_loss: empty batch");
  double acc = 0.0;
  for (const Vec& x : xs) {
    if (!f.domain.contains(x))
      throw std::invalid_argument("implicit_loss: point outside domain");
    Vec y;
    double t = implicit_target(f, x, &y);
    double r = g(y) - t;
    acc += r * r;
  }
  return acc / xs.size();
}

double direct_loss(const ScalarFn& g, const std::vector<Vec>& ys,
                   const ScalarFn& f_star) {
  if (!f_star) throw std::invalid_argument("direct_loss: no exact conjugate");
  if (ys.empty()) throw std::invalid_argument("direct_loss: empty batch");
  double acc = 0.0;
  for (const Vec& y : ys) {
    double r = g(y) - f_star(y);
    acc += r * r;
  }
  return acc / ys.size();
}

double proxy_loss(const ScalarFn& g, const VectorFn& h,
                  const ConvexFunction& f, const std::vector<Vec>& ys) {
  if (ys.empty()) throw std::invalid_argument("proxy_loss: empty batch");
  double acc = 0.0;
  std::size_t kept = 0;
  for (const Vec& y : ys) {
    Vec xh = h(y);
    if (!f.domain.contains(xh)) continue;
    double target = dot(xh, y) - f.value(xh);
    double r = g(y) - target;
    acc += r * r;
    ++kept;
  }
  if (kept == 0) throw std::runtime_error("proxy_loss: entire batch dropped");
  return acc / kept;
}

TrainReport train(const ConvexFunction& f, Sampler sampler,
                  const ArchSpec& spec, const TrainConfig& cfg,
                  const VectorFn& proxy_h) {
  if (cfg.loss_kind == LossKind::Direct && !f.has_conjugate())
    throw std::invalid_argument("direct training needs a closed-form conjugate");
  if (cfg.loss_kind == LossKind::Proxy && !proxy_h)
    throw std::invalid_argument("proxy training needs an inverse map");

  const int batch = cfg.effective_batch(f.dim);
  TrainReport report;
  report.model = init_network(spec, cfg.seed);
  AdamState opt = AdamState::create(report.model, cfg.lr);

  auto t0 = std::chrono::steady_clock::now();
  report.stop_reason = StopReason::MaxSteps;
  for (long long step = 1; step <= cfg.max_steps; ++step) {
    // Fresh streaming batch: dual points and exact regression targets.
    Matrix ys(batch, f.dim);
    std::vector<double> targets;
    targets.reserve(batch);
    int kept = 0;
    for (int b = 0; b < batch; ++b) {
      Vec p = sampler.next();
      double target;
      Vec y;
      if (cfg.loss_kind == LossKind::Implicit) {
        target = implicit_target(f, p, &y);
      } else if (cfg.loss_kind == LossKind::Direct) {
        y = std::move(p);
        target = f.conjugate(y);
      } else {
        Vec xh = proxy_h(p);
        if (!f.domain.contains(xh)) continue;  // dropped
        y = std::move(p);
        target = dot(xh, y) - f.value(xh);
      }
      std::copy(y.begin(), y.end(), ys.row(kept));
      targets.push_back(target);
      ++kept;
    }
    if (kept == 0) continue;
    ys.rows = kept;
    ys.a.resize(std::size_t(kept) * f.dim);

    double loss = 0.0;
    std::vector<double> grad;
    bool finite = true;
    try {
      grad = grad_params_mse(report.model, ys, targets, &loss);
      adam_step(report.model, opt, grad);
    } catch (const std::runtime_error&) {
      finite = false;
    }
    if (!finite || !std::isfinite(loss)) {
      report.stop_reason = StopReason::Divergence;
      report.steps = step;
      report.final_loss = loss;
      break;
    }
    if (step % cfg.log_interval == 0 || step == 1)
      report.loss_history.emplace_back(step, loss);
    report.final_loss = loss;
    report.steps = step;
    if (loss < cfg.early_stop_threshold) {
      report.stop_reason = StopReason::Threshold;
      break;
    }
  }
  report.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return report;
}

double evaluate_rmse(const ScalarFn& g, const ConvexFunction& f,
                     const std::vector<Vec>& test_xs) {
  if (test_xs.empty()) throw std::invalid_argument("evaluate_rmse: empty set");
  return std::sqrt(implicit_loss(g, f, test_xs));
}

void write_loss_history_csv(const TrainReport& report,
                            const std::string& path) {
  std::ofstream os(path);
  os.precision(17);
  os << "step,loss\n";
  for (const auto& [step, loss] : report.loss_history)
    os << step << "," << loss << "\n";
}

}  // namespace dlt
