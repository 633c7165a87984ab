// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "dlt/convex.hpp"
#include "dlt/net.hpp"

namespace dlt {

enum class LossKind { Implicit, Direct, Proxy };

struct TrainConfig {
  int batch_size = 0;  // 0 -> min(128 * d, 4096)
  long long max_steps = 50000;
  double early_stop_threshold = 1e-6;
  double lr = 1e-3;
  std::uint64_t seed = 7;
  LossKind loss_kind = LossKind::Implicit;
  int log_interval = 100;

  int effective_batch(int dim) const {
    if (batch_size > 0) return batch_size;
    return std::min(128 * dim, 4096);
  }

  nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json& j);
};

enum class StopReason { Threshold, MaxSteps, Divergence };

struct TrainReport {
  NetworkModel model;
  std::vector<std::pair<long long, double>> loss_history;
  long long steps = 0;
  double seconds = 0.0;
  StopReason stop_reason = StopReason::MaxSteps;
  double final_loss = 0.0;

  nlohmann::json to_json() const;  // without the model itself
};

using ScalarFn = std::function<double(const Vec&)>;
using VectorFn = std::function<Vec(const Vec&)>;

// Mean over the batch of (g(grad f(x)) + f(x) - <x, grad f(x)>)^2.
double implicit_loss(const ScalarFn& g, const ConvexFunction& f,
                     const std::vector<Vec>& xs);

// Mean squared error of g against the closed-form conjugate on dual points.
double direct_loss(const ScalarFn& g, const std::vector<Vec>& ys,
                   const ScalarFn& f_star);

// Proxy-target loss; dual points whose image under h leaves the domain are
// dropped. Throws if the whole batch is dropped.
double proxy_loss(const ScalarFn& g, const VectorFn& h,
                  const ConvexFunction& f, const std::vector<Vec>& ys);

// Streaming trainer: fresh batch per step, Adam, early stop / divergence
// detection. For Direct the sampler is a dual sampler and f needs a
// closed-form conjugate; for Proxy it is a dual sampler plus the inverse map.
TrainReport train(const ConvexFunction& f, Sampler sampler,
                  const ArchSpec& spec, const TrainConfig& cfg,
                  const VectorFn& proxy_h = nullptr);

// sqrt of the mean squared implicit residual; by the Fenchel-Young identity
// this is the RMSE against f* under the push-forward measure.
double evaluate_rmse(const ScalarFn& g, const ConvexFunction& f,
                     const std::vector<Vec>& test_xs);

void write_loss_history_csv(const TrainReport& report, const std::string& path);

}  // namespace dlt
