// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "dlt/convex.hpp"
#include "dlt/net.hpp"
#include "dlt/train.hpp"

namespace dlt {

struct InverseTrainConfig {
  long long pretrain_steps = 20000;
  long long refine_steps = 40000;
  double mix_lambda = 0.5;  // weight of the (min1)-style term in refinement
  double lr = 1e-3;
  long long lr_halve_every = 20000;  // exponential decay, refine phase only
  int pretrain_batch = 0;            // 0 -> min(128 * d, 4096)
  int refine_batch = 0;
  std::uint64_t seed = 7;
  int log_interval = 100;

  nlohmann::json to_json() const;
  static InverseTrainConfig from_json(const nlohmann::json& j);
};

struct InverseReport {
  std::vector<std::pair<long long, double>> loss_history;
  long long steps = 0;
  double seconds = 0.0;
  double final_loss = 0.0;
  double mean_omitted_fraction = 0.0;  // refinement only
};

VectorFn model_vec_fn(const NetworkModel& model);

// Phase 1: minimize mean ||h(grad f(x)) - x||^2 over fresh primal batches.
InverseReport pretrain_inverse(NetworkModel& h, const ConvexFunction& f,
                               Sampler primal_sampler,
                               const InverseTrainConfig& cfg);

// Phase 2: on dual samples y ~ nu, minimize
//   lambda * ||h(grad f(x_hat)) - x_hat||^2 + (1-lambda) * ||grad f(h(y)) - y||^2
// with x_hat = h(y); samples mapped outside the domain are omitted.
// Throws after 10 consecutive fully-omitted batches.
InverseReport refine_inverse(NetworkModel& h, const ConvexFunction& f,
                             Sampler dual_sampler,
                             const InverseTrainConfig& cfg);

// (2 / (s sqrt(d))) * mean ||grad f(h(y)) - y||_2 over retained test points.
// Throws if more than half of the test points are excluded.
double inverse_quality(const VectorFn& h, const ConvexFunction& f,
                       const std::vector<Vec>& dual_test, double side_length);

// Maps dual samples through h, keeps points inside the domain, splits into
// disjoint train/test sets. Throws if fewer than half are retained.
std::pair<std::vector<Vec>, std::vector<Vec>> generate_matched_sets(
    const VectorFn& h, const ConvexFunction& f, Sampler& dual_sampler,
    std::size_t n_train, std::size_t n_test);

}  // namespace dlt
