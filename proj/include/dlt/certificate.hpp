// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "dlt/convex.hpp"
#include "dlt/train.hpp"

namespace dlt {

// Monte-Carlo estimate of ||g - f*||^2_{L2(D, nu)} with CLT confidence
// interval, computable without knowing f*.
struct ErrorCertificate {
  double mean_sq_error = 0.0;
  double sample_variance = 0.0;
  std::size_t n = 0;
  double ci_lo = 0.0, ci_hi = 0.0;
  double level = 0.95;

  double rmse() const;
  nlohmann::json to_json() const;
};

double normal_quantile_two_sided(double level);  // small table: 0.9/0.95/0.99

ErrorCertificate certify(const ScalarFn& g, const ConvexFunction& f,
                         Sampler& sampler, std::size_t n, double level = 0.95);

// Images of n sampled primal points under grad f (push-forward of mu).
std::vector<Vec> push_forward_sample(const ConvexFunction& f, Sampler& sampler,
                                     std::size_t n);

}  // namespace dlt
