// SPDX-License-Identifier: Apache-2.0
#include "dlt/certificate.hpp"

#include <cmath>
#include <stdexcept>

namespace dlt {

double ErrorCertificate::rmse() const {
  return std::sqrt(std::max(0.0, mean_sq_error));
}

nlohmann::json ErrorCertificate::to_json() const {
  return {{"mean_sq_error", mean_sq_error}, {"rmse", rmse()},
          {"variance", sample_variance},    {"n", n},
          {"ci_lo", ci_lo},                 {"ci_hi", ci_hi},
          {"level", level}};
}

double normal_quantile_two_sided(double level) {
  if (level == 0.9) return 1.6448536269514722;
  if (level == 0.95) return 1.959963984540054;
  if (level == 0.99) return 2.5758293035489004;
  throw std::invalid_argument("supported confidence levels: 0.9, 0.95, 0.99");
}

namespace {

// Kahan-compensated accumulator; certificates near zero must not be
// dominated by accumulation error.
struct Kahan {
  double sum = 0.0, c = 0.0;
  void add(double x) {
    double y = x - c;
    double t = sum + y;
    c = (t - sum) - y;
    sum = t;
  }
};

}  // namespace

ErrorCertificate certify(const ScalarFn& g, const ConvexFunction& f,
                         Sampler& sampler, std::size_t n, double level) {
  if (n < 2) throw std::invalid_argument("certify: n must be >= 2");
  double z = normal_quantile_two_sided(level);

  std::vector<double> sq(n);
  for (std::size_t i = 0; i < n; ++i) {
    Vec x = sampler.next();
    if (!f.domain.contains(x))
      throw std::runtime_error("certify: sampled point outside domain");
    Vec y = f.gradient(x);
    double r = g(y) + f.value(x) - dot(x, y);
    if (!std::isfinite(r))
      throw std::runtime_error("certify: non-finite residual");
    sq[i] = r * r;
  }
  Kahan mean_acc;
  for (double s : sq) mean_acc.add(s);
  double mean = mean_acc.sum / static_cast<double>(n);
  Kahan var_acc;
  for (double s : sq) var_acc.add((s - mean) * (s - mean));
  double variance = var_acc.sum / static_cast<double>(n - 1);

  ErrorCertificate cert;
  cert.mean_sq_error = mean;
  cert.sample_variance = variance;
  cert.n = n;
  cert.level = level;
  double half = z * std::sqrt(variance / static_cast<double>(n));
  cert.ci_lo = mean - half;
  cert.ci_hi = mean + half;
  return cert;
}

std::vector<Vec> push_forward_sample(const ConvexFunction& f, Sampler& sampler,
                                     std::size_t n) {
  std::vector<Vec> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(f.gradient(sampler.next()));
  return out;
}

}  // namespace dlt
