// SPDX-License-Identifier: Apache-2.0
#include "dlt/entropic.hpp"

#include <cmath>
#include <stdexcept>

namespace dlt {

namespace {

constexpr int kPrimes[] = {2,  3,  5,  7,  11, 13, 17, 19, 23, 29,
                           31, 37, 41, 43, 47, 53, 59, 61, 67, 71};

double radical_inverse(std::uint64_t i, int base) {
  double inv = 1.0 / base, f = inv, r = 0.0;
  while (i > 0) {
    r += f * static_cast<double>(i % base);
    i /= base;
    f *= inv;
  }
  return r;
}

}  // namespace

std::vector<Vec> low_discrepancy_points(int dim, std::size_t n) {
  if (dim < 1) throw std::invalid_argument("low_discrepancy_points: dim >= 1");
  if (dim > static_cast<int>(sizeof(kPrimes) / sizeof(kPrimes[0])))
    throw std::invalid_argument("low_discrepancy_points: dim too large");
  std::vector<Vec> pts(n, Vec(dim));
  for (std::size_t i = 0; i < n; ++i)
    for (int a = 0; a < dim; ++a)
      pts[i][a] = radical_inverse(i + 1, kPrimes[a]);
  return pts;
}

double log_sum_exp(const std::vector<double>& v) {
  if (v.empty()) throw std::invalid_argument("log_sum_exp: empty input");
  double m = v[0];
  for (double a : v) m = std::max(m, a);
  // Fixed-size chunks with a serial combine keep the reduction order
  // independent of the thread count.
  const std::size_t chunk = 4096;
  const std::size_t n_chunks = (v.size() + chunk - 1) / chunk;
  std::vector<double> partial(n_chunks, 0.0);
#pragma omp parallel for schedule(static)
  for (long long c = 0; c < static_cast<long long>(n_chunks); ++c) {
    std::size_t lo = static_cast<std::size_t>(c) * chunk;
    std::size_t hi = std::min(lo + chunk, v.size());
    double s = 0.0;
    for (std::size_t i = lo; i < hi; ++i) s += std::exp(v[i] - m);
    partial[static_cast<std::size_t>(c)] = s;
  }
  double total = 0.0;
  for (double p : partial) total += p;
  return m + std::log(total);
}

double softmax_conjugate(const ConvexFunction& f, const Vec& box_lo,
                         const Vec& box_hi, const Vec& y,
                         const EntropicConfig& cfg) {
  const int d = f.dim;
  if (cfg.epsilon <= 0.0) throw std::invalid_argument("epsilon must be > 0");
  if (cfg.n_samples < 1) throw std::invalid_argument("n_samples must be >= 1");
  double log_vol = 0.0;
  for (int a = 0; a < d; ++a) {
    if (!(box_lo[a] < box_hi[a]))
      throw std::invalid_argument("softmax_conjugate: degenerate box");
    log_vol += std::log(box_hi[a] - box_lo[a]);
  }
  // The box must sit inside the domain; probe its corners and center.
  {
    Vec mid(d);
    for (int a = 0; a < d; ++a) mid[a] = 0.5 * (box_lo[a] + box_hi[a]);
    if (!f.domain.contains(mid))
      throw std::invalid_argument("softmax_conjugate: box outside domain");
  }

  std::vector<double> exponents(cfg.n_samples);
  if (cfg.sequence == SequenceKind::LowDiscrepancy) {
    std::vector<Vec> u = low_discrepancy_points(d, cfg.n_samples);
    for (std::size_t i = 0; i < cfg.n_samples; ++i) {
      Vec x(d);
      for (int a = 0; a < d; ++a)
        x[a] = box_lo[a] + u[i][a] * (box_hi[a] - box_lo[a]);
      double fx = f.value(x);
      if (!std::isfinite(fx))
        throw std::runtime_error("softmax_conjugate: non-finite f at sample");
      exponents[i] = (dot(x, y) - fx) / cfg.epsilon;
    }
  } else {
    Rng rng = Rng(cfg.seed).split(0xe27);
    for (std::size_t i = 0; i < cfg.n_samples; ++i) {
      Vec x(d);
      for (int a = 0; a < d; ++a) x[a] = rng.uniform(box_lo[a], box_hi[a]);
      double fx = f.value(x);
      if (!std::isfinite(fx))
        throw std::runtime_error("softmax_conjugate: non-finite f at sample");
      exponents[i] = (dot(x, y) - fx) / cfg.epsilon;
    }
  }
  double lse = log_sum_exp(exponents);
  return cfg.epsilon *
         (lse - std::log(static_cast<double>(cfg.n_samples)) + log_vol);
}

}  // namespace dlt
