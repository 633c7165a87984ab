// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include "dlt/convex.hpp"

namespace dlt {

enum class SequenceKind { LowDiscrepancy, PseudoRandom };

struct EntropicConfig {
  double epsilon = 0.01;
  std::size_t n_samples = 4096;
  SequenceKind sequence = SequenceKind::LowDiscrepancy;
  std::uint64_t seed = 7;
};

// Halton points in the open unit cube, coprime prime bases per axis.
// Index starts at 1, so the all-zeros corner is never emitted.
std::vector<Vec> low_discrepancy_points(int dim, std::size_t n);

// log(sum exp(v_i)) with max-subtraction; deterministic chunked reduction.
double log_sum_exp(const std::vector<double>& v);

// Entropic (softmax) conjugate
//   f*_eps(y) = eps * [ lse_i((<x_i,y> - f(x_i))/eps) - log M + log vol(box) ]
// with x_i mapped into the box from the chosen sequence.
double softmax_conjugate(const ConvexFunction& f, const Vec& box_lo,
                         const Vec& box_hi, const Vec& y,
                         const EntropicConfig& cfg);

}  // namespace dlt
