// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "dlt/rng.hpp"
#include "json.hpp"

namespace dlt {

using Vec = std::vector<double>;

double dot(const Vec& a, const Vec& b);
double norm2(const Vec& a);

enum class DomainKind { Box, PositiveOrthant, HalfSpace, FullSpace };

// Open convex set. Membership tests are exact: strict inequalities with no
// epsilon; samplers are responsible for strict interiority.
struct Domain {
  DomainKind kind = DomainKind::FullSpace;
  int dim = 0;
  Vec lo, hi;      // box
  Vec normal;      // half-space {x : <normal, x> > offset}
  double offset = 0.0;

  bool contains(const Vec& x) const;

  static Domain box(Vec lo, Vec hi);
  static Domain positive_orthant(int dim);
  static Domain half_space(Vec normal, double offset);
  static Domain full_space(int dim);
};

// Differentiable convex test function with exact gradient. The conjugate
// closure is only populated when a closed form is known. hessian_vec is
// optional; hessian_apply falls back to finite differences of the gradient.
struct ConvexFunction {
  std::string name;
  int dim = 0;
  std::function<double(const Vec&)> value;
  std::function<Vec(const Vec&)> gradient;
  Domain domain;
  std::function<double(const Vec&)> conjugate;  // empty when unknown
  std::optional<Domain> dual_region_hint;
  std::function<Vec(const Vec&, const Vec&)> hessian_vec;  // H(x) v

  bool has_conjugate() const { return static_cast<bool>(conjugate); }
};

// H(x) v, via the closed form when present, otherwise by central differences
// of the gradient.
Vec hessian_apply(const ConvexFunction& f, const Vec& x, const Vec& v);

enum class SamplerKind {
  UniformBox,
  StandardNormal,
  HalfNormal,
  LogUniform,
  GaussianMixture
};

// Stateful point source. Identical (kind, dim, seed) reproduces identical
// streams. One sampler per thread of execution; never shared.
class Sampler {
 public:
  Sampler(SamplerKind kind, int dim, std::uint64_t seed);

  static Sampler uniform_box(Vec lo, Vec hi, std::uint64_t seed);
  static Sampler standard_normal(int dim, std::uint64_t seed);
  static Sampler half_normal(int dim, std::uint64_t seed);
  static Sampler log_uniform(int dim, double lo_exp, double hi_exp,
                             std::uint64_t seed);
  static Sampler gaussian_mixture(std::vector<Vec> centers, double cov_scale,
                                  std::uint64_t seed);

  Vec next();
  void reset();

  SamplerKind kind() const { return kind_; }
  int dim() const { return dim_; }
  std::uint64_t seed() const { return seed_; }

 private:
  SamplerKind kind_;
  int dim_;
  std::uint64_t seed_;
  Rng rng_;
  Vec lo_, hi_;
  double lo_exp_ = 0.0, hi_exp_ = 0.0;
  std::vector<Vec> centers_;
  double cov_scale_ = 1.0;
};

// Catalog constructors. Known names: quadratic, neg-log, neg-entropy,
// quadratic-over-linear, quadratic-spd, exp-minus-linear, coupled-softplus,
// icnn-target. params carries per-function knobs (condition_number, seed, ...).
ConvexFunction make_builtin(const std::string& name, int dim,
                            const nlohmann::json& params = {});

ConvexFunction make_spd_quadratic(int dim, double condition_number,
                                  std::uint64_t seed);

// Wraps a quickly pre-trained ICNN as the target convex function (defined in
// icnn_target.cpp next to the network stack).
ConvexFunction make_icnn_target(int dim, const nlohmann::json& params);

// Default primal sampler matching each catalog function's benchmark domain.
Sampler default_primal_sampler(const ConvexFunction& f, std::uint64_t seed);

// Draws n points, verifying compatibility with f.domain and membership of
// every emitted point.
std::vector<Vec> sample_primal(const ConvexFunction& f, Sampler& sampler,
                               std::size_t n);

}  // namespace dlt
