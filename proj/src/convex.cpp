// SPDX-License-Identifier: Apache-2.0
#include "dlt/convex.hpp"

#include <cmath>
#include <stdexcept>

namespace dlt {

double dot(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(const Vec& a) { return std::sqrt(dot(a, a)); }

bool Domain::contains(const Vec& x) const {
  if (static_cast<int>(x.size()) != dim) return false;
  switch (kind) {
    case DomainKind::Box:
      for (int i = 0; i < dim; ++i)
        if (!(x[i] > lo[i] && x[i] < hi[i])) return false;
      return true;
    case DomainKind::PositiveOrthant:
      for (int i = 0; i < dim; ++i)
        if (!(x[i] > 0.0)) return false;
      return true;
    case DomainKind::HalfSpace: {
      double s = 0.0;
      for (int i = 0; i < dim; ++i) s += normal[i] * x[i];
      return s > offset;
    }
    case DomainKind::FullSpace:
      return true;
  }
  return false;
}

Domain Domain::box(Vec lo, Vec hi) {
  if (lo.size() != hi.size()) throw std::invalid_argument("box: size mismatch");
  for (std::size_t i = 0; i < lo.size(); ++i)
    if (!(lo[i] < hi[i])) throw std::invalid_argument("box: lo[i] must be < hi[i]");
  Domain d;
  d.kind = DomainKind::Box;
  d.dim = static_cast<int>(lo.size());
  d.lo = std::move(lo);
  d.hi = std::move(hi);
  return d;
}

Domain Domain::positive_orthant(int dim) {
  Domain d;
  d.kind = DomainKind::PositiveOrthant;
  d.dim = dim;
  return d;
}

Domain Domain::half_space(Vec normal, double offset) {
  Domain d;
  d.kind = DomainKind::HalfSpace;
  d.dim = static_cast<int>(normal.size());
  d.normal = std::move(normal);
  d.offset = offset;
  return d;
}

Domain Domain::full_space(int dim) {
  Domain d;
  d.kind = DomainKind::FullSpace;
  d.dim = dim;
  return d;
}

Vec hessian_apply(const ConvexFunction& f, const Vec& x, const Vec& v) {
  if (f.hessian_vec) return f.hessian_vec(x, v);
  // Central difference of the gradient along v.
  double vn = norm2(v);
  if (vn == 0.0) return Vec(x.size(), 0.0);
  double h = 1e-6;
  Vec xp = x, xm = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    xp[i] += h * v[i] / vn;
    xm[i] -= h * v[i] / vn;
  }
  Vec gp = f.gradient(xp), gm = f.gradient(xm);
  Vec out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i)
    out[i] = (gp[i] - gm[i]) / (2.0 * h) * vn;
  return out;
}

Sampler::Sampler(SamplerKind kind, int dim, std::uint64_t seed)
    : kind_(kind), dim_(dim), seed_(seed), rng_(Rng(seed).split(0x5a3d)) {}

Sampler Sampler::uniform_box(Vec lo, Vec hi, std::uint64_t seed) {
  Sampler s(SamplerKind::UniformBox, static_cast<int>(lo.size()), seed);
  s.lo_ = std::move(lo);
  s.hi_ = std::move(hi);
  return s;
}

Sampler Sampler::standard_normal(int dim, std::uint64_t seed) {
  return Sampler(SamplerKind::StandardNormal, dim, seed);
}

Sampler Sampler::half_normal(int dim, std::uint64_t seed) {
  return Sampler(SamplerKind::HalfNormal, dim, seed);
}

Sampler Sampler::log_uniform(int dim, double lo_exp, double hi_exp,
                             std::uint64_t seed) {
  Sampler s(SamplerKind::LogUniform, dim, seed);
  s.lo_exp_ = lo_exp;
  s.hi_exp_ = hi_exp;
  return s;
}

Sampler Sampler::gaussian_mixture(std::vector<Vec> centers, double cov_scale,
                                  std::uint64_t seed) {
  if (centers.empty())
    throw std::invalid_argument("gaussian_mixture: no centers");
  Sampler s(SamplerKind::GaussianMixture,
            static_cast<int>(centers.front().size()), seed);
  s.centers_ = std::move(centers);
  s.cov_scale_ = cov_scale;
  return s;
}

void Sampler::reset() { rng_ = Rng(seed_).split(0x5a3d); }

Vec Sampler::next() {
  Vec x(dim_);
  switch (kind_) {
    case SamplerKind::UniformBox:
      for (int i = 0; i < dim_; ++i) x[i] = rng_.uniform(lo_[i], hi_[i]);
      break;
    case SamplerKind::StandardNormal:
      for (int i = 0; i < dim_; ++i) x[i] = rng_.normal();
      break;
    case SamplerKind::HalfNormal:
      for (int i = 0; i < dim_; ++i) x[i] = std::fabs(rng_.normal());
      break;
    case SamplerKind::LogUniform:
      for (int i = 0; i < dim_; ++i)
        x[i] = std::exp(rng_.uniform(lo_exp_, hi_exp_));
      break;
    case SamplerKind::GaussianMixture: {
      const Vec& c = centers_[rng_.below(centers_.size())];
      for (int i = 0; i < dim_; ++i) x[i] = c[i] + cov_scale_ * rng_.normal();
      break;
    }
  }
  return x;
}

namespace {

ConvexFunction quadratic_fn(int dim) {
  ConvexFunction f;
  f.name = "quadratic";
  f.dim = dim;
  f.domain = Domain::full_space(dim);
  f.value = [](const Vec& x) { return 0.5 * dot(x, x); };
  f.gradient = [](const Vec& x) { return x; };
  f.conjugate = [](const Vec& y) { return 0.5 * dot(y, y); };
  f.dual_region_hint = Domain::full_space(dim);
  f.hessian_vec = [](const Vec&, const Vec& v) { return v; };
  return f;
}

ConvexFunction neg_log_fn(int dim) {
  ConvexFunction f;
  f.name = "neg-log";
  f.dim = dim;
  f.domain = Domain::positive_orthant(dim);
  f.value = [](const Vec& x) {
    double s = 0.0;
    for (double xi : x) s -= std::log(xi);
    return s;
  };
  f.gradient = [](const Vec& x) {
    Vec g(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) g[i] = -1.0 / x[i];
    return g;
  };
  f.conjugate = [dim](const Vec& y) {
    double s = -static_cast<double>(dim);
    for (double yi : y) s -= std::log(-yi);
    return s;
  };
  f.dual_region_hint = Domain::box(Vec(dim, -10.0), Vec(dim, -0.1));
  f.hessian_vec = [](const Vec& x, const Vec& v) {
    Vec out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = v[i] / (x[i] * x[i]);
    return out;
  };
  return f;
}

ConvexFunction neg_entropy_fn(int dim) {
  ConvexFunction f;
  f.name = "neg-entropy";
  f.dim = dim;
  f.domain = Domain::positive_orthant(dim);
  f.value = [](const Vec& x) {
    double s = 0.0;
    for (double xi : x) s += xi * std::log(xi);
    return s;
  };
  f.gradient = [](const Vec& x) {
    Vec g(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) g[i] = std::log(x[i]) + 1.0;
    return g;
  };
  f.conjugate = [](const Vec& y) {
    double s = 0.0;
    for (double yi : y) s += std::exp(yi - 1.0);
    return s;
  };
  f.dual_region_hint =
      Domain::box(Vec(dim, std::log(0.1) + 1.0), Vec(dim, std::log(10.0) + 1.0));
  f.hessian_vec = [](const Vec& x, const Vec& v) {
    Vec out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = v[i] / x[i];
    return out;
  };
  return f;
}

ConvexFunction quadratic_over_linear_fn(int dim) {
  ConvexFunction f;
  f.name = "quadratic-over-linear";
  f.dim = dim;
  f.domain = Domain::half_space(Vec(dim, 1.0), 0.0);
  f.value = [](const Vec& x) {
    double num = 1.0, den = 1.0;
    for (double xi : x) {
      num += xi * xi;
      den += xi;
    }
    return num / den;
  };
  f.gradient = [](const Vec& x) {
    double den = 1.0;
    for (double xi : x) den += xi;
    Vec g(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      double cross = 0.0;
      for (std::size_t j = 0; j < x.size(); ++j)
        if (j != i) cross += x[j] * (2.0 * x[i] - x[j]);
      g[i] = (x[i] * x[i] + 2.0 * x[i] + cross - 1.0) / (den * den);
    }
    return g;
  };
  return f;
}

ConvexFunction exp_minus_linear_fn(int dim, std::uint64_t seed) {
  Rng rng = Rng(seed).split(0xab12);
  Vec a(dim), b(dim);
  for (int i = 0; i < dim; ++i) a[i] = rng.normal();
  for (int i = 0; i < dim; ++i) b[i] = rng.normal();
  double na = norm2(a), nb = norm2(b);
  for (int i = 0; i < dim; ++i) {
    a[i] /= na;
    b[i] /= nb;
  }
  ConvexFunction f;
  f.name = "exp-minus-linear";
  f.dim = dim;
  f.domain = Domain::full_space(dim);
  f.value = [a, b](const Vec& x) { return std::exp(dot(a, x)) - dot(b, x); };
  f.gradient = [a, b](const Vec& x) {
    double e = std::exp(dot(a, x));
    Vec g(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) g[i] = e * a[i] - b[i];
    return g;
  };
  f.hessian_vec = [a](const Vec& x, const Vec& v) {
    double e = std::exp(dot(a, x));
    double av = dot(a, v);
    Vec out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = e * av * a[i];
    return out;
  };
  return f;
}

double sigmoid(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  double e = std::exp(t);
  return e / (1.0 + e);
}

ConvexFunction coupled_softplus_fn(int dim) {
  if (dim < 2)
    throw std::invalid_argument("coupled-softplus needs dim >= 2");
  ConvexFunction f;
  f.name = "coupled-softplus";
  f.dim = dim;
  f.domain = Domain::full_space(dim);
  f.value = [](const Vec& x) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i)
      for (std::size_t j = i + 1; j < x.size(); ++j) {
        double t = x[i] + x[j];
        s += t > 30.0 ? t : std::log1p(std::exp(t));
      }
    return s;
  };
  f.gradient = [](const Vec& x) {
    Vec g(x.size(), 0.0);
    for (std::size_t i = 0; i < x.size(); ++i)
      for (std::size_t j = 0; j < x.size(); ++j)
        if (j != i) g[i] += sigmoid(x[i] + x[j]);
    return g;
  };
  f.hessian_vec = [](const Vec& x, const Vec& v) {
    Vec out(x.size(), 0.0);
    for (std::size_t i = 0; i < x.size(); ++i)
      for (std::size_t j = 0; j < x.size(); ++j)
        if (j != i) {
          double s = sigmoid(x[i] + x[j]);
          double d = s * (1.0 - s);
          out[i] += d * (v[i] + v[j]);
        }
    return out;
  };
  return f;
}

// Dense symmetric solve via Cholesky (Q is SPD by construction).
struct Cholesky {
  int n;
  std::vector<double> l;  // lower triangle, row-major n x n
  explicit Cholesky(const std::vector<double>& q, int n_) : n(n_), l(q) {
    for (int j = 0; j < n; ++j) {
      for (int k = 0; k < j; ++k)
        for (int i = j; i < n; ++i) l[i * n + j] -= l[i * n + k] * l[j * n + k];
      double d = std::sqrt(l[j * n + j]);
      for (int i = j; i < n; ++i) l[i * n + j] /= d;
    }
  }
  Vec solve(const Vec& b) const {
    Vec y(b);
    for (int i = 0; i < n; ++i) {
      for (int k = 0; k < i; ++k) y[i] -= l[i * n + k] * y[k];
      y[i] /= l[i * n + i];
    }
    for (int i = n - 1; i >= 0; --i) {
      for (int k = i + 1; k < n; ++k) y[i] -= l[k * n + i] * y[k];
      y[i] /= l[i * n + i];
    }
    return y;
  }
};

}  // namespace

ConvexFunction make_spd_quadratic(int dim, double condition_number,
                                  std::uint64_t seed) {
  if (condition_number < 1.0)
    throw std::invalid_argument("condition_number must be >= 1");
  // Eigenvalues log-spaced in [1, kappa], normalized so that the largest is 1.
  Vec lam(dim);
  for (int i = 0; i < dim; ++i) {
    double t = dim == 1 ? 1.0 : static_cast<double>(i) / (dim - 1);
    lam[i] = std::pow(condition_number, t) / condition_number;
  }
  // Orthogonal R from Gram-Schmidt of a Gaussian matrix.
  Rng rng = Rng(seed).split(0x51d);
  std::vector<Vec> r(dim, Vec(dim));
  for (int i = 0; i < dim; ++i) {
    for (int j = 0; j < dim; ++j) r[i][j] = rng.normal();
    for (int k = 0; k < i; ++k) {
      double p = dot(r[i], r[k]);
      for (int j = 0; j < dim; ++j) r[i][j] -= p * r[k][j];
    }
    double nrm = norm2(r[i]);
    for (int j = 0; j < dim; ++j) r[i][j] /= nrm;
  }
  // Q = R^T diag(lam) R
  std::vector<double> q(dim * dim, 0.0);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) {
      double s = 0.0;
      for (int k = 0; k < dim; ++k) s += r[k][i] * lam[k] * r[k][j];
      q[i * dim + j] = s;
    }
  auto chol = std::make_shared<Cholesky>(q, dim);
  auto qmat = std::make_shared<std::vector<double>>(std::move(q));

  ConvexFunction f;
  f.name = "quadratic-spd";
  f.dim = dim;
  f.domain = Domain::full_space(dim);
  f.value = [qmat, dim](const Vec& x) {
    double s = 0.0;
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j) s += x[i] * (*qmat)[i * dim + j] * x[j];
    return 0.5 * s;
  };
  f.gradient = [qmat, dim](const Vec& x) {
    Vec g(dim, 0.0);
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j) g[i] += (*qmat)[i * dim + j] * x[j];
    return g;
  };
  f.conjugate = [chol](const Vec& y) { return 0.5 * dot(y, chol->solve(y)); };
  f.hessian_vec = [qmat, dim](const Vec&, const Vec& v) {
    Vec out(dim, 0.0);
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j) out[i] += (*qmat)[i * dim + j] * v[j];
    return out;
  };
  f.dual_region_hint = Domain::full_space(dim);
  return f;
}

ConvexFunction make_builtin(const std::string& name, int dim,
                            const nlohmann::json& params_in) {
  if (dim < 1) throw std::invalid_argument("dim must be >= 1");
  const nlohmann::json params =
      params_in.is_null() ? nlohmann::json::object() : params_in;
  if (name == "quadratic") return quadratic_fn(dim);
  if (name == "neg-log") return neg_log_fn(dim);
  if (name == "neg-entropy") return neg_entropy_fn(dim);
  if (name == "quadratic-over-linear") return quadratic_over_linear_fn(dim);
  if (name == "quadratic-spd") {
    if (!params.contains("condition_number"))
      throw std::invalid_argument(
          "quadratic-spd requires params.condition_number");
    return make_spd_quadratic(dim, params["condition_number"].get<double>(),
                              params.value("seed", 7u));
  }
  if (name == "exp-minus-linear")
    return exp_minus_linear_fn(dim, params.value("seed", 7u));
  if (name == "coupled-softplus") return coupled_softplus_fn(dim);
  if (name == "icnn-target") return make_icnn_target(dim, params);
  throw std::invalid_argument("unknown builtin convex function: " + name);
}

Sampler default_primal_sampler(const ConvexFunction& f, std::uint64_t seed) {
  if (f.name == "quadratic" || f.name == "quadratic-spd" ||
      f.name == "exp-minus-linear" || f.name == "coupled-softplus" ||
      f.name == "icnn-target")
    return Sampler::standard_normal(f.dim, seed);
  if (f.name == "neg-log" || f.name == "neg-entropy")
    return Sampler::log_uniform(f.dim, -2.3, 2.3, seed);
  if (f.name == "quadratic-over-linear")
    return Sampler::half_normal(f.dim, seed);
  return Sampler::standard_normal(f.dim, seed);
}

std::vector<Vec> sample_primal(const ConvexFunction& f, Sampler& sampler,
                               std::size_t n) {
  if (sampler.dim() != f.dim)
    throw std::invalid_argument("sample_primal: sampler dim mismatch");
  if (sampler.kind() == SamplerKind::StandardNormal &&
      f.domain.kind != DomainKind::FullSpace)
    throw std::invalid_argument(
        "sample_primal: standard-normal incompatible with a restricted domain");
  std::vector<Vec> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Vec x = sampler.next();
    if (!f.domain.contains(x))
      throw std::runtime_error("sample_primal: point outside domain");
    out.push_back(std::move(x));
  }
  return out;
}

}  // namespace dlt
