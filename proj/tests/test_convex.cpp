// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "dlt/convex.hpp"
#include "doctest.h"

using namespace dlt;

namespace {

// Central finite differences of f.value with step 1e-5 * max(1, |x_i|).
Vec fd_gradient(const ConvexFunction& f, const Vec& x) {
  Vec g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    double h = 1e-5 * std::max(1.0, std::fabs(x[i]));
    Vec a(x), b(x);
    a[i] += h;
    b[i] -= h;
    g[i] = (f.value(a) - f.value(b)) / (2.0 * h);
  }
  return g;
}

double rel_err(double got, double want) {
  return std::fabs(got - want) / std::max(1.0, std::fabs(want));
}

void check_gradient_fd(const ConvexFunction& f, std::uint64_t seed) {
  Sampler s = default_primal_sampler(f, seed);
  for (int k = 0; k < 100; ++k) {
    Vec x = s.next();
    REQUIRE(f.domain.contains(x));
    Vec g = f.gradient(x);
    Vec fd = fd_gradient(f, x);
    for (std::size_t i = 0; i < g.size(); ++i)
      CHECK(rel_err(g[i], fd[i]) <= 1e-6);
  }
}

void check_segment_convexity(const ConvexFunction& f, std::uint64_t seed) {
  Sampler s = default_primal_sampler(f, seed);
  Rng r = Rng(seed).split(99);
  for (int k = 0; k < 200; ++k) {
    Vec a = s.next(), b = s.next();
    double lam = r.uniform();
    Vec m(a.size());
    for (std::size_t i = 0; i < a.size(); ++i)
      m[i] = lam * a[i] + (1.0 - lam) * b[i];
    if (!f.domain.contains(m)) continue;  // open sets: stay strict
    CHECK(f.value(m) <= lam * f.value(a) + (1.0 - lam) * f.value(b) + 1e-9);
  }
}

void check_fenchel_young_equality(const ConvexFunction& f,
                                  std::uint64_t seed) {
  REQUIRE(f.has_conjugate());
  Sampler s = default_primal_sampler(f, seed);
  for (int k = 0; k < 100; ++k) {
    Vec x = s.next();
    Vec g = f.gradient(x);
    double resid = f.value(x) + f.conjugate(g) - dot(x, g);
    double scale = std::max({1.0, std::fabs(f.value(x)),
                             std::fabs(f.conjugate(g))});
    CHECK(std::fabs(resid) / scale <= 1e-9);
  }
}

}  // namespace

TEST_CASE("quadratic matches Table 1 row") {
  ConvexFunction f = make_builtin("quadratic", 2);
  Vec x{1.0, 2.0};
  CHECK(f.value(x) == doctest::Approx(2.5).epsilon(1e-15));
  Vec g = f.gradient(x);
  CHECK(g[0] == doctest::Approx(1.0));
  CHECK(g[1] == doctest::Approx(2.0));
  // Self-conjugate.
  CHECK(f.conjugate(x) == doctest::Approx(2.5).epsilon(1e-15));
}

TEST_CASE("neg-log matches Table 1 row") {
  ConvexFunction f = make_builtin("neg-log", 2);
  Vec x{1.0, 1.0};
  CHECK(f.value(x) == doctest::Approx(0.0));
  Vec g = f.gradient(x);
  CHECK(g[0] == doctest::Approx(-1.0));
  CHECK(g[1] == doctest::Approx(-1.0));
  CHECK(f.conjugate(Vec{-1.0, -1.0}) == doctest::Approx(-2.0).epsilon(1e-15));
}

TEST_CASE("neg-entropy matches Table 1 row") {
  ConvexFunction f = make_builtin("neg-entropy", 2);
  Vec x{1.0, 1.0};
  CHECK(f.value(x) == doctest::Approx(0.0));
  Vec g = f.gradient(x);
  CHECK(g[0] == doctest::Approx(1.0));
  CHECK(g[1] == doctest::Approx(1.0));
  CHECK(f.conjugate(Vec{1.0, 1.0}) == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("quadratic-over-linear at the ones vector") {
  ConvexFunction f = make_builtin("quadratic-over-linear", 2);
  Vec x{1.0, 1.0};
  CHECK(f.value(x) == doctest::Approx(1.0).epsilon(1e-15));
  Vec g = f.gradient(x);
  CHECK(g[0] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(g[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  // Cross-check the closed-form gradient against finite differences.
  Vec fd = fd_gradient(f, x);
  CHECK(rel_err(g[0], fd[0]) <= 1e-6);
  CHECK(rel_err(g[1], fd[1]) <= 1e-6);
}

TEST_CASE("make_builtin rejects bad input") {
  CHECK_THROWS(make_builtin("no-such-function", 2));
  CHECK_THROWS(make_builtin("coupled-softplus", 1));
  CHECK_THROWS(make_builtin("quadratic-spd", 2));  // needs condition_number
}

TEST_CASE("spd quadratic: identity reduces to quadratic") {
  ConvexFunction f = make_spd_quadratic(3, 1.0, 11);
  Vec x{0.3, -1.2, 2.0};
  double q = 0.5 * dot(x, x);
  CHECK(f.value(x) == doctest::Approx(q).epsilon(1e-9));
  CHECK(f.conjugate(x) == doctest::Approx(q).epsilon(1e-9));
}

TEST_CASE("spd quadratic: diagonal closed-form conjugate") {
  // f(x) = 1/2 x^T Q x with Q = diag(1, 0.01):
  // f*((1, 0.01)) = 1/2 (1 + 0.01^2 / 0.01) = 0.505.
  // Build that Q through the public interface by checking the formula on the
  // generated eigensystem instead: f*(Q v) = 1/2 v^T Q v for any v.
  ConvexFunction f = make_spd_quadratic(2, 100.0, 5);
  Rng r(3);
  for (int k = 0; k < 20; ++k) {
    Vec v{r.normal(), r.normal()};
    Vec qv = f.gradient(v);  // Q v
    CHECK(f.conjugate(qv) == doctest::Approx(f.value(v)).epsilon(1e-9));
  }
}

namespace {

// Extreme eigenvalues of the (small, symmetric) Hessian recovered from the
// exact gradient map: power iteration on Q and on the shifted cI - Q.
std::pair<double, double> extreme_eigs(const ConvexFunction& f) {
  const int d = f.dim;
  std::vector<Vec> q(d);
  for (int j = 0; j < d; ++j) {
    Vec e(d, 0.0);
    e[j] = 1.0;
    q[j] = f.gradient(e);  // column j of Q (f quadratic => gradient linear)
  }
  auto matvec = [&](const Vec& v, double shift) {
    Vec out(d, 0.0);
    for (int j = 0; j < d; ++j)
      for (int i = 0; i < d; ++i) out[i] += (shift == 0.0 ? 1.0 : -1.0) * q[j][i] * v[j];
    if (shift != 0.0)
      for (int i = 0; i < d; ++i) out[i] += shift * v[i];
    return out;
  };
  auto power = [&](double shift) {
    Vec v(d, 1.0);
    v[0] = 1.3;  // break symmetry
    double lam = 0.0;
    for (int it = 0; it < 20000; ++it) {
      Vec w = matvec(v, shift);
      double n = std::sqrt(dot(w, w));
      for (auto& c : w) c /= n;
      lam = dot(w, matvec(w, shift));
      v = std::move(w);
    }
    return lam;
  };
  double lmax = power(0.0);
  double lmin = 2.0 * lmax - power(2.0 * lmax);
  return {lmin, lmax};
}

}  // namespace

TEST_CASE("spd quadratic: eigenvalue ratio equals condition number") {
  for (double kappa : {1.0, 10.0, 1000.0}) {
    ConvexFunction f = make_spd_quadratic(3, kappa, 21);
    auto [lmin, lmax] = extreme_eigs(f);
    CHECK(lmax / lmin == doctest::Approx(kappa).epsilon(1e-8));
  }
  CHECK_THROWS(make_spd_quadratic(2, 0.5, 1));
}

TEST_CASE("coupled-softplus gradient structure") {
  const int d = 4;
  ConvexFunction f = make_builtin("coupled-softplus", d);
  Rng r(8);
  for (int k = 0; k < 20; ++k) {
    Vec x(d);
    for (auto& v : x) v = r.normal();
    Vec g = f.gradient(x);
    for (int i = 0; i < d; ++i) {
      double want = 0.0;
      for (int j = 0; j < d; ++j) {
        if (j == i) continue;
        want += 1.0 / (1.0 + std::exp(-(x[i] + x[j])));
      }
      CHECK(g[i] == doctest::Approx(want).epsilon(1e-12));
    }
  }
  // d(d-1)/2 interaction terms: value at 0 is that count times softplus(0).
  Vec zero(d, 0.0);
  CHECK(f.value(zero) ==
        doctest::Approx(d * (d - 1) / 2 * std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("gradient finite differences and convexity, whole catalog") {
  std::vector<ConvexFunction> fns;
  fns.push_back(make_builtin("quadratic", 3));
  fns.push_back(make_builtin("neg-log", 3));
  fns.push_back(make_builtin("neg-entropy", 3));
  fns.push_back(make_builtin("quadratic-over-linear", 3));
  fns.push_back(make_builtin("quadratic-spd", 3, {{"condition_number", 10.0}}));
  fns.push_back(make_builtin("exp-minus-linear", 3));
  fns.push_back(make_builtin("coupled-softplus", 3));
  for (const auto& f : fns) {
    CAPTURE(f.name);
    check_gradient_fd(f, 101);
    check_segment_convexity(f, 202);
    if (f.has_conjugate()) check_fenchel_young_equality(f, 303);
  }
}

TEST_CASE("Fenchel-Young inequality on random dual points") {
  for (const char* name : {"quadratic", "neg-log", "neg-entropy"}) {
    ConvexFunction f = make_builtin(name, 2);
    Sampler sp = default_primal_sampler(f, 404);
    Sampler sd = default_primal_sampler(f, 505);
    for (int k = 0; k < 200; ++k) {
      Vec x = sp.next();
      Vec y = f.gradient(sd.next());  // guaranteed inside dual region
      CHECK(f.value(x) + f.conjugate(y) >= dot(x, y) - 1e-9);
    }
  }
}

TEST_CASE("sampler determinism and membership") {
  Sampler a = Sampler::log_uniform(2, -2.3, 2.3, 42);
  Sampler b = Sampler::log_uniform(2, -2.3, 2.3, 42);
  for (int k = 0; k < 50; ++k) {
    Vec pa = a.next(), pb = b.next();
    CHECK(pa == pb);
    for (double v : pa) {
      CHECK(v >= std::exp(-2.3));
      CHECK(v <= std::exp(2.3));
    }
  }
  a.reset();
  Vec first = a.next();
  b.reset();
  CHECK(first == b.next());
}

TEST_CASE("half-normal sampler satisfies the half-space domain") {
  ConvexFunction f = make_builtin("quadratic-over-linear", 3);
  Sampler s = default_primal_sampler(f, 9);
  auto pts = sample_primal(f, s, 500);
  CHECK(pts.size() == 500);
  for (const auto& x : pts) {
    double sum = 0.0;
    for (double v : x) sum += v;
    CHECK(sum > 0.0);
    CHECK(f.domain.contains(x));
  }
}

TEST_CASE("sample_primal rejects incompatible samplers") {
  ConvexFunction f = make_builtin("neg-log", 2);
  Sampler bad = Sampler::standard_normal(2, 3);
  CHECK_THROWS(sample_primal(f, bad, 16));
}

TEST_CASE("gaussian mixture sampler stays near its centers") {
  std::vector<Vec> centers{{-4.0, -4.0}, {4.0, 4.0}};
  Sampler s = Sampler::gaussian_mixture(centers, 0.1, 31);
  int near0 = 0, near1 = 0;
  for (int k = 0; k < 400; ++k) {
    Vec x = s.next();
    double d0 = std::hypot(x[0] + 4.0, x[1] + 4.0);
    double d1 = std::hypot(x[0] - 4.0, x[1] - 4.0);
    (d0 < d1 ? near0 : near1)++;
  }
  CHECK(near0 > 50);
  CHECK(near1 > 50);
}

TEST_CASE("domain membership is strict") {
  Domain box = Domain::box(Vec{0.0}, Vec{1.0});
  CHECK(box.contains(Vec{0.5}));
  CHECK_FALSE(box.contains(Vec{0.0}));
  CHECK_FALSE(box.contains(Vec{1.0}));
  Domain orth = Domain::positive_orthant(2);
  CHECK(orth.contains(Vec{0.1, 0.1}));
  CHECK_FALSE(orth.contains(Vec{0.0, 0.1}));
  Domain hs = Domain::half_space(Vec{1.0, 1.0}, 0.0);
  CHECK(hs.contains(Vec{1.0, 0.0}));
  CHECK_FALSE(hs.contains(Vec{1.0, -1.0}));
  CHECK_THROWS(Domain::box(Vec{1.0}, Vec{0.0}));
}

TEST_CASE("icnn-target is convex with matching gradient") {
  ConvexFunction f = make_builtin("icnn-target", 2, {{"steps", 60}});
  check_gradient_fd(f, 606);
  check_segment_convexity(f, 707);
  // Deterministic by construction.
  ConvexFunction f2 = make_builtin("icnn-target", 2, {{"steps", 60}});
  Vec x{0.4, -0.7};
  CHECK(f.value(x) == f2.value(x));
}

TEST_CASE("hessian_apply agrees with closed forms") {
  ConvexFunction f = make_builtin("neg-log", 2);
  Vec x{0.5, 2.0}, v{1.0, -1.0};
  Vec hv = hessian_apply(f, x, v);
  // H = diag(1/x_i^2).
  CHECK(hv[0] == doctest::Approx(1.0 / 0.25).epsilon(1e-6));
  CHECK(hv[1] == doctest::Approx(-1.0 / 4.0).epsilon(1e-6));
}
