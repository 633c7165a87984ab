// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstdio>

#include "dlt/net.hpp"
#include "dlt/rng.hpp"
#include "doctest.h"

using namespace dlt;

namespace {

const Family kFamilies[] = {Family::Mlp, Family::MlpIcnn, Family::ResNet,
                            Family::Icnn};

Matrix random_batch(int rows, int cols, Rng& r) {
  Matrix x(rows, cols);
  for (auto& v : x.a) v = r.normal();
  return x;
}

// Scalar loss used by the finite-difference checks: MSE against fixed targets.
double batch_mse(const NetworkModel& m, const Matrix& x,
                 const std::vector<double>& t) {
  Matrix out = forward(m, x);
  double s = 0.0;
  for (int r = 0; r < out.rows; ++r) {
    double d = out.at(r, 0) - t[std::size_t(r)];
    s += d * d;
  }
  return s / out.rows;
}

}  // namespace

TEST_CASE("mlp layout matches the hand-counted total") {
  ArchSpec spec = ArchSpec::make(Family::Mlp, 10, 128);
  CHECK(param_count(spec) == 18049);
  NetworkModel m = init_network(spec, 3);
  CHECK(m.params.size() == 18049);
}

TEST_CASE("init is deterministic; icnn z-weights nonnegative") {
  for (Family fam : kFamilies) {
    ArchSpec spec = ArchSpec::make(fam, 3, 16);
    NetworkModel a = init_network(spec, 42);
    NetworkModel b = init_network(spec, 42);
    CHECK(a.params == b.params);
    for (const auto& t : a.layout)
      if (t.nonneg)
        for (std::size_t i = 0; i < t.count(); ++i)
          CHECK(a.params[t.offset + i] >= 0.0);
  }
}

TEST_CASE("zero-weight model outputs the final bias") {
  for (Family fam : kFamilies) {
    ArchSpec spec = ArchSpec::make(fam, 2, 8);
    NetworkModel m = init_network(spec, 1);
    for (auto& p : m.params) p = 0.0;
    // Set the output bias (last layout entry is the head bias by layout
    // convention: rows x 1 tensor named *b*).
    const TensorInfo& last = m.layout.back();
    REQUIRE(last.cols == 1);
    m.params[last.offset] = 1.75;
    Vec out = forward_vec(m, Vec{0.3, -0.4});
    double expect = 1.75;
    if (spec.activation() == Activation::Softplus) {
      // Hidden softplus(0)=log 2 contributes nothing through zero weights.
      expect = 1.75;
    }
    CHECK(out[0] == doctest::Approx(expect));
  }
}

TEST_CASE("activation identities") {
  CHECK(gelu(0.0) == doctest::Approx(0.0));
  CHECK(softplus(0.0) == doctest::Approx(std::log(2.0)));
  // Derivatives against central differences.
  for (double x : {-2.0, -0.3, 0.0, 0.7, 3.1}) {
    double h = 1e-6;
    CHECK(gelu_deriv(x) ==
          doctest::Approx((gelu(x + h) - gelu(x - h)) / (2 * h)).epsilon(1e-6));
    CHECK(softplus_deriv(x) ==
          doctest::Approx((softplus(x + h) - softplus(x - h)) / (2 * h))
              .epsilon(1e-6));
  }
}

TEST_CASE("parameter gradients match finite differences, all families") {
  Rng r(7);
  for (Family fam : kFamilies) {
    CAPTURE(family_name(fam));
    ArchSpec spec = ArchSpec::make(fam, 3, 16);
    NetworkModel m = init_network(spec, 11);
    Matrix x = random_batch(5, 3, r);
    std::vector<double> targets(5);
    for (auto& t : targets) t = r.normal();

    std::vector<double> g = grad_params_mse(m, x, targets);
    // 50 random coordinates per family.
    Rng pick = Rng(19).split(std::uint64_t(fam));
    for (int k = 0; k < 50; ++k) {
      std::size_t i = pick.below(m.params.size());
      double h = 1e-6;
      double keep = m.params[i];
      m.params[i] = keep + h;
      double lp = batch_mse(m, x, targets);
      m.params[i] = keep - h;
      double lm = batch_mse(m, x, targets);
      m.params[i] = keep;
      double fd = (lp - lm) / (2 * h);
      CHECK(std::fabs(g[i] - fd) / std::max(1.0, std::fabs(fd)) <= 1e-5);
    }
  }
}

TEST_CASE("input gradients match finite differences, all families") {
  Rng r(13);
  for (Family fam : kFamilies) {
    CAPTURE(family_name(fam));
    ArchSpec spec = ArchSpec::make(fam, 3, 16);
    NetworkModel m = init_network(spec, 23);
    for (int k = 0; k < 20; ++k) {
      Vec x{r.normal(), r.normal(), r.normal()};
      Vec g = grad_input(m, x);
      for (int i = 0; i < 3; ++i) {
        double h = 1e-6;
        Vec a(x), b(x);
        a[i] += h;
        b[i] -= h;
        double fd =
            (forward_scalar(m, a) - forward_scalar(m, b)) / (2 * h);
        CHECK(std::fabs(g[i] - fd) / std::max(1.0, std::fabs(fd)) <= 1e-5);
      }
    }
  }
}

TEST_CASE("single linear neuron gradient by hand") {
  // Use the MLP with identity-free behavior at small scale is awkward;
  // instead verify the hand formula on the head layer of a stripped model:
  // with all weights zero except head (w, b), output = w·h(0) + b where the
  // hidden state is constant, so d/db = 2(out - t) exactly.
  ArchSpec spec = ArchSpec::make(Family::Mlp, 1, 4);
  NetworkModel m = init_network(spec, 2);
  for (auto& p : m.params) p = 0.0;
  const TensorInfo& hb = m.layout.back();
  m.params[hb.offset] = 0.3;  // bias b
  Matrix x(1, 1);
  x.at(0, 0) = 0.9;
  std::vector<double> t{1.0};
  std::vector<double> g = grad_params_mse(m, x, t);
  CHECK(g[hb.offset] == doctest::Approx(2.0 * (0.3 - 1.0)).epsilon(1e-12));
}

TEST_CASE("convex families are midpoint convex in their input") {
  Rng r(31);
  for (Family fam : {Family::MlpIcnn, Family::Icnn}) {
    CAPTURE(family_name(fam));
    ArchSpec spec = ArchSpec::make(fam, 2, 16);
    NetworkModel m = init_network(spec, 5);
    for (int k = 0; k < 1000; ++k) {
      Vec a{r.normal(), r.normal()}, b{r.normal(), r.normal()};
      Vec mid{0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])};
      double fm = forward_scalar(m, mid);
      double bound =
          0.5 * forward_scalar(m, a) + 0.5 * forward_scalar(m, b);
      CHECK(fm <= bound + 1e-9);
    }
    // Monotone gradient along lines (convexity consequence).
    for (int k = 0; k < 100; ++k) {
      Vec a{r.normal(), r.normal()}, b{r.normal(), r.normal()};
      Vec ga = grad_input(m, a), gb = grad_input(m, b);
      double s = (ga[0] - gb[0]) * (a[0] - b[0]) +
                 (ga[1] - gb[1]) * (a[1] - b[1]);
      CHECK(s >= -1e-9);
    }
  }
}

TEST_CASE("adam single step with unit gradient") {
  ArchSpec spec = ArchSpec::make(Family::Mlp, 2, 4);
  NetworkModel m = init_network(spec, 9);
  std::vector<double> before = m.params;
  AdamState st = AdamState::create(m, 1e-3);
  std::vector<double> g(m.params.size(), 1.0);
  adam_step(m, st, g);
  CHECK(st.t == 1);
  for (std::size_t i = 0; i < m.params.size(); ++i)
    CHECK(m.params[i] - before[i] ==
          doctest::Approx(-9.99999995e-4).epsilon(1e-8));
}

TEST_CASE("adam: zero gradient leaves params, increments t") {
  ArchSpec spec = ArchSpec::make(Family::Mlp, 2, 4);
  NetworkModel m = init_network(spec, 9);
  std::vector<double> before = m.params;
  AdamState st = AdamState::create(m);
  adam_step(m, st, std::vector<double>(m.params.size(), 0.0));
  CHECK(m.params == before);
  CHECK(st.t == 1);
}

TEST_CASE("adam clamps icnn z-weights at zero") {
  ArchSpec spec = ArchSpec::make(Family::Icnn, 2, 4);
  NetworkModel m = init_network(spec, 3);
  AdamState st = AdamState::create(m, 0.5);  // big lr to force sign flips
  std::vector<double> g(m.params.size(), 1.0);
  for (int k = 0; k < 5; ++k) adam_step(m, st, g);
  for (const auto& t : m.layout)
    if (t.nonneg)
      for (std::size_t i = 0; i < t.count(); ++i)
        CHECK(m.params[t.offset + i] >= 0.0);
}

TEST_CASE("adam rejects non-finite gradients") {
  ArchSpec spec = ArchSpec::make(Family::Mlp, 2, 4);
  NetworkModel m = init_network(spec, 3);
  AdamState st = AdamState::create(m);
  std::vector<double> g(m.params.size(), 0.0);
  g[2] = std::nan("");
  CHECK_THROWS(adam_step(m, st, g));
}

TEST_CASE("checkpoint round trip is bitwise identical") {
  ArchSpec spec = ArchSpec::make(Family::ResNet, 3, 16);
  NetworkModel m = init_network(spec, 77);
  std::string path = "/tmp/dlt_test_ckpt.bin";
  save_checkpoint(m, path);
  NetworkModel l = load_checkpoint(path);
  CHECK(l.params == m.params);
  CHECK(l.spec.input_dim == m.spec.input_dim);
  Vec x{0.1, -0.2, 0.3};
  CHECK(forward_scalar(l, x) == forward_scalar(m, x));
  std::remove(path.c_str());
}

TEST_CASE("archspec json round trip") {
  ArchSpec spec = ArchSpec::make(Family::Icnn, 4, 32, 1);
  ArchSpec back = ArchSpec::from_json(spec.to_json());
  CHECK(back.family == spec.family);
  CHECK(back.input_dim == spec.input_dim);
  CHECK(back.hidden_width == spec.hidden_width);
  CHECK(back.output_dim == spec.output_dim);
}

TEST_CASE("vector-output models backprop through all outputs") {
  ArchSpec spec = ArchSpec::make(Family::ResNet, 2, 8, 2);
  NetworkModel m = init_network(spec, 15);
  Rng r(4);
  Matrix x = random_batch(3, 2, r);
  ForwardCache cache;
  Matrix out = forward_cached(m, x, cache);
  REQUIRE(out.cols == 2);
  Matrix d_out(3, 2);
  for (auto& v : d_out.a) v = r.normal();
  std::vector<double> pg(m.params.size(), 0.0);
  backward(m, x, cache, d_out, &pg, nullptr);
  // Spot-check a few coordinates with finite differences of sum(d_out*out).
  auto loss = [&](void) {
    Matrix o = forward(m, x);
    double s = 0.0;
    for (std::size_t i = 0; i < o.a.size(); ++i) s += o.a[i] * d_out.a[i];
    return s;
  };
  Rng pick(21);
  for (int k = 0; k < 30; ++k) {
    std::size_t i = pick.below(m.params.size());
    double h = 1e-6, keep = m.params[i];
    m.params[i] = keep + h;
    double lp = loss();
    m.params[i] = keep - h;
    double lm = loss();
    m.params[i] = keep;
    double fd = (lp - lm) / (2 * h);
    CHECK(std::fabs(pg[i] - fd) / std::max(1.0, std::fabs(fd)) <= 1e-5);
  }
}
