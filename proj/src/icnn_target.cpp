// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <memory>

#include "dlt/convex.hpp"
#include "dlt/net.hpp"
#include "dlt/rng.hpp"

namespace dlt {

// A convex target that is itself a small trained ICNN: fit ½‖x‖² with a
// convex architecture, then freeze the network and expose it as a
// ConvexFunction. Convexity holds by construction (softplus + nonneg z-path),
// not because the fit is exact.
ConvexFunction make_icnn_target(int dim, const nlohmann::json& params) {
  const std::uint64_t seed = params.value("seed", std::uint64_t{7});
  const int width = params.value("width", 32);
  const int steps = params.value("steps", 400);
  const int batch = params.value("batch_size", 128);
  const double lr = params.value("lr", 1e-2);

  ArchSpec spec = ArchSpec::make(Family::Icnn, dim, width);
  auto model = std::make_shared<NetworkModel>(init_network(spec, seed));
  AdamState adam = AdamState::create(*model, lr);
  Rng rng = Rng(seed).split(0x1c99);

  Matrix x(batch, dim);
  std::vector<double> targets(batch);
  for (int step = 0; step < steps; ++step) {
    for (int r = 0; r < batch; ++r) {
      double q = 0.0;
      for (int c = 0; c < dim; ++c) {
        double v = rng.normal();
        x.at(r, c) = v;
        q += v * v;
      }
      targets[std::size_t(r)] = 0.5 * q;
    }
    adam_step(*model, adam, grad_params_mse(*model, x, targets));
  }

  ConvexFunction f;
  f.name = "icnn-target";
  f.dim = dim;
  f.domain = Domain::full_space(dim);
  f.value = [model](const Vec& p) { return forward_scalar(*model, p); };
  f.gradient = [model](const Vec& p) { return grad_input(*model, p); };
  return f;
}

}  // namespace dlt
