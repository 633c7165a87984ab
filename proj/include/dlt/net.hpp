// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dlt/convex.hpp"
#include "json.hpp"

namespace dlt {

enum class Family { Mlp, MlpIcnn, ResNet, Icnn };
enum class Activation { Gelu, Softplus };

// Family fixes the activation: mlp/resnet use GELU, the convex families use
// softplus (convex and nondecreasing, required for input convexity).
struct ArchSpec {
  Family family = Family::Mlp;
  int input_dim = 1;
  int hidden_width = 128;
  int output_dim = 1;

  Activation activation() const {
    return (family == Family::Mlp || family == Family::ResNet)
               ? Activation::Gelu
               : Activation::Softplus;
  }

  static ArchSpec make(Family f, int in, int width, int out = 1);

  nlohmann::json to_json() const;
  static ArchSpec from_json(const nlohmann::json& j);
};

std::string family_name(Family f);
Family family_from_name(const std::string& s);

// One named parameter tensor inside the flat vector. nonneg marks z-path
// weights that must stay >= 0 after every optimizer step.
struct TensorInfo {
  std::string name;
  int rows = 0, cols = 0;  // cols == 1 for biases
  std::size_t offset = 0;
  bool nonneg = false;
  std::size_t count() const { return std::size_t(rows) * cols; }
};

struct NetworkModel {
  ArchSpec spec;
  std::vector<TensorInfo> layout;
  std::vector<double> params;
  std::uint64_t seed = 0;

  double* tensor(std::size_t i) { return params.data() + layout[i].offset; }
  const double* tensor(std::size_t i) const {
    return params.data() + layout[i].offset;
  }
};

std::vector<TensorInfo> make_layout(const ArchSpec& spec);
std::size_t param_count(const ArchSpec& spec);

// Gaussian init, weights ~ N(0, 1/fan_in), biases zero; nonneg tensors are
// squared elementwise after the draw.
NetworkModel init_network(const ArchSpec& spec, std::uint64_t seed);

// Row-major dense batch.
struct Matrix {
  int rows = 0, cols = 0;
  std::vector<double> a;
  Matrix() = default;
  Matrix(int r, int c) : rows(r), cols(c), a(std::size_t(r) * c, 0.0) {}
  double& at(int r, int c) { return a[std::size_t(r) * cols + c]; }
  double at(int r, int c) const { return a[std::size_t(r) * cols + c]; }
  double* row(int r) { return a.data() + std::size_t(r) * cols; }
  const double* row(int r) const { return a.data() + std::size_t(r) * cols; }
};

Matrix to_matrix(const std::vector<Vec>& pts);

// Intermediate activations kept for the backward pass.
struct ForwardCache {
  std::vector<Matrix> buf;
};

Matrix forward(const NetworkModel& model, const Matrix& x);
Matrix forward_cached(const NetworkModel& model, const Matrix& x,
                      ForwardCache& cache);

// Reverse mode. param_grad (if non-null) must be zeroed by the caller and
// have params.size() entries; input_grad (if non-null) receives dL/dX.
void backward(const NetworkModel& model, const Matrix& x,
              const ForwardCache& cache, const Matrix& d_out,
              std::vector<double>* param_grad, Matrix* input_grad);

double forward_scalar(const NetworkModel& model, const Vec& x);
Vec forward_vec(const NetworkModel& model, const Vec& x);

// dOutput/dx for scalar-output models.
Vec grad_input(const NetworkModel& model, const Vec& x);

// Parameter gradient of mean squared error against per-row targets.
std::vector<double> grad_params_mse(const NetworkModel& model, const Matrix& x,
                                    const std::vector<double>& targets,
                                    double* loss_out = nullptr);

struct AdamState {
  std::vector<double> m, v;
  long long t = 0;
  double lr = 1e-3, beta1 = 0.9, beta2 = 0.999, eps = 1e-8;

  static AdamState create(const NetworkModel& model, double lr = 1e-3);
};

// Bias-corrected Adam update; clamps nonneg tensors to >= 0 afterwards.
// Throws on non-finite gradient entries.
void adam_step(NetworkModel& model, AdamState& state,
               const std::vector<double>& grad);

// Checkpoint: one JSON header line, then raw little-endian doubles.
void save_checkpoint(const NetworkModel& model, const std::string& path);
NetworkModel load_checkpoint(const std::string& path);

// Scalar-output model as a plain closure.
std::function<double(const Vec&)> model_fn(const NetworkModel& model);

double gelu(double x);
double gelu_deriv(double x);
double softplus(double x);
double softplus_deriv(double x);

}  // namespace dlt
