// SPDX-License-Identifier: Apache-2.0
#include "dlt/net.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace dlt {

namespace {
constexpr double kGeluC = 0.7978845608028654;  // sqrt(2/pi)
constexpr double kGeluA = 0.044715;
}  // namespace

double gelu(double x) {
  double u = kGeluC * (x + kGeluA * x * x * x);
  return 0.5 * x * (1.0 + std::tanh(u));
}

double gelu_deriv(double x) {
  double u = kGeluC * (x + kGeluA * x * x * x);
  double t = std::tanh(u);
  double du = kGeluC * (1.0 + 3.0 * kGeluA * x * x);
  return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * du;
}

double softplus(double x) {
  if (x > 30.0) return x;
  if (x < -30.0) return std::exp(x);
  return std::log1p(std::exp(x));
}

double softplus_deriv(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

std::string family_name(Family f) {
  switch (f) {
    case Family::Mlp: return "mlp";
    case Family::MlpIcnn: return "mlp-icnn";
    case Family::ResNet: return "resnet";
    case Family::Icnn: return "icnn";
  }
  return "?";
}

Family family_from_name(const std::string& s) {
  if (s == "mlp") return Family::Mlp;
  if (s == "mlp-icnn") return Family::MlpIcnn;
  if (s == "resnet") return Family::ResNet;
  if (s == "icnn") return Family::Icnn;
  throw std::invalid_argument("unknown network family: " + s);
}

ArchSpec ArchSpec::make(Family f, int in, int width, int out) {
  if (in < 1 || width < 1 || out < 1)
    throw std::invalid_argument("ArchSpec: dimensions must be >= 1");
  ArchSpec s;
  s.family = f;
  s.input_dim = in;
  s.hidden_width = width;
  s.output_dim = out;
  return s;
}

nlohmann::json ArchSpec::to_json() const {
  return {{"family", family_name(family)},
          {"input_dim", input_dim},
          {"hidden_width", hidden_width},
          {"output_dim", output_dim}};
}

ArchSpec ArchSpec::from_json(const nlohmann::json& j) {
  return make(family_from_name(j.at("family").get<std::string>()),
              j.at("input_dim").get<int>(), j.at("hidden_width").get<int>(),
              j.at("output_dim").get<int>());
}

std::vector<TensorInfo> make_layout(const ArchSpec& spec) {
  const int in = spec.input_dim, h = spec.hidden_width, out = spec.output_dim;
  std::vector<TensorInfo> layout;
  std::size_t off = 0;
  auto add = [&](const std::string& name, int rows, int cols, bool nonneg) {
    layout.push_back({name, rows, cols, off, nonneg});
    off += std::size_t(rows) * cols;
  };
  switch (spec.family) {
    case Family::Mlp:
      add("w0", h, in, false);
      add("b0", h, 1, false);
      add("w1", h, h, false);
      add("b1", h, 1, false);
      add("w2", out, h, false);
      add("b2", out, 1, false);
      break;
    case Family::MlpIcnn:
      add("w0", h, in, false);
      add("b0", h, 1, false);
      add("w1", h, h, true);
      add("b1", h, 1, false);
      add("w2", out, h, true);
      add("b2", out, 1, false);
      break;
    case Family::ResNet:
      add("stem_w", h, in, false);
      add("stem_b", h, 1, false);
      for (int k = 1; k <= 2; ++k) {
        std::string p = "blk" + std::to_string(k);
        add(p + "_a_w", h, h, false);
        add(p + "_a_b", h, 1, false);
        add(p + "_b_w", h, h, false);
        add(p + "_b_b", h, 1, false);
      }
      add("head_w", out, h, false);
      add("head_b", out, 1, false);
      break;
    case Family::Icnn:
      add("wx0", h, in, false);
      add("b0", h, 1, false);
      add("wz1", h, h, true);
      add("wx1", h, in, false);
      add("b1", h, 1, false);
      add("wz2", out, h, true);
      add("wx2", out, in, false);
      add("b2", out, 1, false);
      break;
  }
  return layout;
}

std::size_t param_count(const ArchSpec& spec) {
  std::size_t n = 0;
  for (const TensorInfo& t : make_layout(spec)) n += t.count();
  return n;
}

NetworkModel init_network(const ArchSpec& spec, std::uint64_t seed) {
  NetworkModel model;
  model.spec = spec;
  model.layout = make_layout(spec);
  model.params.assign(param_count(spec), 0.0);
  model.seed = seed;
  Rng rng = Rng(seed).split(0x11e7);
  for (std::size_t ti = 0; ti < model.layout.size(); ++ti) {
    const TensorInfo& t = model.layout[ti];
    if (t.cols == 1 && t.name[0] == 'b') continue;  // biases stay zero
    double scale = 1.0 / std::sqrt(static_cast<double>(t.cols));
    double* w = model.tensor(ti);
    for (std::size_t i = 0; i < t.count(); ++i) {
      double v = scale * rng.normal();
      w[i] = t.nonneg ? v * v : v;
    }
  }
  return model;
}

Matrix to_matrix(const std::vector<Vec>& pts) {
  if (pts.empty()) return Matrix(0, 0);
  Matrix m(static_cast<int>(pts.size()), static_cast<int>(pts[0].size()));
  for (int r = 0; r < m.rows; ++r)
    for (int c = 0; c < m.cols; ++c) m.at(r, c) = pts[r][c];
  return m;
}

namespace {

// Y = X W^T + b   (X: n x in, W: out x in). accumulate adds into Y.
void dense_fwd(const Matrix& x, const double* w, const double* b, int out,
               Matrix& y, bool accumulate = false) {
  const int n = x.rows, in = x.cols;
  if (!accumulate) y = Matrix(n, out);
#pragma omp parallel for schedule(static)
  for (int r = 0; r < n; ++r) {
    const double* xr = x.row(r);
    double* yr = y.row(r);
    for (int o = 0; o < out; ++o) {
      const double* wo = w + std::size_t(o) * in;
      double s = 0.0;
      for (int i = 0; i < in; ++i) s += xr[i] * wo[i];
      if (accumulate)
        yr[o] += s;
      else
        yr[o] = s + (b ? b[o] : 0.0);
    }
  }
}

// dX (+)= dY W   (dY: n x out, W: out x in).
void dense_bwd_input(const Matrix& dy, const double* w, int in, Matrix& dx,
                     bool accumulate) {
  const int n = dy.rows, out = dy.cols;
  if (!accumulate) dx = Matrix(n, in);
#pragma omp parallel for schedule(static)
  for (int r = 0; r < n; ++r) {
    const double* dr = dy.row(r);
    double* xr = dx.row(r);
    for (int i = 0; i < in; ++i) {
      double s = 0.0;
      for (int o = 0; o < out; ++o) s += dr[o] * w[std::size_t(o) * in + i];
      if (accumulate)
        xr[i] += s;
      else
        xr[i] = s;
    }
  }
}

// dW += dY^T X, db += colsum(dY). Entry-serial over rows, so the reduction
// order is fixed regardless of thread count.
void dense_bwd_params(const Matrix& dy, const Matrix& x, double* dw,
                      double* db) {
  const int n = dy.rows, out = dy.cols, in = x.cols;
#pragma omp parallel for schedule(static)
  for (int o = 0; o < out; ++o) {
    double* wo = dw + std::size_t(o) * in;
    for (int r = 0; r < n; ++r) {
      double d = dy.at(r, o);
      const double* xr = x.row(r);
      for (int i = 0; i < in; ++i) wo[i] += d * xr[i];
    }
    if (db) {
      double s = 0.0;
      for (int r = 0; r < n; ++r) s += dy.at(r, o);
      db[o] += s;
    }
  }
}

Matrix apply_act(const Matrix& pre, Activation act) {
  Matrix out(pre.rows, pre.cols);
  auto fn = act == Activation::Gelu ? gelu : softplus;
#pragma omp parallel for schedule(static)
  for (long long i = 0; i < static_cast<long long>(pre.a.size()); ++i)
    out.a[i] = fn(pre.a[i]);
  return out;
}

// dPre = dPost (*) act'(pre)
Matrix act_backward(const Matrix& d_post, const Matrix& pre, Activation act) {
  Matrix out(pre.rows, pre.cols);
  auto dfn = act == Activation::Gelu ? gelu_deriv : softplus_deriv;
#pragma omp parallel for schedule(static)
  for (long long i = 0; i < static_cast<long long>(pre.a.size()); ++i)
    out.a[i] = d_post.a[i] * dfn(pre.a[i]);
  return out;
}

}  // namespace

Matrix forward_cached(const NetworkModel& m, const Matrix& x,
                      ForwardCache& cache) {
  if (x.cols != m.spec.input_dim)
    throw std::invalid_argument("forward: input width mismatch");
  const Activation act = m.spec.activation();
  cache.buf.clear();
  Matrix y;
  switch (m.spec.family) {
    case Family::Mlp:
    case Family::MlpIcnn: {
      Matrix a0;
      dense_fwd(x, m.tensor(0), m.tensor(1), m.layout[0].rows, a0);
      Matrix z0 = apply_act(a0, act);
      Matrix a1;
      dense_fwd(z0, m.tensor(2), m.tensor(3), m.layout[2].rows, a1);
      Matrix z1 = apply_act(a1, act);
      dense_fwd(z1, m.tensor(4), m.tensor(5), m.layout[4].rows, y);
      cache.buf = {std::move(a0), std::move(z0), std::move(a1), std::move(z1)};
      break;
    }
    case Family::ResNet: {
      Matrix z0;
      dense_fwd(x, m.tensor(0), m.tensor(1), m.layout[0].rows, z0);
      Matrix cur = z0;
      std::vector<Matrix> buf;
      buf.push_back(std::move(z0));
      for (int k = 0; k < 2; ++k) {
        std::size_t base = 2 + std::size_t(k) * 4;
        Matrix p;
        dense_fwd(cur, m.tensor(base), m.tensor(base + 1),
                  m.layout[base].rows, p);
        Matrix u = apply_act(p, act);
        Matrix z = cur;  // identity skip
        dense_fwd(u, m.tensor(base + 2), m.tensor(base + 3),
                  m.layout[base + 2].rows, z, /*accumulate=*/true);
        // bias of the second dense layer
        {
          const double* b = m.tensor(base + 3);
#pragma omp parallel for schedule(static)
          for (int r = 0; r < z.rows; ++r) {
            double* zr = z.row(r);
            for (int c = 0; c < z.cols; ++c) zr[c] += b[c];
          }
        }
        buf.push_back(std::move(p));
        buf.push_back(std::move(u));
        buf.push_back(z);
        cur = std::move(z);
      }
      dense_fwd(cur, m.tensor(10), m.tensor(11), m.layout[10].rows, y);
      cache.buf = std::move(buf);
      break;
    }
    case Family::Icnn: {
      Matrix a0;
      dense_fwd(x, m.tensor(0), m.tensor(1), m.layout[0].rows, a0);
      Matrix z1 = apply_act(a0, act);
      Matrix a1;
      dense_fwd(z1, m.tensor(2), nullptr, m.layout[2].rows, a1);
      dense_fwd(x, m.tensor(3), nullptr, m.layout[3].rows, a1,
                /*accumulate=*/true);
      {
        const double* b = m.tensor(4);
#pragma omp parallel for schedule(static)
        for (int r = 0; r < a1.rows; ++r) {
          double* ar = a1.row(r);
          for (int c = 0; c < a1.cols; ++c) ar[c] += b[c];
        }
      }
      Matrix z2 = apply_act(a1, act);
      dense_fwd(z2, m.tensor(5), nullptr, m.layout[5].rows, y);
      dense_fwd(x, m.tensor(6), nullptr, m.layout[6].rows, y,
                /*accumulate=*/true);
      {
        const double* b = m.tensor(7);
#pragma omp parallel for schedule(static)
        for (int r = 0; r < y.rows; ++r) {
          double* yr = y.row(r);
          for (int c = 0; c < y.cols; ++c) yr[c] += b[c];
        }
      }
      cache.buf = {std::move(a0), std::move(z1), std::move(a1), std::move(z2)};
      break;
    }
  }
  return y;
}

Matrix forward(const NetworkModel& m, const Matrix& x) {
  ForwardCache cache;
  return forward_cached(m, x, cache);
}

void backward(const NetworkModel& m, const Matrix& x, const ForwardCache& cc,
              const Matrix& d_out, std::vector<double>* pg, Matrix* ig) {
  const Activation act = m.spec.activation();
  auto dw = [&](std::size_t ti) {
    return pg ? pg->data() + m.layout[ti].offset : nullptr;
  };
  switch (m.spec.family) {
    case Family::Mlp:
    case Family::MlpIcnn: {
      const Matrix& a0 = cc.buf[0];
      const Matrix& z0 = cc.buf[1];
      const Matrix& a1 = cc.buf[2];
      const Matrix& z1 = cc.buf[3];
      if (pg) dense_bwd_params(d_out, z1, dw(4), dw(5));
      Matrix dz1;
      dense_bwd_input(d_out, m.tensor(4), m.layout[4].cols, dz1, false);
      Matrix da1 = act_backward(dz1, a1, act);
      if (pg) dense_bwd_params(da1, z0, dw(2), dw(3));
      Matrix dz0;
      dense_bwd_input(da1, m.tensor(2), m.layout[2].cols, dz0, false);
      Matrix da0 = act_backward(dz0, a0, act);
      if (pg) dense_bwd_params(da0, x, dw(0), dw(1));
      if (ig) dense_bwd_input(da0, m.tensor(0), m.layout[0].cols, *ig, false);
      break;
    }
    case Family::ResNet: {
      // cache: [z0, p1, u1, z1, p2, u2, z2]
      const Matrix& z2 = cc.buf[6];
      if (pg) dense_bwd_params(d_out, z2, dw(10), dw(11));
      Matrix dz;
      dense_bwd_input(d_out, m.tensor(10), m.layout[10].cols, dz, false);
      for (int k = 1; k >= 0; --k) {
        std::size_t base = 2 + std::size_t(k) * 4;
        const Matrix& p = cc.buf[1 + std::size_t(k) * 3];
        const Matrix& u = cc.buf[2 + std::size_t(k) * 3];
        const Matrix& zin = k == 0 ? cc.buf[0] : cc.buf[3];
        if (pg) dense_bwd_params(dz, u, dw(base + 2), dw(base + 3));
        Matrix du;
        dense_bwd_input(dz, m.tensor(base + 2), m.layout[base + 2].cols, du,
                        false);
        Matrix dp = act_backward(du, p, act);
        if (pg) dense_bwd_params(dp, zin, dw(base), dw(base + 1));
        // skip path: dz passes through unchanged, plus the block path
        dense_bwd_input(dp, m.tensor(base), m.layout[base].cols, dz,
                        /*accumulate=*/true);
      }
      if (pg) dense_bwd_params(dz, x, dw(0), dw(1));
      if (ig) dense_bwd_input(dz, m.tensor(0), m.layout[0].cols, *ig, false);
      break;
    }
    case Family::Icnn: {
      const Matrix& a0 = cc.buf[0];
      const Matrix& z1 = cc.buf[1];
      const Matrix& a1 = cc.buf[2];
      const Matrix& z2 = cc.buf[3];
      if (pg) {
        dense_bwd_params(d_out, z2, dw(5), nullptr);
        dense_bwd_params(d_out, x, dw(6), dw(7));
      }
      Matrix dz2;
      dense_bwd_input(d_out, m.tensor(5), m.layout[5].cols, dz2, false);
      Matrix da1 = act_backward(dz2, a1, act);
      if (pg) {
        dense_bwd_params(da1, z1, dw(2), nullptr);
        dense_bwd_params(da1, x, dw(3), dw(4));
      }
      Matrix dz1;
      dense_bwd_input(da1, m.tensor(2), m.layout[2].cols, dz1, false);
      Matrix da0 = act_backward(dz1, a0, act);
      if (pg) dense_bwd_params(da0, x, dw(0), dw(1));
      if (ig) {
        dense_bwd_input(da0, m.tensor(0), m.layout[0].cols, *ig, false);
        dense_bwd_input(da1, m.tensor(3), m.layout[3].cols, *ig, true);
        dense_bwd_input(d_out, m.tensor(6), m.layout[6].cols, *ig, true);
      }
      break;
    }
  }
}

double forward_scalar(const NetworkModel& m, const Vec& x) {
  if (m.spec.output_dim != 1)
    throw std::invalid_argument("forward_scalar: output_dim != 1");
  Matrix in(1, static_cast<int>(x.size()));
  std::copy(x.begin(), x.end(), in.a.begin());
  return forward(m, in).at(0, 0);
}

Vec forward_vec(const NetworkModel& m, const Vec& x) {
  Matrix in(1, static_cast<int>(x.size()));
  std::copy(x.begin(), x.end(), in.a.begin());
  Matrix out = forward(m, in);
  return Vec(out.a.begin(), out.a.end());
}

Vec grad_input(const NetworkModel& m, const Vec& x) {
  if (m.spec.output_dim != 1)
    throw std::invalid_argument("grad_input: output_dim != 1");
  Matrix in(1, static_cast<int>(x.size()));
  std::copy(x.begin(), x.end(), in.a.begin());
  ForwardCache cache;
  forward_cached(m, in, cache);
  Matrix d_out(1, 1);
  d_out.at(0, 0) = 1.0;
  Matrix ig;
  backward(m, in, cache, d_out, nullptr, &ig);
  return Vec(ig.a.begin(), ig.a.end());
}

std::vector<double> grad_params_mse(const NetworkModel& m, const Matrix& x,
                                    const std::vector<double>& targets,
                                    double* loss_out) {
  if (m.spec.output_dim != 1)
    throw std::invalid_argument("grad_params_mse: output_dim != 1");
  if (targets.size() != static_cast<std::size_t>(x.rows))
    throw std::invalid_argument("grad_params_mse: target count mismatch");
  ForwardCache cache;
  Matrix y = forward_cached(m, x, cache);
  Matrix d_out(x.rows, 1);
  double loss = 0.0;
  for (int r = 0; r < x.rows; ++r) {
    double res = y.at(r, 0) - targets[r];
    loss += res * res;
    d_out.at(r, 0) = 2.0 * res / x.rows;
  }
  if (loss_out) *loss_out = loss / x.rows;
  std::vector<double> grad(m.params.size(), 0.0);
  backward(m, x, cache, d_out, &grad, nullptr);
  return grad;
}

AdamState AdamState::create(const NetworkModel& model, double lr) {
  AdamState s;
  s.m.assign(model.params.size(), 0.0);
  s.v.assign(model.params.size(), 0.0);
  s.lr = lr;
  return s;
}

void adam_step(NetworkModel& model, AdamState& st,
               const std::vector<double>& grad) {
  if (grad.size() != model.params.size() || st.m.size() != grad.size())
    throw std::invalid_argument("adam_step: length mismatch");
  for (double g : grad)
    if (!std::isfinite(g))
      throw std::runtime_error("adam_step: non-finite gradient (divergence)");
  st.t += 1;
  const double bc1 = 1.0 - std::pow(st.beta1, static_cast<double>(st.t));
  const double bc2 = 1.0 - std::pow(st.beta2, static_cast<double>(st.t));
#pragma omp parallel for schedule(static)
  for (long long i = 0; i < static_cast<long long>(grad.size()); ++i) {
    st.m[i] = st.beta1 * st.m[i] + (1.0 - st.beta1) * grad[i];
    st.v[i] = st.beta2 * st.v[i] + (1.0 - st.beta2) * grad[i] * grad[i];
    double mh = st.m[i] / bc1;
    double vh = st.v[i] / bc2;
    model.params[i] -= st.lr * mh / (std::sqrt(vh) + st.eps);
  }
  // Projection keeps z-path weights nonnegative without touching the
  // optimizer statistics.
  for (std::size_t ti = 0; ti < model.layout.size(); ++ti) {
    if (!model.layout[ti].nonneg) continue;
    double* w = model.tensor(ti);
    for (std::size_t i = 0; i < model.layout[ti].count(); ++i)
      if (w[i] < 0.0) w[i] = 0.0;
  }
}

void save_checkpoint(const NetworkModel& model, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open checkpoint for write: " + path);
  nlohmann::json header;
  header["spec"] = model.spec.to_json();
  header["seed"] = model.seed;
  header["param_count"] = model.params.size();
  header["created"] = "dlt-checkpoint-v1";
  os << header.dump() << "\n";
  os.write(reinterpret_cast<const char*>(model.params.data()),
           static_cast<std::streamsize>(model.params.size() * sizeof(double)));
}

NetworkModel load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open checkpoint: " + path);
  std::string line;
  if (!std::getline(is, line))
    throw std::runtime_error("checkpoint: missing header");
  nlohmann::json header = nlohmann::json::parse(line);
  NetworkModel model;
  model.spec = ArchSpec::from_json(header.at("spec"));
  model.seed = header.value("seed", 0u);
  model.layout = make_layout(model.spec);
  std::size_t count = header.at("param_count").get<std::size_t>();
  if (count != param_count(model.spec))
    throw std::runtime_error("checkpoint: parameter count mismatch");
  model.params.resize(count);
  is.read(reinterpret_cast<char*>(model.params.data()),
          static_cast<std::streamsize>(count * sizeof(double)));
  if (!is) throw std::runtime_error("checkpoint: truncated parameter block");
  return model;
}

std::function<double(const Vec&)> model_fn(const NetworkModel& model) {
  return [model](const Vec& x) { return forward_scalar(model, x); };
}

}  // namespace dlt
