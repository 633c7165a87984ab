// SPDX-License-Identifier: Apache-2.0
#include "dlt/grid.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace dlt {

namespace {

std::size_t checked_product(const std::vector<Vec>& axes) {
  std::size_t total = 1;
  for (const Vec& ax : axes) {
    std::size_t n = ax.size();
    if (n != 0 && total > std::numeric_limits<std::size_t>::max() / n)
      throw std::overflow_error("grid point count overflows size_t");
    total *= n;
  }
  return total;
}

void check_axis(const Vec& ax) {
  if (ax.size() < 2) throw std::invalid_argument("grid axis needs >= 2 nodes");
  for (std::size_t i = 1; i < ax.size(); ++i)
    if (!(ax[i] > ax[i - 1]))
      throw std::invalid_argument("grid axis nodes must be strictly increasing");
}

}  // namespace

CartesianGrid::CartesianGrid(std::vector<Vec> axes_) : axes(std::move(axes_)) {
  for (const Vec& ax : axes) check_axis(ax);
  (void)checked_product(axes);
}

std::size_t CartesianGrid::size() const { return checked_product(axes); }

CartesianGrid CartesianGrid::uniform(const Vec& lo, const Vec& hi,
                                     const std::vector<int>& n_per_axis) {
  std::vector<Vec> axes;
  for (std::size_t a = 0; a < lo.size(); ++a) {
    int n = n_per_axis[a];
    Vec ax(n);
    for (int i = 0; i < n; ++i)
      ax[i] = lo[a] + (hi[a] - lo[a]) * static_cast<double>(i) / (n - 1);
    axes.push_back(std::move(ax));
  }
  return CartesianGrid(std::move(axes));
}

CartesianGrid CartesianGrid::uniform(double lo, double hi, int n, int dim) {
  return uniform(Vec(dim, lo), Vec(dim, hi), std::vector<int>(dim, n));
}

Vec CartesianGrid::node(std::size_t flat_index) const {
  Vec x(dim());
  for (int a = dim() - 1; a >= 0; --a) {
    std::size_t n = axes[a].size();
    x[a] = axes[a][flat_index % n];
    flat_index /= n;
  }
  return x;
}

GridField::GridField(CartesianGrid g, std::vector<double> v)
    : grid(std::move(g)), values(std::move(v)) {
  if (values.size() != grid.size())
    throw std::invalid_argument("GridField: values length != grid size");
}

GridField GridField::tabulate(const CartesianGrid& g,
                              const std::function<double(const Vec&)>& fn) {
  std::vector<double> v(g.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = fn(g.node(i));
  return GridField(g, std::move(v));
}

GridMemoryError::GridMemoryError(std::size_t bytes, std::size_t cap)
    : std::runtime_error("grid transform needs " + std::to_string(bytes) +
                         " bytes, cap is " + std::to_string(cap)),
      required_bytes(bytes) {}

GridField brute_force_conjugate(const GridField& field,
                                const CartesianGrid& dual, bool parallel) {
  if (field.grid.dim() != dual.dim())
    throw std::invalid_argument("brute_force_conjugate: dimension mismatch");
  const std::size_t np = field.grid.size();
  const std::size_t nd = dual.size();
  const int d = dual.dim();

  // Materialize primal nodes once; O(N^d * d) doubles.
  std::vector<double> pts(np * d);
  for (std::size_t i = 0; i < np; ++i) {
    Vec x = field.grid.node(i);
    std::copy(x.begin(), x.end(), pts.begin() + i * d);
  }

  std::vector<double> out(nd);
#pragma omp parallel for schedule(static) if (parallel)
  for (long long si = 0; si < static_cast<long long>(nd); ++si) {
    Vec s = dual.node(static_cast<std::size_t>(si));
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < np; ++i) {
      double v = -field.values[i];
      const double* x = &pts[i * d];
      for (int a = 0; a < d; ++a) v += s[a] * x[a];
      if (v > best) best = v;
    }
    out[static_cast<std::size_t>(si)] = best;
  }
  return GridField(dual, std::move(out));
}

std::vector<std::size_t> lower_hull_indices(const Vec& x, const Vec& f) {
  if (x.size() != f.size())
    throw std::invalid_argument("lower_hull: length mismatch");
  std::vector<std::size_t> h;
  h.reserve(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    // Pop while the middle point lies on or above the chord.
    while (h.size() >= 2) {
      std::size_t a = h[h.size() - 2], m = h.back();
      double cross = (x[m] - x[a]) * (f[i] - f[a]) - (f[m] - f[a]) * (x[i] - x[a]);
      if (cross <= 0.0)
        h.pop_back();
      else
        break;
    }
    h.push_back(i);
  }
  return h;
}

Vec llt_1d(const Vec& x_nodes, const Vec& f_values, const Vec& slopes) {
  if (x_nodes.size() != f_values.size())
    throw std::invalid_argument("llt_1d: length mismatch");
  for (std::size_t i = 1; i < x_nodes.size(); ++i)
    if (!(x_nodes[i] > x_nodes[i - 1]))
      throw std::invalid_argument("llt_1d: x_nodes must be strictly increasing");
  for (std::size_t j = 1; j < slopes.size(); ++j)
    if (slopes[j] < slopes[j - 1])
      throw std::invalid_argument("llt_1d: slopes must be nondecreasing");

  std::vector<std::size_t> hull = lower_hull_indices(x_nodes, f_values);
  Vec out(slopes.size());
  std::size_t k = 0;
  for (std::size_t j = 0; j < slopes.size(); ++j) {
    double s = slopes[j];
    // Advance while the next hull edge has slope strictly below s; a tie
    // keeps the left vertex (both give the same conjugate value).
    while (k + 1 < hull.size()) {
      std::size_t a = hull[k], b = hull[k + 1];
      double edge = (f_values[b] - f_values[a]) / (x_nodes[b] - x_nodes[a]);
      if (edge < s)
        ++k;
      else
        break;
    }
    std::size_t i = hull[k];
    out[j] = s * x_nodes[i] - f_values[i];
  }
  return out;
}

GridField llt_nested(const GridField& field, const CartesianGrid& dual,
                     std::size_t memory_cap_bytes) {
  const int d = field.grid.dim();
  if (d != dual.dim())
    throw std::invalid_argument("llt_nested: dimension mismatch");

  // Intermediate sizes: axis a holds dual nodes once transformed.
  std::vector<std::size_t> len(d);
  for (int a = 0; a < d; ++a) len[a] = field.grid.axes[a].size();
  {
    std::size_t worst = 1;
    for (int a = 0; a < d; ++a)
      worst *= std::max(field.grid.axes[a].size(), dual.axes[a].size());
    std::size_t bytes = 2 * worst * sizeof(double);
    if (bytes > memory_cap_bytes) throw GridMemoryError(bytes, memory_cap_bytes);
  }

  // W holds the function to be conjugated along the next axis: f before the
  // first stage, -V afterwards. The final stage returns V itself.
  std::vector<double> w = field.values;
  for (int a = 0; a < d; ++a) {
    const Vec& xs = field.grid.axes[a];
    const Vec& ss = dual.axes[a];
    const std::size_t n = xs.size(), m = ss.size();
    std::size_t inner = 1, outer = 1;
    for (int b = a + 1; b < d; ++b) inner *= len[b];
    for (int b = 0; b < a; ++b) outer *= len[b];

    std::vector<double> next(outer * m * inner);
    const long long lines = static_cast<long long>(outer * inner);
#pragma omp parallel for schedule(static)
    for (long long li = 0; li < lines; ++li) {
      std::size_t o = static_cast<std::size_t>(li) / inner;
      std::size_t i = static_cast<std::size_t>(li) % inner;
      Vec line(n), res;
      for (std::size_t k = 0; k < n; ++k)
        line[k] = w[(o * n + k) * inner + i];
      res = llt_1d(xs, line, ss);
      const bool last = (a == d - 1);
      for (std::size_t k = 0; k < m; ++k)
        next[(o * m + k) * inner + i] = last ? res[k] : -res[k];
    }
    w = std::move(next);
    len[a] = m;
  }
  return GridField(dual, std::move(w));
}

std::vector<std::pair<double, double>> dual_grid_bounds(
    const ConvexFunction& f, const CartesianGrid& primal) {
  const int d = primal.dim();
  std::vector<std::pair<double, double>> bounds(
      d, {std::numeric_limits<double>::infinity(),
          -std::numeric_limits<double>::infinity()});
  const std::size_t n = primal.size();
  for (std::size_t i = 0; i < n; ++i) {
    Vec x = primal.node(i);
    if (!f.domain.contains(x))
      throw std::invalid_argument("dual_grid_bounds: grid node outside domain");
    Vec g = f.gradient(x);
    for (int a = 0; a < d; ++a) {
      bounds[a].first = std::min(bounds[a].first, g[a]);
      bounds[a].second = std::max(bounds[a].second, g[a]);
    }
  }
  return bounds;
}

double interp_eval(const GridField& field, const Vec& y) {
  const CartesianGrid& g = field.grid;
  const int d = g.dim();
  if (static_cast<int>(y.size()) != d)
    throw std::invalid_argument("interp_eval: dimension mismatch");
  std::vector<std::size_t> cell(d);
  Vec w(d);
  for (int a = 0; a < d; ++a) {
    const Vec& ax = g.axes[a];
    if (y[a] < ax.front() || y[a] > ax.back())
      throw std::out_of_range("interp_eval: point outside grid bounding box");
    std::size_t hi = std::upper_bound(ax.begin(), ax.end(), y[a]) - ax.begin();
    if (hi >= ax.size()) hi = ax.size() - 1;
    if (hi == 0) hi = 1;
    cell[a] = hi - 1;
    w[a] = (y[a] - ax[hi - 1]) / (ax[hi] - ax[hi - 1]);
  }
  // Strides in the row-major value array.
  std::vector<std::size_t> stride(d, 1);
  for (int a = d - 2; a >= 0; --a) stride[a] = stride[a + 1] * g.axes[a + 1].size();
  double acc = 0.0;
  for (std::size_t corner = 0; corner < (std::size_t(1) << d); ++corner) {
    double weight = 1.0;
    std::size_t idx = 0;
    for (int a = 0; a < d; ++a) {
      bool hi = (corner >> a) & 1u;
      weight *= hi ? w[a] : 1.0 - w[a];
      idx += (cell[a] + (hi ? 1 : 0)) * stride[a];
    }
    acc += weight * field.values[idx];
  }
  return acc;
}

void write_field_csv(const GridField& field, std::ostream& os) {
  const CartesianGrid& g = field.grid;
  os.precision(17);
  for (int a = 0; a < g.dim(); ++a)
    os << g.axes[a].size() << (a + 1 < g.dim() ? "," : "\n");
  for (int a = 0; a < g.dim(); ++a)
    for (std::size_t i = 0; i < g.axes[a].size(); ++i)
      os << g.axes[a][i] << (i + 1 < g.axes[a].size() ? "," : "\n");
  for (std::size_t i = 0; i < field.values.size(); ++i)
    os << field.values[i] << "\n";
}

namespace {
Vec parse_csv_row(const std::string& line) {
  Vec out;
  std::stringstream ss(line);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(std::stod(tok));
  return out;
}
}  // namespace

GridField read_field_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("csv: missing header");
  Vec sizes = parse_csv_row(line);
  std::vector<Vec> axes;
  for (double sz : sizes) {
    if (!std::getline(is, line)) throw std::runtime_error("csv: missing axis");
    Vec ax = parse_csv_row(line);
    if (ax.size() != static_cast<std::size_t>(sz))
      throw std::runtime_error("csv: axis length mismatch");
    axes.push_back(std::move(ax));
  }
  CartesianGrid g(std::move(axes));
  std::vector<double> vals;
  vals.reserve(g.size());
  while (std::getline(is, line))
    if (!line.empty()) vals.push_back(std::stod(line));
  return GridField(std::move(g), std::move(vals));
}

void write_field_binary(const GridField& field, std::ostream& os) {
  nlohmann::json header;
  header["dim"] = field.grid.dim();
  header["axes"] = field.grid.axes;
  header["count"] = field.values.size();
  os << header.dump() << "\n";
  os.write(reinterpret_cast<const char*>(field.values.data()),
           static_cast<std::streamsize>(field.values.size() * sizeof(double)));
}

GridField read_field_binary(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("binary: missing header");
  nlohmann::json header = nlohmann::json::parse(line);
  std::vector<Vec> axes = header["axes"].get<std::vector<Vec>>();
  std::size_t count = header["count"].get<std::size_t>();
  std::vector<double> vals(count);
  is.read(reinterpret_cast<char*>(vals.data()),
          static_cast<std::streamsize>(count * sizeof(double)));
  if (!is) throw std::runtime_error("binary: truncated value block");
  return GridField(CartesianGrid(std::move(axes)), std::move(vals));
}

}  // namespace dlt
