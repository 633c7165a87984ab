// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "dlt/convex.hpp"

namespace dlt {

// Product grid with sorted, strictly increasing nodes per axis.
struct CartesianGrid {
  std::vector<Vec> axes;

  explicit CartesianGrid(std::vector<Vec> axes_);
  CartesianGrid() = default;

  int dim() const { return static_cast<int>(axes.size()); }
  std::size_t size() const;  // checked product

  static CartesianGrid uniform(const Vec& lo, const Vec& hi,
                               const std::vector<int>& n_per_axis);
  static CartesianGrid uniform(double lo, double hi, int n, int dim);

  Vec node(std::size_t flat_index) const;  // row-major axis order
};

struct GridField {
  CartesianGrid grid;
  std::vector<double> values;

  GridField() = default;
  GridField(CartesianGrid g, std::vector<double> v);

  // Fills values by evaluating fn at every grid node.
  static GridField tabulate(const CartesianGrid& g,
                            const std::function<double(const Vec&)>& fn);
};

// Thrown when an intermediate tensor would exceed the configured memory cap.
struct GridMemoryError : std::runtime_error {
  std::size_t required_bytes;
  GridMemoryError(std::size_t bytes, std::size_t cap);
};

// Discrete conjugate by exhaustive max over all primal nodes: O(N^{2d}).
// The serial path doubles as the reference implementation for llt_nested
// and for the OpenMP kernel.
GridField brute_force_conjugate(const GridField& field,
                                const CartesianGrid& dual,
                                bool parallel = true);

// 1-D linear-time Legendre transform: lower convex hull by monotone chain,
// hull-edge slopes, then a single merge pass over the (sorted) slopes.
Vec llt_1d(const Vec& x_nodes, const Vec& f_values, const Vec& slopes);

// Indices of the lower convex hull of (x_i, f_i), x strictly increasing.
std::vector<std::size_t> lower_hull_indices(const Vec& x_nodes,
                                            const Vec& f_values);

// d-dimensional conjugate by nested per-axis llt_1d sweeps, axis 0 -> d-1.
GridField llt_nested(const GridField& field, const CartesianGrid& dual,
                     std::size_t memory_cap_bytes = std::size_t(2) << 30);

// Coordinate-wise (min, max) of the gradient over all primal grid nodes.
std::vector<std::pair<double, double>> dual_grid_bounds(
    const ConvexFunction& f, const CartesianGrid& primal);

// Multilinear interpolation; y must lie within the grid's bounding box.
double interp_eval(const GridField& field, const Vec& y);

// CSV: header row of axis sizes, axis node rows, then flat values.
void write_field_csv(const GridField& field, std::ostream& os);
GridField read_field_csv(std::istream& is);

// Binary: one JSON header line, then little-endian 64-bit floats.
void write_field_binary(const GridField& field, std::ostream& os);
GridField read_field_binary(std::istream& is);

}  // namespace dlt
