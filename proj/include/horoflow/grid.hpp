#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "horoflow/types.hpp"

namespace horoflow {

/// Uniform tensor grid on an axis-aligned box. Nodes are stored in
/// row-major order with the last axis varying fastest.
class Grid {
 public:
  Grid() = default;
  Grid(std::vector<double> lo, std::vector<double> hi, std::vector<int> nodes);

  int dim() const { return static_cast<int>(lo_.size()); }
  std::size_t size() const { return size_; }
  double lo(int axis) const { return lo_[axis]; }
  double hi(int axis) const { return hi_[axis]; }
  int nodes(int axis) const { return n_[axis]; }
  double spacing(int axis) const { return h_[axis]; }
  double cell_volume() const;
  std::size_t stride(int axis) const { return stride_[axis]; }

  const std::vector<double>& lo() const { return lo_; }
  const std::vector<double>& hi() const { return hi_; }
  const std::vector<int>& nodes() const { return n_; }

  Vec node(std::size_t index) const;
  double coord(int axis, int i) const;
  std::vector<int> multi_index(std::size_t index) const;
  std::size_t flat_index(const std::vector<int>& multi) const;
  /// Index on one axis of a flat index.
  int axis_index(std::size_t index, int axis) const {
    return static_cast<int>((index / stride_[axis]) % static_cast<std::size_t>(n_[axis]));
  }
  bool on_boundary(std::size_t index) const;

  /// Node nearest to x (clamped to the box).
  std::size_t nearest(const Vec& x) const;

  /// Tensor trapezoid weights.
  std::vector<double> trapezoid_weights() const;

  /// Neighbor index along one axis, reflected evenly at the box faces.
  std::size_t neighbor(std::size_t index, int axis, int delta) const;

 private:
  std::vector<double> lo_, hi_, h_;
  std::vector<int> n_;
  std::vector<std::size_t> stride_;
  std::size_t size_ = 0;
};

using StencilTerms = std::vector<std::pair<std::size_t, double>>;

/// Central-difference weights at a node: grad[a] and hess[a * dim + b].
/// The field is extended evenly across the box faces, so normal derivatives
/// vanish there.
struct FdStencil {
  std::vector<StencilTerms> grad;
  std::vector<StencilTerms> hess;
};
FdStencil fd_stencil(const Grid& grid, std::size_t node);

/// Central differences of f at a node (see fd_stencil).
void fd_derivatives(const Grid& grid, std::span<const double> f, std::size_t node, Vec& grad,
                    Mat& hess);

/// Symmetric grid [-half_width, half_width]^dim with the given spacing.
Grid symmetric_grid(int dim, double half_width, double spacing);

}  // namespace horoflow
