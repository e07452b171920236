#include "horoflow/grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "horoflow/error.hpp"

namespace horoflow {

Grid::Grid(std::vector<double> lo, std::vector<double> hi, std::vector<int> nodes)
    : lo_(std::move(lo)), hi_(std::move(hi)), n_(std::move(nodes)) {
  if (lo_.size() != hi_.size() || lo_.size() != n_.size() || lo_.empty())
    throw GeometryError("grid: inconsistent box dimensions");
  const int d = dim();
  h_.resize(d);
  stride_.resize(d);
  for (int a = 0; a < d; ++a) {
    if (n_[a] < 3) throw GeometryError("grid: need at least 3 nodes per axis");
    if (!(hi_[a] > lo_[a])) throw GeometryError("grid: empty box on axis " + std::to_string(a));
    h_[a] = (hi_[a] - lo_[a]) / (n_[a] - 1);
  }
  size_ = 1;
  for (int a = d - 1; a >= 0; --a) {
    stride_[a] = size_;
    size_ *= static_cast<std::size_t>(n_[a]);
  }
}

double Grid::cell_volume() const {
  double v = 1.0;
  for (double h : h_) v *= h;
  return v;
}

double Grid::coord(int axis, int i) const {
  if (i == n_[axis] - 1) return hi_[axis];
  return lo_[axis] + i * h_[axis];
}

Vec Grid::node(std::size_t index) const {
  Vec x(dim());
  for (int a = 0; a < dim(); ++a) x(a) = coord(a, axis_index(index, a));
  return x;
}

std::vector<int> Grid::multi_index(std::size_t index) const {
  std::vector<int> m(dim());
  for (int a = 0; a < dim(); ++a) m[a] = axis_index(index, a);
  return m;
}

std::size_t Grid::flat_index(const std::vector<int>& multi) const {
  std::size_t k = 0;
  for (int a = 0; a < dim(); ++a) k += static_cast<std::size_t>(multi[a]) * stride_[a];
  return k;
}

bool Grid::on_boundary(std::size_t index) const {
  for (int a = 0; a < dim(); ++a) {
    int i = axis_index(index, a);
    if (i == 0 || i == n_[a] - 1) return true;
  }
  return false;
}

std::size_t Grid::nearest(const Vec& x) const {
  std::size_t k = 0;
  for (int a = 0; a < dim(); ++a) {
    long i = std::lround((x(a) - lo_[a]) / h_[a]);
    i = std::clamp<long>(i, 0, n_[a] - 1);
    k += static_cast<std::size_t>(i) * stride_[a];
  }
  return k;
}

std::vector<double> Grid::trapezoid_weights() const {
  std::vector<double> w(size_, cell_volume());
  for (std::size_t k = 0; k < size_; ++k) {
    for (int a = 0; a < dim(); ++a) {
      int i = axis_index(k, a);
      if (i == 0 || i == n_[a] - 1) w[k] *= 0.5;
    }
  }
  return w;
}

std::size_t Grid::neighbor(std::size_t index, int axis, int delta) const {
  int i = axis_index(index, axis);
  int j = i + delta;
  const int n = n_[axis];
  if (j < 0) j = -j;
  if (j > n - 1) j = 2 * (n - 1) - j;
  return index + static_cast<std::size_t>(j - i) * stride_[axis];
}

FdStencil fd_stencil(const Grid& grid, std::size_t k) {
  const int d = grid.dim();
  FdStencil st;
  st.grad.resize(d);
  st.hess.resize(static_cast<std::size_t>(d * d));
  for (int a = 0; a < d; ++a) {
    const double h = grid.spacing(a);
    const std::size_t p = grid.neighbor(k, a, 1), m = grid.neighbor(k, a, -1);
    st.grad[a] = {{p, 1.0 / (2.0 * h)}, {m, -1.0 / (2.0 * h)}};
    st.hess[static_cast<std::size_t>(a * d + a)] = {{p, 1.0 / (h * h)}, {m, 1.0 / (h * h)}, {k, -2.0 / (h * h)}};
    for (int b = a + 1; b < d; ++b) {
      const double c = 1.0 / (4.0 * h * grid.spacing(b));
      StencilTerms M = {{grid.neighbor(p, b, 1), c},
                        {grid.neighbor(p, b, -1), -c},
                        {grid.neighbor(m, b, 1), -c},
                        {grid.neighbor(m, b, -1), c}};
      st.hess[static_cast<std::size_t>(a * d + b)] = M;
      st.hess[static_cast<std::size_t>(b * d + a)] = std::move(M);
    }
  }
  return st;
}

void fd_derivatives(const Grid& grid, std::span<const double> f, std::size_t k, Vec& grad,
                    Mat& hess) {
  const int d = grid.dim();
  grad.resize(d);
  hess.resize(d, d);
  FdStencil st = fd_stencil(grid, k);
  auto apply = [&](const StencilTerms& t) {
    double v = 0.0;
    for (const auto& [i, w] : t) v += w * f[i];
    return v;
  };
  for (int a = 0; a < d; ++a) {
    grad(a) = apply(st.grad[a]);
    for (int b = 0; b < d; ++b) hess(a, b) = apply(st.hess[static_cast<std::size_t>(a * d + b)]);
  }
}

Grid symmetric_grid(int dim, double half_width, double spacing) {
  if (dim < 1 || half_width <= 0 || spacing <= 0)
    throw GeometryError("grid: invalid symmetric grid parameters");
  int half = static_cast<int>(std::lround(half_width / spacing));
  if (half < 1) half = 1;
  double hw = half * spacing;
  return Grid(std::vector<double>(dim, -hw), std::vector<double>(dim, hw),
              std::vector<int>(dim, 2 * half + 1));
}

}  // namespace horoflow
