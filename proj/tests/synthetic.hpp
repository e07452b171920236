#pragma once

#include <random>
#include <vector>

#include "horoflow/classifier.hpp"

namespace horoflow::testing {

// x_t = a0 + t Y + N(0, sigma^2) per component, t uniform on [0, T].
inline Trajectory synthetic_trajectory(const Vec& a0, const Vec& Y, double T, int n, double sigma,
                                       std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, sigma);
  Trajectory tr;
  tr.dim = static_cast<int>(a0.size());
  for (int i = 0; i < n; ++i) {
    TrajectoryRow r;
    r.t = T * i / (n - 1);
    r.x = a0 + r.t * Y;
    for (Eigen::Index a = 0; a < r.x.size(); ++a) r.x(a) += noise(rng);
    tr.rows.push_back(r);
  }
  return tr;
}

// Checkpoint whose psi is the quadratic 0.5 (x - c)^T Q (x - c) + <b, x> on a
// box around c, with h = <Y, grad psi> + h0 exactly. Central differences are
// exact on quadratics, so the regression has zero residual.
inline Checkpoint manufactured_checkpoint(double t, const Vec& c, const Vec& Y, double h0, double half,
                                          double spacing) {
  const int r = static_cast<int>(c.size());
  std::vector<double> lo(r), hi(r);
  std::vector<int> nodes(r);
  const int m = static_cast<int>(std::lround(half / spacing));
  for (int a = 0; a < r; ++a) {
    lo[a] = c(a) - m * spacing;
    hi[a] = c(a) + m * spacing;
    nodes[a] = 2 * m + 1;
  }
  Checkpoint cp;
  cp.t = t;
  cp.grid = Grid(lo, hi, nodes);
  cp.x_t = c;
  cp.shift = Vec::Zero(r);
  Mat Q = Mat::Identity(r, r);
  for (int a = 0; a + 1 < r; ++a) Q(a, a + 1) = Q(a + 1, a) = 0.3;
  Vec b = Vec::LinSpaced(r, 0.5, -0.5);
  cp.psi.resize(cp.grid.size());
  cp.h.resize(cp.grid.size());
  for (std::size_t k = 0; k < cp.grid.size(); ++k) {
    const Vec x = cp.grid.node(k);
    const Vec d = x - c;
    cp.psi[k] = 0.5 * d.dot(Q * d) + b.dot(x);
    cp.h[k] = Y.dot(Q * d + b) + h0;
  }
  return cp;
}

inline void add_checkpoints(Trajectory& tr, const Vec& Y, double spacing) {
  const double T = tr.rows.back().t;
  for (const auto& row : tr.rows)
    if (row.t >= 0.6 * T && static_cast<int>(row.t) % 10 == 0 && std::abs(row.t - std::round(row.t)) < 1e-9)
      tr.checkpoints.push_back(manufactured_checkpoint(row.t, row.x, Y, 0.25, 2.0, spacing));
}

}  // namespace horoflow::testing
