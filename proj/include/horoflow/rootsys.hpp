#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "horoflow/grid.hpp"
#include "horoflow/types.hpp"

namespace horoflow {

/// Root datum of a reductive group on the real Cartan subspace a = a_ss + a_c.
///
/// Vectors of a and a* share one coordinate system: the root pairing
/// <alpha, x> is the plain dot product, while the inner product on a* is
/// (lambda, mu) = lambda^T gram mu. The induced inner product on a is gram^{-1}.
/// Families A-D use the standard orthonormal realizations; A_n with at least
/// one central direction is realized on R^{n+1}, whose diagonal is central.
struct RootSystem {
  char family = 'T';
  int ss_rank = 0;
  int rank = 0;  ///< dim a
  int center_dim = 0;
  Mat gram;
  Mat gram_inv;
  std::vector<Vec> simple_roots;
  /// Ordered by height, then by simple-root coefficients (larger leading first).
  std::vector<Vec> positive_roots;
  std::vector<std::vector<int>> coefficients;
  /// Columns form a gram^{-1}-orthonormal basis of a_c.
  Mat center_basis;

  double pairing(const Vec& root, const Vec& x) const { return root.dot(x); }
  double inner(const Vec& a, const Vec& b) const { return a.dot(gram * b); }
  double norm(const Vec& x) const;  ///< norm on a
  Vec coroot(const Vec& root) const;
  /// Reflection s_alpha acting on a.
  Vec reflect(const Vec& root, const Vec& x) const;
  /// Reflection s_alpha acting on a*.
  Vec reflect_weight(const Vec& root, const Vec& y) const;
  Vec two_rho() const;
  int height(std::size_t i) const;
  std::string label(std::size_t i) const;
  /// Index of a positive root matching v, if any.
  std::optional<std::size_t> find_positive(const Vec& v, double tol = 1e-9) const;
};

/// family in {A, B, C, D}; `rank` is the semisimple rank.
RootSystem build_root_system(char family, int rank, int center_dim,
                             const std::optional<Mat>& gram_override = std::nullopt);

/// Torus of the given dimension: no roots, a = a_c.
RootSystem torus(int dim);

/// Root system generated by explicit simple roots; a_c is their annihilator.
RootSystem root_system_from_simple(std::vector<Vec> simple_roots, Mat gram);

bool in_chamber(const RootSystem& rs, const Vec& x, std::span<const Vec> roots);

/// Returns (center component, Pj(x)).
std::pair<Vec, Vec> project_center(const RootSystem& rs, const Vec& x);

/// Order of the group generated by reflections in `roots`, via the orbit of a
/// generic point. Returns nullopt beyond `cap`.
std::optional<std::size_t> weyl_order(const RootSystem& rs, std::span<const Vec> roots,
                                      std::size_t cap = 10000);

/// Node permutation induced by s_alpha on a grid; GeometryError if the grid
/// is not stable under the reflection.
std::vector<std::size_t> reflection_permutation(const Grid& grid, const RootSystem& rs,
                                                const Vec& root);

/// Average of f over the orbit of every node under the group generated by
/// reflections in `roots` (the simple roots when empty). Only sign = +1.
std::vector<double> symmetrize(const RootSystem& rs, const Grid& grid,
                               std::span<const double> f, int sign = +1,
                               std::span<const Vec> roots = {});

/// Same, with precomputed generator permutations.
void symmetrize_in_place(std::span<double> f,
                         const std::vector<std::vector<std::size_t>>& perms);

}  // namespace horoflow
