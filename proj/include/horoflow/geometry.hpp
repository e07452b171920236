#pragma once

#include <string>
#include <vector>

#include "horoflow/rootsys.hpp"
#include "horoflow/types.hpp"

namespace horoflow {

struct WeightedRoot {
  Vec root;
  int exponent = 2;
};

/// One root appearing in pi and/or J, with the exponent in each (0 = absent).
struct RootTerm {
  Vec root;
  int pi_exp = 0;
  int j_exp = 0;
};

/// Weighted root data of the reduced Monge-Ampere operator:
///   J(x)  = prod sinh^{m}(<alpha, x>)  over j_roots,
///   pi(y) = prod (alpha, y)^{m}        over pi_roots,
/// with the gradient shift applied inside pi, and the admissible cone bounded
/// by the walls of cone_roots.
struct ReducedGeometry {
  RootSystem rs;
  std::string kind = "group";
  std::vector<WeightedRoot> j_roots;
  std::vector<WeightedRoot> pi_roots;
  Vec grad_shift;
  std::vector<Vec> cone_roots;
  Vec rho_u;
  std::vector<std::size_t> phi_u;  ///< indices into rs.positive_roots

  int rank() const { return rs.rank; }
  /// pi_roots and j_roots merged by root, in pi_roots order.
  std::vector<RootTerm> terms() const;
  /// 2 rho as it enters the existence criterion: sum of m alpha over j_roots
  /// plus the gradient shift.
  Vec two_rho() const;
  /// Complex dimension of the open orbit: r + sum of pi exponents.
  int complex_dim() const;
};

/// Preset kinds: "group", "horosymmetric", "degenerate-limit".
/// shift_multiplier scales rho_u in the gradient shift (default 2, or 4 for
/// the degenerate limit when negative is passed).
ReducedGeometry make_geometry(const RootSystem& rs, const std::string& kind,
                              const std::vector<std::size_t>& phi_u = {},
                              double shift_multiplier = -1.0);

/// Geometry with no roots: J = pi = 1.
ReducedGeometry toric_geometry(const RootSystem& rs);

double eval_J(const ReducedGeometry& g, const Vec& x);
/// -log J; WallError on or outside a cone wall.
double eval_j(const ReducedGeometry& g, const Vec& x);
Vec grad_j(const ReducedGeometry& g, const Vec& x);
double eval_pi(const ReducedGeometry& g, const Vec& y);

/// Smallest cone pairing <alpha, x> over cone roots (+inf if none).
double cone_margin(const ReducedGeometry& g, const Vec& x);
bool inside_cone(const ReducedGeometry& g, const Vec& x);

struct RootBlock {
  Vec root;
  int size = 2;   ///< 2 for a doubled root (pair block), 1 otherwise
  double a = 0;   ///< diagonal entry
  double b = 0;   ///< off-diagonal magnitude (entries are +-i b); 0 for 1x1 blocks
  double det() const { return size == 2 ? a * a - b * b : a; }
};

struct HessianBlocks {
  Mat real_block;  ///< Hess_R / 4
  std::vector<RootBlock> root_blocks;
  double det_product() const;
};

HessianBlocks complex_hessian_blocks(const ReducedGeometry& g, const Mat& hess,
                                     const Vec& grad, const Vec& x);

double ma_complex(const ReducedGeometry& g, const Mat& hess, const Vec& grad, const Vec& x,
                  int n);

struct PositivityReport {
  bool hess_positive = false;
  bool semisimple_positive = false;
  bool unipotent_positive = false;
  double min_margin = 0;
};

PositivityReport positivity_check(const ReducedGeometry& g, const Mat& hess, const Vec& grad,
                                  const Vec& x);

}  // namespace horoflow
