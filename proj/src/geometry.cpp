#include "horoflow/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "horoflow/error.hpp"

namespace horoflow {

namespace {

double log_sinh(double t) {
  if (t > 20.0) return t - std::log(2.0) + std::log1p(-std::exp(-2.0 * t));
  return std::log(std::sinh(t));
}

void check_walls(const ReducedGeometry& g, const Vec& x) {
  double tol = 1e-13 * std::max(1.0, x.norm());
  for (const auto& a : g.cone_roots)
    if (!(g.rs.pairing(a, x) > tol)) throw WallError("point lies on or outside a cone wall");
  for (const auto& w : g.j_roots)
    if (!(g.rs.pairing(w.root, x) > tol)) throw WallError("point lies on or outside a wall of J");
}

}  // namespace

std::vector<RootTerm> ReducedGeometry::terms() const {
  std::vector<RootTerm> out;
  auto find = [&](const Vec& v) -> RootTerm* {
    for (auto& t : out)
      if ((t.root - v).norm() < 1e-12) return &t;
    return nullptr;
  };
  for (const auto& w : pi_roots) {
    if (RootTerm* t = find(w.root)) {
      t->pi_exp += w.exponent;
    } else {
      out.push_back({w.root, w.exponent, 0});
    }
  }
  for (const auto& w : j_roots) {
    if (RootTerm* t = find(w.root)) {
      t->j_exp += w.exponent;
    } else {
      out.push_back({w.root, 0, w.exponent});
    }
  }
  return out;
}

Vec ReducedGeometry::two_rho() const {
  Vec s = grad_shift;
  for (const auto& w : j_roots) s += w.exponent * w.root;
  return s;
}

int ReducedGeometry::complex_dim() const {
  int n = rs.rank;
  for (const auto& w : pi_roots) n += w.exponent;
  return n;
}

ReducedGeometry make_geometry(const RootSystem& rs, const std::string& kind,
                              const std::vector<std::size_t>& phi_u, double shift_multiplier) {
  ReducedGeometry g;
  g.rs = rs;
  g.kind = kind;
  g.grad_shift = Vec::Zero(rs.rank);
  g.rho_u = Vec::Zero(rs.rank);
  std::vector<char> in_u(rs.positive_roots.size(), 0);
  for (std::size_t i : phi_u) {
    if (i >= rs.positive_roots.size())
      throw ConfigError("geometry.phi_u: root index " + std::to_string(i) + " out of range");
    in_u[i] = 1;
  }
  for (std::size_t i = 0; i < in_u.size(); ++i)
    if (in_u[i]) {
      g.phi_u.push_back(i);
      g.rho_u += 0.5 * rs.positive_roots[i];
    }

  int exponent = 2;
  double mult = 0.0;
  if (kind == "group") {
    if (!g.phi_u.empty()) throw ConfigError("geometry.phi_u: must be empty for the group preset");
  } else if (kind == "horosymmetric") {
    exponent = 1;
    mult = shift_multiplier < 0 ? 2.0 : shift_multiplier;
  } else if (kind == "degenerate-limit") {
    mult = shift_multiplier < 0 ? 4.0 : shift_multiplier;
  } else {
    throw ConfigError("geometry.preset: unknown preset '" + kind +
                      "' (available: group, horosymmetric, degenerate-limit)");
  }
  g.grad_shift = mult * g.rho_u;
  for (std::size_t i = 0; i < rs.positive_roots.size(); ++i) {
    const Vec& a = rs.positive_roots[i];
    g.pi_roots.push_back({a, exponent});
    if (!in_u[i]) {
      g.j_roots.push_back({a, exponent});
      g.cone_roots.push_back(a);
    }
  }
  return g;
}

ReducedGeometry toric_geometry(const RootSystem& rs) {
  ReducedGeometry g;
  g.rs = rs;
  g.kind = "toric";
  g.grad_shift = Vec::Zero(rs.rank);
  g.rho_u = Vec::Zero(rs.rank);
  return g;
}

double eval_J(const ReducedGeometry& g, const Vec& x) {
  double J = 1.0;
  for (const auto& w : g.j_roots) J *= std::pow(std::sinh(g.rs.pairing(w.root, x)), w.exponent);
  return J;
}

double eval_j(const ReducedGeometry& g, const Vec& x) {
  check_walls(g, x);
  double j = 0.0;
  for (const auto& w : g.j_roots) j -= w.exponent * log_sinh(g.rs.pairing(w.root, x));
  return j;
}

Vec grad_j(const ReducedGeometry& g, const Vec& x) {
  check_walls(g, x);
  Vec d = Vec::Zero(g.rank());
  for (const auto& w : g.j_roots) {
    double t = g.rs.pairing(w.root, x);
    d -= w.exponent / std::tanh(t) * w.root;
  }
  return d;
}

double eval_pi(const ReducedGeometry& g, const Vec& y) {
  double p = 1.0;
  for (const auto& w : g.pi_roots) p *= std::pow(g.rs.inner(w.root, y), w.exponent);
  return p;
}

double cone_margin(const ReducedGeometry& g, const Vec& x) {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& a : g.cone_roots) m = std::min(m, g.rs.pairing(a, x));
  return m;
}

bool inside_cone(const ReducedGeometry& g, const Vec& x) {
  return cone_margin(g, x) > 1e-13 * std::max(1.0, x.norm());
}

double HessianBlocks::det_product() const {
  double d = real_block.determinant();
  for (const auto& b : root_blocks) d *= b.det();
  return d;
}

HessianBlocks complex_hessian_blocks(const ReducedGeometry& g, const Mat& hess, const Vec& grad,
                                     const Vec& x) {
  check_walls(g, x);
  HessianBlocks out;
  out.real_block = 0.25 * hess;
  Vec yg = grad + g.grad_shift;
  for (const auto& t : g.terms()) {
    if (t.pi_exp == 0) throw GeometryError("complex_hessian_blocks: J root without a pi factor");
    if (t.j_exp != 0 && t.j_exp != t.pi_exp)
      throw GeometryError("complex_hessian_blocks: unmatched exponents in J and pi");
    double p = 0.5 * g.rs.inner(t.root, yg);
    double s = g.rs.pairing(t.root, x);
    RootBlock b;
    b.root = t.root;
    b.size = t.pi_exp == 2 ? 2 : 1;
    if (t.pi_exp == 2) {
      b.a = t.j_exp ? p / std::tanh(s) : p;
      b.b = t.j_exp ? p : 0.0;
    } else if (t.pi_exp == 1) {
      b.a = t.j_exp ? p / std::sinh(s) : p;
    } else {
      throw GeometryError("complex_hessian_blocks: exponents must be 1 or 2");
    }
    out.root_blocks.push_back(b);
  }
  return out;
}

double ma_complex(const ReducedGeometry& g, const Mat& hess, const Vec& grad, const Vec& x,
                  int n) {
  check_walls(g, x);
  double scale = std::ldexp(1.0, -(g.rank() + n));
  return scale * hess.determinant() * eval_pi(g, grad + g.grad_shift) / eval_J(g, x);
}

PositivityReport positivity_check(const ReducedGeometry& g, const Mat& hess, const Vec& grad,
                                  const Vec& x) {
  (void)x;
  PositivityReport rep;
  Eigen::LLT<Mat> llt(hess);
  rep.hess_positive = llt.info() == Eigen::Success;
  double m = std::numeric_limits<double>::infinity();
  rep.semisimple_positive = true;
  for (const auto& a : g.cone_roots) {
    double v = g.rs.inner(a, grad);
    m = std::min(m, v);
    if (!(v > 0)) rep.semisimple_positive = false;
  }
  rep.unipotent_positive = true;
  Vec shifted = grad + g.grad_shift;
  for (std::size_t i : g.phi_u) {
    double v = g.rs.inner(g.rs.positive_roots[i], shifted);
    m = std::min(m, v);
    if (!(v > 0)) rep.unipotent_positive = false;
  }
  rep.min_margin = m;
  return rep;
}

}  // namespace horoflow
