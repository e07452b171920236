#pragma once

#include <complex>
#include <random>

#include "horoflow/geometry.hpp"

namespace horoflow::testing {

struct Sample {
  Vec x;
  Vec grad;
  Mat hess;
};

// Random x inside the cone, gradient with all shifted pi pairings positive,
// and a positive definite Hessian.
inline Sample random_sample(const ReducedGeometry& g, std::mt19937_64& rng) {
  std::normal_distribution<double> n01;
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  const int r = g.rank();
  Sample s;
  for (;;) {
    s.x = Vec(r);
    for (int a = 0; a < r; ++a) s.x(a) = u(rng);
    if (cone_margin(g, s.x) > 0.1) break;
  }
  for (;;) {
    s.grad = Vec(r);
    for (int a = 0; a < r; ++a) s.grad(a) = u(rng);
    bool ok = true;
    for (const auto& w : g.pi_roots) ok = ok && g.rs.inner(w.root, s.grad + g.grad_shift) > 0.1;
    if (ok) break;
  }
  Mat A(r, r);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < r; ++j) A(i, j) = n01(rng);
  s.hess = A * A.transpose() + 0.1 * Mat::Identity(r, r);
  return s;
}

// Assembles the complex Hessian of an invariant potential in the adapted
// frame: Hess/4 on the torus directions, and per root alpha with
// p = (alpha, grad + shift)/2, s = <alpha, x>:
//   doubled root with a J factor:   [[p coth s, i p], [-i p, p coth s]]
//   doubled root without J:         diag(p, p)
//   single root with J:             p / sinh s
//   single root without J:          p
// and returns the determinant from a complex LU factorization.
inline double explicit_complex_det(const ReducedGeometry& g, const Mat& hess, const Vec& grad, const Vec& x) {
  using C = std::complex<double>;
  const auto terms = g.terms();
  int n = g.rank();
  for (const auto& t : terms) n += t.pi_exp;
  Eigen::MatrixXcd M = Eigen::MatrixXcd::Zero(n, n);
  M.topLeftCorner(g.rank(), g.rank()) = (0.25 * hess).cast<C>();
  int k = g.rank();
  for (const auto& t : terms) {
    const double p = 0.5 * g.rs.inner(t.root, grad + g.grad_shift);
    const double s = g.rs.pairing(t.root, x);
    if (t.pi_exp == 2) {
      const double d = t.j_exp ? p * std::cosh(s) / std::sinh(s) : p;
      const double o = t.j_exp ? p : 0.0;
      M(k, k) = d;
      M(k + 1, k + 1) = d;
      M(k, k + 1) = C(0, o);
      M(k + 1, k) = C(0, -o);
      k += 2;
    } else {
      M(k, k) = t.j_exp ? p / std::sinh(s) : p;
      k += 1;
    }
  }
  return M.partialPivLu().determinant().real();
}

}  // namespace horoflow::testing
