#pragma once

#include <cmath>
#include <functional>

namespace horoflow::testing {

// int_{lo}^{hi} y^k e^{c y} dy for k = 0, 1, 2, by repeated integration by parts.
inline double exp_moment(int k, double c, double lo, double hi) {
  if (std::abs(c) < 1e-12) return (std::pow(hi, k + 1) - std::pow(lo, k + 1)) / (k + 1);
  const double eh = std::exp(c * hi), el = std::exp(c * lo);
  const double i0 = (eh - el) / c;
  if (k == 0) return i0;
  const double i1 = (hi * eh - lo * el) / c - i0 / c;
  if (k == 1) return i1;
  return (hi * hi * eh - lo * lo * el) / c - 2.0 * i1 / c;
}

inline double bisect(const std::function<double(double)>& f, double lo, double hi, double tol = 1e-14) {
  double flo = f(lo);
  for (int i = 0; i < 200 && hi - lo > tol; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if ((fm < 0) == (flo < 0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

// Soliton vector of the CP^2 blowup, X = (s, s). The doubled polytope is
// {y_1, y_2 >= -2, -2 <= y_1 + y_2 <= 2}; its slice at u = y_1 + y_2 has
// length u + 4, so the barycenter condition along (1, 1) reads
//   int_{-2}^{2} u (u + 4) e^{s u} du = 0.
inline double cp2_blowup_soliton_component() {
  auto g = [](double s) { return exp_moment(2, s, -2, 2) + 4.0 * exp_moment(1, s, -2, 2); };
  return bisect(g, -2.0, 0.0);
}

}  // namespace horoflow::testing
