#include <doctest.h>

#include <cmath>

#include "horoflow/error.hpp"
#include "horoflow/quadrature.hpp"

using namespace horoflow;

namespace {

// int_{-L}^{L} y^k e^{c y} dy in closed form, k = 0, 1, 2.
double moment1d(int k, double c, double L) {
  if (std::abs(c) < 1e-12) return k == 1 ? 0.0 : (k == 0 ? 2 * L : 2 * L * L * L / 3);
  const double ep = std::exp(c * L), em = std::exp(-c * L);
  const double i0 = (ep - em) / c;
  if (k == 0) return i0;
  const double i1 = (L * ep + L * em) / c - i0 / c;
  if (k == 1) return i1;
  return (L * L * ep - L * L * em) / c - 2.0 * i1 / c;
}

ConvexRegion box(double L) {
  ConvexRegion R;
  R.dim = 2;
  R.add(make_vec({1, 0}), L);
  R.add(make_vec({-1, 0}), L);
  R.add(make_vec({0, 1}), L);
  R.add(make_vec({0, -1}), L);
  return R;
}

}  // namespace

TEST_SUITE("quadrature") {
  TEST_CASE("polynomial times exponential on a box") {
    const double a = 0.7, b = -1.3, L = 2.0;
    const double exact[3] = {moment1d(0, a, L) * moment1d(0, b, L), moment1d(1, a, L) * moment1d(0, b, L),
                             moment1d(2, a, L) * moment1d(1, b, L)};
    auto f = [&](const Vec& y) {
      const double w = std::exp(a * y(0) + b * y(1));
      return make_vec({w, y(0) * w, y(0) * y(0) * y(1) * w});
    };
    auto res = integrate_adaptive(box(L), f, 3);
    for (int i = 0; i < 3; ++i) CHECK(std::abs(res.value(i) - exact[i]) <= 1e-8 * std::abs(exact[i]));
  }

  TEST_CASE("dyadic refinement converges on a clipped triangle") {
    // 2P for the CP^2 triangle: vertices (-2,-2), (4,-2), (-2,4).
    ConvexRegion T;
    T.dim = 2;
    T.add(make_vec({-1, 0}), 2);
    T.add(make_vec({0, -1}), 2);
    T.add(make_vec({1, 1}), 2);
    auto f = [](const Vec& y) { return make_vec({1.0, y(0), y(0) * y(0), std::exp(0.3 * y(0) - 0.2 * y(1))}); };
    // Area 18; centroid at the origin; second moment Area/6 * sum of x_i x_j.
    double prev = INFINITY;
    for (int level = 1; level <= 4; ++level) {
      Vec v = apply_rule(build_rule(T, level), f, 4);
      CHECK(v(0) == doctest::Approx(18.0).epsilon(1e-13));
      CHECK(std::abs(v(1)) < 1e-12);
      CHECK(v(2) == doctest::Approx(36.0).epsilon(1e-13));
      // Exponential part: int_{y=-2}^{4} e^{-0.2 y} int_{x=-2}^{2-y} e^{0.3 x} dx dy.
      const double a = 0.3, b = -0.2;
      const double exact = (std::exp(2 * a) * (std::exp((b - a) * 4) - std::exp(-(b - a) * 2)) / (b - a) -
                            std::exp(-2 * a) * (std::exp(b * 4) - std::exp(-b * 2)) / b) / a;
      const double err = std::abs(v(3) - exact) / exact;
      CHECK(err <= std::max(1e-13, prev));
      prev = err;
      if (level == 4) CHECK(err < 1e-8);
    }
  }

  TEST_CASE("refinement that cannot converge is a quadrature error") {
    QuadOptions opt;
    opt.max_level = 2;
    opt.rtol = 1e-15;
    auto f = [](const Vec& y) { return make_vec({std::sqrt(std::abs(y(0) - 0.123))}); };
    CHECK_THROWS_AS(integrate_adaptive(box(1.0), f, 1, opt), QuadratureError);
  }
}
