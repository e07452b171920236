#include <doctest.h>

#include <cmath>
#include <random>

#include "horoflow/error.hpp"
#include "horoflow/rootsys.hpp"

using namespace horoflow;

namespace {

struct Case {
  char family;
  int n;
  std::size_t positive;
  std::size_t weyl;
};

// Counts from the classification: |Phi_+| and |W|.
const Case kCases[] = {{'A', 1, 1, 2},  {'A', 2, 3, 6},  {'A', 3, 6, 24},  {'B', 2, 4, 8},
                       {'B', 3, 9, 48}, {'C', 2, 4, 8},  {'C', 3, 9, 48},  {'D', 4, 12, 192}};

std::vector<Vec> all_roots(const RootSystem& rs) {
  std::vector<Vec> out;
  for (const auto& a : rs.positive_roots) {
    out.push_back(a);
    out.push_back(-a);
  }
  return out;
}

bool contains(const std::vector<Vec>& set, const Vec& v) {
  for (const auto& w : set)
    if ((w - v).norm() < 1e-9) return true;
  return false;
}

}  // namespace

TEST_SUITE("rootsys") {
  TEST_CASE("positive root counts and Weyl group orders") {
    for (const auto& c : kCases) {
      CAPTURE(c.family);
      CAPTURE(c.n);
      auto rs = build_root_system(c.family, c.n, 0);
      CHECK(rs.positive_roots.size() == c.positive);
      auto w = weyl_order(rs, rs.simple_roots);
      REQUIRE(w.has_value());
      CHECK(*w == c.weyl);
    }
  }

  TEST_CASE("root system axioms by enumeration") {
    for (const auto& c : kCases) {
      CAPTURE(c.family);
      CAPTURE(c.n);
      auto rs = build_root_system(c.family, c.n, 0);
      const auto roots = all_roots(rs);
      for (const auto& a : roots) {
        const double aa = rs.inner(a, a);
        for (const auto& b : roots) {
          CHECK(contains(roots, rs.reflect_weight(a, b)));
          const double cartan = 2.0 * rs.inner(a, b) / aa;
          CHECK(std::abs(cartan - std::round(cartan)) < 1e-9);
          // Reduced: the only multiples of a are +-a.
          const double cos2 = rs.inner(a, b) * rs.inner(a, b) / (aa * rs.inner(b, b));
          if (std::abs(cos2 - 1.0) < 1e-12) CHECK(((b - a).norm() < 1e-9 || (b + a).norm() < 1e-9));
        }
      }
    }
  }

  TEST_CASE("positive roots are nonnegative integer combinations ordered by height") {
    auto rs = build_root_system('B', 3, 0);
    int prev = 0;
    for (std::size_t i = 0; i < rs.positive_roots.size(); ++i) {
      Vec s = Vec::Zero(rs.rank);
      for (std::size_t k = 0; k < rs.simple_roots.size(); ++k) {
        CHECK(rs.coefficients[i][k] >= 0);
        s += rs.coefficients[i][k] * rs.simple_roots[k];
      }
      CHECK((s - rs.positive_roots[i]).norm() < 1e-12);
      CHECK(rs.height(i) >= prev);
      prev = rs.height(i);
    }
  }

  TEST_CASE("reflections on a and a* are compatible with the pairing") {
    auto rs = build_root_system('C', 2, 0);
    std::mt19937_64 rng(7);
    std::normal_distribution<double> n01;
    for (int s = 0; s < 20; ++s) {
      Vec x(rs.rank), y(rs.rank);
      for (int a = 0; a < rs.rank; ++a) {
        x(a) = n01(rng);
        y(a) = n01(rng);
      }
      for (const auto& a : rs.positive_roots) {
        CHECK(std::abs(rs.pairing(rs.reflect_weight(a, y), rs.reflect(a, x)) - rs.pairing(y, x)) < 1e-12);
        CHECK((rs.reflect(a, rs.reflect(a, x)) - x).norm() < 1e-12);
      }
    }
  }

  TEST_CASE("center projection splits x orthogonally") {
    auto rs = build_root_system('A', 2, 1);
    CHECK(rs.rank == 3);
    CHECK(rs.center_dim == 1);
    Vec x = make_vec({0.7, -1.3, 2.1});
    auto [c, pj] = project_center(rs, x);
    CHECK((c + pj - x).norm() < 1e-12);
    for (const auto& a : rs.positive_roots) CHECK(std::abs(rs.pairing(a, c)) < 1e-12);
    CHECK(std::abs(c.dot(rs.gram_inv * pj)) < 1e-12);
  }

  TEST_CASE("torus has no roots") {
    auto rs = torus(2);
    CHECK(rs.positive_roots.empty());
    CHECK(rs.center_dim == 2);
    auto [c, pj] = project_center(rs, make_vec({1.0, 2.0}));
    CHECK(pj.norm() < 1e-15);
  }

  TEST_CASE("symmetrization is idempotent and invariant") {
    auto rs = build_root_system('B', 2, 0);
    Grid g = symmetric_grid(2, 2.0, 0.25);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-1, 1);
    std::vector<double> f(g.size());
    for (auto& v : f) v = u(rng);
    auto s1 = symmetrize(rs, g, f);
    auto s2 = symmetrize(rs, g, s1);
    double diff = 0;
    for (std::size_t k = 0; k < f.size(); ++k) diff = std::max(diff, std::abs(s1[k] - s2[k]));
    CHECK(diff < 1e-14);
    for (const auto& a : rs.positive_roots) {
      auto perm = reflection_permutation(g, rs, a);
      for (std::size_t k = 0; k < f.size(); ++k) CHECK(s1[perm[k]] == doctest::Approx(s1[k]).epsilon(1e-14));
    }
  }

  TEST_CASE("grid not stable under a reflection is rejected") {
    auto rs = build_root_system('A', 2, 0);
    Grid g = symmetric_grid(2, 2.0, 0.25);
    CHECK_THROWS_AS(reflection_permutation(g, rs, rs.positive_roots[1]), GeometryError);
  }

  TEST_CASE("unsupported families are configuration errors") {
    CHECK_THROWS_AS(build_root_system('E', 6, 0), ConfigError);
    CHECK_THROWS_AS(build_root_system('D', 1, 0), ConfigError);
  }
}
