#include <doctest.h>

#include <complex>
#include <random>

#include "horoflow/error.hpp"
#include "horoflow/geometry.hpp"
#include "ma_oracle.hpp"

using namespace horoflow;

TEST_SUITE("geometry") {
  TEST_CASE("group preset carries squared sinh and squared pairings") {
    auto rs = build_root_system('A', 2, 0);
    auto g = make_geometry(rs, "group");
    CHECK(g.j_roots.size() == 3);
    CHECK(g.pi_roots.size() == 3);
    CHECK(g.cone_roots.size() == 3);
    for (const auto& w : g.j_roots) CHECK(w.exponent == 2);
    CHECK(g.grad_shift.norm() == 0.0);
    CHECK(g.complex_dim() == 8);  // dim SL_3
    CHECK_THROWS_AS(make_geometry(rs, "group", {1}), ConfigError);
  }

  TEST_CASE("horosymmetric and degenerate-limit shifts") {
    auto rs = build_root_system('A', 2, 0);
    const std::vector<std::size_t> phi_u = {1, 2};
    const Vec rho_u = 0.5 * (rs.positive_roots[1] + rs.positive_roots[2]);
    auto h = make_geometry(rs, "horosymmetric", phi_u);
    CHECK((h.grad_shift - 2.0 * rho_u).norm() < 1e-14);
    CHECK(h.j_roots.size() == 1);
    CHECK(h.cone_roots.size() == 1);
    for (const auto& w : h.pi_roots) CHECK(w.exponent == 1);
    auto d = make_geometry(rs, "degenerate-limit", phi_u);
    CHECK((d.grad_shift - 4.0 * rho_u).norm() < 1e-14);
    for (const auto& w : d.pi_roots) CHECK(w.exponent == 2);
    CHECK(d.j_roots.size() == 1);
    CHECK_THROWS_AS(make_geometry(rs, "nonsense"), ConfigError);
    CHECK_THROWS_AS(make_geometry(rs, "horosymmetric", {5}), ConfigError);
  }

  TEST_CASE("j is finite inside the chamber and a wall error on it") {
    auto rs = build_root_system('B', 2, 0);
    auto g = make_geometry(rs, "group");
    Vec x = make_vec({2.0, 0.5});
    CHECK(inside_cone(g, x));
    CHECK(std::isfinite(eval_j(g, x)));
    CHECK_THROWS_AS(eval_j(g, make_vec({1.0, 1.0})), WallError);
    CHECK_THROWS_AS(eval_j(g, make_vec({-1.0, 0.5})), WallError);
  }

  TEST_CASE("grad j matches central differences") {
    auto rs = build_root_system('C', 2, 0);
    auto g = make_geometry(rs, "group");
    const Vec x = make_vec({1.3, 0.4});
    const Vec gj = grad_j(g, x);
    for (int a = 0; a < 2; ++a) {
      Vec e = Vec::Zero(2);
      e(a) = 1e-6;
      const double fd = (eval_j(g, x + e) - eval_j(g, x - e)) / 2e-6;
      CHECK(gj(a) == doctest::Approx(fd).epsilon(1e-7));
    }
  }

  TEST_CASE("ma_complex equals the determinant of the explicit complex Hessian") {
    std::mt19937_64 rng(11);
    auto rs = build_root_system('A', 2, 0);
    for (const auto& g : {make_geometry(rs, "group"), make_geometry(rs, "horosymmetric", {1, 2}),
                          make_geometry(rs, "degenerate-limit", {1, 2})}) {
      CAPTURE(g.kind);
      for (int s = 0; s < 50; ++s) {
        auto smp = testing::random_sample(g, rng);
        const double expect = testing::explicit_complex_det(g, smp.hess, smp.grad, smp.x);
        const double got = ma_complex(g, smp.hess, smp.grad, smp.x, g.complex_dim());
        CHECK(std::abs(got - expect) <= 1e-10 * std::abs(expect));
        const double blocks = complex_hessian_blocks(g, smp.hess, smp.grad, smp.x).det_product();
        CHECK(std::abs(blocks - expect) <= 1e-10 * std::abs(expect));
      }
    }
  }

  TEST_CASE("positivity report flags a nonpositive pairing") {
    auto rs = build_root_system('A', 1, 0);
    auto g = make_geometry(rs, "group");
    Mat H = Mat::Identity(1, 1);
    auto ok = positivity_check(g, H, make_vec({1.0}), make_vec({0.5}));
    CHECK(ok.hess_positive);
    CHECK(ok.semisimple_positive);
    auto bad = positivity_check(g, H, make_vec({-1.0}), make_vec({0.5}));
    CHECK_FALSE(bad.semisimple_positive);
  }
}
