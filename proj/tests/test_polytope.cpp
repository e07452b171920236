#include <doctest.h>

#include <random>

#include "horoflow/error.hpp"
#include "horoflow/polytope.hpp"

using namespace horoflow;

namespace {

bool has_vertex(const MomentPolytope& P, const Vec& v) {
  for (const auto& w : P.vertices)
    if ((w.point - v).norm() < 1e-9) return true;
  return false;
}

}  // namespace

TEST_SUITE("polytope") {
  TEST_CASE("preset vertices") {
    auto rs = torus(2);
    auto sq = make_polytope(rs, polytope_preset_facets("square"));
    CHECK(sq.vertices.size() == 4);
    CHECK(is_fine(sq));
    auto bl = make_polytope(rs, polytope_preset_facets("cp2_blowup"));
    CHECK(bl.vertices.size() == 4);
    for (const Vec& v : {make_vec({-1, 0}), make_vec({-1, 2}), make_vec({2, -1}), make_vec({0, -1})})
      CHECK(has_vertex(bl, v));
    auto t = make_polytope(rs, polytope_preset_facets("cp2"));
    CHECK(t.vertices.size() == 3);
    CHECK(t.contains(make_vec({0.0, 0.0})));
    CHECK_FALSE(t.contains(make_vec({1.0, 1.0})));
  }

  TEST_CASE("cube vertices in three dimensions") {
    std::vector<Vec> n;
    std::vector<double> b;
    for (int a = 0; a < 3; ++a)
      for (double s : {1.0, -1.0}) {
        Vec e = Vec::Zero(3);
        e(a) = s;
        n.push_back(e);
        b.push_back(1.0);
      }
    CHECK(enumerate_vertices(n, b, 3).size() == 8);
  }

  TEST_CASE("validation errors") {
    auto rs = torus(2);
    CHECK_THROWS_AS(make_polytope(rs, {{make_vec({1, 0}), 1}, {make_vec({-1, 0}), 1}}), GeometryError);
    auto a1 = build_root_system('A', 1, 0);
    CHECK_THROWS_AS(make_polytope(a1, {{make_vec({1.0}), 1.0}, {make_vec({-1.0}), 2.0}}), GeometryError);
    CHECK_THROWS_AS(polytope_preset_facets("dodecahedron"), ConfigError);
  }

  TEST_CASE("reference potential: gradient in 2P, convex, derivatives consistent") {
    auto rs = torus(2);
    auto P = make_polytope(rs, polytope_preset_facets("cp2_blowup"));
    auto ref = reference_potential(P, 1);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-8, 8);
    for (int s = 0; s < 50; ++s) {
      Vec x = make_vec({u(rng), u(rng)});
      double v;
      Vec g;
      Mat H;
      ref.evaluate(x, v, g, H);
      CHECK(P.contains(0.5 * g, 1e-12));
      CHECK(Eigen::SelfAdjointEigenSolver<Mat>(H).eigenvalues().minCoeff() > 0);
      for (int a = 0; a < 2; ++a) {
        Vec e = Vec::Zero(2);
        e(a) = 1e-6;
        CHECK(g(a) == doctest::Approx((ref.value(x + e) - ref.value(x - e)) / 2e-6).epsilon(1e-6));
      }
    }
  }

  TEST_CASE("reference potential support is Weyl closed") {
    auto rs = build_root_system('A', 1, 0);
    auto P = make_polytope(rs, polytope_preset_facets("a1_symmetric"));
    auto ref = reference_potential(P, 1);
    for (const auto& p : ref.support()) {
      bool found = false;
      for (const auto& q : ref.support()) found = found || (q + p).norm() < 1e-12;
      CHECK(found);
    }
    CHECK(ref.value(make_vec({1.3})) == doctest::Approx(ref.value(make_vec({-1.3}))).epsilon(1e-14));
  }
}
