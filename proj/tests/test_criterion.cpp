#include <doctest.h>

#include <random>

#include "horoflow/criterion.hpp"
#include "horoflow/error.hpp"
#include "oracles.hpp"

using namespace horoflow;

namespace {

std::vector<Facet> translated(std::vector<Facet> facets, const Vec& v) {
  for (auto& f : facets) f.offset += f.normal.dot(v);
  return facets;
}

std::vector<Facet> hexagon() {
  std::vector<Facet> f;
  for (const Vec& n : {make_vec({1, 0}), make_vec({0, 1}), make_vec({1, 1})}) {
    f.push_back({n, 1.0});
    f.push_back({-n, 1.0});
  }
  return f;
}

}  // namespace

TEST_SUITE("criterion") {
  TEST_CASE("closed-form oracle for the CP2 blowup soliton vector") {
    const double s = testing::cp2_blowup_soliton_component();
    auto rs = torus(2);
    auto P = make_polytope(rs, polytope_preset_facets("cp2_blowup"));
    auto sol = solve_soliton_vector(P, toric_geometry(rs));
    CHECK(std::abs(sol.X(0) - s) < 1e-6);
    CHECK(std::abs(sol.X(1) - s) < 1e-6);
    CHECK(sol.gradient_norm < 1e-9);
    auto ke = test_existence(P, toric_geometry(rs), Vec::Zero(2));
    CHECK(ke.status == CriterionStatus::Fails);
    auto so = test_existence(P, toric_geometry(rs), sol.X);
    CHECK(so.exists);
  }

  TEST_CASE("centrally symmetric toric polytopes have zero barycenter") {
    auto rs = torus(2);
    for (const auto& facets : {polytope_preset_facets("square"), hexagon()}) {
      auto P = make_polytope(rs, facets);
      auto rep = test_existence(P, toric_geometry(rs), Vec::Zero(2));
      CHECK(rep.barycenter.norm() < 1e-12);
      CHECK(rep.exists);
      CHECK(solve_soliton_vector(P, toric_geometry(rs)).X.norm() < 1e-10);
    }
  }

  TEST_CASE("skewed A1 polytope fails on the predicted root") {
    // 2P_+ = [0, 2a] with weight y^2: barycenter 3a/2, below 2 rho = 2 alpha.
    const double a = 0.5;
    auto rs = build_root_system('A', 1, 0);
    auto P = make_polytope(rs, {{make_vec({1.0}), a}, {make_vec({-1.0}), a}});
    auto rep = test_existence(P, make_geometry(rs, "group"), Vec::Zero(1));
    CHECK(rep.barycenter(0) == doctest::Approx(1.5 * a).epsilon(1e-10));
    REQUIRE(rep.margins.size() == 1);
    CHECK(rep.margins[0].label == "a1");
    CHECK(rep.margins[0].margin == doctest::Approx(std::sqrt(2.0) * (1.5 * a - 2.0 * std::sqrt(2.0))).epsilon(1e-10));
    CHECK_FALSE(rep.exists);
    CHECK(rep.status == CriterionStatus::Fails);
  }

  TEST_CASE("gradient of the log-partition function is the barycenter") {
    auto rs = torus(2);
    auto P = make_polytope(rs, polytope_preset_facets("cp2_blowup"));
    BarycenterProblem prob(P, toric_geometry(rs));
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(-1, 1);
    for (int s = 0; s < 10; ++s) {
      Vec X = make_vec({u(rng), u(rng)});
      auto m = prob.moments(X);
      for (int a = 0; a < 2; ++a) {
        Vec e = Vec::Zero(2);
        e(a) = 1e-5;
        const double fd = (prob.moments(X + e).log_mass - prob.moments(X - e).log_mass) / 2e-5;
        CHECK(std::abs(fd - m.mean(a)) <= 1e-5 * std::max(1.0, std::abs(m.mean(a))));
      }
      CHECK(Eigen::SelfAdjointEigenSolver<Mat>(m.cov).eigenvalues().minCoeff() > -1e-12);
    }
  }

  TEST_CASE("translating a toric polytope by v moves the barycenter by 2v") {
    auto rs = torus(2);
    const Vec v = make_vec({0.3, -0.2});
    const Vec X = make_vec({0.4, 0.1});
    auto P = make_polytope(rs, polytope_preset_facets("cp2_blowup"));
    auto Q = make_polytope(rs, translated(polytope_preset_facets("cp2_blowup"), v));
    const Vec b0 = barycenter(P, toric_geometry(rs), X);
    const Vec b1 = barycenter(Q, toric_geometry(rs), X);
    CHECK((b1 - b0 - 2.0 * v).norm() < 1e-10);
  }

  TEST_CASE("scaling the pairing weight leaves X and the barycenter unchanged") {
    const std::vector<Facet> facets = {{make_vec({1, 0}), 1.0}, {make_vec({0, 1}), 1.0}, {make_vec({-1, -1}), 1.5}};
    auto rs1 = build_root_system('A', 1, 1);
    auto rs3 = build_root_system('A', 1, 1, Mat(3.0 * Mat::Identity(2, 2)));
    auto P1 = make_polytope(rs1, facets);
    auto P3 = make_polytope(rs3, facets);
    auto g1 = make_geometry(rs1, "group");
    auto g3 = make_geometry(rs3, "group");
    auto s1 = solve_soliton_vector(P1, g1);
    auto s3 = solve_soliton_vector(P3, g3);
    CHECK(s1.X.norm() > 1e-3);
    CHECK((s1.X - s3.X).norm() < 1e-8);
    auto r1 = test_existence(P1, g1, s1.X);
    auto r3 = test_existence(P3, g3, s3.X);
    CHECK((r1.barycenter - r3.barycenter).norm() < 1e-8);
    REQUIRE(r1.margins.size() == 1);
    CHECK(r3.margins[0].margin == doctest::Approx(3.0 * r1.margins[0].margin).epsilon(1e-8));
  }

  TEST_CASE("necessary check is skipped for non-converged runs") {
    auto rs = torus(1);
    auto P = make_polytope(rs, polytope_preset_facets("interval"));
    auto rep = necessary_check(P, toric_geometry(rs), Vec::Zero(1), false);
    CHECK(rep.status == CriterionStatus::NotApplicable);
    auto ok = necessary_check(P, toric_geometry(rs), Vec::Zero(1), true);
    CHECK(ok.exists);
    CHECK(ok.barycenter.norm() <= 1e-8);
  }
}
