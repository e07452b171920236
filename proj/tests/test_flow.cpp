#include <doctest.h>

#include <cmath>

#include "horoflow/error.hpp"
#include "horoflow/flow.hpp"

using namespace horoflow;

namespace {

// On P = [-1, 1] with J = pi = 1 the stationary equation is
// log psi'' + psi = const; psi = 2 log cosh x - log 2 gives
// psi'' = 2 sech^2 x and log psi'' + psi = 0.
double cp1_exact(double x) { return 2.0 * std::log(std::cosh(x)) - std::log(2.0); }

double sup_error_mod_constant(const Checkpoint& cp, double radius) {
  double lo = INFINITY, hi = -INFINITY;
  for (std::size_t k = 0; k < cp.grid.size(); ++k) {
    const double x = cp.grid.node(k)(0);
    if (std::abs(x) > radius + 1e-12) continue;
    const double e = cp.psi[k] - cp1_exact(x);
    lo = std::min(lo, e);
    hi = std::max(hi, e);
  }
  return 0.5 * (hi - lo);
}

Trajectory cp1_run(double spacing, const std::string& scheme, double t_final = 15.0) {
  auto rs = torus(1);
  auto P = make_polytope(rs, polytope_preset_facets("interval"));
  FlowOptions o;
  o.scheme = scheme;
  o.t_final = t_final;
  o.dt_max = 0.25;
  o.conv_tol = scheme == "explicit" ? 1e-6 : 1e-7;
  return run_flow(toric_geometry(rs), P, symmetric_grid(1, 6.0, spacing), o);
}

}  // namespace

TEST_SUITE("flow") {
  TEST_CASE("central differences are exact on quadratics away from the faces") {
    Grid g = symmetric_grid(2, 1.0, 0.25);
    std::vector<double> f(g.size());
    for (std::size_t k = 0; k < g.size(); ++k) {
      Vec x = g.node(k);
      f[k] = 1.5 * x(0) * x(0) - 0.7 * x(0) * x(1) + 0.2 * x(1) * x(1) + x(0) - 2 * x(1);
    }
    Vec grad;
    Mat hess;
    for (std::size_t k = 0; k < g.size(); ++k) {
      if (g.on_boundary(k)) continue;
      fd_derivatives(g, f, k, grad, hess);
      Vec x = g.node(k);
      CHECK(grad(0) == doctest::Approx(3 * x(0) - 0.7 * x(1) + 1).epsilon(1e-12));
      CHECK(grad(1) == doctest::Approx(-0.7 * x(0) + 0.4 * x(1) - 2).epsilon(1e-12));
      CHECK(hess(0, 0) == doctest::Approx(3.0).epsilon(1e-12));
      CHECK(hess(0, 1) == doctest::Approx(-0.7).epsilon(1e-12));
      CHECK(hess(1, 1) == doctest::Approx(0.4).epsilon(1e-12));
    }
  }

  TEST_CASE("the even extension at the faces zeroes the normal derivative") {
    Grid g = symmetric_grid(1, 1.0, 0.25);
    std::vector<double> f(g.size());
    for (std::size_t k = 0; k < g.size(); ++k) f[k] = std::exp(g.node(k)(0));
    Vec grad;
    Mat hess;
    fd_derivatives(g, f, 0, grad, hess);
    CHECK(std::abs(grad(0)) < 1e-15);
    CHECK(hess(0, 0) > 0);
  }

  TEST_CASE("CP1 flow converges to the closed-form potential") {
    auto tr = cp1_run(0.02, "implicit");
    CHECK(tr.status == "converged");
    CHECK(tr.converged);
    CHECK(tr.full_mass);
    CHECK(tr.V0 == doctest::Approx(4.0).epsilon(1e-10));
    CHECK(sup_error_mod_constant(tr.checkpoints.back(), 4.0) < 5e-4);
    for (const auto& r : tr.rows) {
      CHECK(r.norm_residual <= 1e-6);
      CHECK(r.hess_min > 0);
      CHECK(std::abs(r.x(0)) < 1e-9);
    }
  }

  TEST_CASE("backward Euler approaches the explicit scheme at first order in dt") {
    // The explicit step is bounded by 1/psi'' in the far field, so the
    // comparison runs on a small box.
    auto run = [](const std::string& scheme, double dt_max) {
      auto rs = torus(1);
      auto P = make_polytope(rs, polytope_preset_facets("interval"));
      FlowOptions o;
      o.scheme = scheme;
      o.t_final = 1.0;
      o.dt_max = dt_max;
      o.stop_on_convergence = false;
      return run_flow(toric_geometry(rs), P, symmetric_grid(1, 2.0, 0.1), o);
    };
    auto gap = [](const Trajectory& a, const Trajectory& b) {
      const auto& x = a.checkpoints.back();
      const auto& y = b.checkpoints.back();
      REQUIRE(x.psi.size() == y.psi.size());
      CHECK(x.t == doctest::Approx(y.t).epsilon(1e-12));
      double m = 0;
      for (std::size_t k = 0; k < x.psi.size(); ++k) m = std::max(m, std::abs(x.psi[k] - y.psi[k]));
      return m;
    };
    auto ex = run("explicit", 0.01);
    CHECK(ex.status == "t_final");
    const double coarse = gap(ex, run("implicit", 0.01));
    const double fine = gap(ex, run("implicit", 0.002));
    CHECK(fine < 1e-4);
    CHECK(fine < 0.35 * coarse);
  }

  TEST_CASE("runs are deterministic") {
    auto a = cp1_run(0.05, "implicit", 3.0);
    auto b = cp1_run(0.05, "implicit", 3.0);
    REQUIRE(a.rows.size() == b.rows.size());
    for (std::size_t i = 0; i < a.rows.size(); ++i) {
      CHECK(a.rows[i].t == b.rows[i].t);
      CHECK(a.rows[i].c == b.rows[i].c);
    }
    CHECK(a.checkpoints.back().psi == b.checkpoints.back().psi);
  }

  TEST_CASE("A1 flow stays Weyl symmetric and convex") {
    auto rs = build_root_system('A', 1, 0);
    auto P = make_polytope(rs, polytope_preset_facets("a1_symmetric"));
    FlowOptions o;
    o.t_final = 3.0;
    o.dt_max = 0.25;
    auto tr = run_flow(make_geometry(rs, "group"), P, symmetric_grid(1, 6.0, 0.02), o);
    for (const auto& cp : tr.checkpoints) {
      const std::size_t n = cp.psi.size();
      for (std::size_t k = 0; k < n; ++k) CHECK(cp.psi[k] == doctest::Approx(cp.psi[n - 1 - k]).epsilon(1e-12));
    }
    for (const auto& r : tr.rows) {
      CHECK(r.hess_min > 0);
      CHECK(r.x(0) > 0);
      CHECK(r.norm_residual <= 1e-6);
    }
  }

  TEST_CASE("non-convex initial data is a degeneracy error") {
    auto rs = torus(1);
    auto P = make_polytope(rs, polytope_preset_facets("interval"));
    FlowSolver s(toric_geometry(rs), P, Potential::from(reference_potential(P, 1)), symmetric_grid(1, 6.0, 0.05), {});
    s.set_initial_u([](const Vec& x) { return -3.0 * std::exp(-x(0) * x(0) / 0.02); });
    CHECK_THROWS_AS(s.run(), DegeneracyError);
  }

  TEST_CASE("CP2 blowup starts drifting along the soliton direction") {
    auto rs = torus(2);
    auto P = make_polytope(rs, polytope_preset_facets("cp2_blowup"));
    FlowOptions o;
    o.t_final = 3.0;
    o.dt_max = 0.2;
    o.threads = 2;
    auto tr = run_flow(toric_geometry(rs), P, symmetric_grid(2, 4.0, 0.2), o);
    CHECK(tr.status == "t_final");
    const Vec& x = tr.rows.back().x;
    CHECK(x(0) < 0);
    CHECK(x(0) == doctest::Approx(x(1)).epsilon(1e-9));
    for (const auto& r : tr.rows) CHECK(r.norm_residual <= 1e-6);
  }
}
