#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "horoflow/polytope.hpp"
#include "horoflow/types.hpp"

namespace horoflow {

/// Bounded convex region {y : <a_i, y> <= b_i}.
struct ConvexRegion {
  int dim = 0;
  std::vector<Vec> normals;
  std::vector<double> offsets;

  void add(const Vec& a, double b) {
    normals.push_back(a);
    offsets.push_back(b);
  }
};

/// 2P in a*.
ConvexRegion doubled_region(const MomentPolytope& P);
/// 2(P_+ + shift), where P_+ is the part of P in the closed dominant chamber.
ConvexRegion chamber_region(const MomentPolytope& P, const Vec& shift);

struct QuadRule {
  std::vector<Vec> points;
  std::vector<double> weights;
  int level = 0;
  std::size_t size() const { return weights.size(); }
};

/// Clipped tensor-product Gauss-Legendre rule (8 points per subinterval) with
/// 2^level subintervals between consecutive breakpoints on each axis.
QuadRule build_rule(const ConvexRegion& region, int level);

struct QuadOptions {
  double rtol = 1e-8;
  int max_level = 12;
  std::size_t point_budget = 4'000'000;
  int min_level = 1;
};

struct QuadResult {
  Vec value;
  double error_estimate = 0;
  int level = 0;
  QuadRule rule;  ///< the finest rule used
};

using VecIntegrand = std::function<Vec(const Vec&)>;

/// Integrates a vector-valued function with dyadic refinement until the change
/// between levels is below rtol relative to the integral of |f| (componentwise).
/// QuadratureError if refinement does not converge.
QuadResult integrate_adaptive(const ConvexRegion& region, const VecIntegrand& f,
                              int out_dim, const QuadOptions& opt = {});

Vec apply_rule(const QuadRule& rule, const VecIntegrand& f, int out_dim);

/// Integral of weight over 2(P_+ + shift).
double quad_chamber(const MomentPolytope& P, const std::function<double(const Vec&)>& weight,
                    const Vec& shift, const QuadOptions& opt = {});

}  // namespace horoflow
