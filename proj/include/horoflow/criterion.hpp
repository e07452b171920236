#pragma once

#include <string>
#include <vector>

#include "horoflow/geometry.hpp"
#include "horoflow/polytope.hpp"
#include "horoflow/quadrature.hpp"

namespace horoflow {

/// Weighted moments of e^{<X,y>} pi(y) dy over 2(P_+ + shift/2), where the
/// shift is the geometry's gradient shift.
class BarycenterProblem {
 public:
  BarycenterProblem(const MomentPolytope& P, const ReducedGeometry& g, QuadOptions opt = {});

  struct Moments {
    double log_mass = 0;  ///< log of int e^{<X,y>} pi dy
    Vec mean;
    Mat cov;
  };

  /// Moments with the current frozen rule.
  Moments moments(const Vec& X) const;
  /// Moments with a freshly refined rule, which then becomes the frozen rule.
  Moments refine_at(const Vec& X);

  double V0() const { return V0_; }
  const ConvexRegion& region() const { return region_; }
  int rule_level() const { return rule_.level; }
  double weight(const Vec& y) const;

 private:
  ReducedGeometry geom_;
  std::vector<double> pi_at_rule_;
  ConvexRegion region_;
  QuadOptions opt_;
  QuadRule rule_;
  double V0_ = 0;
};

/// bar_X: weighted centroid of 2(P_+ + shift/2) under e^{<X,y>} pi(y) dy.
Vec barycenter(const MomentPolytope& P, const ReducedGeometry& g, const Vec& X);
/// log(int e^{<X,y>} pi dy / V0), the additive normalization of theta_X.
double normalization_constant(const MomentPolytope& P, const ReducedGeometry& g, const Vec& X);

struct SolitonSolve {
  Vec X;
  int iterations = 0;
  double gradient_norm = 0;
  int rule_level = 0;
};

/// Minimizes X -> log int e^{<X,y>} pi dy over the column span of `subspace`
/// (r x k) by damped Newton. NumericalError after 200 steps.
SolitonSolve solve_soliton_vector(const MomentPolytope& P, const ReducedGeometry& g,
                                  const Mat& subspace);
/// Same, over the center a_c of the root system.
SolitonSolve solve_soliton_vector(const MomentPolytope& P, const ReducedGeometry& g);

enum class CriterionStatus { Exists, Fails, Inconclusive, NotApplicable };
const char* to_string(CriterionStatus s);

struct RootMargin {
  std::size_t root_index = 0;  ///< index into rs.positive_roots
  std::string label;
  double margin = 0;
};

struct CriterionReport {
  Vec X;
  Vec barycenter;
  Vec two_rho;
  std::vector<RootMargin> margins;
  CriterionStatus status = CriterionStatus::Inconclusive;
  bool exists = false;
  double normalization_constant = 0;
  double V0 = 0;
  double tolerance = 0;
  double barycenter_offset = 0;  ///< |bar - 2 rho|, used when there are no cone roots
};

CriterionReport test_existence(const MomentPolytope& P, const ReducedGeometry& g, const Vec& X);

/// Post-flow cross-check; NotApplicable unless the run converged with full mass.
CriterionReport necessary_check(const MomentPolytope& P, const ReducedGeometry& g, const Vec& X,
                                bool converged_full_mass);

}  // namespace horoflow
