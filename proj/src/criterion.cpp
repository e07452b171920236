#include "horoflow/criterion.hpp"

#include <algorithm>
#include <cmath>

#include "horoflow/error.hpp"

namespace horoflow {

namespace {

double max_pairing_on_region(const ConvexRegion& R, const Vec& X) {
  double m = -std::numeric_limits<double>::infinity();
  for (const auto& v : enumerate_vertices(R.normals, R.offsets, R.dim)) m = std::max(m, X.dot(v.point));
  return std::isfinite(m) ? m : 0.0;
}

}  // namespace

BarycenterProblem::BarycenterProblem(const MomentPolytope& P, const ReducedGeometry& g,
                                     QuadOptions opt)
    : geom_(g), region_(chamber_region(P, 0.5 * g.grad_shift)), opt_(opt) {
  Moments m = refine_at(Vec::Zero(P.dim()));
  V0_ = std::exp(m.log_mass);
  if (!(V0_ > 0)) throw GeometryError("barycenter domain has zero weighted volume");
}

double BarycenterProblem::weight(const Vec& y) const {
  double p = 1.0;
  for (const auto& w : geom_.pi_roots) p *= std::pow(geom_.rs.inner(w.root, y), w.exponent);
  return p;
}

BarycenterProblem::Moments BarycenterProblem::moments(const Vec& X) const {
  const int r = region_.dim;
  double M = -std::numeric_limits<double>::infinity();
  for (const auto& p : rule_.points) M = std::max(M, X.dot(p));
  double mass = 0.0;
  Vec m1 = Vec::Zero(r);
  for (std::size_t i = 0; i < rule_.size(); ++i) {
    double e = rule_.weights[i] * pi_at_rule_[i] * std::exp(X.dot(rule_.points[i]) - M);
    mass += e;
    m1 += e * rule_.points[i];
  }
  Moments out;
  if (!(mass > 0)) throw NumericalError("barycenter: nonpositive weighted mass");
  out.log_mass = std::log(mass) + M;
  out.mean = m1 / mass;
  out.cov = Mat::Zero(r, r);
  for (std::size_t i = 0; i < rule_.size(); ++i) {
    double e = rule_.weights[i] * pi_at_rule_[i] * std::exp(X.dot(rule_.points[i]) - M);
    Vec d = rule_.points[i] - out.mean;
    out.cov += e * d * d.transpose();
  }
  out.cov /= mass;
  return out;
}

BarycenterProblem::Moments BarycenterProblem::refine_at(const Vec& X) {
  const int r = region_.dim;
  const double M = max_pairing_on_region(region_, X);
  auto f = [&](const Vec& y) {
    Vec v(1 + r);
    double e = weight(y) * std::exp(X.dot(y) - M);
    v(0) = e;
    v.tail(r) = e * y;
    return v;
  };
  QuadResult res = integrate_adaptive(region_, f, 1 + r, opt_);
  rule_ = std::move(res.rule);
  pi_at_rule_.resize(rule_.size());
  for (std::size_t i = 0; i < rule_.size(); ++i) pi_at_rule_[i] = weight(rule_.points[i]);
  return moments(X);
}

Vec barycenter(const MomentPolytope& P, const ReducedGeometry& g, const Vec& X) {
  BarycenterProblem prob(P, g);
  return prob.refine_at(X).mean;
}

double normalization_constant(const MomentPolytope& P, const ReducedGeometry& g, const Vec& X) {
  BarycenterProblem prob(P, g);
  return prob.refine_at(X).log_mass - std::log(prob.V0());
}

SolitonSolve solve_soliton_vector(const MomentPolytope& P, const ReducedGeometry& g,
                                  const Mat& B) {
  SolitonSolve out;
  out.X = Vec::Zero(P.dim());
  if (B.cols() == 0) return out;
  if (B.rows() != P.dim()) throw InputError("solve_soliton_vector: subspace basis has wrong row count");

  BarycenterProblem prob(P, g);
  Vec z = Vec::Zero(B.cols());
  int steps = 0;
  for (int outer = 0; outer < 8; ++outer) {
    double gnorm = std::numeric_limits<double>::infinity();
    while (steps < 200) {
      auto m = prob.moments(B * z);
      Vec grad = B.transpose() * m.mean;
      gnorm = grad.lpNorm<Eigen::Infinity>();
      if (gnorm <= 1e-10) break;
      Mat H = B.transpose() * m.cov * B;
      Vec dz = -H.ldlt().solve(grad);
      double f0 = m.log_mass;
      double slope = grad.dot(dz);
      double t = 1.0;
      while (t > 1e-12 && prob.moments(B * (z + t * dz)).log_mass > f0 + 1e-4 * t * slope) t *= 0.5;
      z += t * dz;
      ++steps;
    }
    if (gnorm > 1e-10)
      throw NumericalError("soliton vector: Newton did not converge in 200 steps (gradient " +
                           std::to_string(gnorm) + ")");
    int level = prob.rule_level();
    prob.refine_at(B * z);
    out.gradient_norm = gnorm;
    if (prob.rule_level() == level) break;
  }
  out.X = B * z;
  out.iterations = steps;
  out.rule_level = prob.rule_level();
  return out;
}

SolitonSolve solve_soliton_vector(const MomentPolytope& P, const ReducedGeometry& g) {
  return solve_soliton_vector(P, g, g.rs.center_basis);
}

const char* to_string(CriterionStatus s) {
  switch (s) {
    case CriterionStatus::Exists: return "exists";
    case CriterionStatus::Fails: return "criterion fails";
    case CriterionStatus::Inconclusive: return "boundary / inconclusive";
    case CriterionStatus::NotApplicable: return "not applicable";
  }
  return "unknown";
}

CriterionReport test_existence(const MomentPolytope& P, const ReducedGeometry& g, const Vec& X) {
  CriterionReport rep;
  BarycenterProblem prob(P, g);
  auto m = prob.refine_at(X);
  rep.X = X;
  rep.barycenter = m.mean;
  rep.V0 = prob.V0();
  rep.normalization_constant = m.log_mass - std::log(rep.V0);
  rep.two_rho = g.two_rho();
  rep.tolerance = 1e-8 * std::max(1.0, 2.0 * P.diameter_scale());
  Vec diff = rep.barycenter - rep.two_rho;
  rep.barycenter_offset = std::sqrt(diff.dot(g.rs.gram * diff));

  if (g.cone_roots.empty()) {
    rep.exists = rep.barycenter_offset <= 1e-8;
    rep.status = rep.exists ? CriterionStatus::Exists : CriterionStatus::Fails;
    return rep;
  }
  bool all_pos = true, any_neg = false;
  for (const auto& a : g.cone_roots) {
    RootMargin rm;
    auto idx = g.rs.find_positive(a);
    rm.root_index = idx.value_or(0);
    rm.label = idx ? g.rs.label(*idx) : "?";
    rm.margin = g.rs.inner(a, diff);
    if (!(rm.margin > rep.tolerance)) all_pos = false;
    if (rm.margin < -rep.tolerance) any_neg = true;
    rep.margins.push_back(rm);
  }
  rep.exists = all_pos;
  rep.status = all_pos ? CriterionStatus::Exists
                       : (any_neg ? CriterionStatus::Fails : CriterionStatus::Inconclusive);
  return rep;
}

CriterionReport necessary_check(const MomentPolytope& P, const ReducedGeometry& g, const Vec& X,
                                bool converged_full_mass) {
  if (!converged_full_mass) {
    CriterionReport rep;
    rep.X = X;
    rep.status = CriterionStatus::NotApplicable;
    return rep;
  }
  return test_existence(P, g, X);
}

}  // namespace horoflow
