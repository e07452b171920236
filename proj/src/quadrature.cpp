#include "horoflow/quadrature.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "horoflow/error.hpp"

namespace horoflow {

namespace {

constexpr std::array<double, 8> kNodes = {
    -0.9602898564975363, -0.7966664774136267, -0.5255324099163290, -0.1834346424956498,
    0.1834346424956498,  0.5255324099163290,  0.7966664774136267,  0.9602898564975363};
constexpr std::array<double, 8> kWeights = {
    0.1012285362903763, 0.2223810344533745, 0.3137066458778873, 0.3626837833783620,
    0.3626837833783620, 0.3137066458778873, 0.2223810344533745, 0.1012285362903763};

// Gauss-Legendre nodes over [t0, t1] split into 2^level pieces.
template <class F>
void for_each_node(double t0, double t1, int level, F&& f) {
  const int pieces = 1 << level;
  const double len = (t1 - t0) / pieces;
  for (int p = 0; p < pieces; ++p) {
    double a = t0 + p * len;
    double mid = a + 0.5 * len;
    for (std::size_t q = 0; q < kNodes.size(); ++q) f(mid + 0.5 * len * kNodes[q], 0.5 * len * kWeights[q]);
  }
}

void rule_rec(const std::vector<Vec>& A, const std::vector<double>& b, int d, int level,
              std::vector<Vec>& pts, std::vector<double>& wts) {
  double scale = 1.0;
  for (double v : b) scale = std::max(scale, std::abs(v));
  if (d == 1) {
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < A.size(); ++i) {
      double a = A[i](0);
      if (std::abs(a) < 1e-14) {
        if (b[i] < -1e-12 * scale) return;
        continue;
      }
      if (a > 0) hi = std::min(hi, b[i] / a);
      else lo = std::max(lo, b[i] / a);
    }
    if (!std::isfinite(lo) || !std::isfinite(hi)) throw QuadratureError("quadrature region is unbounded");
    if (!(hi > lo)) return;
    for_each_node(lo, hi, level, [&](double t, double w) {
      pts.push_back(Vec::Constant(1, t));
      wts.push_back(w);
    });
    return;
  }
  std::vector<Vertex> verts = enumerate_vertices(A, b, d);
  if (verts.size() < 2) return;
  std::vector<double> breaks;
  for (const auto& v : verts) breaks.push_back(v.point(0));
  std::sort(breaks.begin(), breaks.end());
  double span = breaks.back() - breaks.front();
  if (!(span > 0)) return;
  std::vector<double> uniq{breaks.front()};
  for (double t : breaks)
    if (t - uniq.back() > 1e-12 * std::max(1.0, span)) uniq.push_back(t);
  if (uniq.size() < 2) return;
  for (std::size_t k = 0; k + 1 < uniq.size(); ++k) {
    for_each_node(uniq[k], uniq[k + 1], level, [&](double t, double w) {
      std::vector<Vec> As;
      std::vector<double> bs;
      for (std::size_t i = 0; i < A.size(); ++i) {
        Vec tail = A[i].tail(d - 1);
        double rhs = b[i] - A[i](0) * t;
        if (tail.norm() < 1e-14) {
          if (rhs < -1e-12 * scale) return;
          continue;
        }
        As.push_back(tail);
        bs.push_back(rhs);
      }
      std::vector<Vec> sub;
      std::vector<double> sw;
      rule_rec(As, bs, d - 1, level, sub, sw);
      for (std::size_t j = 0; j < sub.size(); ++j) {
        Vec p(d);
        p(0) = t;
        p.tail(d - 1) = sub[j];
        pts.push_back(std::move(p));
        wts.push_back(w * sw[j]);
      }
    });
  }
}

}  // namespace

ConvexRegion doubled_region(const MomentPolytope& P) {
  ConvexRegion R;
  R.dim = P.dim();
  for (const auto& f : P.facets) R.add(f.normal, 2.0 * f.offset);
  return R;
}

ConvexRegion chamber_region(const MomentPolytope& P, const Vec& shift) {
  ConvexRegion R;
  R.dim = P.dim();
  for (const auto& f : P.facets) R.add(f.normal, 2.0 * (f.offset + f.normal.dot(shift)));
  for (const auto& a : P.rs.positive_roots) {
    Vec ga = P.rs.gram * a;
    R.add(-ga, -2.0 * ga.dot(shift));
  }
  return R;
}

QuadRule build_rule(const ConvexRegion& region, int level) {
  QuadRule rule;
  rule.level = level;
  rule_rec(region.normals, region.offsets, region.dim, level, rule.points, rule.weights);
  return rule;
}

Vec apply_rule(const QuadRule& rule, const VecIntegrand& f, int out_dim) {
  Vec s = Vec::Zero(out_dim);
  for (std::size_t i = 0; i < rule.size(); ++i) s += rule.weights[i] * f(rule.points[i]);
  return s;
}

QuadResult integrate_adaptive(const ConvexRegion& region, const VecIntegrand& f, int out_dim,
                              const QuadOptions& opt) {
  QuadResult res;
  Vec prev;
  bool have_prev = false;
  double last_err = std::numeric_limits<double>::infinity();
  for (int level = 0; level <= opt.max_level; ++level) {
    if (level > 0 && have_prev &&
        res.rule.size() * (std::size_t{1} << region.dim) > opt.point_budget)
      break;
    QuadRule rule = build_rule(region, level);
    Vec I = Vec::Zero(out_dim);
    Vec Iabs = Vec::Zero(out_dim);
    for (std::size_t i = 0; i < rule.size(); ++i) {
      Vec v = f(rule.points[i]);
      I += rule.weights[i] * v;
      Iabs += rule.weights[i] * v.cwiseAbs();
    }
    res.rule = std::move(rule);
    res.value = I;
    res.level = level;
    if (have_prev) {
      double err = 0.0;
      for (int k = 0; k < out_dim; ++k) {
        if (Iabs(k) == 0.0) continue;
        err = std::max(err, std::abs(I(k) - prev(k)) / Iabs(k));
      }
      last_err = err;
      res.error_estimate = err;
      if (err <= opt.rtol && level >= opt.min_level) return res;
    }
    prev = I;
    have_prev = true;
  }
  throw QuadratureError("quadrature did not converge: relative change " + std::to_string(last_err) +
                        " at level " + std::to_string(res.level));
}

double quad_chamber(const MomentPolytope& P, const std::function<double(const Vec&)>& weight,
                    const Vec& shift, const QuadOptions& opt) {
  auto f = [&](const Vec& y) { return Vec::Constant(1, weight(y)); };
  return integrate_adaptive(chamber_region(P, shift), f, 1, opt).value(0);
}

}  // namespace horoflow
