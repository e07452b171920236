#include "horoflow/polytope.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <set>

#include "horoflow/error.hpp"

namespace horoflow {

namespace {

// Calls f on every k-subset of {0..n-1}, in lexicographic order.
template <class F>
void for_each_subset(int n, int k, F&& f) {
  if (k > n || k < 0) return;
  std::vector<int> idx(k);
  for (int i = 0; i < k; ++i) idx[i] = i;
  while (true) {
    f(idx);
    int i = k - 1;
    while (i >= 0 && idx[i] == n - k + i) --i;
    if (i < 0) return;
    ++idx[i];
    for (int j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
}

bool near(const Vec& a, const Vec& b, double tol) {
  return (a - b).lpNorm<Eigen::Infinity>() <= tol;
}

void check_bounded(const std::vector<Vec>& normals, int r) {
  Mat N(static_cast<Eigen::Index>(normals.size()), r);
  for (std::size_t i = 0; i < normals.size(); ++i) N.row(static_cast<Eigen::Index>(i)) = normals[i].transpose();
  Eigen::FullPivLU<Mat> lu(N);
  if (normals.empty() || lu.rank() < r) throw GeometryError("polytope is unbounded");
  // Extreme rays of the recession cone lie on (r-1)-fold intersections.
  std::vector<Vec> candidates;
  if (r == 1) {
    candidates.push_back(Vec::Ones(1));
  } else {
    for_each_subset(static_cast<int>(normals.size()), r - 1, [&](const std::vector<int>& s) {
      Mat A(r - 1, r);
      for (int i = 0; i < r - 1; ++i) A.row(i) = normals[s[i]].transpose();
      Eigen::FullPivLU<Mat> l(A);
      if (l.rank() == r - 1) candidates.push_back(l.kernel().col(0).normalized());
    });
  }
  for (const Vec& d0 : candidates) {
    for (double sgn : {1.0, -1.0}) {
      Vec d = sgn * d0;
      bool recedes = true;
      for (const auto& n : normals)
        if (n.dot(d) > 1e-12 * n.norm()) {
          recedes = false;
          break;
        }
      if (recedes) throw GeometryError("polytope is unbounded");
    }
  }
}

}  // namespace

std::vector<Vertex> enumerate_vertices(const std::vector<Vec>& normals,
                                       const std::vector<double>& offsets, int dim,
                                       double tol) {
  std::vector<Vertex> out;
  const int m = static_cast<int>(normals.size());
  for_each_subset(m, dim, [&](const std::vector<int>& s) {
    Mat A(dim, dim);
    Vec b(dim);
    for (int i = 0; i < dim; ++i) {
      A.row(i) = normals[s[i]].transpose();
      b(i) = offsets[s[i]];
    }
    Eigen::FullPivLU<Mat> lu(A);
    if (lu.rank() < dim) return;
    Vec v = lu.solve(b);
    double scale = 1.0 + v.lpNorm<Eigen::Infinity>();
    for (int k = 0; k < m; ++k)
      if (normals[k].dot(v) > offsets[k] + tol * scale * std::max(1.0, normals[k].norm())) return;
    for (const auto& w : out)
      if (near(w.point, v, tol * scale)) return;
    out.push_back({v, {}});
  });
  for (auto& w : out) {
    double scale = 1.0 + w.point.lpNorm<Eigen::Infinity>();
    for (int k = 0; k < m; ++k)
      if (std::abs(normals[k].dot(w.point) - offsets[k]) <=
          tol * scale * std::max(1.0, normals[k].norm()))
        w.active.push_back(k);
  }
  return out;
}

bool MomentPolytope::contains(const Vec& y, double tol) const {
  for (const auto& f : facets)
    if (f.normal.dot(y) > f.offset + tol) return false;
  return true;
}

double MomentPolytope::diameter_scale() const {
  double s = 0.0;
  for (const auto& v : vertices) s = std::max(s, v.point.norm());
  return std::max(s, 1e-300);
}

MomentPolytope make_polytope(const RootSystem& rs, std::vector<Facet> facets) {
  const int r = rs.rank;
  if (facets.empty()) throw GeometryError("polytope: no facets");
  for (std::size_t i = 0; i < facets.size(); ++i) {
    if (facets[i].normal.size() != r)
      throw GeometryError("polytope.facets[" + std::to_string(i) + "].normal: expected length " +
                          std::to_string(r) + ", got " + std::to_string(facets[i].normal.size()));
    if (facets[i].normal.norm() == 0.0)
      throw GeometryError("polytope.facets[" + std::to_string(i) + "].normal: zero vector");
  }
  if (r > 4) throw GeometryError("polytope: vertex enumeration supports rank <= 4");
  std::vector<Vec> normals;
  std::vector<double> offsets;
  for (const auto& f : facets) {
    normals.push_back(f.normal);
    offsets.push_back(f.offset);
  }
  check_bounded(normals, r);

  MomentPolytope P;
  P.rs = rs;
  P.facets = std::move(facets);
  P.vertices = enumerate_vertices(normals, offsets, r);
  if (P.vertices.empty()) throw GeometryError("polytope is empty");
  Vec c = Vec::Zero(r);
  for (const auto& v : P.vertices) c += v.point;
  c /= static_cast<double>(P.vertices.size());
  double slack = std::numeric_limits<double>::infinity();
  for (const auto& f : P.facets) slack = std::min(slack, (f.offset - f.normal.dot(c)) / f.normal.norm());
  if (!(slack > 1e-9 * (1.0 + c.norm()))) throw GeometryError("polytope is not full-dimensional");

  // Weyl invariance: each reflected facet must coincide with a facet.
  auto normalized = [](const Vec& n, double b) {
    double s = n.norm();
    return std::make_pair(Vec(n / s), b / s);
  };
  for (const auto& a : rs.simple_roots) {
    for (std::size_t i = 0; i < P.facets.size(); ++i) {
      auto [n1, b1] = normalized(rs.reflect(a, P.facets[i].normal), P.facets[i].offset);
      bool found = false;
      for (const auto& g : P.facets) {
        auto [n2, b2] = normalized(g.normal, g.offset);
        if (near(n1, n2, 1e-10) && std::abs(b1 - b2) <= 1e-10 * (1.0 + std::abs(b1))) {
          found = true;
          break;
        }
      }
      if (!found)
        throw GeometryError("polytope is not Weyl-invariant: reflected facet " + std::to_string(i) +
                            " has no match");
    }
  }
  return P;
}

const std::vector<Vertex>& vertices(const MomentPolytope& P) { return P.vertices; }

bool is_fine(const MomentPolytope& P) {
  for (const auto& v : P.vertices)
    if (static_cast<int>(v.active.size()) != P.dim()) return false;
  return true;
}

std::vector<std::string> polytope_preset_names() {
  return {"interval", "square", "cp2", "cp2_blowup", "a1_symmetric"};
}

std::vector<Facet> polytope_preset_facets(const std::string& name) {
  if (name == "interval") return {{make_vec({1.0}), 1.0}, {make_vec({-1.0}), 1.0}};
  if (name == "square")
    return {{make_vec({1, 0}), 1}, {make_vec({-1, 0}), 1}, {make_vec({0, 1}), 1}, {make_vec({0, -1}), 1}};
  if (name == "cp2") return {{make_vec({-1, 0}), 1}, {make_vec({0, -1}), 1}, {make_vec({1, 1}), 1}};
  if (name == "cp2_blowup")
    return {{make_vec({-1, 0}), 1}, {make_vec({0, -1}), 1}, {make_vec({1, 1}), 1}, {make_vec({-1, -1}), 1}};
  if (name == "a1_symmetric") {
    const double a = 2.0 * std::sqrt(2.0);
    return {{make_vec({1.0}), a}, {make_vec({-1.0}), a}};
  }
  std::string names;
  for (const auto& n : polytope_preset_names()) names += (names.empty() ? "" : ", ") + n;
  throw ConfigError("polytope.preset: unknown preset '" + name + "' (available: " + names + ")");
}

ReferencePotential::ReferencePotential(std::vector<Vec> support) : support_(std::move(support)) {
  if (support_.empty()) throw GeometryError("reference potential: empty support set");
}

double ReferencePotential::value(const Vec& x) const {
  double mx = -std::numeric_limits<double>::infinity();
  for (const auto& l : support_) mx = std::max(mx, l.dot(x));
  double s = 0.0;
  for (const auto& l : support_) s += std::exp(l.dot(x) - mx);
  return mx + std::log(s);
}

Vec ReferencePotential::gradient(const Vec& x) const {
  double v;
  Vec g;
  Mat h;
  evaluate(x, v, g, h);
  return g;
}

void ReferencePotential::evaluate(const Vec& x, double& value, Vec& grad, Mat& hess) const {
  const auto d = x.size();
  double mx = -std::numeric_limits<double>::infinity();
  for (const auto& l : support_) mx = std::max(mx, l.dot(x));
  double s = 0.0;
  Vec m1 = Vec::Zero(d);
  std::vector<double> w(support_.size());
  for (std::size_t i = 0; i < support_.size(); ++i) {
    w[i] = std::exp(support_[i].dot(x) - mx);
    s += w[i];
    m1 += w[i] * support_[i];
  }
  value = mx + std::log(s);
  grad = m1 / s;
  // Two-pass covariance keeps tiny eigenvalues positive far out in a cone.
  hess = Mat::Zero(d, d);
  for (std::size_t i = 0; i < support_.size(); ++i) {
    Vec c = support_[i] - grad;
    hess += (w[i] / s) * c * c.transpose();
  }
}

ReferencePotential reference_potential(const MomentPolytope& P, int density) {
  if (density < 0) throw ConfigError("reference potential: density must be >= 0");
  const int r = P.dim();
  std::vector<Vec> pts;
  auto add = [&](const Vec& y) {
    for (const auto& q : pts)
      if (near(q, y, 1e-9)) return false;
    pts.push_back(y);
    return true;
  };
  for (const auto& v : P.vertices) add(2.0 * v.point);
  if (density > 0) {
    Vec lo = Vec::Constant(r, std::numeric_limits<double>::infinity());
    Vec hi = -lo;
    for (const auto& v : P.vertices) {
      lo = lo.cwiseMin(v.point);
      hi = hi.cwiseMax(v.point);
    }
    std::vector<long> ilo(r), ihi(r), idx(r);
    for (int a = 0; a < r; ++a) {
      ilo[a] = static_cast<long>(std::ceil(lo(a) * density - 1e-9));
      ihi[a] = static_cast<long>(std::floor(hi(a) * density + 1e-9));
      idx[a] = ilo[a];
    }
    while (true) {
      Vec y(r);
      for (int a = 0; a < r; ++a) y(a) = static_cast<double>(idx[a]) / density;
      bool inside = true;
      for (const auto& f : P.facets)
        if (f.normal.dot(y) > f.offset + 1e-9) inside = false;
      if (inside) add(2.0 * y);
      int a = r - 1;
      while (a >= 0 && idx[a] == ihi[a]) {
        idx[a] = ilo[a];
        --a;
      }
      if (a < 0) break;
      ++idx[a];
    }
  }
  // Weyl closure.
  std::deque<std::size_t> queue;
  for (std::size_t i = 0; i < pts.size(); ++i) queue.push_back(i);
  while (!queue.empty()) {
    Vec y = pts[queue.front()];
    queue.pop_front();
    for (const auto& a : P.rs.simple_roots) {
      if (add(P.rs.reflect_weight(a, y))) queue.push_back(pts.size() - 1);
    }
  }
  return ReferencePotential(std::move(pts));
}

}  // namespace horoflow
