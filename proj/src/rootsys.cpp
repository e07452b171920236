#include "horoflow/rootsys.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <set>

#include "horoflow/error.hpp"

namespace horoflow {

namespace {

constexpr std::size_t kMaxRoots = 10000;

Vec combine(const std::vector<Vec>& simple, const std::vector<int>& coeff) {
  Vec v = Vec::Zero(simple.front().size());
  for (std::size_t i = 0; i < simple.size(); ++i) v += coeff[i] * simple[i];
  return v;
}

// Fills positive roots, coefficients, gram_inv and center basis from
// simple_roots and gram.
void complete(RootSystem& rs) {
  const int r = rs.rank;
  if (rs.gram.rows() != r || rs.gram.cols() != r)
    throw ConfigError("root system: gram must be " + std::to_string(r) + "x" + std::to_string(r));
  if (!rs.gram.isApprox(rs.gram.transpose(), 1e-12))
    throw ConfigError("root system: gram is not symmetric");
  Eigen::LLT<Mat> llt(rs.gram);
  if (llt.info() != Eigen::Success) throw ConfigError("root system: gram is not positive definite");
  rs.gram_inv = llt.solve(Mat::Identity(r, r));

  const std::size_t ns = rs.simple_roots.size();
  rs.positive_roots.clear();
  rs.coefficients.clear();

  if (ns > 0) {
    Mat S(static_cast<Eigen::Index>(ns), r);
    for (std::size_t i = 0; i < ns; ++i) S.row(static_cast<Eigen::Index>(i)) = rs.simple_roots[i].transpose();
    Eigen::FullPivLU<Mat> lu(S);
    if (lu.rank() != static_cast<Eigen::Index>(ns))
      throw ConfigError("root system: simple roots are linearly dependent");

    // Cartan integers <alpha_j, alpha_i^vee>.
    std::vector<std::vector<int>> cartan(ns, std::vector<int>(ns));
    for (std::size_t i = 0; i < ns; ++i) {
      const Vec& ai = rs.simple_roots[i];
      double nii = rs.inner(ai, ai);
      for (std::size_t j = 0; j < ns; ++j) {
        double c = 2.0 * rs.inner(rs.simple_roots[j], ai) / nii;
        long k = std::lround(c);
        if (std::abs(c - k) > 1e-9)
          throw ConfigError("root system: gram gives non-integral Cartan integers");
        if (i != j && k > 0)
          throw ConfigError("root system: simple roots have a positive pairing");
        cartan[i][j] = static_cast<int>(k);
      }
    }

    std::set<std::vector<int>> seen;
    std::deque<std::vector<int>> queue;
    for (std::size_t i = 0; i < ns; ++i) {
      std::vector<int> c(ns, 0);
      c[i] = 1;
      seen.insert(c);
      queue.push_back(c);
    }
    while (!queue.empty()) {
      std::vector<int> c = queue.front();
      queue.pop_front();
      for (std::size_t i = 0; i < ns; ++i) {
        bool is_simple_i = c[i] == 1 &&
            std::count(c.begin(), c.end(), 0) == static_cast<long>(ns) - 1;
        if (is_simple_i) continue;
        int pair = 0;
        for (std::size_t j = 0; j < ns; ++j) pair += c[j] * cartan[i][j];
        std::vector<int> d = c;
        d[i] -= pair;
        bool any_neg = std::any_of(d.begin(), d.end(), [](int v) { return v < 0; });
        if (any_neg) throw ConfigError("root system: reflections do not preserve the positive roots");
        if (seen.insert(d).second) {
          if (seen.size() > kMaxRoots) throw ConfigError("root system: root set exceeds cap");
          queue.push_back(d);
        }
      }
    }
    std::vector<std::vector<int>> coeffs(seen.begin(), seen.end());
    std::sort(coeffs.begin(), coeffs.end(), [](const auto& a, const auto& b) {
      int ha = 0, hb = 0;
      for (int v : a) ha += v;
      for (int v : b) hb += v;
      if (ha != hb) return ha < hb;
      return a > b;
    });
    for (const auto& c : coeffs) {
      rs.positive_roots.push_back(combine(rs.simple_roots, c));
      rs.coefficients.push_back(c);
    }
  }

  // Annihilator of the roots, orthonormalized in the metric gram^{-1}.
  Mat K;
  if (ns == 0) {
    K = Mat::Identity(r, r);
  } else {
    Mat S(static_cast<Eigen::Index>(ns), r);
    for (std::size_t i = 0; i < ns; ++i) S.row(static_cast<Eigen::Index>(i)) = rs.simple_roots[i].transpose();
    Eigen::JacobiSVD<Mat> svd(S, Eigen::ComputeFullV);
    K = svd.matrixV().rightCols(r - static_cast<Eigen::Index>(ns));
  }
  rs.center_dim = static_cast<int>(K.cols());
  if (K.cols() > 0) {
    Mat M = K.transpose() * rs.gram_inv * K;
    Eigen::LLT<Mat> m(M);
    Mat Linv = m.matrixL().solve(Mat::Identity(K.cols(), K.cols()));
    rs.center_basis = K * Linv.transpose();
    // Fix signs so that the leading nonzero coordinate is positive.
    for (Eigen::Index j = 0; j < rs.center_basis.cols(); ++j) {
      for (Eigen::Index i = 0; i < r; ++i) {
        if (std::abs(rs.center_basis(i, j)) > 1e-12) {
          if (rs.center_basis(i, j) < 0) rs.center_basis.col(j) *= -1.0;
          break;
        }
      }
    }
  } else {
    rs.center_basis = Mat(r, 0);
  }
}

Vec unit(int dim, int i) {
  Vec v = Vec::Zero(dim);
  v(i) = 1.0;
  return v;
}

}  // namespace

double RootSystem::norm(const Vec& x) const { return std::sqrt(x.dot(gram_inv * x)); }

Vec RootSystem::coroot(const Vec& root) const {
  return 2.0 * (gram * root) / inner(root, root);
}

Vec RootSystem::reflect(const Vec& root, const Vec& x) const {
  return x - pairing(root, x) * coroot(root);
}

Vec RootSystem::reflect_weight(const Vec& root, const Vec& y) const {
  return y - 2.0 * inner(y, root) / inner(root, root) * root;
}

Vec RootSystem::two_rho() const {
  Vec s = Vec::Zero(rank);
  for (const auto& a : positive_roots) s += a;
  return s;
}

int RootSystem::height(std::size_t i) const {
  int h = 0;
  for (int c : coefficients.at(i)) h += c;
  return h;
}

std::string RootSystem::label(std::size_t i) const {
  const auto& c = coefficients.at(i);
  std::string out;
  for (std::size_t j = 0; j < c.size(); ++j) {
    if (c[j] == 0) continue;
    if (!out.empty()) out += "+";
    if (c[j] != 1) out += std::to_string(c[j]);
    out += "a" + std::to_string(j + 1);
  }
  return out;
}

std::optional<std::size_t> RootSystem::find_positive(const Vec& v, double tol) const {
  for (std::size_t i = 0; i < positive_roots.size(); ++i)
    if ((positive_roots[i] - v).norm() <= tol) return i;
  return std::nullopt;
}

RootSystem build_root_system(char family, int n, int center_dim,
                             const std::optional<Mat>& gram_override) {
  if (center_dim < 0) throw ConfigError("root system: center_dim must be >= 0");
  RootSystem rs;
  rs.family = family;
  rs.ss_rank = n;
  switch (family) {
    case 'A': {
      if (n < 1) throw ConfigError("root system: A_n needs rank >= 1");
      if (center_dim >= 1) {
        // R^{n+1} with its diagonal, plus center_dim - 1 extra central axes.
        rs.rank = n + center_dim;
        for (int i = 0; i < n; ++i) rs.simple_roots.push_back(unit(rs.rank, i) - unit(rs.rank, i + 1));
      } else {
        // Orthonormal basis of the sum-zero hyperplane in R^{n+1}.
        rs.rank = n;
        Mat F(n, n + 1);
        F.setZero();
        for (int k = 1; k <= n; ++k) {
          double s = 1.0 / std::sqrt(static_cast<double>(k) * (k + 1));
          for (int j = 0; j < k; ++j) F(k - 1, j) = s;
          F(k - 1, k) = -k * s;
        }
        for (int i = 0; i < n; ++i) {
          Vec e = Vec::Zero(n + 1);
          e(i) = 1.0;
          e(i + 1) = -1.0;
          rs.simple_roots.push_back(F * e);
        }
      }
      break;
    }
    case 'B':
    case 'C':
    case 'D': {
      if (n < 2) throw ConfigError(std::string("root system: ") + family + "_n needs rank >= 2");
      rs.rank = n + center_dim;
      for (int i = 0; i + 1 < n; ++i) rs.simple_roots.push_back(unit(rs.rank, i) - unit(rs.rank, i + 1));
      if (family == 'B') rs.simple_roots.push_back(unit(rs.rank, n - 1));
      if (family == 'C') rs.simple_roots.push_back(2.0 * unit(rs.rank, n - 1));
      if (family == 'D') rs.simple_roots.push_back(unit(rs.rank, n - 2) + unit(rs.rank, n - 1));
      break;
    }
    default:
      throw ConfigError(std::string("root system: unsupported family '") + family +
                        "' (expected A, B, C or D)");
  }
  rs.gram = gram_override ? *gram_override : Mat::Identity(rs.rank, rs.rank);
  complete(rs);
  return rs;
}

RootSystem torus(int dim) {
  if (dim < 1) throw ConfigError("root system: torus dimension must be >= 1");
  RootSystem rs;
  rs.family = 'T';
  rs.ss_rank = 0;
  rs.rank = dim;
  rs.gram = Mat::Identity(dim, dim);
  complete(rs);
  return rs;
}

RootSystem root_system_from_simple(std::vector<Vec> simple_roots, Mat gram) {
  RootSystem rs;
  rs.family = 'X';
  rs.rank = static_cast<int>(gram.rows());
  for (const auto& a : simple_roots)
    if (a.size() != rs.rank) throw ConfigError("root system: simple root of wrong length");
  rs.ss_rank = static_cast<int>(simple_roots.size());
  rs.simple_roots = std::move(simple_roots);
  rs.gram = std::move(gram);
  complete(rs);
  return rs;
}

bool in_chamber(const RootSystem& rs, const Vec& x, std::span<const Vec> roots) {
  for (const auto& a : roots)
    if (!(rs.pairing(a, x) > 0.0)) return false;
  return true;
}

std::pair<Vec, Vec> project_center(const RootSystem& rs, const Vec& x) {
  Vec center = rs.center_basis * (rs.center_basis.transpose() * (rs.gram_inv * x));
  return {center, x - center};
}

std::optional<std::size_t> weyl_order(const RootSystem& rs, std::span<const Vec> roots,
                                      std::size_t cap) {
  Vec p(rs.rank);
  for (int i = 0; i < rs.rank; ++i) p(i) = 0.3137 + 0.1173 * i * i + 0.0519 * std::sin(1.0 + i);
  auto key = [](const Vec& v) {
    std::vector<long long> k(static_cast<std::size_t>(v.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) k[i] = std::llround(v(i) * 1e7);
    return k;
  };
  std::set<std::vector<long long>> seen{key(p)};
  std::deque<Vec> queue{p};
  while (!queue.empty()) {
    Vec v = queue.front();
    queue.pop_front();
    for (const auto& a : roots) {
      Vec w = rs.reflect(a, v);
      if (seen.insert(key(w)).second) {
        if (seen.size() > cap) return std::nullopt;
        queue.push_back(w);
      }
    }
  }
  return seen.size();
}

std::vector<std::size_t> reflection_permutation(const Grid& grid, const RootSystem& rs,
                                                const Vec& root) {
  std::vector<std::size_t> perm(grid.size());
  double hmin = grid.spacing(0);
  for (int a = 1; a < grid.dim(); ++a) hmin = std::min(hmin, grid.spacing(a));
  for (std::size_t k = 0; k < grid.size(); ++k) {
    Vec x = grid.node(k);
    Vec y = rs.reflect(root, x);
    std::size_t j = grid.nearest(y);
    if ((grid.node(j) - y).lpNorm<Eigen::Infinity>() > 1e-9 * hmin * (1.0 + x.norm()))
      throw GeometryError("grid is not stable under a Weyl reflection (node " +
                          std::to_string(k) + ")");
    perm[k] = j;
  }
  return perm;
}

void symmetrize_in_place(std::span<double> f,
                         const std::vector<std::vector<std::size_t>>& perms) {
  if (perms.empty()) return;
  std::vector<char> done(f.size(), 0);
  std::vector<std::size_t> orbit;
  for (std::size_t k = 0; k < f.size(); ++k) {
    if (done[k]) continue;
    orbit.clear();
    orbit.push_back(k);
    done[k] = 1;
    for (std::size_t q = 0; q < orbit.size(); ++q) {
      for (const auto& p : perms) {
        std::size_t j = p[orbit[q]];
        if (!done[j]) {
          done[j] = 1;
          orbit.push_back(j);
        }
      }
    }
    if (orbit.size() == 1) continue;
    double s = 0.0;
    for (std::size_t j : orbit) s += f[j];
    s /= static_cast<double>(orbit.size());
    for (std::size_t j : orbit) f[j] = s;
  }
}

std::vector<double> symmetrize(const RootSystem& rs, const Grid& grid,
                               std::span<const double> f, int sign,
                               std::span<const Vec> roots) {
  if (sign != +1) throw InputError("symmetrize: only sign +1 is supported");
  if (f.size() != grid.size()) throw InputError("symmetrize: field size does not match grid");
  std::span<const Vec> gens = roots.empty() ? std::span<const Vec>(rs.simple_roots) : roots;
  std::vector<std::vector<std::size_t>> perms;
  for (const auto& a : gens) perms.push_back(reflection_permutation(grid, rs, a));
  std::vector<double> out(f.begin(), f.end());
  symmetrize_in_place(out, perms);
  return out;
}

}  // namespace horoflow
