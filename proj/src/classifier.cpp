#include "horoflow/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "horoflow/error.hpp"
#include "parallel.hpp"

namespace horoflow {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double window_start(const std::vector<double>& t, double fraction) {
  return t.front() + (1.0 - fraction) * (t.back() - t.front());
}

// Least-squares slope of y against t over entries with t >= t0.
double slope(const std::vector<double>& t, const std::vector<double>& y, double t0) {
  double n = 0, st = 0, sy = 0;
  for (std::size_t i = 0; i < t.size(); ++i)
    if (t[i] >= t0) {
      n += 1;
      st += t[i];
      sy += y[i];
    }
  if (n < 2) return 0.0;
  const double mt = st / n, my = sy / n;
  double num = 0, den = 0;
  for (std::size_t i = 0; i < t.size(); ++i)
    if (t[i] >= t0) {
      num += (t[i] - mt) * (y[i] - my);
      den += (t[i] - mt) * (t[i] - mt);
    }
  return den > 0 ? num / den : 0.0;
}

std::vector<std::size_t> complement(const RootSystem& rs, const std::vector<std::size_t>& phi_u) {
  std::vector<char> in(rs.positive_roots.size(), 0);
  for (std::size_t i : phi_u) in.at(i) = 1;
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < in.size(); ++i)
    if (!in[i]) out.push_back(i);
  return out;
}

// Columns span {Y : <alpha, Y> = 0 for the given roots}.
Mat annihilator(const RootSystem& rs, const std::vector<std::size_t>& roots) {
  const int r = rs.rank;
  if (roots.empty()) return Mat::Identity(r, r);
  Mat A(static_cast<Eigen::Index>(roots.size()), r);
  for (std::size_t i = 0; i < roots.size(); ++i)
    A.row(static_cast<Eigen::Index>(i)) = rs.positive_roots[roots[i]].transpose();
  Eigen::FullPivLU<Mat> lu(A);
  if (lu.rank() == r) return Mat(r, 0);
  return lu.kernel();
}

double max_pairing(const RootSystem& rs, const std::vector<std::size_t>& roots, const Vec& Y) {
  double m = 0.0;
  for (std::size_t i : roots) m = std::max(m, std::abs(rs.pairing(rs.positive_roots[i], Y)));
  return m;
}

std::string xlabel(const RootSystem& rs, std::size_t i, bool negative) {
  const std::string l = rs.label(i);
  if (!negative) return "X_{" + l + "}";
  return l.find('+') == std::string::npos ? "X_{-" + l + "}" : "X_{-(" + l + ")}";
}

}  // namespace

const char* to_string(CaseTag c) {
  switch (c) {
    case CaseTag::Case1: return "Case1";
    case CaseTag::Case2: return "Case2";
    case CaseTag::Case3_1: return "Case3_1";
    case CaseTag::Case3_2: return "Case3_2";
    case CaseTag::Inconclusive: return "Inconclusive";
  }
  return "Inconclusive";
}

CaseDecision decide_case(const RootSystem& rs, const std::vector<double>& t,
                         const std::vector<Vec>& x, const ClassifierThresholds& thr) {
  if (t.size() != x.size()) throw InputError("classify: time and x_t series differ in length");
  if (t.size() < std::max<std::size_t>(thr.min_rows, 2))
    throw InputError("classify: trajectory too short (" + std::to_string(t.size()) +
                     " rows, need at least " + std::to_string(thr.min_rows) + ")");
  if (!(thr.R_bound > 0) || !(thr.A_grow > 0) || !(thr.s_min > 0) || !(thr.window_fraction > 0) ||
      thr.window_fraction > 1)
    throw ConfigError("classifier: thresholds must be positive and window_fraction in (0, 1]");

  CaseDecision d;
  d.window_start = window_start(t, thr.window_fraction);
  d.window_end = t.back();
  std::size_t in_window = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] < d.window_start) continue;
    ++in_window;
    d.sup_norm = std::max(d.sup_norm, rs.norm(x[i]));
    d.sup_pj = std::max(d.sup_pj, rs.norm(project_center(rs, x[i]).second));
  }
  if (in_window < 2) throw InputError("classify: fewer than two samples in the late window");

  bool mixed = false;
  for (std::size_t j = 0; j < rs.positive_roots.size(); ++j) {
    const Vec& b = rs.positive_roots[j];
    std::vector<double> p(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) p[i] = rs.pairing(b, x[i]);
    RootGrowth g;
    g.root_index = j;
    g.label = rs.label(j);
    g.final_pairing = p.back();
    g.slope = slope(t, p, d.window_start);
    g.above_level = g.final_pairing > thr.A_grow;
    g.above_slope = g.slope > thr.s_min;
    bool was_above = false;
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (t[i] < d.window_start) continue;
      if (p[i] > thr.A_grow) was_above = true;
      else if (was_above) g.monotone = false;
    }
    if (g.above_level && g.above_slope) d.phi_u.push_back(j);
    if (g.above_level != g.above_slope || (g.above_level && !g.monotone)) mixed = true;
    d.growth.push_back(g);
  }

  if (d.sup_norm <= thr.R_bound) {
    d.tag = CaseTag::Case1;
    d.phi_u.clear();
  } else if (d.sup_pj <= thr.R_bound) {
    d.tag = CaseTag::Case2;
    d.phi_u.clear();
  } else if (mixed) {
    d.tag = CaseTag::Inconclusive;
    d.notes.push_back("growth tests disagree: level and slope tests are mixed or non-monotone");
  } else if (d.phi_u.empty()) {
    d.tag = CaseTag::Inconclusive;
    d.notes.push_back("Pj(x_t) exceeds R_bound but no root pairing passes the growth test");
  } else {
    d.tag = d.phi_u.size() == rs.positive_roots.size() ? CaseTag::Case3_1 : CaseTag::Case3_2;
  }
  return d;
}

A0Estimate estimate_a0(const RootSystem& rs, const std::vector<double>& t,
                       const std::vector<Vec>& x, const std::vector<std::size_t>& phi_u,
                       double window_fraction) {
  A0Estimate e;
  e.a0 = Vec::Zero(rs.rank);
  const auto rows = complement(rs, phi_u);
  if (rows.empty() || t.empty()) return e;
  const double ws = window_start(t, window_fraction);
  Mat A(static_cast<Eigen::Index>(rows.size()), rs.rank);
  Vec b = Vec::Zero(static_cast<Eigen::Index>(rows.size()));
  double n = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] < ws) continue;
    n += 1;
    for (std::size_t k = 0; k < rows.size(); ++k)
      b(static_cast<Eigen::Index>(k)) += rs.pairing(rs.positive_roots[rows[k]], x[i]);
  }
  if (n == 0) throw InputError("estimate_a0: empty late window");
  b /= n;
  for (std::size_t k = 0; k < rows.size(); ++k)
    A.row(static_cast<Eigen::Index>(k)) = rs.positive_roots[rows[k]].transpose();
  e.a0 = A.completeOrthogonalDecomposition().solve(b);
  e.residual = (A * e.a0 - b).lpNorm<Eigen::Infinity>();
  e.consistent = e.residual <= 1e-3 * (1.0 + b.lpNorm<Eigen::Infinity>());
  return e;
}

Vec drift_slope(const std::vector<double>& t, const std::vector<Vec>& x, double t0) {
  if (x.empty()) return Vec();
  const auto r = x.front().size();
  Vec s(r);
  std::vector<double> c(t.size());
  for (Eigen::Index a = 0; a < r; ++a) {
    for (std::size_t i = 0; i < t.size(); ++i) c[i] = x[i](a);
    s(a) = slope(t, c, t0);
  }
  return s;
}

HFit fit_h(const RootSystem& rs, const Checkpoint& cp, const std::vector<std::size_t>& phi_u,
           double radius) {
  const Grid& G = cp.grid;
  const Mat B = annihilator(rs, complement(rs, phi_u));
  const auto m = B.cols();
  HFit f;
  f.Y = Vec::Zero(rs.rank);
  std::vector<Vec> rows;
  std::vector<double> rhs;
  Vec g;
  Mat H;
  for (std::size_t k = 0; k < G.size(); ++k) {
    if (G.on_boundary(k)) continue;
    if (rs.norm(G.node(k) - cp.x_t) > radius) continue;
    if (!std::isfinite(cp.h[k])) continue;
    fd_derivatives(G, cp.psi, k, g, H);
    Vec row(m + 1);
    row.head(m) = B.transpose() * g;
    row(m) = 1.0;
    rows.push_back(row);
    rhs.push_back(cp.h[k]);
  }
  f.samples = static_cast<int>(rows.size());
  if (rows.empty()) {
    f.full_rank = false;
    return f;
  }
  Mat M(static_cast<Eigen::Index>(rows.size()), m + 1);
  Vec y(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    M.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
    y(static_cast<Eigen::Index>(i)) = rhs[i];
  }
  Eigen::ColPivHouseholderQR<Mat> qr(M);
  qr.setThreshold(1e-10);
  f.full_rank = qr.rank() == m + 1;
  Vec coef = f.full_rank ? Vec(qr.solve(y)) : Vec(M.completeOrthogonalDecomposition().solve(y));
  f.Y = B * coef.head(m);
  f.intercept = coef(m);
  f.rms = std::sqrt((M * coef - y).squaredNorm() / static_cast<double>(rows.size()));
  return f;
}

YEstimate estimate_Y(const RootSystem& rs, const std::vector<double>& t,
                     const std::vector<Vec>& x, const std::vector<Checkpoint>& checkpoints,
                     const std::vector<std::size_t>& phi_u, const ClassifierThresholds& thr) {
  YEstimate e;
  const double ws = window_start(t, thr.window_fraction);
  e.Y_drift = drift_slope(t, x, ws);
  e.Y_hfit = Vec::Zero(rs.rank);

  std::vector<const Checkpoint*> late;
  for (const auto& cp : checkpoints)
    if (cp.t >= ws && !cp.h.empty()) late.push_back(&cp);
  if (late.empty()) {
    e.warnings.push_back("no checkpoint with a stored h field in the late window");
  } else {
    if (late.size() < 2) e.warnings.push_back("only one checkpoint in the late window");
    std::vector<HFit> fits(late.size());
    detail::parallel_for(late.size(), thr.threads, [&](std::size_t i) {
      fits[i] = fit_h(rs, *late[i], phi_u, thr.hfit_radius);
    });
    for (const auto& f : fits) {
      e.Y_hfit += f.Y;
      if (!f.full_rank) e.warnings.push_back("h regression is rank deficient (collinear gradient samples)");
    }
    e.Y_hfit /= static_cast<double>(fits.size());
    for (const auto& f : fits) e.hfit_spread = std::max(e.hfit_spread, rs.norm(f.Y - e.Y_hfit));
    e.checkpoints_used = static_cast<int>(fits.size());
  }

  const double nd = rs.norm(e.Y_drift), nh = rs.norm(e.Y_hfit);
  if (nd > 0 && nh > 0) {
    double c = e.Y_drift.dot(rs.gram_inv * e.Y_hfit) / (nd * nh);
    e.angle = std::acos(std::clamp(c, -1.0, 1.0));
  }
  const double diff = rs.norm(e.Y_drift - e.Y_hfit);
  e.relative_norm = diff / std::max(nh, 1e-3);
  const auto comp = complement(rs, phi_u);
  e.drift_tangency = max_pairing(rs, comp, e.Y_drift);
  e.hfit_tangency = max_pairing(rs, comp, e.Y_hfit);
  std::sort(e.warnings.begin(), e.warnings.end());
  e.warnings.erase(std::unique(e.warnings.begin(), e.warnings.end()), e.warnings.end());
  return e;
}

Degeneration degeneration_from_phi_u(const RootSystem& rs, const std::vector<std::size_t>& phi_u,
                                     bool nonzero_y) {
  const std::size_t np = rs.positive_roots.size();
  std::vector<char> in_u(np, 0);
  for (std::size_t i : phi_u) in_u.at(i) = 1;

  Degeneration d;
  std::vector<char> tangent(rs.simple_roots.size(), 0);
  for (std::size_t i = 0; i < np; ++i) {
    if (rs.height(i) != 1) continue;
    std::size_t s = 0;
    while (rs.coefficients[i][s] == 0) ++s;
    if (in_u[i]) {
      d.nontangent_simple.push_back(i);
    } else {
      d.tangent_simple.push_back(i);
      tangent[s] = 1;
    }
  }
  for (std::size_t i = 0; i < np; ++i) {
    if (rs.height(i) == 1) continue;
    bool only_tangent = true;
    for (std::size_t s = 0; s < tangent.size(); ++s)
      if (rs.coefficients[i][s] != 0 && !tangent[s]) only_tangent = false;
    (only_tangent ? d.tangent_combinations : d.remaining).push_back(i);
  }
  for (std::size_t i = 0; i < np; ++i) {
    bool u = std::find(d.nontangent_simple.begin(), d.nontangent_simple.end(), i) !=
                 d.nontangent_simple.end() ||
             std::find(d.remaining.begin(), d.remaining.end(), i) != d.remaining.end();
    if (u) d.phi_u.push_back(i);
  }
  std::vector<std::size_t> comp;
  for (std::size_t i = 0; i < np; ++i)
    if (std::find(d.phi_u.begin(), d.phi_u.end(), i) == d.phi_u.end()) comp.push_back(i);

  const int r = rs.rank;
  LieData& L = d.lie;
  if (nonzero_y) {
    L.h.push_back("(Y, Y)");
    for (int k = 1; k < r; ++k) L.h.push_back("diag(Y_perp_" + std::to_string(k) + ")");
  } else {
    for (int k = 1; k <= r; ++k) L.h.push_back("(H_" + std::to_string(k) + ", H_" + std::to_string(k) + ")");
  }
  L.cartan_generators = r;
  for (std::size_t i : comp) {
    L.h.push_back("(" + xlabel(rs, i, false) + ", " + xlabel(rs, i, false) + ")");
    L.h.push_back("(" + xlabel(rs, i, true) + ", " + xlabel(rs, i, true) + ")");
  }
  for (std::size_t i : d.phi_u) {
    L.h.push_back("(" + xlabel(rs, i, false) + ", 0)");
    L.h.push_back("(0, " + xlabel(rs, i, true) + ")");
  }
  for (int i = 1; i <= r; ++i)
    for (int j = 1; j <= r; ++j) L.p.push_back("(E_" + std::to_string(i) + ", E_" + std::to_string(j) + ")");
  for (std::size_t i : comp)
    for (std::size_t j : comp) {
      L.p.push_back("(" + xlabel(rs, i, false) + ", " + xlabel(rs, j, false) + ")");
      L.p.push_back("(" + xlabel(rs, i, true) + ", " + xlabel(rs, j, true) + ")");
    }
  for (std::size_t i : d.phi_u) {
    L.p.push_back("(" + xlabel(rs, i, false) + ", 0)");
    L.p.push_back("(0, " + xlabel(rs, i, true) + ")");
  }
  const std::size_t dim_y_perp = static_cast<std::size_t>(r - 1);
  d.count_identity = L.h.size() == (1 + dim_y_perp) + 2 * comp.size() + 2 * d.phi_u.size();
  d.limit = make_geometry(rs, "degenerate-limit", d.phi_u);
  return d;
}

Degeneration build_degeneration(const RootSystem& rs, const Vec& Y, double tol) {
  if (Y.size() != rs.rank)
    throw InputError("build_degeneration: Y has length " + std::to_string(Y.size()) +
                     ", expected " + std::to_string(rs.rank));
  const double ny = rs.norm(Y);
  for (std::size_t i = 0; i < rs.positive_roots.size(); ++i)
    if (rs.pairing(rs.positive_roots[i], Y) < -tol * ny)
      throw InputError("build_degeneration: Y is outside the closed Weyl chamber (root " +
                       rs.label(i) + "); reflect it first");
  std::vector<char> tangent(rs.simple_roots.size(), 0);
  for (std::size_t s = 0; s < rs.simple_roots.size(); ++s)
    tangent[s] = std::abs(rs.pairing(rs.simple_roots[s], Y)) <= tol * ny;
  std::vector<std::size_t> phi_u;
  for (std::size_t i = 0; i < rs.positive_roots.size(); ++i)
    for (std::size_t s = 0; s < tangent.size(); ++s)
      if (rs.coefficients[i][s] != 0 && !tangent[s]) {
        phi_u.push_back(i);
        break;
      }
  return degeneration_from_phi_u(rs, phi_u, ny > 0);
}

LimitResidual limit_residual(const Checkpoint& cp, const Vec& Y, const ReducedGeometry& limit,
                             const Vec& a0, double radius) {
  const Grid& G = cp.grid;
  const RootSystem& rs = limit.rs;
  const int r = G.dim();
  LimitResidual out;
  const Vec center = cp.x_t - a0;
  double room = kInf;
  for (int a = 0; a < r; ++a)
    room = std::min({room, center(a) - (G.lo(a) + G.spacing(a)), (G.hi(a) - G.spacing(a)) - center(a)});
  if (!(room > 0)) throw InputError("limit_residual: the window center lies outside the grid");
  out.radius = radius;
  if (radius > room) {
    out.radius = room;
    out.shrunk = true;
  }
  const auto terms = limit.terms();
  double lo = kInf, hi = -kInf;
  Vec g;
  Mat H;
  for (std::size_t k = 0; k < G.size(); ++k) {
    if (G.on_boundary(k)) continue;
    const Vec z = G.node(k);
    const Vec x = z - center;
    if ((x.array().abs() > out.radius).any() || rs.norm(x) > out.radius) continue;
    fd_derivatives(G, cp.psi, k, g, H);
    Eigen::LLT<Mat> llt(0.5 * (H + H.transpose()));
    if (llt.info() != Eigen::Success) continue;
    double logdet = 0.0;
    for (int i = 0; i < r; ++i) logdet += 2.0 * std::log(llt.matrixL()(i, i));
    double val = logdet;
    bool ok = true;
    for (const auto& term : terms) {
      if (term.pi_exp > 0) {
        const double p = rs.inner(term.root, g);
        if (!(p > 0)) {
          ok = false;
          break;
        }
        val += term.pi_exp * std::log(p);
      }
      if (term.j_exp > 0) {
        const double s = rs.pairing(term.root, x);
        if (!(s > 1e-9)) {
          ok = false;
          break;
        }
        val -= term.j_exp * std::log(std::sinh(s));
      }
    }
    if (!ok) continue;
    const Vec dphi = g - limit.grad_shift;
    const double phi = cp.psi[k] - limit.grad_shift.dot(x);
    val += phi + Y.dot(dphi);
    lo = std::min(lo, val);
    hi = std::max(hi, val);
    ++out.nodes;
  }
  if (out.nodes == 0) throw InputError("limit_residual: no admissible nodes in the window");
  out.value = 0.5 * (hi - lo);
  return out;
}

ClassificationResult classify(const ReducedGeometry& geom, const Trajectory& tr,
                              const ClassifierThresholds& thr) {
  const RootSystem& rs = geom.rs;
  std::vector<double> t;
  std::vector<Vec> x;
  for (const auto& row : tr.rows) {
    t.push_back(row.t);
    x.push_back(row.x);
  }
  ClassificationResult res;
  res.thresholds = thr;
  res.decision = decide_case(rs, t, x, thr);
  res.case_tag = res.decision.tag;
  res.phi_u = res.decision.phi_u;
  res.a0 = estimate_a0(rs, t, x, res.phi_u, thr.window_fraction);
  if (!res.a0.consistent) res.warnings.push_back("a0 system is inconsistent; best fit reported");
  res.Y = estimate_Y(rs, t, x, tr.checkpoints, res.phi_u, thr);
  for (const auto& w : res.Y.warnings) res.warnings.push_back(w);

  const Vec& Yref = res.Y.checkpoints_used > 0 ? res.Y.Y_hfit : res.Y.Y_drift;
  const bool nonzero = rs.norm(Yref) > 1e-3;
  res.degeneration = degeneration_from_phi_u(rs, res.phi_u, nonzero);
  if (res.degeneration.phi_u != res.phi_u)
    res.warnings.push_back("measured Phi_u is not of parabolic type; the degeneration uses its closure");
  if (res.phi_u.empty()) res.degeneration.limit = geom;

  if (!tr.checkpoints.empty()) {
    try {
      res.residual = limit_residual(tr.checkpoints.back(), Yref, res.degeneration.limit, res.a0.a0,
                                    thr.residual_radius);
      res.residual_available = true;
      if (res.residual.shrunk) res.warnings.push_back("limit residual window shrunk to fit the grid");
    } catch (const InputError& e) {
      res.warnings.push_back(e.what());
    }
  }
  return res;
}

}  // namespace horoflow
