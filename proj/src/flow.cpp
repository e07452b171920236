#include "horoflow/flow.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <limits>

#include "horoflow/error.hpp"
#include "horoflow/quadrature.hpp"
#include "parallel.hpp"

namespace horoflow {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double log_sinh_abs(double t) {
  t = std::abs(t);
  if (t > 20.0) return t - std::log(2.0) + std::log1p(-std::exp(-2.0 * t));
  return std::log(std::sinh(t));
}

double log_sum_exp(const std::vector<double>& logs, const std::vector<double>& w) {
  double mx = -kInf;
  for (std::size_t i = 0; i < logs.size(); ++i)
    if (w[i] > 0) mx = std::max(mx, logs[i]);
  if (!std::isfinite(mx)) return -kInf;
  double s = 0.0;
  for (std::size_t i = 0; i < logs.size(); ++i)
    if (w[i] > 0 && std::isfinite(logs[i])) s += w[i] * std::exp(logs[i] - mx);
  return mx + std::log(s);
}

}  // namespace

Potential Potential::from(const ReferencePotential& ref) {
  Potential p;
  p.eval = [ref](const Vec& x, double& v, Vec& g, Mat& h) { ref.evaluate(x, v, g, h); };
  return p;
}

FlowSolver::FlowSolver(ReducedGeometry geom, const MomentPolytope& P, Potential reference,
                       Grid grid, FlowOptions opt)
    : geom_(std::move(geom)), P_(P), ref_(std::move(reference)), opt_(std::move(opt)) {
  if (grid.dim() != geom_.rank())
    throw GeometryError("flow: grid dimension " + std::to_string(grid.dim()) +
                        " does not match rank " + std::to_string(geom_.rank()));
  if (opt_.scheme != "implicit" && opt_.scheme != "explicit")
    throw ConfigError("flow.scheme: expected 'implicit' or 'explicit', got '" + opt_.scheme + "'");
  terms_ = geom_.terms();
  for (const auto& t : terms_)
    if (t.pi_exp != 0 && t.j_exp != 0 && t.pi_exp != t.j_exp)
      throw GeometryError("flow: root appears in J and pi with different exponents");
  auto order = weyl_order(geom_.rs, geom_.cone_roots);
  if (!order) throw GeometryError("flow: Weyl group of the cone roots exceeds the enumeration cap");
  weyl_order_ = *order;

  auto pi_weight = [this](const Vec& y) {
    double p = 1.0;
    for (const auto& w : geom_.pi_roots) p *= std::pow(geom_.rs.inner(w.root, y), w.exponent);
    return Vec::Constant(1, p);
  };
  V0_ = integrate_adaptive(chamber_region(P_, 0.5 * geom_.grad_shift), pi_weight, 1).value(0);

  const int r = geom_.rank();
  std::vector<Vec> fixed = geom_.cone_roots;
  for (const auto& t : terms_) fixed.push_back(t.root);
  if (fixed.empty()) {
    frame_proj_ = Mat::Identity(r, r);
  } else {
    Mat C(static_cast<Eigen::Index>(fixed.size()), r);
    for (std::size_t i = 0; i < fixed.size(); ++i) C.row(static_cast<Eigen::Index>(i)) = fixed[i].transpose();
    Eigen::FullPivLU<Mat> lu(C);
    if (lu.rank() == r) {
      frame_proj_ = Mat::Zero(r, r);
    } else {
      Mat K = lu.kernel();
      Eigen::HouseholderQR<Mat> qr(K);
      Mat Q = qr.householderQ() * Mat::Identity(r, K.cols());
      frame_proj_ = Q * Q.transpose();
    }
  }

  set_grid(std::move(grid), Vec::Zero(r));
  state_.velocity = Vec::Zero(r);
  state_.u.assign(state_.grid.size(), 0.0);
  state_.t = 0;
}

void FlowSolver::set_grid(Grid grid, Vec shift) {
  state_.grid = std::move(grid);
  state_.shift = std::move(shift);
  const Grid& G = state_.grid;
  const std::size_t N = G.size();
  perms_.clear();
  for (const auto& a : geom_.cone_roots) perms_.push_back(reflection_permutation(G, geom_.rs, a));
  psi0_.assign(N, 0.0);
  psi0_grad_.assign(N, Vec());
  psi0_hess_.assign(N, Mat());
  jw_.assign(N, 0.0);
  double hmin = G.spacing(0);
  for (int a = 1; a < G.dim(); ++a) hmin = std::min(hmin, G.spacing(a));
  const double wall_eps = 1e-9 * hmin;
  detail::parallel_for(N, opt_.threads, [&](std::size_t k) {
    Vec x = G.node(k);
    ref_.eval(x - state_.shift, psi0_[k], psi0_grad_[k], psi0_hess_[k]);
    double j = 0.0;
    for (const auto& w : geom_.j_roots) {
      double t = geom_.rs.pairing(w.root, x);
      if (std::abs(t) <= wall_eps) {
        j = kInf;
        break;
      }
      j -= w.exponent * log_sinh_abs(t);
    }
    jw_[k] = j;
  });
  weights_ = G.trapezoid_weights();
  for (double& w : weights_) w /= static_cast<double>(weyl_order_);
  evaluated_ = false;
}

void FlowSolver::set_initial_u(const std::function<double(const Vec&)>& u0) {
  const Grid& G = state_.grid;
  for (std::size_t k = 0; k < G.size(); ++k) state_.u[k] = u0(G.node(k));
  symmetrize_in_place(state_.u, perms_);
  evaluated_ = false;
}

NodeEval FlowSolver::evaluate_node(std::size_t k) const {
  const Grid& G = state_.grid;
  const int r = G.dim();
  Vec du;
  Mat d2u;
  fd_derivatives(G, state_.u, k, du, d2u);
  Vec g = psi0_grad_[k] + du;
  Mat H = psi0_hess_[k] + d2u;
  H = 0.5 * (H + H.transpose());
  Eigen::LLT<Mat> llt(H);
  if (llt.info() != Eigen::Success)
    throw DegeneracyError("Hessian is not positive definite at node " + std::to_string(k),
                          static_cast<long>(k), -1);
  double logdet = 0.0;
  for (int i = 0; i < r; ++i) logdet += 2.0 * std::log(llt.matrixL()(i, i));
  if (!std::isfinite(logdet))
    throw DegeneracyError("Hessian determinant underflows at node " + std::to_string(k),
                          static_cast<long>(k), -1);

  NodeEval e;
  e.grad = g;
  Eigen::SelfAdjointEigenSolver<Mat> es(H, Eigen::EigenvaluesOnly);
  e.hess_min = es.eigenvalues()(0);
  e.hess_max = es.eigenvalues()(r - 1);
  e.A = llt.solve(Mat::Identity(r, r));
  e.b = Vec::Zero(r);

  Vec x = G.node(k);
  double hmin = G.spacing(0);
  for (int a = 1; a < r; ++a) hmin = std::min(hmin, G.spacing(a));
  const double wall_eps = 1e-9 * hmin;
  const Vec gs = g + geom_.grad_shift;
  double val = 0.0, log_pi = 0.0;
  for (std::size_t i = 0; i < terms_.size(); ++i) {
    const RootTerm& term = terms_[i];
    const Vec Ga = geom_.rs.gram * term.root;
    const double t = geom_.rs.pairing(term.root, x);
    const double p = Ga.dot(gs);
    const int pe = term.pi_exp, je = term.j_exp;
    auto degenerate = [&](const char* what) {
      throw DegeneracyError(std::string(what) + " at node " + std::to_string(k) + " for root " +
                                std::to_string(i),
                            static_cast<long>(k), static_cast<int>(i));
    };
    if (je > 0 && pe == je) {
      if (std::abs(t) <= wall_eps) {
        double q = Ga.dot(H * Ga);
        double lim = q / term.root.dot(Ga);
        if (!(lim > 0)) degenerate("nonpositive wall limit");
        val += pe * std::log(lim);
        e.A += pe * (Ga * Ga.transpose()) / q;
        log_pi = -kInf;
      } else {
        if (!(p / std::sinh(t) > 0)) degenerate("nonpositive root pairing");
        val += pe * (std::log(std::abs(p)) - log_sinh_abs(t));
        e.b += pe * Ga / p;
        log_pi += pe * std::log(std::abs(p));
      }
    } else if (je == 0) {
      if (!(p > 0)) degenerate("nonpositive root pairing");
      val += pe * std::log(p);
      e.b += pe * Ga / p;
      log_pi += pe * std::log(p);
    } else {
      if (std::abs(t) <= wall_eps) degenerate("node on a wall of J");
      val -= je * log_sinh_abs(t);
    }
  }
  const double psi = psi0_[k] + state_.u[k];
  e.F = logdet + val + psi;
  e.log_ma = logdet + log_pi;
  return e;
}

void FlowSolver::evaluate_all() {
  const std::size_t N = state_.grid.size();
  F_.assign(N, 0.0);
  log_ma_.assign(N, 0.0);
  hess_max_.assign(N, 0.0);
  hess_min_.assign(N, 0.0);
  grad_.assign(N, Vec());
  A_.assign(N, Mat());
  b_.assign(N, Vec());
  detail::parallel_for(N, opt_.threads, [&](std::size_t k) {
    NodeEval e = evaluate_node(k);
    F_[k] = e.F;
    log_ma_[k] = e.log_ma;
    hess_max_[k] = e.hess_max;
    hess_min_[k] = e.hess_min;
    grad_[k] = std::move(e.grad);
    A_[k] = std::move(e.A);
    b_[k] = std::move(e.b);
  });
  evaluated_ = true;
}

void FlowSolver::refresh() {
  evaluate_all();
  const std::size_t N = state_.grid.size();
  std::vector<double> logs(N);
  for (std::size_t k = 0; k < N; ++k) logs[k] = log_ma_[k] - F_[k];
  double lz = log_sum_exp(logs, weights_);
  if (!std::isfinite(lz)) throw NumericalError("normalization integral is not finite");
  state_.c = std::log(V0_) - lz;
  state_.h.resize(N);
  state_.psi.resize(N);
  for (std::size_t k = 0; k < N; ++k) {
    state_.h[k] = state_.c - F_[k];
    state_.psi[k] = psi0_[k] + state_.u[k];
  }
  locate_minimum();
}

void FlowSolver::locate_minimum() {
  const Grid& G = state_.grid;
  const int r = G.dim();
  double hmin = G.spacing(0);
  for (int a = 1; a < r; ++a) hmin = std::min(hmin, G.spacing(a));
  std::size_t best = G.size();
  double bw = kInf;
  for (std::size_t k = 0; k < G.size(); ++k) {
    if (G.on_boundary(k) || !std::isfinite(jw_[k])) continue;
    if (!(cone_margin(geom_, G.node(k)) > 1e-9 * hmin)) continue;
    double w = state_.psi[k] + jw_[k];
    if (w < bw) {
      bw = w;
      best = k;
    }
  }
  if (best == G.size()) throw NumericalError("no interior chamber node for the minimum of psi + j");
  state_.argmin_node = best;
  state_.x_t = G.node(best);
  state_.m_t = bw;

  // Quadratic fit on the 3^r neighborhood.
  const int nb = static_cast<int>(std::pow(3, r));
  const int np = 1 + r + r * (r + 1) / 2;
  Mat M(nb, np);
  Vec rhs(nb);
  std::vector<int> base = G.multi_index(best);
  for (int q = 0; q < nb; ++q) {
    std::vector<int> m = base;
    Vec z(r);
    int code = q;
    for (int a = 0; a < r; ++a) {
      int d = code % 3 - 1;
      code /= 3;
      m[a] += d;
      z(a) = d * G.spacing(a);
    }
    std::size_t idx = G.flat_index(m);
    double w = state_.psi[idx] + jw_[idx];
    if (!std::isfinite(w)) return;
    int c = 0;
    M(q, c++) = 1.0;
    for (int a = 0; a < r; ++a) M(q, c++) = z(a);
    for (int a = 0; a < r; ++a)
      for (int b = a; b < r; ++b) M(q, c++) = (a == b ? 0.5 : 1.0) * z(a) * z(b);
    rhs(q) = w;
  }
  Vec coef = M.colPivHouseholderQr().solve(rhs);
  Vec g = coef.segment(1, r);
  Mat Q(r, r);
  int c = 1 + r;
  for (int a = 0; a < r; ++a)
    for (int b = a; b < r; ++b) Q(a, b) = Q(b, a) = coef(c++);
  Eigen::LLT<Mat> llt(Q);
  if (llt.info() != Eigen::Success) return;
  Vec z = -llt.solve(g);
  for (int a = 0; a < r; ++a)
    if (std::abs(z(a)) > G.spacing(a)) return;
  Vec xt = state_.x_t + z;
  if (!(cone_margin(geom_, xt) > 0)) return;
  state_.x_t = xt;
  state_.m_t = coef(0) + 0.5 * g.dot(z);
}

double FlowSolver::stable_dt() const {
  double amax = 0.0;
  for (const auto& A : A_) amax = std::max(amax, A.diagonal().cwiseAbs().maxCoeff());
  double h2 = kInf;
  for (int a = 0; a < state_.grid.dim(); ++a) h2 = std::min(h2, state_.grid.spacing(a) * state_.grid.spacing(a));
  return opt_.cfl * h2 / std::max(amax * state_.grid.dim(), 1e-300);
}

bool FlowSolver::solve_linearized(double dt, double diag, const std::vector<double>& rhs,
                                  std::vector<double>& out) const {
  const Grid& G = state_.grid;
  const std::size_t N = G.size();
  const int r = G.dim();
  using Triplet = Eigen::Triplet<double>;
  std::vector<Triplet> trip;
  trip.reserve(N * (1 + 4 * r * r));
  for (std::size_t k = 0; k < N; ++k) {
    const Mat& A = A_[k];
    const Vec b = b_[k] + state_.velocity;
    const auto row = static_cast<Eigen::Index>(k);
    trip.emplace_back(row, row, 1.0 / dt - diag);
    FdStencil st = fd_stencil(G, k);
    for (int a = 0; a < r; ++a) {
      for (const auto& [i, w] : st.grad[a]) trip.emplace_back(row, static_cast<Eigen::Index>(i), -b(a) * w);
      for (int c = 0; c < r; ++c)
        for (const auto& [i, w] : st.hess[static_cast<std::size_t>(a * r + c)])
          trip.emplace_back(row, static_cast<Eigen::Index>(i), -A(a, c) * w);
    }
  }
  Eigen::SparseMatrix<double> S(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(N));
  S.setFromTriplets(trip.begin(), trip.end());
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.compute(S);
  if (lu.info() != Eigen::Success) return false;
  Eigen::Map<const Vec> bv(rhs.data(), static_cast<Eigen::Index>(N));
  Vec sol = lu.solve(bv);
  if (lu.info() != Eigen::Success) return false;
  out.assign(sol.data(), sol.data() + N);
  for (double d : out)
    if (!std::isfinite(d)) return false;
  return true;
}

bool FlowSolver::step(double dt) {
  if (!evaluated_) refresh();
  const std::size_t N = state_.grid.size();
  const std::vector<double> u0 = state_.u;
  const double c0 = state_.c;

  auto restore = [&] {
    state_.u = u0;
    refresh();
    return false;
  };
  // Residual of the backward Euler equation, and its sup norm after Jacobi
  // scaling (in units of u, so finite-difference noise at nodes with a tiny
  // Hessian does not dominate).
  const Grid& G = state_.grid;
  auto residual = [&](std::vector<double>& res) {
    double mx = 0.0;
    for (std::size_t k = 0; k < N; ++k) {
      res[k] = (F_[k] - c0 + state_.velocity.dot(grad_[k])) - (state_.u[k] - u0[k]) / dt;
      double d = 1.0 / dt;
      for (int a = 0; a < G.dim(); ++a) d += 2.0 * A_[k](a, a) / (G.spacing(a) * G.spacing(a));
      mx = std::max(mx, std::abs(res[k]) / d);
    }
    return mx;
  };

  if (opt_.scheme == "explicit") {
    for (std::size_t k = 0; k < N; ++k) state_.u[k] += dt * (F_[k] - c0 + state_.velocity.dot(grad_[k]));
    double change = 0.0;
    for (std::size_t k = 0; k < N; ++k) change = std::max(change, std::abs(state_.u[k] - u0[k]));
    if (change > opt_.max_change) return restore();
    symmetrize_in_place(state_.u, perms_);
    try {
      refresh();
    } catch (const DegeneracyError&) {
      return restore();
    }
    state_.t += dt;
    translate(dt * state_.velocity);
    return true;
  }

  // Backward Euler, solved by damped Newton. The psi term of F contributes
  // the diagonal shift while it keeps the matrix diagonally dominant.
  const double diag = std::min(1.0, 0.5 / dt);
  std::vector<double> res(N), delta, trial_u;
  double rnorm = residual(res);
  bool converged = false;
  for (int it = 0; it < opt_.newton_max_iter; ++it) {
    if (rnorm <= opt_.newton_tol) {
      converged = true;
      break;
    }
    if (!solve_linearized(dt, diag, res, delta)) return restore();
    const std::vector<double> base = state_.u;
    bool accepted = false;
    double step_norm = 0.0;
    for (double theta = 1.0; theta >= 1.0 / 64; theta *= 0.5) {
      trial_u = base;
      for (std::size_t k = 0; k < N; ++k) trial_u[k] += theta * delta[k];
      symmetrize_in_place(trial_u, perms_);
      state_.u = trial_u;
      try {
        evaluate_all();
      } catch (const DegeneracyError&) {
        continue;
      }
      double rn = residual(res);
      if (rn <= (1.0 - 1e-4 * theta) * rnorm || rn <= opt_.newton_tol) {
        rnorm = rn;
        accepted = true;
        step_norm = 0.0;
        for (std::size_t k = 0; k < N; ++k) step_norm = std::max(step_norm, std::abs(theta * delta[k]));
        break;
      }
    }
    if (!accepted) {
      // Round-off in the finite differences puts a floor under the residual.
      if (rnorm <= opt_.newton_stall_tol) {
        state_.u = base;
        evaluate_all();
        break;
      }
      return restore();
    }
    if (step_norm <= 1e-13 * (1.0 + std::abs(state_.u[0]))) {
      break;
    }
  }
  if (!converged && rnorm > opt_.newton_stall_tol) return restore();

  double change = 0.0;
  for (std::size_t k = 0; k < N; ++k) change = std::max(change, std::abs(state_.u[k] - u0[k]));
  if (change > opt_.max_change) return restore();
  refresh();
  state_.t += dt;
  translate(dt * state_.velocity);
  return true;
}

double FlowSolver::osc_h() const {
  double lo = kInf, hi = -kInf;
  for (double v : state_.h) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  return 0.5 * (hi - lo);
}

double FlowSolver::mass() const {
  double s = 0.0;
  for (std::size_t k = 0; k < log_ma_.size(); ++k)
    if (std::isfinite(log_ma_[k])) s += weights_[k] * std::exp(log_ma_[k]);
  return s;
}

double FlowSolver::diagnostics_volume(double level) const {
  double s = 0.0;
  const double cut = state_.m_t + level + 1.0;
  for (std::size_t k = 0; k < log_ma_.size(); ++k) {
    if (!std::isfinite(log_ma_[k]) || !std::isfinite(jw_[k])) continue;
    if (state_.psi[k] + jw_[k] < cut) s += weights_[k] * std::exp(log_ma_[k]);
  }
  return s;
}

double FlowSolver::normalization_residual() const {
  double s = 0.0;
  for (std::size_t k = 0; k < log_ma_.size(); ++k)
    if (std::isfinite(log_ma_[k])) s += weights_[k] * std::exp(state_.h[k] + log_ma_[k]);
  return std::abs(s - V0_) / V0_;
}

double FlowSolver::delta0() const {
  if (geom_.cone_roots.empty()) return kInf;
  return cone_margin(geom_, state_.x_t);
}

double FlowSolver::coverage() const {
  const Grid& G = state_.grid;
  const int r = G.dim();
  ConvexRegion R = chamber_region(P_, Vec::Zero(r));
  auto verts = enumerate_vertices(R.normals, R.offsets, r);
  if (verts.empty()) return 0.0;
  Vec lo = verts[0].point, hi = verts[0].point, cen = Vec::Zero(r);
  for (const auto& v : verts) {
    lo = lo.cwiseMin(v.point);
    hi = hi.cwiseMax(v.point);
    cen += v.point;
  }
  cen /= static_cast<double>(verts.size());
  const int n = std::max(2, opt_.coverage_samples);
  std::vector<Vec> samples;
  std::vector<int> idx(r, 0);
  while (true) {
    Vec y(r);
    for (int a = 0; a < r; ++a) y(a) = lo(a) + (hi(a) - lo(a)) * (idx[a] + 0.5) / n;
    bool inside = true;
    for (std::size_t i = 0; i < R.normals.size(); ++i)
      if (R.normals[i].dot(y) > R.offsets[i]) inside = false;
    if (inside) samples.push_back(cen + 0.9 * (y - cen));
    int a = r - 1;
    while (a >= 0 && idx[a] == n - 1) idx[a--] = 0;
    if (a < 0) break;
    ++idx[a];
  }
  if (samples.empty()) return 0.0;
  std::vector<Vec> nodes(G.size());
  for (std::size_t k = 0; k < G.size(); ++k) nodes[k] = G.node(k);
  std::vector<char> covered(samples.size(), 0);
  detail::parallel_for(samples.size(), opt_.threads, [&](std::size_t s) {
    double best = -kInf;
    std::size_t arg = 0;
    for (std::size_t k = 0; k < G.size(); ++k) {
      double v = samples[s].dot(nodes[k]) - state_.psi[k];
      if (v > best) {
        best = v;
        arg = k;
      }
    }
    covered[s] = !G.on_boundary(arg);
  });
  double c = 0;
  for (char v : covered) c += v;
  return c / static_cast<double>(samples.size());
}

TrajectoryRow FlowSolver::record(double dt, double cov) const {
  TrajectoryRow row;
  row.t = state_.t;
  row.x = state_.x_t;
  row.m = state_.m_t;
  row.c = state_.c;
  row.osc_h = osc_h();
  row.hess_sup = *std::max_element(hess_max_.begin(), hess_max_.end());
  row.hess_min = *std::min_element(hess_min_.begin(), hess_min_.end());
  row.mass = mass();
  row.coverage = cov;
  row.norm_residual = normalization_residual();
  row.delta0 = delta0();
  row.dt = dt;
  for (double k : opt_.u_levels) row.u_mass.push_back(diagnostics_volume(k));
  row.shift = state_.shift;
  return row;
}

Checkpoint FlowSolver::checkpoint() const {
  Checkpoint cp;
  cp.t = state_.t;
  cp.grid = state_.grid;
  cp.shift = state_.shift;
  cp.psi = state_.psi;
  cp.h = state_.h;
  cp.x_t = state_.x_t;
  cp.m_t = state_.m_t;
  cp.c_t = state_.c;
  return cp;
}

Vec FlowSolver::frame_velocity() const {
  const Grid& G = state_.grid;
  Vec v = Vec::Zero(G.dim());
  if (!(opt_.track_time > 0)) return v;
  for (int a = 0; a < G.dim(); ++a) v(a) = state_.x_t(a) - 0.5 * (G.lo(a) + G.hi(a));
  return frame_proj_ * v / opt_.track_time;
}

void FlowSolver::translate(const Vec& dy) {
  if (dy.lpNorm<Eigen::Infinity>() == 0.0) return;
  const Grid& G = state_.grid;
  std::vector<double> lo(G.dim()), hi(G.dim());
  for (int a = 0; a < G.dim(); ++a) {
    lo[a] = G.lo(a) + dy(a);
    hi[a] = G.hi(a) + dy(a);
  }
  // psi_0(x - shift), j and the reflection tables are unchanged.
  state_.grid = Grid(lo, hi, G.nodes());
  state_.shift += dy;
  locate_minimum();
}

bool FlowSolver::near_edge() const {
  const Grid& G = state_.grid;
  for (int a = 0; a < G.dim(); ++a) {
    double half = 0.5 * (G.hi(a) - G.lo(a));
    double gap = std::min(state_.x_t(a) - G.lo(a), G.hi(a) - state_.x_t(a));
    if (gap < opt_.escape_margin * half) return true;
  }
  return false;
}

Trajectory FlowSolver::run() {
  Trajectory tr;
  tr.V0 = V0_;
  tr.weyl_order = weyl_order_;
  tr.u_levels = opt_.u_levels;
  tr.dim = state_.grid.dim();
  refresh();
  double cov = coverage();
  tr.rows.push_back(record(0.0, cov));
  tr.checkpoints.push_back(checkpoint());
  double next_cp = opt_.checkpoint_every > 0 ? state_.t + opt_.checkpoint_every : kInf;
  double dt = opt_.dt_init;
  tr.status = "t_final";
  const double eps = 1e-12 * std::max(1.0, opt_.t_final);

  while (state_.t < opt_.t_final - eps) {
    if (tr.steps >= opt_.max_steps) {
      tr.status = "max_steps";
      break;
    }
    double h = std::min({dt, opt_.t_final - state_.t, next_cp - state_.t});
    if (opt_.scheme == "explicit") h = std::min(h, stable_dt());
    std::vector<double> before = state_.u;
    state_.velocity = frame_velocity();
    bool ok = step(h);
    if (!ok) {
      ++tr.rejected;
      dt = 0.5 * std::min(dt, h);
      if (dt < opt_.dt_min) {
        tr.status = "degenerate";
        tr.message = "time step fell below dt_min at t = " + std::to_string(state_.t);
        break;
      }
      continue;
    }
    ++tr.steps;
    double change = 0.0;
    for (std::size_t k = 0; k < before.size(); ++k) change = std::max(change, std::abs(state_.u[k] - before[k]));
    if (h >= dt * (1 - 1e-12) && change < 0.25 * opt_.max_change) dt = std::min(opt_.dt_max, dt * 1.25);

    if (opt_.coverage_every > 0 && tr.steps % opt_.coverage_every == 0) cov = coverage();
    bool at_cp = state_.t >= next_cp - eps;
    if (at_cp) cov = coverage();
    tr.rows.push_back(record(h, cov));
    if (at_cp) {
      tr.checkpoints.push_back(checkpoint());
      next_cp += opt_.checkpoint_every;
    }
    if (osc_h() <= opt_.conv_tol) {
      tr.converged = true;
      if (opt_.stop_on_convergence) {
        tr.status = "converged";
        break;
      }
    }
    if (near_edge()) {
      tr.status = "escaped";
      tr.message = "x_t left the truncation margin at t = " + std::to_string(state_.t);
      break;
    }
  }
  if (tr.checkpoints.back().t < state_.t) tr.checkpoints.push_back(checkpoint());
  if (tr.rows.back().coverage != coverage()) {
    tr.rows.back().coverage = coverage();
  }
  if (tr.converged && tr.status == "t_final") tr.status = "converged";
  double full = tr.rows.back().u_mass.empty() ? tr.rows.back().mass : tr.rows.back().u_mass.back();
  tr.full_mass = full >= 0.99 * V0_;
  return tr;
}

Trajectory run_flow(const ReducedGeometry& geom, const MomentPolytope& P, const Grid& grid,
                    const FlowOptions& opt, int density) {
  FlowSolver solver(geom, P, Potential::from(reference_potential(P, density)), grid, opt);
  return solver.run();
}

}  // namespace horoflow
