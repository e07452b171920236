#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "horoflow/geometry.hpp"
#include "horoflow/grid.hpp"
#include "horoflow/polytope.hpp"

namespace horoflow {

/// Smooth convex potential with analytic derivatives, used as the reference
/// psi_0 that the grid unknown u = psi - psi_0 is measured against.
struct Potential {
  std::function<void(const Vec& x, double& value, Vec& grad, Mat& hess)> eval;

  static Potential from(const ReferencePotential& ref);
};

struct FlowOptions {
  std::string scheme = "implicit";  ///< "implicit" (backward Euler) or "explicit"
  double dt_init = 1e-3;
  double dt_max = 0.1;
  double dt_min = 1e-10;
  double cfl = 0.2;          ///< explicit scheme only
  double max_change = 0.5;   ///< reject steps whose update exceeds this in sup norm
  int newton_max_iter = 12;
  double newton_tol = 1e-12;        ///< Jacobi-scaled backward Euler residual, units of u
  double newton_stall_tol = 1e-10;  ///< accepted when the line search stalls
  double t_final = 10.0;
  double checkpoint_every = 1.0;
  double conv_tol = 1e-7;    ///< on osc of the Ricci potential
  bool stop_on_convergence = true;
  double track_time = 1.0;     ///< relaxation time of the moving box toward x_t; 0 keeps it fixed
  double escape_margin = 0.3;  ///< stop when x_t is this close (fraction of half-width) to the edge
  std::vector<double> u_levels = {0, 1, 2, 4, 8, 1e6};
  int coverage_every = 10;
  int coverage_samples = 9;  ///< per axis
  double m_bound = 1e3;      ///< monitored bound on |m_t|
  double hess_bound = 1e6;   ///< monitored bound on sup |Hess psi|
  long max_steps = 2'000'000;
  int threads = 1;
};

/// Per-node result of evaluating the reduced operator.
struct NodeEval {
  double F = 0;       ///< log[pi(grad psi + shift) det Hess psi] - log J + psi
  double log_ma = 0;  ///< log[pi(grad psi + shift) det Hess psi] (-inf on walls)
  double hess_max = 0;
  double hess_min = 0;
  Vec grad;           ///< grad psi
  Mat A;              ///< second-order coefficients of the linearization
  Vec b;              ///< first-order coefficients
};

struct FlowState {
  double t = 0;
  Grid grid;
  Vec shift;                ///< translation of the box so far; psi(x) = psi_0(x - shift) + u(x)
  Vec velocity;             ///< current velocity of the box
  std::vector<double> u;
  std::vector<double> psi;
  std::vector<double> h;    ///< Ricci potential c - F
  double c = 0;
  Vec x_t;
  double m_t = 0;
  std::size_t argmin_node = 0;
};

struct TrajectoryRow {
  double t = 0;
  Vec x;
  double m = 0;
  double c = 0;
  double osc_h = 0;
  double hess_sup = 0;
  double hess_min = 0;
  double mass = 0;
  double coverage = 0;
  double norm_residual = 0;
  double delta0 = 0;   ///< min <alpha, x_t> over cone roots (inf if none)
  double dt = 0;
  std::vector<double> u_mass;  ///< MA mass of U_k for each configured level
  Vec shift;
};

struct Checkpoint {
  double t = 0;
  Grid grid;
  Vec shift;
  std::vector<double> psi;
  std::vector<double> h;
  Vec x_t;
  double m_t = 0;
  double c_t = 0;
};

struct Trajectory {
  std::vector<TrajectoryRow> rows;
  std::vector<Checkpoint> checkpoints;
  std::string status;   ///< converged, t_final, escaped, degenerate, max_steps
  std::string message;
  double V0 = 0;
  std::size_t weyl_order = 1;
  long steps = 0;
  long rejected = 0;
  bool converged = false;
  bool full_mass = false;
  std::vector<double> u_levels;
  int dim = 0;
};

class FlowSolver {
 public:
  FlowSolver(ReducedGeometry geom, const MomentPolytope& P, Potential reference, Grid grid,
             FlowOptions opt);

  void set_initial_u(const std::function<double(const Vec&)>& u0);

  const FlowState& state() const { return state_; }
  const ReducedGeometry& geometry() const { return geom_; }
  const FlowOptions& options() const { return opt_; }
  double V0() const { return V0_; }
  std::size_t weyl_group_order() const { return weyl_order_; }

  /// Reduced operator at a node; DegeneracyError when ellipticity fails.
  NodeEval evaluate_node(std::size_t node) const;
  double rhs(std::size_t node) const { return evaluate_node(node).F; }

  /// Advances by dt. Returns false (state unchanged) when the step is
  /// rejected for degeneracy or excessive change.
  bool step(double dt);

  /// MA mass of {w < m_t + k + 1} inside the chamber.
  double diagnostics_volume(double k) const;

  /// Recomputes F, c, h, x_t, m_t for the current u.
  void refresh();

  double osc_h() const;
  double mass() const;
  double coverage() const;
  double normalization_residual() const;
  double delta0() const;

  TrajectoryRow record(double dt, double coverage) const;
  Checkpoint checkpoint() const;

  /// Velocity of the box toward x_t, restricted to directions that leave J, j
  /// and the reflections invariant.
  Vec frame_velocity() const;
  /// Moves the box; node values travel with it.
  void translate(const Vec& dy);
  bool near_edge() const;

  Trajectory run();

 private:
  void set_grid(Grid grid, Vec shift);
  void evaluate_all();
  double stable_dt() const;
  void locate_minimum();
  bool solve_linearized(double dt, double diag, const std::vector<double>& rhs,
                        std::vector<double>& out) const;

  ReducedGeometry geom_;
  MomentPolytope P_;
  Potential ref_;
  FlowOptions opt_;
  std::vector<RootTerm> terms_;
  double V0_ = 0;
  std::size_t weyl_order_ = 1;
  Mat frame_proj_;  ///< projection onto the admissible translation directions

  FlowState state_;
  std::vector<double> psi0_;
  std::vector<Vec> psi0_grad_;
  std::vector<Mat> psi0_hess_;
  std::vector<double> jw_;          ///< j at nodes with |sinh| (inf on walls)
  std::vector<double> weights_;     ///< trapezoid weights / |W|
  std::vector<std::vector<std::size_t>> perms_;

  std::vector<double> F_;
  std::vector<double> log_ma_;
  std::vector<double> hess_max_, hess_min_;
  std::vector<Vec> grad_;
  std::vector<Mat> A_;
  std::vector<Vec> b_;
  bool evaluated_ = false;
};

/// Builds the reference potential for P and runs the flow.
Trajectory run_flow(const ReducedGeometry& geom, const MomentPolytope& P, const Grid& grid,
                    const FlowOptions& opt, int density = 1);

}  // namespace horoflow
