#pragma once

#include <string>
#include <vector>

#include "horoflow/flow.hpp"
#include "horoflow/geometry.hpp"
#include "horoflow/rootsys.hpp"

namespace horoflow {

struct ClassifierThresholds {
  double R_bound = 2.0;
  double A_grow = 8.0;
  double s_min = 0.05;           ///< per unit time
  double window_fraction = 0.5;  ///< late window is the last fraction of [t_0, T]
  std::size_t min_rows = 8;
  double tangency_tol = 1e-6;    ///< relative to |Y|
  double hfit_radius = 1.5;
  double residual_radius = 1.5;
  int threads = 1;
};

enum class CaseTag { Case1, Case2, Case3_1, Case3_2, Inconclusive };
const char* to_string(CaseTag c);

struct RootGrowth {
  std::size_t root_index = 0;
  std::string label;
  double final_pairing = 0;
  double slope = 0;
  bool above_level = false;
  bool above_slope = false;
  bool monotone = true;  ///< never falls back below A_grow once above it
};

struct CaseDecision {
  CaseTag tag = CaseTag::Inconclusive;
  std::vector<std::size_t> phi_u;  ///< indices into positive_roots, ascending
  std::vector<RootGrowth> growth;
  double window_start = 0;
  double window_end = 0;
  double sup_norm = 0;  ///< sup |x_t| over the window
  double sup_pj = 0;    ///< sup |Pj(x_t)| over the window
  std::vector<std::string> notes;
};

/// Case taxonomy from the concentration points x_t at times t.
CaseDecision decide_case(const RootSystem& rs, const std::vector<double>& t,
                         const std::vector<Vec>& x, const ClassifierThresholds& thr);

struct A0Estimate {
  Vec a0;
  double residual = 0;  ///< sup norm of the least-squares residual
  bool consistent = true;
};

/// Minimal-norm solution of <alpha', a0> = mean <alpha', x_t> over the late
/// window, alpha' in Phi_+ minus Phi_u. Zero when Phi_u = Phi_+.
A0Estimate estimate_a0(const RootSystem& rs, const std::vector<double>& t,
                       const std::vector<Vec>& x, const std::vector<std::size_t>& phi_u,
                       double window_fraction = 0.5);

/// Least-squares slope of x_t over t >= window_start.
Vec drift_slope(const std::vector<double>& t, const std::vector<Vec>& x, double window_start);

struct HFit {
  Vec Y;
  double intercept = 0;
  double rms = 0;
  int samples = 0;
  bool full_rank = true;
};

/// Regression of h(x) on <Y, grad psi(x)> + c over nodes within `radius` of
/// x_t, with Y restricted to the annihilator of Phi_+ minus Phi_u.
HFit fit_h(const RootSystem& rs, const Checkpoint& cp, const std::vector<std::size_t>& phi_u,
           double radius);

struct YEstimate {
  Vec Y_drift;
  Vec Y_hfit;
  double angle = 0;          ///< radians between the two estimates
  double relative_norm = 0;  ///< |Y_drift - Y_hfit| / max(|Y_hfit|, 1e-3)
  double drift_tangency = 0; ///< max |<alpha', Y_drift>| over alpha' in Phi_+ minus Phi_u
  double hfit_tangency = 0;
  int checkpoints_used = 0;
  double hfit_spread = 0;    ///< max deviation of per-checkpoint fits from their mean
  std::vector<std::string> warnings;
};

YEstimate estimate_Y(const RootSystem& rs, const std::vector<double>& t,
                     const std::vector<Vec>& x, const std::vector<Checkpoint>& checkpoints,
                     const std::vector<std::size_t>& phi_u, const ClassifierThresholds& thr);

/// Symbolic generators of the subalgebra h and the parabolic p.
struct LieData {
  std::vector<std::string> h;
  std::vector<std::string> p;
  int cartan_generators = 0;
};

struct Degeneration {
  std::vector<std::size_t> tangent_simple;
  std::vector<std::size_t> nontangent_simple;
  std::vector<std::size_t> tangent_combinations;
  std::vector<std::size_t> remaining;
  std::vector<std::size_t> phi_u;
  LieData lie;
  ReducedGeometry limit;
  /// #h = (1 + dim Y-perp) + 2 #(Phi_+ minus Phi_u) + 2 #Phi_u.
  bool count_identity = false;
};

/// Degeneration data for a given Phi_u; `nonzero_y` selects the (Y, Y) +
/// diag(Y-perp) form of the Cartan part.
Degeneration degeneration_from_phi_u(const RootSystem& rs, const std::vector<std::size_t>& phi_u,
                                     bool nonzero_y);

/// Tangency test of the simple roots against Y decides Phi_u. InputError if
/// Y is outside the closed chamber.
Degeneration build_degeneration(const RootSystem& rs, const Vec& Y, double tol = 1e-6);

struct LimitResidual {
  double value = 0;  ///< (max - min) / 2 of log lhs - log rhs over the window
  int nodes = 0;
  double radius = 0;
  bool shrunk = false;
};

/// Residual of the limit soliton equation for phi(x) = psi(x + x_t - a0)
/// - psi(x_t) - <grad_shift, x> on a ball around the origin.
LimitResidual limit_residual(const Checkpoint& cp, const Vec& Y, const ReducedGeometry& limit,
                             const Vec& a0, double radius);

struct ClassificationResult {
  CaseDecision decision;
  CaseTag case_tag = CaseTag::Inconclusive;
  std::vector<std::size_t> phi_u;
  A0Estimate a0;
  YEstimate Y;
  Degeneration degeneration;
  LimitResidual residual;
  bool residual_available = false;
  ClassifierThresholds thresholds;
  std::vector<std::string> warnings;
};

/// Full post-processing of a flow run. `geom` is the geometry the flow ran
/// with; it is the limit geometry when Phi_u is empty.
ClassificationResult classify(const ReducedGeometry& geom, const Trajectory& tr,
                              const ClassifierThresholds& thr = {});

}  // namespace horoflow
