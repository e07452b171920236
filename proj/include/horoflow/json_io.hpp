#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "horoflow/classifier.hpp"
#include "horoflow/criterion.hpp"
#include "horoflow/flow.hpp"

namespace horoflow {

/// JSON text with every double printed to 17 significant digits; non-finite
/// numbers become null.
std::string dump_json(const nlohmann::json& j, int indent = 2);

void write_text(const std::string& path, const std::string& text);
std::string read_text(const std::string& path);
nlohmann::json read_json(const std::string& path);

nlohmann::json to_json(const Vec& v);
Vec vec_from_json(const nlohmann::json& j, const std::string& field);

nlohmann::json to_json(const RootSystem& rs);
nlohmann::json to_json(const ReducedGeometry& g);
nlohmann::json to_json(const MomentPolytope& P);
nlohmann::json to_json(const CriterionReport& r);
nlohmann::json to_json(const SolitonSolve& s);
nlohmann::json to_json(const Checkpoint& cp);
Checkpoint checkpoint_from_json(const nlohmann::json& j);
/// Run summary; rows and checkpoints are written separately.
nlohmann::json trajectory_summary(const Trajectory& tr);
nlohmann::json to_json(const Degeneration& d, const RootSystem& rs);
nlohmann::json to_json(const ClassificationResult& c, const RootSystem& rs);

/// Columns: t, x_1..x_r, m, c, osc_h, hess_sup, hess_min, mass, coverage,
/// norm_residual, delta0, dt, shift_1..shift_r, u_mass_1..u_mass_L.
std::vector<std::string> trajectory_columns(int dim, std::size_t levels);
void write_trajectory_csv(std::ostream& out, const Trajectory& tr);
std::vector<TrajectoryRow> read_trajectory_csv(std::istream& in);

}  // namespace horoflow
