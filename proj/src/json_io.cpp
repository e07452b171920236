#include "horoflow/json_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "horoflow/error.hpp"

namespace horoflow {

using nlohmann::json;

namespace {

std::string format_double(double v) {
  if (!std::isfinite(v)) return "null";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void dump_into(std::string& out, const json& j, int indent, int depth) {
  const auto newline = [&](int d) {
    if (indent < 0) return;
    out += '\n';
    out.append(static_cast<std::size_t>(indent * d), ' ');
  };
  switch (j.type()) {
    case json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += '{';
      bool first = true;
      for (const auto& [k, v] : j.items()) {
        if (!first) out += ',';
        first = false;
        newline(depth + 1);
        out += json(k).dump();
        out += indent < 0 ? ":" : ": ";
        dump_into(out, v, indent, depth + 1);
      }
      newline(depth);
      out += '}';
      return;
    }
    case json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      // Flat numeric arrays stay on one line.
      bool flat = std::all_of(j.begin(), j.end(), [](const json& e) { return e.is_primitive(); });
      out += '[';
      bool first = true;
      for (const auto& v : j) {
        if (!first) out += flat ? ", " : ",";
        first = false;
        if (!flat) newline(depth + 1);
        dump_into(out, v, indent, depth + 1);
      }
      if (!flat) newline(depth);
      out += ']';
      return;
    }
    case json::value_t::number_float:
      out += format_double(j.get<double>());
      return;
    default:
      out += j.dump();
  }
}

json index_list(const std::vector<std::size_t>& v) { return json(v); }

json labels(const RootSystem& rs, const std::vector<std::size_t>& v) {
  json a = json::array();
  for (std::size_t i : v) a.push_back(rs.label(i));
  return a;
}

double number_or_nan(const json& v) {
  return v.is_number() ? v.get<double>() : std::numeric_limits<double>::quiet_NaN();
}

std::vector<double> numbers(const json& j, const std::string& field) {
  if (!j.is_array()) throw InputError(field + ": expected an array");
  std::vector<double> out;
  out.reserve(j.size());
  for (const auto& e : j) out.push_back(number_or_nan(e));
  return out;
}

const json& member(const json& j, const std::string& key) {
  if (!j.contains(key)) throw InputError("missing field '" + key + "'");
  return j.at(key);
}

}  // namespace

std::string dump_json(const json& j, int indent) {
  std::string out;
  dump_into(out, j, indent, 0);
  out += '\n';
  return out;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw InputError("cannot write '" + path + "'");
  f << text;
  if (!f) throw InputError("write failed for '" + path + "'");
}

std::string read_text(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw InputError("cannot open '" + path + "'");
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

json read_json(const std::string& path) {
  try {
    return json::parse(read_text(path));
  } catch (const json::parse_error& e) {
    throw InputError("'" + path + "' is not valid JSON: " + e.what());
  }
}

json to_json(const Vec& v) { return to_std(v); }

Vec vec_from_json(const json& j, const std::string& field) { return to_vec(numbers(j, field)); }

json to_json(const RootSystem& rs) {
  json roots = json::array();
  for (std::size_t i = 0; i < rs.positive_roots.size(); ++i)
    roots.push_back({{"index", i}, {"label", rs.label(i)}, {"root", to_json(rs.positive_roots[i])},
                     {"height", rs.height(i)}});
  json gram = json::array();
  for (Eigen::Index i = 0; i < rs.gram.rows(); ++i) gram.push_back(to_json(Vec(rs.gram.row(i).transpose())));
  return {{"family", std::string(1, rs.family)}, {"ss_rank", rs.ss_rank}, {"rank", rs.rank},
          {"center_dim", rs.center_dim}, {"gram", gram}, {"positive_roots", roots}};
}

json to_json(const ReducedGeometry& g) {
  json terms = json::array();
  for (const auto& t : g.terms()) terms.push_back({{"root", to_json(t.root)}, {"pi_exp", t.pi_exp}, {"j_exp", t.j_exp}});
  json cone = json::array();
  for (const auto& a : g.cone_roots) cone.push_back(to_json(a));
  return {{"kind", g.kind}, {"phi_u", labels(g.rs, g.phi_u)}, {"phi_u_indices", index_list(g.phi_u)},
          {"grad_shift", to_json(g.grad_shift)}, {"rho_u", to_json(g.rho_u)}, {"terms", terms},
          {"cone_roots", cone}, {"two_rho", to_json(g.two_rho())}, {"complex_dim", g.complex_dim()}};
}

json to_json(const MomentPolytope& P) {
  json facets = json::array();
  for (const auto& f : P.facets) facets.push_back({{"normal", to_json(f.normal)}, {"offset", f.offset}});
  json verts = json::array();
  for (const auto& v : P.vertices) verts.push_back({{"point", to_json(v.point)}, {"active", v.active}});
  return {{"facets", facets}, {"vertices", verts}, {"fine", is_fine(P)}};
}

json to_json(const CriterionReport& r) {
  json margins = json::array();
  for (const auto& m : r.margins) margins.push_back({{"root_index", m.root_index}, {"label", m.label}, {"margin", m.margin}});
  return {{"X", to_json(r.X)},
          {"barycenter", to_json(r.barycenter)},
          {"two_rho", to_json(r.two_rho)},
          {"margins", margins},
          {"status", to_string(r.status)},
          {"exists", r.exists},
          {"normalization_constant", r.normalization_constant},
          {"V0", r.V0},
          {"tolerance", r.tolerance},
          {"barycenter_offset", r.barycenter_offset}};
}

json to_json(const SolitonSolve& s) {
  return {{"X", to_json(s.X)}, {"iterations", s.iterations}, {"gradient_norm", s.gradient_norm},
          {"rule_level", s.rule_level}};
}

json to_json(const Checkpoint& cp) {
  return {{"t", cp.t},
          {"grid", {{"lo", cp.grid.lo()}, {"hi", cp.grid.hi()}, {"nodes", cp.grid.nodes()}}},
          {"shift", to_json(cp.shift)},
          {"x_t", to_json(cp.x_t)},
          {"m_t", cp.m_t},
          {"c_t", cp.c_t},
          {"psi", cp.psi},
          {"h", cp.h}};
}

Checkpoint checkpoint_from_json(const json& j) {
  Checkpoint cp;
  cp.t = number_or_nan(member(j, "t"));
  const json& g = member(j, "grid");
  std::vector<int> nodes;
  for (double n : numbers(member(g, "nodes"), "grid.nodes")) nodes.push_back(static_cast<int>(n));
  cp.grid = Grid(numbers(member(g, "lo"), "grid.lo"), numbers(member(g, "hi"), "grid.hi"), nodes);
  cp.shift = vec_from_json(member(j, "shift"), "shift");
  cp.x_t = vec_from_json(member(j, "x_t"), "x_t");
  cp.m_t = number_or_nan(member(j, "m_t"));
  cp.c_t = number_or_nan(member(j, "c_t"));
  cp.psi = numbers(member(j, "psi"), "psi");
  cp.h = numbers(member(j, "h"), "h");
  if (cp.psi.size() != cp.grid.size() || cp.h.size() != cp.grid.size())
    throw InputError("checkpoint: field length does not match the grid");
  return cp;
}

json trajectory_summary(const Trajectory& tr) {
  json j = {{"status", tr.status},
            {"message", tr.message},
            {"V0", tr.V0},
            {"weyl_order", tr.weyl_order},
            {"steps", tr.steps},
            {"rejected", tr.rejected},
            {"converged", tr.converged},
            {"full_mass", tr.full_mass},
            {"u_levels", tr.u_levels},
            {"dim", tr.dim},
            {"rows", tr.rows.size()},
            {"checkpoints", tr.checkpoints.size()}};
  if (!tr.rows.empty()) {
    const auto& r = tr.rows.back();
    j["final"] = {{"t", r.t}, {"x_t", to_json(r.x)}, {"m_t", r.m}, {"c_t", r.c}, {"osc_h", r.osc_h},
                  {"hess_sup", r.hess_sup}, {"hess_min", r.hess_min}, {"mass", r.mass},
                  {"coverage", r.coverage}, {"norm_residual", r.norm_residual}, {"u_mass", r.u_mass},
                  {"shift", to_json(r.shift)}};
    double worst = 0.0;
    for (const auto& row : tr.rows) worst = std::max(worst, std::abs(row.norm_residual));
    j["max_norm_residual"] = worst;
  }
  return j;
}

json to_json(const Degeneration& d, const RootSystem& rs) {
  return {{"tangent_simple", labels(rs, d.tangent_simple)},
          {"nontangent_simple", labels(rs, d.nontangent_simple)},
          {"tangent_combinations", labels(rs, d.tangent_combinations)},
          {"remaining", labels(rs, d.remaining)},
          {"phi_u", labels(rs, d.phi_u)},
          {"phi_u_indices", index_list(d.phi_u)},
          {"h_generators", d.lie.h},
          {"p_generators", d.lie.p},
          {"cartan_generators", d.lie.cartan_generators},
          {"count_identity", d.count_identity},
          {"limit_geometry", to_json(d.limit)}};
}

json to_json(const ClassificationResult& c, const RootSystem& rs) {
  json growth = json::array();
  for (const auto& g : c.decision.growth)
    growth.push_back({{"label", g.label}, {"final_pairing", g.final_pairing}, {"slope", g.slope},
                      {"above_level", g.above_level}, {"above_slope", g.above_slope}, {"monotone", g.monotone}});
  const auto& t = c.thresholds;
  json j = {{"case", to_string(c.case_tag)},
            {"phi_u", labels(rs, c.phi_u)},
            {"phi_u_indices", index_list(c.phi_u)},
            {"window", {c.decision.window_start, c.decision.window_end}},
            {"sup_norm", c.decision.sup_norm},
            {"sup_pj", c.decision.sup_pj},
            {"growth", growth},
            {"notes", c.decision.notes},
            {"a0", {{"value", to_json(c.a0.a0)}, {"residual", c.a0.residual}, {"consistent", c.a0.consistent}}},
            {"Y",
             {{"drift", to_json(c.Y.Y_drift)},
              {"hfit", to_json(c.Y.Y_hfit)},
              {"angle", c.Y.angle},
              {"relative_norm", c.Y.relative_norm},
              {"drift_tangency", c.Y.drift_tangency},
              {"hfit_tangency", c.Y.hfit_tangency},
              {"checkpoints_used", c.Y.checkpoints_used},
              {"hfit_spread", c.Y.hfit_spread}}},
            {"degeneration", to_json(c.degeneration, rs)},
            {"thresholds",
             {{"R_bound", t.R_bound},
              {"A_grow", t.A_grow},
              {"s_min", t.s_min},
              {"window_fraction", t.window_fraction},
              {"min_rows", t.min_rows},
              {"hfit_radius", t.hfit_radius},
              {"residual_radius", t.residual_radius}}},
            {"warnings", c.warnings}};
  if (c.residual_available)
    j["limit_residual"] = {{"value", c.residual.value}, {"nodes", c.residual.nodes},
                           {"radius", c.residual.radius}, {"shrunk", c.residual.shrunk}};
  else
    j["limit_residual"] = nullptr;
  return j;
}

std::vector<std::string> trajectory_columns(int dim, std::size_t levels) {
  std::vector<std::string> c = {"t"};
  for (int a = 1; a <= dim; ++a) c.push_back("x_" + std::to_string(a));
  for (const char* k : {"m", "c", "osc_h", "hess_sup", "hess_min", "mass", "coverage", "norm_residual", "delta0", "dt"})
    c.push_back(k);
  for (int a = 1; a <= dim; ++a) c.push_back("shift_" + std::to_string(a));
  for (std::size_t k = 1; k <= levels; ++k) c.push_back("u_mass_" + std::to_string(k));
  return c;
}

void write_trajectory_csv(std::ostream& out, const Trajectory& tr) {
  const int dim = tr.dim;
  const std::size_t levels = tr.u_levels.size();
  const auto cols = trajectory_columns(dim, levels);
  for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
  out << '\n';
  char buf[32];
  const auto put = [&](double v, bool first = false) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    if (!first) out << ',';
    out << buf;
  };
  for (const auto& r : tr.rows) {
    put(r.t, true);
    for (int a = 0; a < dim; ++a) put(r.x(a));
    for (double v : {r.m, r.c, r.osc_h, r.hess_sup, r.hess_min, r.mass, r.coverage, r.norm_residual, r.delta0, r.dt})
      put(v);
    for (int a = 0; a < dim; ++a) put(r.shift.size() == dim ? r.shift(a) : 0.0);
    for (std::size_t k = 0; k < levels; ++k) put(k < r.u_mass.size() ? r.u_mass[k] : std::nan(""));
    out << '\n';
  }
}

std::vector<TrajectoryRow> read_trajectory_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw InputError("trajectory.csv: empty file");
  std::vector<std::string> header;
  {
    std::stringstream s(line);
    std::string cell;
    while (std::getline(s, cell, ',')) header.push_back(cell);
  }
  int dim = 0;
  std::size_t levels = 0;
  for (const auto& h : header) {
    if (h.rfind("x_", 0) == 0) ++dim;
    if (h.rfind("u_mass_", 0) == 0) ++levels;
  }
  if (dim == 0 || header != trajectory_columns(dim, levels))
    throw InputError("trajectory.csv: unexpected column layout");
  std::vector<TrajectoryRow> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<double> v;
    std::stringstream s(line);
    std::string cell;
    while (std::getline(s, cell, ',')) {
      char* end = nullptr;
      v.push_back(std::strtod(cell.c_str(), &end));
      if (end == cell.c_str()) throw InputError("trajectory.csv: bad number on line " + std::to_string(lineno));
    }
    if (v.size() != header.size()) throw InputError("trajectory.csv: wrong column count on line " + std::to_string(lineno));
    TrajectoryRow r;
    std::size_t i = 0;
    r.t = v[i++];
    r.x = Vec(dim);
    for (int a = 0; a < dim; ++a) r.x(a) = v[i++];
    for (double* p : {&r.m, &r.c, &r.osc_h, &r.hess_sup, &r.hess_min, &r.mass, &r.coverage, &r.norm_residual, &r.delta0, &r.dt})
      *p = v[i++];
    r.shift = Vec(dim);
    for (int a = 0; a < dim; ++a) r.shift(a) = v[i++];
    for (std::size_t k = 0; k < levels; ++k) r.u_mass.push_back(v[i++]);
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace horoflow
