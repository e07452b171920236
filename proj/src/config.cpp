#include "horoflow/config.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <set>

#include "horoflow/error.hpp"

namespace horoflow {

using nlohmann::json;

namespace {

const std::map<std::string, std::string>& preset_table() {
  static const std::map<std::string, std::string> table = {
      {"cp1", R"({
        "root_system": {"family": "T", "rank": 1},
        "geometry": {"preset": "group"},
        "polytope": {"preset": "interval"},
        "grid": {"half_width": 6.0, "spacing": 0.01},
        "flow": {"t_final": 15.0, "dt_max": 0.25, "checkpoint_every": 1.0}
      })"},
      {"cp2_blowup", R"({
        "root_system": {"family": "T", "rank": 2},
        "geometry": {"preset": "group"},
        "polytope": {"preset": "cp2_blowup"},
        "grid": {"half_width": 6.4, "spacing": 0.1},
        "flow": {"t_final": 25.0, "dt_max": 0.1, "checkpoint_every": 1.0}
      })"},
      {"square", R"({
        "root_system": {"family": "T", "rank": 2},
        "geometry": {"preset": "group"},
        "polytope": {"preset": "square"},
        "grid": {"half_width": 6.4, "spacing": 0.1},
        "flow": {"t_final": 15.0, "dt_max": 0.1, "checkpoint_every": 1.0}
      })"},
      {"cp2", R"({
        "root_system": {"family": "T", "rank": 2},
        "geometry": {"preset": "group"},
        "polytope": {"preset": "cp2"},
        "grid": {"half_width": 6.4, "spacing": 0.1},
        "flow": {"t_final": 15.0, "dt_max": 0.1, "checkpoint_every": 1.0}
      })"},
      {"a1_symmetric", R"({
        "root_system": {"family": "A", "rank": 1},
        "geometry": {"preset": "group"},
        "polytope": {"preset": "a1_symmetric"},
        "grid": {"half_width": 6.0, "spacing": 0.01},
        "flow": {"t_final": 20.0, "dt_max": 0.25, "checkpoint_every": 1.0, "conv_tol": 2e-6}
      })"},
  };
  return table;
}

std::string join(const std::vector<std::string>& v) {
  std::string s;
  for (const auto& x : v) s += (s.empty() ? "" : ", ") + x;
  return s;
}

// Typed, path-aware access to one JSON object; unknown keys are rejected.
class Fields {
 public:
  Fields(const json& obj, std::string path, std::set<std::string> allowed)
      : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) throw ConfigError(path_ + ": expected an object");
    for (const auto& [k, v] : obj_.items())
      if (!allowed.count(k)) {
        std::vector<std::string> names(allowed.begin(), allowed.end());
        throw ConfigError("config: unknown field '" + name(k) + "' (allowed: " + join(names) + ")");
      }
  }

  bool has(const std::string& k) const { return obj_.contains(k) && !obj_.at(k).is_null(); }
  std::string name(const std::string& k) const { return path_.empty() ? k : path_ + "." + k; }
  const json& at(const std::string& k) const { return obj_.at(k); }

  void number(const std::string& k, double& out) const {
    if (!has(k)) return;
    if (!at(k).is_number()) throw ConfigError(name(k) + ": expected a number");
    out = at(k).get<double>();
  }
  template <class Int>
  void integer(const std::string& k, Int& out) const {
    if (!has(k)) return;
    const json& v = at(k);
    if (!v.is_number_integer()) throw ConfigError(name(k) + ": expected an integer");
    if constexpr (std::is_unsigned_v<Int>) {
      if (v.is_number_unsigned()) {
        out = v.get<Int>();
        return;
      }
      if (v.get<long long>() < 0) throw ConfigError(name(k) + ": expected a nonnegative integer");
    }
    out = v.get<Int>();
  }
  void boolean(const std::string& k, bool& out) const {
    if (!has(k)) return;
    if (!at(k).is_boolean()) throw ConfigError(name(k) + ": expected true or false");
    out = at(k).get<bool>();
  }
  void string(const std::string& k, std::string& out) const {
    if (!has(k)) return;
    if (!at(k).is_string()) throw ConfigError(name(k) + ": expected a string");
    out = at(k).get<std::string>();
  }
  std::vector<double> numbers(const std::string& k) const { return numbers_of(at(k), name(k)); }

  static std::vector<double> numbers_of(const json& v, const std::string& path) {
    if (!v.is_array()) throw ConfigError(path + ": expected an array of numbers");
    std::vector<double> out;
    for (const auto& e : v) {
      if (!e.is_number()) throw ConfigError(path + ": expected an array of numbers");
      out.push_back(e.get<double>());
    }
    return out;
  }

 private:
  const json& obj_;
  std::string path_;
};

void require(bool ok, const std::string& field, const std::string& what) {
  if (!ok) throw ConfigError(field + ": " + what);
}

Mat parse_matrix(const json& v, const std::string& path) {
  if (!v.is_array() || v.empty()) throw ConfigError(path + ": expected a nonempty array of rows");
  const auto n = static_cast<Eigen::Index>(v.size());
  Mat M(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    auto row = Fields::numbers_of(v[static_cast<std::size_t>(i)], path + "[" + std::to_string(i) + "]");
    if (static_cast<Eigen::Index>(row.size()) != n) throw GeometryError(path + ": matrix must be square");
    for (Eigen::Index k = 0; k < n; ++k) M(i, k) = row[static_cast<std::size_t>(k)];
  }
  return M;
}

void parse_root_system(const json& j, RootSystemSpec& rs) {
  Fields f(j, "root_system", {"family", "rank", "center_dim", "gram", "simple_roots"});
  if (f.has("family")) {
    std::string fam;
    f.string("family", fam);
    require(fam.size() == 1 && std::string("ABCDT").find(fam[0]) != std::string::npos,
            "root_system.family", "expected one of A, B, C, D, T");
    rs.family = fam[0];
  }
  f.integer("rank", rs.rank);
  f.integer("center_dim", rs.center_dim);
  require(rs.rank >= 1, "root_system.rank", "must be at least 1");
  require(rs.center_dim >= 0, "root_system.center_dim", "must be nonnegative");
  if (f.has("gram")) rs.gram = parse_matrix(f.at("gram"), "root_system.gram");
  if (f.has("simple_roots")) {
    const json& v = f.at("simple_roots");
    require(v.is_array(), "root_system.simple_roots", "expected an array of vectors");
    require(rs.gram.has_value(), "root_system.simple_roots", "requires root_system.gram");
    for (std::size_t i = 0; i < v.size(); ++i) {
      auto c = Fields::numbers_of(v[i], "root_system.simple_roots[" + std::to_string(i) + "]");
      if (static_cast<Eigen::Index>(c.size()) != rs.gram->rows())
        throw GeometryError("root_system.simple_roots[" + std::to_string(i) + "]: length " +
                            std::to_string(c.size()) + ", expected " + std::to_string(rs.gram->rows()));
      rs.simple_roots.push_back(to_vec(c));
    }
  }
  if (rs.family == 'T' && rs.gram && rs.simple_roots.empty())
    throw ConfigError("root_system.gram: a torus uses the standard inner product");
}

void parse_geometry(const json& j, GeometrySpec& g) {
  Fields f(j, "geometry", {"preset", "phi_u", "shift_multiplier"});
  f.string("preset", g.preset);
  const std::vector<std::string> known = {"group", "horosymmetric", "degenerate-limit"};
  if (std::find(known.begin(), known.end(), g.preset) == known.end())
    throw ConfigError("geometry.preset: unknown preset '" + g.preset + "' (available: " + join(known) + ")");
  if (f.has("phi_u")) {
    const json& v = f.at("phi_u");
    require(v.is_array(), "geometry.phi_u", "expected an array of root indices");
    g.phi_u.clear();
    for (const auto& e : v) {
      require(e.is_number_unsigned() || (e.is_number_integer() && e.get<long long>() >= 0),
              "geometry.phi_u", "expected nonnegative integers");
      g.phi_u.push_back(e.get<std::size_t>());
    }
  }
  f.number("shift_multiplier", g.shift_multiplier);
}

void parse_polytope(const json& j, PolytopeSpec& p) {
  Fields f(j, "polytope", {"preset", "facets"});
  f.string("preset", p.preset);
  if (f.has("facets")) {
    const json& v = f.at("facets");
    require(v.is_array() && !v.empty(), "polytope.facets", "expected a nonempty array");
    p.facets.clear();
    for (std::size_t i = 0; i < v.size(); ++i) {
      const std::string path = "polytope.facets[" + std::to_string(i) + "]";
      Fields ff(v[i], path, {"normal", "offset"});
      require(ff.has("normal") && ff.has("offset"), path, "needs 'normal' and 'offset'");
      Facet fc;
      fc.normal = to_vec(ff.numbers("normal"));
      ff.number("offset", fc.offset);
      p.facets.push_back(fc);
    }
  } else if (!p.preset.empty()) {
    p.facets = polytope_preset_facets(p.preset);
  } else {
    throw ConfigError("polytope: needs 'preset' or 'facets' (presets: " + join(polytope_preset_names()) + ")");
  }
}

void parse_grid(const json& j, GridSpec& g, int dim) {
  Fields f(j, "grid", {"half_width", "spacing", "lo", "hi", "nodes"});
  const bool box = f.has("lo") || f.has("hi") || f.has("nodes");
  if (f.has("half_width") || f.has("spacing")) {
    require(!box, "grid", "give either half_width/spacing or lo/hi/nodes, not both");
    double hw = 0, h = 0;
    f.number("half_width", hw);
    f.number("spacing", h);
    require(hw > 0, "grid.half_width", "must be positive");
    require(h > 0 && h < hw, "grid.spacing", "must be positive and below half_width");
    Grid G = symmetric_grid(dim, hw, h);
    g.lo = G.lo();
    g.hi = G.hi();
    g.nodes = G.nodes();
    return;
  }
  require(f.has("lo") && f.has("hi") && f.has("nodes"), "grid", "needs half_width and spacing, or lo, hi and nodes");
  g.lo = f.numbers("lo");
  g.hi = f.numbers("hi");
  g.nodes.clear();
  for (double n : f.numbers("nodes")) {
    require(n == std::floor(n) && n >= 3, "grid.nodes", "entries must be integers >= 3");
    g.nodes.push_back(static_cast<int>(n));
  }
  for (const char* k : {"lo", "hi", "nodes"}) {
    const std::size_t len = std::string(k) == "lo" ? g.lo.size() : std::string(k) == "hi" ? g.hi.size() : g.nodes.size();
    if (static_cast<int>(len) != dim)
      throw GeometryError(std::string("grid.") + k + ": length " + std::to_string(len) +
                          ", expected " + std::to_string(dim));
  }
  for (int a = 0; a < dim; ++a) require(g.lo[a] < g.hi[a], "grid", "lo must be below hi on every axis");
}

void parse_flow(const json& j, FlowOptions& o, int& density) {
  Fields f(j, "flow",
           {"scheme", "dt_init", "dt_max", "dt_min", "cfl", "max_change", "newton_max_iter", "newton_tol",
            "newton_stall_tol", "t_final", "checkpoint_every", "conv_tol", "stop_on_convergence",
            "track_time", "escape_margin", "u_levels", "coverage_every", "coverage_samples", "m_bound",
            "hess_bound", "max_steps", "density"});
  f.string("scheme", o.scheme);
  require(o.scheme == "implicit" || o.scheme == "explicit", "flow.scheme", "expected 'implicit' or 'explicit'");
  f.number("dt_init", o.dt_init);
  f.number("dt_max", o.dt_max);
  f.number("dt_min", o.dt_min);
  f.number("cfl", o.cfl);
  f.number("max_change", o.max_change);
  f.integer("newton_max_iter", o.newton_max_iter);
  f.number("newton_tol", o.newton_tol);
  f.number("newton_stall_tol", o.newton_stall_tol);
  f.number("t_final", o.t_final);
  f.number("checkpoint_every", o.checkpoint_every);
  f.number("conv_tol", o.conv_tol);
  f.boolean("stop_on_convergence", o.stop_on_convergence);
  f.number("track_time", o.track_time);
  f.number("escape_margin", o.escape_margin);
  if (f.has("u_levels")) o.u_levels = f.numbers("u_levels");
  f.integer("coverage_every", o.coverage_every);
  f.integer("coverage_samples", o.coverage_samples);
  f.number("m_bound", o.m_bound);
  f.number("hess_bound", o.hess_bound);
  f.integer("max_steps", o.max_steps);
  f.integer("density", density);

  require(o.dt_min > 0, "flow.dt_min", "must be positive");
  require(o.dt_init >= o.dt_min, "flow.dt_init", "must be at least dt_min");
  require(o.dt_max >= o.dt_init, "flow.dt_max", "must be at least dt_init");
  require(o.cfl > 0, "flow.cfl", "must be positive");
  require(o.max_change > 0, "flow.max_change", "must be positive");
  require(o.newton_max_iter >= 1, "flow.newton_max_iter", "must be at least 1");
  require(o.newton_tol > 0, "flow.newton_tol", "must be positive");
  require(o.newton_stall_tol >= o.newton_tol, "flow.newton_stall_tol", "must be at least newton_tol");
  require(o.t_final >= 0, "flow.t_final", "must be nonnegative");
  require(o.checkpoint_every > 0, "flow.checkpoint_every", "must be positive");
  require(o.conv_tol > 0, "flow.conv_tol", "must be positive");
  require(o.track_time >= 0, "flow.track_time", "must be nonnegative");
  require(o.escape_margin > 0 && o.escape_margin < 1, "flow.escape_margin", "must lie in (0, 1)");
  require(!o.u_levels.empty() && std::is_sorted(o.u_levels.begin(), o.u_levels.end()) && o.u_levels.front() >= 0,
          "flow.u_levels", "must be a nonempty ascending list of nonnegative levels");
  require(o.coverage_every >= 1, "flow.coverage_every", "must be at least 1");
  require(o.coverage_samples >= 2, "flow.coverage_samples", "must be at least 2");
  require(o.m_bound > 0, "flow.m_bound", "must be positive");
  require(o.hess_bound > 0, "flow.hess_bound", "must be positive");
  require(o.max_steps >= 1, "flow.max_steps", "must be at least 1");
  require(density >= 0, "flow.density", "must be nonnegative");
}

void parse_initial(const json& j, InitialSpec& s) {
  Fields f(j, "initial", {"perturbation", "bumps", "bump_width", "bump_radius"});
  f.number("perturbation", s.perturbation);
  f.integer("bumps", s.bumps);
  f.number("bump_width", s.bump_width);
  f.number("bump_radius", s.bump_radius);
  require(s.perturbation >= 0, "initial.perturbation", "must be nonnegative");
  require(s.bumps >= 1, "initial.bumps", "must be at least 1");
  require(s.bump_width > 0, "initial.bump_width", "must be positive");
  require(s.bump_radius >= 0, "initial.bump_radius", "must be nonnegative");
}

void parse_classifier(const json& j, ClassifierThresholds& c) {
  Fields f(j, "classifier",
           {"R_bound", "A_grow", "s_min", "window_fraction", "min_rows", "tangency_tol", "hfit_radius",
            "residual_radius"});
  f.number("R_bound", c.R_bound);
  f.number("A_grow", c.A_grow);
  f.number("s_min", c.s_min);
  f.number("window_fraction", c.window_fraction);
  f.integer("min_rows", c.min_rows);
  f.number("tangency_tol", c.tangency_tol);
  f.number("hfit_radius", c.hfit_radius);
  f.number("residual_radius", c.residual_radius);
  require(c.R_bound > 0, "classifier.R_bound", "must be positive");
  require(c.A_grow > 0, "classifier.A_grow", "must be positive");
  require(c.s_min > 0, "classifier.s_min", "must be positive");
  require(c.window_fraction > 0 && c.window_fraction <= 1, "classifier.window_fraction", "must lie in (0, 1]");
  require(c.min_rows >= 2, "classifier.min_rows", "must be at least 2");
  require(c.tangency_tol > 0, "classifier.tangency_tol", "must be positive");
  require(c.hfit_radius > 0, "classifier.hfit_radius", "must be positive");
  require(c.residual_radius > 0, "classifier.residual_radius", "must be positive");
}

json vec_json(const Vec& v) { return to_std(v); }

}  // namespace

std::vector<std::string> config_preset_names() {
  std::vector<std::string> names;
  for (const auto& [k, v] : preset_table()) names.push_back(k);
  return names;
}

RunConfig parse_config(const json& input) {
  if (!input.is_object()) throw ConfigError("config: top level must be an object");
  json j = json::object();
  if (input.contains("preset")) {
    if (!input.at("preset").is_string()) throw ConfigError("preset: expected a string");
    const std::string name = input.at("preset").get<std::string>();
    auto it = preset_table().find(name);
    if (it == preset_table().end())
      throw ConfigError("preset: unknown preset '" + name + "' (available: " + join(config_preset_names()) + ")");
    j = json::parse(it->second);
    // A user grid given as a box replaces the preset's half_width/spacing.
    if (input.contains("grid") && input.at("grid").is_object() &&
        (input.at("grid").contains("lo") || input.at("grid").contains("nodes")))
      j.erase("grid");
    if (input.contains("polytope") && input.at("polytope").is_object() && input.at("polytope").contains("facets"))
      j["polytope"].erase("preset");
  }
  j.merge_patch(input);

  Fields top(j, "", {"preset", "root_system", "geometry", "polytope", "grid", "flow", "initial", "classifier",
                     "output_dir", "seed", "threads"});
  RunConfig cfg;
  top.string("preset", cfg.preset);
  if (!top.has("root_system")) throw ConfigError("root_system: missing (or give a top-level preset)");
  parse_root_system(top.at("root_system"), cfg.root_system);
  if (top.has("geometry")) parse_geometry(top.at("geometry"), cfg.geometry);
  if (!top.has("polytope")) throw ConfigError("polytope: missing (presets: " + join(polytope_preset_names()) + ")");
  parse_polytope(top.at("polytope"), cfg.polytope);
  if (top.has("flow")) parse_flow(top.at("flow"), cfg.flow, cfg.density);
  if (top.has("initial")) parse_initial(top.at("initial"), cfg.initial);
  if (top.has("classifier")) parse_classifier(top.at("classifier"), cfg.classifier);
  top.string("output_dir", cfg.output_dir);
  top.integer("seed", cfg.seed);
  top.integer("threads", cfg.threads);
  require(cfg.threads >= 1, "threads", "must be at least 1");
  set_threads(cfg, cfg.threads);

  const RootSystem rs = cfg.make_root_system();
  if (!top.has("grid")) throw ConfigError("grid: missing (give half_width and spacing)");
  parse_grid(top.at("grid"), cfg.grid, rs.rank);
  for (std::size_t i = 0; i < cfg.polytope.facets.size(); ++i)
    if (cfg.polytope.facets[i].normal.size() != rs.rank)
      throw GeometryError("polytope.facets[" + std::to_string(i) + "].normal: length " +
                          std::to_string(cfg.polytope.facets[i].normal.size()) + ", expected " +
                          std::to_string(rs.rank));
  cfg.make_geometry();
  cfg.make_polytope();
  return cfg;
}

RunConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  json j;
  try {
    j = json::parse(in, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw ConfigError("config: '" + path + "' is not valid JSON: " + e.what());
  }
  return parse_config(j);
}

RootSystem RunConfig::make_root_system() const {
  const auto& s = root_system;
  if (!s.simple_roots.empty()) return root_system_from_simple(s.simple_roots, *s.gram);
  if (s.family == 'T') return torus(s.rank);
  return build_root_system(s.family, s.rank, s.center_dim, s.gram);
}

ReducedGeometry RunConfig::make_geometry() const {
  return horoflow::make_geometry(make_root_system(), geometry.preset, geometry.phi_u, geometry.shift_multiplier);
}

MomentPolytope RunConfig::make_polytope() const { return horoflow::make_polytope(make_root_system(), polytope.facets); }

Grid RunConfig::make_grid() const { return Grid(grid.lo, grid.hi, grid.nodes); }

json to_json(const RunConfig& c) {
  json j;
  if (!c.preset.empty()) j["preset"] = c.preset;
  json rs = {{"family", std::string(1, c.root_system.family)},
             {"rank", c.root_system.rank},
             {"center_dim", c.root_system.center_dim}};
  if (c.root_system.gram) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < c.root_system.gram->rows(); ++i) rows.push_back(vec_json(c.root_system.gram->row(i).transpose()));
    rs["gram"] = rows;
  }
  if (!c.root_system.simple_roots.empty()) {
    rs["simple_roots"] = json::array();
    for (const auto& a : c.root_system.simple_roots) rs["simple_roots"].push_back(vec_json(a));
  }
  j["root_system"] = rs;
  j["geometry"] = {{"preset", c.geometry.preset}, {"phi_u", c.geometry.phi_u},
                   {"shift_multiplier", c.geometry.shift_multiplier}};
  json facets = json::array();
  for (const auto& f : c.polytope.facets) facets.push_back({{"normal", vec_json(f.normal)}, {"offset", f.offset}});
  j["polytope"] = {{"facets", facets}};
  if (!c.polytope.preset.empty()) j["polytope"]["preset"] = c.polytope.preset;
  j["grid"] = {{"lo", c.grid.lo}, {"hi", c.grid.hi}, {"nodes", c.grid.nodes}};
  const FlowOptions& o = c.flow;
  j["flow"] = {{"scheme", o.scheme},
               {"dt_init", o.dt_init},
               {"dt_max", o.dt_max},
               {"dt_min", o.dt_min},
               {"cfl", o.cfl},
               {"max_change", o.max_change},
               {"newton_max_iter", o.newton_max_iter},
               {"newton_tol", o.newton_tol},
               {"newton_stall_tol", o.newton_stall_tol},
               {"t_final", o.t_final},
               {"checkpoint_every", o.checkpoint_every},
               {"conv_tol", o.conv_tol},
               {"stop_on_convergence", o.stop_on_convergence},
               {"track_time", o.track_time},
               {"escape_margin", o.escape_margin},
               {"u_levels", o.u_levels},
               {"coverage_every", o.coverage_every},
               {"coverage_samples", o.coverage_samples},
               {"m_bound", o.m_bound},
               {"hess_bound", o.hess_bound},
               {"max_steps", o.max_steps},
               {"density", c.density}};
  j["initial"] = {{"perturbation", c.initial.perturbation},
                  {"bumps", c.initial.bumps},
                  {"bump_width", c.initial.bump_width},
                  {"bump_radius", c.initial.bump_radius}};
  const ClassifierThresholds& t = c.classifier;
  j["classifier"] = {{"R_bound", t.R_bound},
                     {"A_grow", t.A_grow},
                     {"s_min", t.s_min},
                     {"window_fraction", t.window_fraction},
                     {"min_rows", t.min_rows},
                     {"tangency_tol", t.tangency_tol},
                     {"hfit_radius", t.hfit_radius},
                     {"residual_radius", t.residual_radius}};
  j["output_dir"] = c.output_dir;
  j["seed"] = c.seed;
  j["threads"] = c.threads;
  return j;
}

void set_threads(RunConfig& cfg, int threads) {
  cfg.threads = std::max(1, threads);
  cfg.flow.threads = cfg.threads;
  cfg.classifier.threads = cfg.threads;
}

}  // namespace horoflow
