#include "horoflow/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "horoflow/error.hpp"
#include "horoflow/json_io.hpp"

namespace horoflow {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

template <class F>
bool stage(PipelineResult& r, const std::string& name, F&& body) {
  StageRecord rec;
  rec.name = name;
  try {
    body();
    rec.ok = true;
  } catch (const Error& e) {
    rec.error_kind = to_string(e.kind());
    rec.error = e.what();
  } catch (const std::exception& e) {
    rec.error_kind = "internal";
    rec.error = e.what();
  }
  r.stages.push_back(rec);
  return rec.ok;
}

void skip(PipelineResult& r, const std::string& name) {
  StageRecord rec;
  rec.name = name;
  rec.skipped = true;
  r.stages.push_back(rec);
}

std::string checkpoint_name(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "checkpoint_%04zu.json", i);
  return buf;
}

}  // namespace

bool PipelineResult::ok() const {
  return std::all_of(stages.begin(), stages.end(), [](const StageRecord& s) { return s.ok || s.skipped; });
}

CriterionStage run_criterion(const RunConfig& cfg) {
  const ReducedGeometry g = cfg.make_geometry();
  const MomentPolytope P = cfg.make_polytope();
  CriterionStage c;
  c.solve = solve_soliton_vector(P, g);
  c.at_zero = test_existence(P, g, Vec::Zero(g.rank()));
  c.at_soliton = test_existence(P, g, c.solve.X);
  return c;
}

Trajectory run_flow_stage(const RunConfig& cfg) {
  const ReducedGeometry g = cfg.make_geometry();
  const MomentPolytope P = cfg.make_polytope();
  FlowSolver solver(g, P, Potential::from(reference_potential(P, cfg.density)), cfg.make_grid(), cfg.flow);
  const InitialSpec& init = cfg.initial;
  if (init.perturbation > 0) {
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    const int r = g.rank();
    std::vector<Vec> centers;
    std::vector<double> coef;
    while (static_cast<int>(centers.size()) < init.bumps) {
      Vec p(r);
      for (int a = 0; a < r; ++a) p(a) = init.bump_radius * unit(rng);
      if (p.norm() > init.bump_radius) continue;
      centers.push_back(p);
      coef.push_back(unit(rng));
    }
    const double w2 = 2.0 * init.bump_width * init.bump_width;
    solver.set_initial_u([&](const Vec& x) {
      double u = 0.0;
      for (std::size_t k = 0; k < centers.size(); ++k) u += coef[k] * std::exp(-(x - centers[k]).squaredNorm() / w2);
      return init.perturbation * u;
    });
  }
  return solver.run();
}

ClassificationResult run_classify(const RunConfig& cfg, const Trajectory& tr) {
  return classify(cfg.make_geometry(), tr, cfg.classifier);
}

PipelineResult run_pipeline(const RunConfig& cfg) {
  PipelineResult r;
  r.config = cfg;
  const bool crit_ok = stage(r, "criterion", [&] { r.criterion = run_criterion(cfg); });
  if (!crit_ok || cfg.flow.t_final <= 0) {
    skip(r, "flow");
    skip(r, "classify");
    return r;
  }
  if (!stage(r, "flow", [&] { r.trajectory = run_flow_stage(cfg); })) {
    skip(r, "classify");
    return r;
  }
  stage(r, "classify", [&] { r.classification = run_classify(cfg, *r.trajectory); });

  const Trajectory& tr = *r.trajectory;
  const ReducedGeometry g = cfg.make_geometry();
  stage(r, "cross_checks", [&] {
    r.necessary = necessary_check(cfg.make_polytope(), g, Vec::Zero(g.rank()), tr.converged && tr.full_mass);
    json nc = {{"status", to_string(r.necessary->status)}};
    if (r.necessary->status != CriterionStatus::NotApplicable) {
      nc["report"] = to_json(*r.necessary);
      nc["passed"] = r.necessary->exists;
    }
    r.cross_checks["necessary_check"] = nc;
    if (r.classification && r.criterion) {
      const Vec& X = r.criterion->solve.X;
      const Vec& Y = r.classification->Y.Y_hfit;
      const double nx = g.rs.norm(X), diff = g.rs.norm(Y - X);
      const double rel = nx > 0 ? diff / nx : diff;
      r.cross_checks["soliton_vector"] = {{"X", to_json(X)}, {"Y_hfit", to_json(Y)},
                                          {"Y_drift", to_json(r.classification->Y.Y_drift)},
                                          {"difference", rel}, {"relative", nx > 0}, {"within_5e-2", rel <= 5e-2}};
    }
  });
  return r;
}

json criterion_json(const RunConfig& cfg, const CriterionStage& c) {
  const MomentPolytope P = cfg.make_polytope();
  return {{"version", kVersion},
          {"config", to_json(cfg)},
          {"root_system", to_json(P.rs)},
          {"geometry", to_json(cfg.make_geometry())},
          {"polytope", to_json(P)},
          {"soliton_solve", to_json(c.solve)},
          {"kahler_einstein", to_json(c.at_zero)},
          {"soliton", to_json(c.at_soliton)}};
}

std::string criterion_table(const CriterionStage& c) {
  std::ostringstream s;
  char buf[160];
  const auto row = [&](const char* name, const CriterionReport& rep) {
    s << name << ": " << to_string(rep.status) << "\n";
    s << "  X =";
    for (Eigen::Index a = 0; a < rep.X.size(); ++a) {
      std::snprintf(buf, sizeof buf, " %.10g", rep.X(a));
      s << buf;
    }
    s << "\n  bar =";
    for (Eigen::Index a = 0; a < rep.barycenter.size(); ++a) {
      std::snprintf(buf, sizeof buf, " %.10g", rep.barycenter(a));
      s << buf;
    }
    s << "\n";
    if (rep.margins.empty()) {
      std::snprintf(buf, sizeof buf, "  |bar - 2rho| = %.3e (tolerance 1e-8)\n", rep.barycenter_offset);
      s << buf;
    } else {
      std::snprintf(buf, sizeof buf, "  %-16s %16s\n", "root", "margin");
      s << buf;
      for (const auto& m : rep.margins) {
        std::snprintf(buf, sizeof buf, "  %-16s %16.6e\n", m.label.c_str(), m.margin);
        s << buf;
      }
    }
  };
  row("X = 0", c.at_zero);
  row("solved X", c.at_soliton);
  return s.str();
}

json report_json(const PipelineResult& r) {
  json stages = json::array();
  for (const auto& s : r.stages) {
    json e = {{"name", s.name}, {"status", s.skipped ? "skipped" : s.ok ? "ok" : "failed"}};
    if (!s.ok && !s.skipped) {
      e["error_kind"] = s.error_kind;
      e["error"] = s.error;
    }
    stages.push_back(e);
  }
  const RootSystem rs = r.config.make_root_system();
  json j = {{"version", kVersion}, {"config", to_json(r.config)}, {"stages", stages}, {"ok", r.ok()}};
  if (r.criterion) {
    j["criterion"] = {{"soliton_solve", to_json(r.criterion->solve)},
                      {"kahler_einstein", to_json(r.criterion->at_zero)},
                      {"soliton", to_json(r.criterion->at_soliton)}};
  }
  if (r.trajectory) j["flow"] = trajectory_summary(*r.trajectory);
  if (r.classification) j["classification"] = to_json(*r.classification, rs);
  j["cross_checks"] = r.cross_checks;
  return j;
}

void write_flow_outputs(const RunConfig& cfg, const Trajectory& tr, const std::string& dir) {
  fs::create_directories(fs::path(dir) / "checkpoints");
  {
    std::ofstream f(fs::path(dir) / "trajectory.csv", std::ios::binary);
    if (!f) throw InputError("cannot write trajectory.csv in '" + dir + "'");
    write_trajectory_csv(f, tr);
  }
  for (std::size_t i = 0; i < tr.checkpoints.size(); ++i)
    write_text((fs::path(dir) / "checkpoints" / checkpoint_name(i)).string(), dump_json(to_json(tr.checkpoints[i]), -1));
  json rep = {{"version", kVersion}, {"config", to_json(cfg)}, {"flow", trajectory_summary(tr)}};
  write_text((fs::path(dir) / "flow_report.json").string(), dump_json(rep));
}

void write_pipeline_outputs(const PipelineResult& r, const std::string& dir) {
  fs::create_directories(dir);
  write_text((fs::path(dir) / "effective_config.json").string(), dump_json(to_json(r.config)));
  if (r.criterion) write_text((fs::path(dir) / "criterion.json").string(), dump_json(criterion_json(r.config, *r.criterion)));
  if (r.trajectory) write_flow_outputs(r.config, *r.trajectory, dir);
  if (r.classification) {
    json c = {{"version", kVersion}, {"config", to_json(r.config)},
              {"classification", to_json(*r.classification, r.config.make_root_system())}};
    write_text((fs::path(dir) / "classification.json").string(), dump_json(c));
  }
  write_text((fs::path(dir) / "report.json").string(), dump_json(report_json(r)));
}

Trajectory load_run(const std::string& dir) {
  Trajectory tr;
  const fs::path base(dir);
  {
    std::ifstream f(base / "trajectory.csv");
    if (!f) throw InputError("run directory '" + dir + "' has no trajectory.csv");
    tr.rows = read_trajectory_csv(f);
  }
  if (tr.rows.empty()) throw InputError("trajectory.csv in '" + dir + "' has no rows");
  tr.dim = static_cast<int>(tr.rows.front().x.size());
  std::vector<fs::path> files;
  if (fs::is_directory(base / "checkpoints"))
    for (const auto& e : fs::directory_iterator(base / "checkpoints"))
      if (e.path().extension() == ".json") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  for (const auto& p : files) tr.checkpoints.push_back(checkpoint_from_json(read_json(p.string())));
  if (fs::exists(base / "flow_report.json")) {
    const json rep = read_json((base / "flow_report.json").string());
    if (rep.contains("flow")) {
      const json& f = rep.at("flow");
      tr.status = f.value("status", "");
      tr.message = f.value("message", "");
      tr.converged = f.value("converged", false);
      tr.full_mass = f.value("full_mass", false);
      tr.steps = f.value("steps", 0L);
      tr.rejected = f.value("rejected", 0L);
      if (f.contains("V0") && f.at("V0").is_number()) tr.V0 = f.at("V0").get<double>();
      if (f.contains("u_levels")) tr.u_levels = f.at("u_levels").get<std::vector<double>>();
    }
  }
  return tr;
}

}  // namespace horoflow
