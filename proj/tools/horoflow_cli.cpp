#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "horoflow/classifier.hpp"
#include "horoflow/config.hpp"
#include "horoflow/error.hpp"
#include "horoflow/json_io.hpp"
#include "horoflow/pipeline.hpp"

using namespace horoflow;
namespace fs = std::filesystem;

namespace {

struct Common {
  std::string config;
  std::string out;
  long long seed = -1;
  int threads = 0;
};

void add_common(CLI::App* sub, Common& c, bool need_config = true) {
  auto* opt = sub->add_option("--config", c.config, "Run configuration (JSON)");
  if (need_config) opt->required()->check(CLI::ExistingFile);
  sub->add_option("--out", c.out, "Output directory (default: output_dir from the config)");
  sub->add_option("--seed", c.seed, "Random seed override")->check(CLI::NonNegativeNumber);
  sub->add_option("--threads", c.threads, "Worker threads override")->check(CLI::PositiveNumber);
}

RunConfig load(const Common& c) {
  RunConfig cfg = parse_config_file(c.config);
  if (!c.out.empty()) cfg.output_dir = c.out;
  if (c.seed >= 0) cfg.seed = static_cast<std::uint64_t>(c.seed);
  if (c.threads > 0) set_threads(cfg, c.threads);
  return cfg;
}

std::string vec_str(const Vec& v) {
  std::string s = "(";
  char buf[40];
  for (Eigen::Index a = 0; a < v.size(); ++a) {
    std::snprintf(buf, sizeof buf, "%s%.6g", a ? ", " : "", v(a));
    s += buf;
  }
  return s + ")";
}

std::string labels(const RootSystem& rs, const std::vector<std::size_t>& idx) {
  std::string s = "{";
  for (std::size_t i = 0; i < idx.size(); ++i) s += (i ? ", " : "") + rs.label(idx[i]);
  return s + "}";
}

std::string classification_text(const ClassificationResult& c, const RootSystem& rs) {
  std::ostringstream s;
  char buf[200];
  s << "case: " << to_string(c.case_tag) << "\n";
  std::snprintf(buf, sizeof buf, "window: [%.4g, %.4g]  sup|x_t| = %.4g  sup|Pj(x_t)| = %.4g\n",
                c.decision.window_start, c.decision.window_end, c.decision.sup_norm, c.decision.sup_pj);
  s << buf;
  s << "Phi_u: " << labels(rs, c.phi_u) << "\n";
  s << "a0: " << vec_str(c.a0.a0) << (c.a0.consistent ? "" : " (inconsistent)") << "\n";
  s << "Y_drift: " << vec_str(c.Y.Y_drift) << "\n";
  s << "Y_hfit:  " << vec_str(c.Y.Y_hfit) << " from " << c.Y.checkpoints_used << " checkpoints\n";
  std::snprintf(buf, sizeof buf, "Y agreement: angle %.3e rad, relative difference %.3e\n", c.Y.angle, c.Y.relative_norm);
  s << buf;
  if (c.residual_available) {
    std::snprintf(buf, sizeof buf, "limit residual: %.3e over %d nodes (radius %.3g%s)\n", c.residual.value,
                  c.residual.nodes, c.residual.radius, c.residual.shrunk ? ", shrunk" : "");
    s << buf;
  }
  s << "h generators: " << c.degeneration.lie.h.size() << ", p generators: " << c.degeneration.lie.p.size() << "\n";
  for (const auto& w : c.warnings) s << "warning: " << w << "\n";
  return s.str();
}

std::string degeneration_text(const Degeneration& d, const RootSystem& rs) {
  std::ostringstream s;
  s << "tangent simple roots:      " << labels(rs, d.tangent_simple) << "\n";
  s << "non-tangent simple roots:  " << labels(rs, d.nontangent_simple) << "\n";
  s << "tangent combinations:      " << labels(rs, d.tangent_combinations) << "\n";
  s << "remaining positive roots:  " << labels(rs, d.remaining) << "\n";
  s << "Phi_u:                     " << labels(rs, d.phi_u) << "\n";
  s << "h (" << d.lie.h.size() << "):";
  for (const auto& g : d.lie.h) s << " " << g;
  s << "\np (" << d.lie.p.size() << "):";
  for (const auto& g : d.lie.p) s << " " << g;
  s << "\ncount identity: " << (d.count_identity ? "holds" : "FAILS") << "\n";
  return s.str();
}

void write_config_echo(const RunConfig& cfg) {
  fs::create_directories(cfg.output_dir);
  write_text((fs::path(cfg.output_dir) / "effective_config.json").string(), dump_json(to_json(cfg)));
}

int cmd_criterion(const Common& c) {
  const RunConfig cfg = load(c);
  write_config_echo(cfg);
  const CriterionStage st = run_criterion(cfg);
  write_text((fs::path(cfg.output_dir) / "criterion.json").string(), dump_json(criterion_json(cfg, st)));
  std::cout << criterion_table(st);
  return 0;
}

int cmd_flow(const Common& c, double t_final, double checkpoint_every) {
  RunConfig cfg = load(c);
  if (t_final >= 0) cfg.flow.t_final = t_final;
  if (checkpoint_every > 0) cfg.flow.checkpoint_every = checkpoint_every;
  write_config_echo(cfg);
  const Trajectory tr = run_flow_stage(cfg);
  write_flow_outputs(cfg, tr, cfg.output_dir);
  const auto& r = tr.rows.back();
  std::printf("status %s at t = %.6g after %ld steps (%ld rejected)\n", tr.status.c_str(), r.t, tr.steps, tr.rejected);
  std::printf("x_t = %s  osc(h) = %.3e  mass = %.8g (V0 = %.8g)\n", vec_str(r.x).c_str(), r.osc_h, r.mass, tr.V0);
  if (!tr.message.empty()) std::printf("%s\n", tr.message.c_str());
  return 0;
}

int cmd_classify(Common c, const std::string& run_dir) {
  const fs::path cfg_path = c.config.empty() ? fs::path(run_dir) / "effective_config.json" : fs::path(c.config);
  c.config = cfg_path.string();
  if (c.out.empty()) c.out = run_dir;
  const RunConfig cfg = load(c);
  const Trajectory tr = load_run(run_dir);
  const ClassificationResult res = run_classify(cfg, tr);
  const RootSystem rs = cfg.make_root_system();
  fs::create_directories(cfg.output_dir);
  nlohmann::json j = {{"version", kVersion}, {"config", to_json(cfg)}, {"classification", to_json(res, rs)}};
  write_text((fs::path(cfg.output_dir) / "classification.json").string(), dump_json(j));
  const std::string text = classification_text(res, rs);
  write_text((fs::path(cfg.output_dir) / "classification.txt").string(), text);
  std::cout << text;
  return 0;
}

int cmd_degenerate(const Common& c, const std::vector<double>& y, double tol) {
  const RunConfig cfg = load(c);
  const RootSystem rs = cfg.make_root_system();
  if (static_cast<int>(y.size()) != rs.rank)
    throw InputError("--y: expected " + std::to_string(rs.rank) + " components, got " + std::to_string(y.size()));
  const Degeneration d = build_degeneration(rs, to_vec(y), tol);
  if (!c.out.empty()) {
    fs::create_directories(cfg.output_dir);
    nlohmann::json j = {{"version", kVersion}, {"config", to_json(cfg)}, {"Y", y}, {"degeneration", to_json(d, rs)}};
    write_text((fs::path(cfg.output_dir) / "degeneration.json").string(), dump_json(j));
  }
  std::cout << degeneration_text(d, rs);
  return 0;
}

int cmd_pipeline(const Common& c) {
  const RunConfig cfg = load(c);
  const PipelineResult r = run_pipeline(cfg);
  write_pipeline_outputs(r, cfg.output_dir);
  for (const auto& s : r.stages) {
    std::printf("%-13s %s", s.name.c_str(), s.skipped ? "skipped" : s.ok ? "ok" : "FAILED");
    if (!s.ok && !s.skipped) std::printf(" (%s: %s)", s.error_kind.c_str(), s.error.c_str());
    std::printf("\n");
  }
  if (r.criterion) std::cout << criterion_table(*r.criterion);
  if (r.trajectory) {
    const auto& row = r.trajectory->rows.back();
    std::printf("flow: %s at t = %.6g, x_t = %s\n", r.trajectory->status.c_str(), row.t, vec_str(row.x).c_str());
  }
  if (r.classification) std::cout << classification_text(*r.classification, cfg.make_root_system());
  std::printf("report: %s\n", (fs::path(cfg.output_dir) / "report.json").string().c_str());
  return r.ok() ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reduced Kahler-Ricci flow on group compactifications: criterion, flow, classification"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));

  Common crit, flow, cls, deg, pipe;
  auto* s_crit = app.add_subcommand("criterion", "Solve for the soliton vector and test the barycenter criterion");
  add_common(s_crit, crit);

  auto* s_flow = app.add_subcommand("flow", "Run the reduced flow and write trajectory.csv and checkpoints");
  add_common(s_flow, flow);
  double t_final = -1, checkpoint_every = -1;
  s_flow->add_option("--t-final", t_final, "Final time override")->check(CLI::NonNegativeNumber);
  s_flow->add_option("--checkpoint-every", checkpoint_every, "Checkpoint interval override")->check(CLI::PositiveNumber);

  auto* s_cls = app.add_subcommand("classify", "Classify a finished run directory");
  add_common(s_cls, cls, false);
  std::string run_dir;
  s_cls->add_option("run", run_dir, "Run directory written by `flow` or `pipeline`")->required()->check(CLI::ExistingDirectory);

  auto* s_deg = app.add_subcommand("degenerate", "Degeneration data for an explicit vector Y");
  add_common(s_deg, deg);
  std::vector<double> y;
  double tol = 1e-6;
  s_deg->add_option("--y", y, "Components of Y")->required()->delimiter(',');
  s_deg->add_option("--tol", tol, "Relative tangency tolerance")->check(CLI::PositiveNumber);

  auto* s_pipe = app.add_subcommand("pipeline", "criterion, flow and classify in one run");
  add_common(s_pipe, pipe);

  CLI11_PARSE(app, argc, argv);
  try {
    if (s_crit->parsed()) return cmd_criterion(crit);
    if (s_flow->parsed()) return cmd_flow(flow, t_final, checkpoint_every);
    if (s_cls->parsed()) return cmd_classify(cls, run_dir);
    if (s_deg->parsed()) return cmd_degenerate(deg, y, tol);
    if (s_pipe->parsed()) return cmd_pipeline(pipe);
  } catch (const Error& e) {
    std::fprintf(stderr, "error (%s): %s\n", to_string(e.kind()), e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
