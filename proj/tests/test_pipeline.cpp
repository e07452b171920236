#include <doctest.h>

#include <filesystem>
#include <sstream>

#include "horoflow/error.hpp"
#include "horoflow/json_io.hpp"
#include "horoflow/pipeline.hpp"

using namespace horoflow;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const StageRecord& stage_named(const PipelineResult& r, const std::string& name) {
  for (const auto& s : r.stages)
    if (s.name == name) return s;
  FAIL("missing stage " << name);
  return r.stages.front();
}

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("horoflow_test_" + name);
  fs::remove_all(p);
  return p;
}

RunConfig cp1_config(double t_final) {
  return parse_config(json{{"preset", "cp1"},
                           {"grid", {{"half_width", 6.0}, {"spacing", 0.02}}},
                           {"flow", {{"t_final", t_final}}}});
}

}  // namespace

TEST_SUITE("pipeline") {
  TEST_CASE("t_final = 0 runs the criterion only") {
    auto r = run_pipeline(cp1_config(0.0));
    CHECK(r.ok());
    REQUIRE(r.criterion);
    CHECK(r.criterion->at_zero.exists);
    CHECK_FALSE(r.trajectory);
    CHECK(stage_named(r, "flow").skipped);
    CHECK(stage_named(r, "classify").skipped);
    const json rep = report_json(r);
    CHECK(rep.contains("criterion"));
    CHECK_FALSE(rep.contains("flow"));
    CHECK(criterion_table(*r.criterion).find("exists") != std::string::npos);
  }

  TEST_CASE("CP1 end to end") {
    auto r = run_pipeline(cp1_config(15.0));
    CHECK(r.ok());
    REQUIRE(r.classification);
    CHECK(r.trajectory->converged);
    CHECK(r.classification->case_tag == CaseTag::Case1);
    CHECK(r.classification->residual_available);
    CHECK(r.classification->residual.value <= 1e-3);
    REQUIRE(r.necessary);
    CHECK(r.necessary->exists);

    const fs::path dir = scratch("cp1");
    write_pipeline_outputs(r, dir.string());
    for (const char* f : {"effective_config.json", "criterion.json", "classification.json", "report.json",
                          "trajectory.csv", "flow_report.json"})
      CHECK(fs::exists(dir / f));

    auto back = load_run(dir.string());
    REQUIRE(back.rows.size() == r.trajectory->rows.size());
    REQUIRE(back.checkpoints.size() == r.trajectory->checkpoints.size());
    for (std::size_t i = 0; i < back.rows.size(); ++i) {
      CHECK(back.rows[i].t == r.trajectory->rows[i].t);
      CHECK(back.rows[i].x == r.trajectory->rows[i].x);
      CHECK(back.rows[i].norm_residual == r.trajectory->rows[i].norm_residual);
    }
    CHECK(back.checkpoints.back().psi == r.trajectory->checkpoints.back().psi);
    auto again = classify(r.config.make_geometry(), back, r.config.classifier);
    CHECK(again.case_tag == r.classification->case_tag);
    CHECK(again.residual.value == r.classification->residual.value);

    const std::string first = dump_json(report_json(r));
    const std::string second = dump_json(report_json(run_pipeline(cp1_config(15.0))));
    CHECK(first == second);
    fs::remove_all(dir);
  }

  TEST_CASE("a failing stage is recorded and the rest are skipped") {
    auto cfg = cp1_config(5.0);
    cfg.initial.perturbation = 50.0;
    cfg.initial.bump_width = 0.05;
    cfg.initial.bumps = 8;
    cfg.seed = 3;
    auto r = run_pipeline(cfg);
    CHECK_FALSE(r.ok());
    const auto& flow = stage_named(r, "flow");
    CHECK_FALSE(flow.ok);
    CHECK_FALSE(flow.error_kind.empty());
    CHECK(stage_named(r, "classify").skipped);
    const json rep = report_json(r);
    CHECK(rep.dump().find(flow.error) != std::string::npos);
  }

  TEST_CASE("a failing criterion is a result, not a stage error") {
    json j = {{"root_system", {{"family", "A"}, {"rank", 1}}},
              {"polytope", {{"facets", json::array({{{"normal", {1}}, {"offset", 0.5}}, {{"normal", {-1}}, {"offset", 0.5}}})}}},
              {"grid", {{"half_width", 4.0}, {"spacing", 0.05}}},
              {"flow", {{"t_final", 0.0}}}};
    auto r = run_pipeline(parse_config(j));
    CHECK(r.ok());
    REQUIRE(r.criterion);
    CHECK(stage_named(r, "criterion").ok);
    CHECK_FALSE(r.criterion->at_zero.exists);
    CHECK_FALSE(r.criterion->at_soliton.exists);
  }

  TEST_CASE("json output keeps full precision and writes non-finite values as null") {
    json j = {{"a", 0.1}, {"b", std::numeric_limits<double>::infinity()}, {"c", {1.0, 2.0}}};
    const std::string s = dump_json(j);
    CHECK(s.find("0.10000000000000001") != std::string::npos);
    CHECK(s.find("null") != std::string::npos);
    CHECK(json::parse(s).at("a").get<double>() == 0.1);
    const std::string compact = dump_json(j, -1);
    CHECK(compact.find('\n') == compact.size() - 1);
  }

  TEST_CASE("trajectory csv round trip and header validation") {
    Trajectory tr;
    tr.dim = 2;
    tr.u_levels = {1.0, 2.0};
    for (int i = 0; i < 3; ++i) {
      TrajectoryRow r;
      r.t = 0.1 * i;
      r.x = make_vec({1.0 / 3.0, -i * 1e-17});
      r.shift = make_vec({0.0, 0.5});
      r.delta0 = std::numeric_limits<double>::infinity();
      r.u_mass = {0.25, 1.0 / 7.0};
      tr.rows.push_back(r);
    }
    std::stringstream ss;
    write_trajectory_csv(ss, tr);
    auto rows = read_trajectory_csv(ss);
    REQUIRE(rows.size() == 3);
    CHECK(rows[2].x == tr.rows[2].x);
    CHECK(rows[1].u_mass == tr.rows[1].u_mass);
    CHECK(rows[0].shift == tr.rows[0].shift);
    std::stringstream bad("t,y_1\n0,1\n");
    CHECK_THROWS_AS(read_trajectory_csv(bad), InputError);
  }
}
