#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "horoflow/classifier.hpp"
#include "horoflow/config.hpp"
#include "horoflow/criterion.hpp"
#include "horoflow/flow.hpp"

namespace horoflow {

struct StageRecord {
  std::string name;
  bool ok = false;
  bool skipped = false;
  std::string error_kind;
  std::string error;
};

struct CriterionStage {
  SolitonSolve solve;
  CriterionReport at_zero;     ///< Kahler-Einstein test, X = 0
  CriterionReport at_soliton;  ///< test at the solved X
};

struct PipelineResult {
  RunConfig config;
  std::vector<StageRecord> stages;
  std::optional<CriterionStage> criterion;
  std::optional<Trajectory> trajectory;
  std::optional<ClassificationResult> classification;
  std::optional<CriterionReport> necessary;
  nlohmann::json cross_checks = nlohmann::json::object();
  bool ok() const;
};

CriterionStage run_criterion(const RunConfig& cfg);
/// Flow with the configured reference potential and initial perturbation.
Trajectory run_flow_stage(const RunConfig& cfg);
ClassificationResult run_classify(const RunConfig& cfg, const Trajectory& tr);

/// criterion, then flow (skipped when t_final = 0), then classify. A failing
/// stage is recorded and the later stages are skipped.
PipelineResult run_pipeline(const RunConfig& cfg);

nlohmann::json criterion_json(const RunConfig& cfg, const CriterionStage& c);
nlohmann::json report_json(const PipelineResult& r);
/// Human-readable margin table.
std::string criterion_table(const CriterionStage& c);

/// Writes effective_config.json, trajectory.csv, checkpoints/, flow_report.json,
/// classification.json and report.json as available.
void write_pipeline_outputs(const PipelineResult& r, const std::string& dir);
void write_flow_outputs(const RunConfig& cfg, const Trajectory& tr, const std::string& dir);

/// Reloads trajectory.csv and checkpoints/ from a run directory.
Trajectory load_run(const std::string& dir);

}  // namespace horoflow
