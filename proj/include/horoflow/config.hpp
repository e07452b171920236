#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "horoflow/classifier.hpp"
#include "horoflow/flow.hpp"
#include "horoflow/geometry.hpp"
#include "horoflow/polytope.hpp"

namespace horoflow {

inline constexpr const char* kVersion = "0.1.0";

struct RootSystemSpec {
  char family = 'T';  ///< A, B, C, D, or T for a torus
  int rank = 1;       ///< semisimple rank, or the torus dimension
  int center_dim = 0;
  std::optional<Mat> gram;
  std::vector<Vec> simple_roots;  ///< explicit simple roots (needs gram); overrides family
};

struct GeometrySpec {
  std::string preset = "group";
  std::vector<std::size_t> phi_u;
  double shift_multiplier = -1.0;  ///< negative selects the preset default
};

struct PolytopeSpec {
  std::string preset;
  std::vector<Facet> facets;
};

struct GridSpec {
  std::vector<double> lo, hi;
  std::vector<int> nodes;
};

struct InitialSpec {
  double perturbation = 0.0;  ///< amplitude of random Gaussian bumps added to u_0
  int bumps = 4;
  double bump_width = 1.0;
  double bump_radius = 1.0;   ///< bump centers are drawn from this ball
};

struct RunConfig {
  std::string preset;
  RootSystemSpec root_system;
  GeometrySpec geometry;
  PolytopeSpec polytope;
  GridSpec grid;
  FlowOptions flow;
  int density = 1;  ///< reference potential lattice density
  InitialSpec initial;
  ClassifierThresholds classifier;
  std::string output_dir = "out";
  std::uint64_t seed = 0;
  int threads = 1;

  RootSystem make_root_system() const;
  ReducedGeometry make_geometry() const;
  MomentPolytope make_polytope() const;
  Grid make_grid() const;
};

/// Names accepted by the top-level "preset" key.
std::vector<std::string> config_preset_names();

/// Validates and fills defaults. ConfigError names the offending field;
/// GeometryError on dimension mismatches.
RunConfig parse_config(const nlohmann::json& j);
RunConfig parse_config_file(const std::string& path);

/// Fully expanded configuration, suitable for parse_config.
nlohmann::json to_json(const RunConfig& cfg);

/// Applies thread and seed overrides to every stage.
void set_threads(RunConfig& cfg, int threads);

}  // namespace horoflow
