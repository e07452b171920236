#include <doctest.h>

#include <string>

#include "horoflow/config.hpp"
#include "horoflow/error.hpp"

using namespace horoflow;
using nlohmann::json;

namespace {

std::string message_of(const json& j) {
  try {
    parse_config(j);
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_SUITE("config") {
  TEST_CASE("a bare preset expands to a runnable configuration") {
    auto cfg = parse_config(json{{"preset", "cp1"}});
    CHECK(cfg.root_system.family == 'T');
    CHECK(cfg.make_root_system().rank == 1);
    CHECK(cfg.make_grid().size() == 1201);
    CHECK(cfg.flow.t_final == 15.0);
    CHECK(cfg.make_polytope().facets.size() == 2);
  }

  TEST_CASE("user fields override the preset") {
    auto cfg = parse_config(json{{"preset", "cp1"}, {"flow", {{"t_final", 2.5}}}, {"threads", 3}});
    CHECK(cfg.flow.t_final == 2.5);
    CHECK(cfg.flow.dt_max == 0.25);
    CHECK(cfg.threads == 3);
    CHECK(cfg.flow.threads == 3);
  }

  TEST_CASE("a facet normal of the wrong length names the field") {
    json j = {{"preset", "cp2_blowup"},
              {"polytope", {{"facets", json::array({{{"normal", {1, 0, 0}}, {"offset", 1}}})}}}};
    CHECK_THROWS_AS(parse_config(j), GeometryError);
    const std::string m = message_of(j);
    CHECK(m.find("polytope.facets[0].normal") != std::string::npos);
    CHECK(m.find("expected 2") != std::string::npos);
  }

  TEST_CASE("an unknown preset lists the available ones") {
    json j = {{"preset", "cp9"}};
    CHECK_THROWS_AS(parse_config(j), ConfigError);
    const std::string m = message_of(j);
    for (const auto& name : config_preset_names()) CHECK(m.find(name) != std::string::npos);
  }

  TEST_CASE("unknown and mistyped fields are rejected") {
    CHECK(message_of(json{{"preset", "cp1"}, {"flow", {{"tfinal", 1}}}}).find("flow.tfinal") != std::string::npos);
    CHECK(message_of(json{{"preset", "cp1"}, {"flow", {{"t_final", "long"}}}}).find("flow.t_final") != std::string::npos);
    CHECK_THROWS_AS(parse_config(json{{"preset", "cp1"}, {"threads", 0}}), ConfigError);
    CHECK_THROWS_AS(parse_config(json::array()), ConfigError);
    CHECK_THROWS_AS(parse_config_file("/nonexistent/config.json"), ConfigError);
  }

  TEST_CASE("the expanded configuration round trips") {
    for (const auto& name : config_preset_names()) {
      auto cfg = parse_config(json{{"preset", name}, {"seed", 7}});
      const json once = to_json(cfg);
      const json twice = to_json(parse_config(once));
      CHECK(once == twice);
    }
  }

  TEST_CASE("explicit grids and root systems") {
    json j = {{"root_system", {{"family", "B"}, {"rank", 2}}},
              {"polytope", {{"facets", json::array({{{"normal", {1, 0}}, {"offset", 2}},
                                                    {{"normal", {-1, 0}}, {"offset", 2}},
                                                    {{"normal", {0, 1}}, {"offset", 2}},
                                                    {{"normal", {0, -1}}, {"offset", 2}}})}}},
              {"grid", {{"lo", {-2, -2}}, {"hi", {2, 2}}, {"nodes", {21, 21}}}}};
    auto cfg = parse_config(j);
    CHECK(cfg.make_root_system().positive_roots.size() == 4);
    CHECK(cfg.make_grid().size() == 441);
    j["grid"]["nodes"] = {21};
    CHECK_THROWS_AS(parse_config(j), GeometryError);
  }
}
