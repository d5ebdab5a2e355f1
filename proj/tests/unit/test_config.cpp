#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <limits>
#include <string>

#include "dgboltz/config.hpp"

using namespace dgboltz;

namespace {

const char* minimal = R"(
[grid]
cells_per_dim = 5

[model]
alpha = 1

[kernel]
n_theta = 8

[run]
scenario = mach155
dt = 0.02
t_final = 0.1

[output]
directory = out/test
)";

std::string replace(std::string text, const std::string& from, const std::string& to)
{
  text.replace(text.find(from), from.size(), to);
  return text;
}

}  // namespace

TEST_CASE("parse a minimal config")
{
  const RunConfig c = parse_config(minimal);
  CHECK(c.grid.cells_per_dim == 5);
  CHECK(c.grid.domain_max == preset_scenario("mach155").grid.domain_max);
  CHECK(c.relax.dt == 0.02);
  CHECK(c.relax.scheme == TimeScheme::rk4);
  CHECK(c.relax.decompose);
  CHECK(c.engine == Engine::fast);
  CHECK(c.form == OperatorForm::non_split);
  CHECK(c.kernel_form() == KernelForm::non_split);
  CHECK(c.output_directory == "out/test");
  CHECK(c.effective_truncation_radius() == default_truncation_radius(c.grid));
  CHECK(c.initial_components() == preset_scenario("mach155").components);
}

TEST_CASE("config round trip")
{
  RunConfig c = parse_config(minimal);
  CHECK(parse_config(serialize_config(c)) == c);

  c.scenario = "custom";
  c.maxwellians = {{1.0, {0.1, -0.2, 0.3}, 0.7}, {0.5, {0.0, 0.0, 0.0}, 1.0 / 3.0}};
  c.grid.domain_min = {-2.0, -2.5, -3.0};
  c.grid.nodes_per_dim = {1, 2, 3};
  c.truncation_radius = std::numeric_limits<double>::infinity();
  c.form = OperatorForm::split;
  c.engine = Engine::direct;
  c.relax.scheme = TimeScheme::euler;
  c.relax.moment_correction = true;
  c.relax.record_every = 7;
  c.model.b0 = 0.1;
  c.model.alpha = 0.0;
  c.formats = {"csv"};
  CHECK(parse_config(serialize_config(c)) == c);
  CHECK(serialize_config(parse_config(serialize_config(c))) == serialize_config(c));
}

TEST_CASE("config errors")
{
  CHECK_THROWS_AS(parse_config(replace(minimal, "[output]\ndirectory = out/test\n", "")), ConfigError);
  CHECK_THROWS_AS(parse_config(replace(minimal, "[model]", "[modle]")), ConfigError);
  CHECK_THROWS_AS(parse_config(replace(minimal, "cells_per_dim = 5", "cells_per_dim = five")), ConfigError);
  CHECK_THROWS_AS(parse_config(replace(minimal, "cells_per_dim = 5", "cells_per_dim = 0")), ConfigError);
  CHECK_THROWS_AS(parse_config(replace(minimal, "alpha = 1", "alpha = 2")), ConfigError);
  CHECK_THROWS_AS(parse_config(replace(minimal, "n_theta = 8", "n_theta = 1")), ConfigError);
  CHECK_THROWS_AS(parse_config(replace(minimal, "dt = 0.02", "dt = -1")), ConfigError);
  CHECK_THROWS_AS(parse_config(replace(minimal, "scenario = mach155", "scenario = mach9")), ConfigError);
  CHECK_THROWS_AS(parse_config(replace(minimal, "scenario = mach155", "scenario = custom")), ConfigError);
  CHECK_THROWS_AS(parse_config(replace(minimal, "dt = 0.02", "dt = 0.02\nengine = gpu")), ConfigError);
  CHECK_THROWS_AS(parse_config(replace(minimal, "directory = out/test", "formats = csv,hdf5")), ConfigError);
  CHECK_THROWS_AS(parse_config("[grid\n"), ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/run.ini"), IoError);
}

TEST_CASE("custom scenario needs explicit grid and maxwellians")
{
  const std::string custom = R"(
[grid]
domain_min = -2 -2 -2
domain_max = 2 2 2
cells_per_dim = 4
nodes_per_dim = 2

[model]
[kernel]
truncation_radius = 1.5
form = split

[run]
scenario = custom
maxwellians = 1 0 0 0 0.5; 2 0.3 0 0 1

[output]
)";
  const RunConfig c = parse_config(custom);
  CHECK(c.grid.nodes_per_dim == std::array<int, 3>{2, 2, 2});
  CHECK(c.maxwellians.size() == 2u);
  CHECK(c.maxwellians[1] == MaxwellianParams{2.0, {0.3, 0.0, 0.0}, 1.0});
  CHECK(c.effective_truncation_radius() == 1.5);
  CHECK(c.kernel_form() == KernelForm::gain_only);

  CHECK_THROWS_AS(parse_config(replace(custom, "cells_per_dim = 4\n", "")), ConfigError);
  CHECK_THROWS_AS(parse_config(replace(custom, "maxwellians = 1 0 0 0 0.5; 2 0.3 0 0 1", "")), ConfigError);
  CHECK_THROWS_AS(parse_config(replace(custom, "1 0 0 0 0.5;", "1 0 0 0;")), ConfigError);

  const auto path = std::filesystem::temp_directory_path() / "dgboltz_config_test.ini";
  std::ofstream(path) << custom;
  CHECK(load_config(path) == c);
  std::filesystem::remove(path);
}
