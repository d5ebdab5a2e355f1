#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "dgboltz/grid.hpp"
#include "dgboltz/kernel.hpp"
#include "dgboltz/solver.hpp"

namespace dgboltz {

/// INI-style run description:
///
///   [grid]    domain_min = -3 -3 -3, domain_max = 3 3 3, cells_per_dim, nodes_per_dim = 1 1 1
///   [model]   alpha, b0
///   [kernel]  truncation_radius (number, "default" or "inf"), n_theta, n_epsilon,
///             form (non-split | split), memory_cap_mib
///   [run]     scenario (mach3 | mach155 | custom), maxwellians = "n ux uy uz T; ...",
///             dt, t_final, scheme, engine, decompose, record_every, moment_correction
///   [output]  directory, formats (comma list of csv, binary)
///
/// When a scenario is named, omitted grid bounds and cell count come from it.
struct RunConfig
{
  GridSpec grid;
  InteractionModel model;

  double truncation_radius = 0.0;  // 0 means half the smallest domain extent
  int n_theta = 8;
  int n_epsilon = 16;
  OperatorForm form = OperatorForm::non_split;
  std::size_t memory_cap = default_memory_cap;

  std::string scenario = "mach155";
  std::vector<MaxwellianParams> maxwellians;  // used when scenario == "custom"
  RelaxationConfig relax;
  Engine engine = Engine::fast;

  std::string output_directory = "out";
  std::vector<std::string> formats{"csv", "binary"};

  void validate() const;
  double effective_truncation_radius() const;
  std::vector<MaxwellianParams> initial_components() const;
  KernelForm kernel_form() const
  {
    return form == OperatorForm::non_split ? KernelForm::non_split : KernelForm::gain_only;
  }

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);
std::string serialize_config(const RunConfig& config);

}  // namespace dgboltz
