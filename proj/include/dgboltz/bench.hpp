#pragma once

#include <cstddef>
#include <vector>

#include "dgboltz/distribution.hpp"
#include "dgboltz/kernel.hpp"

namespace dgboltz {

struct BenchOptions
{
  std::vector<int> cells{5, 9, 15};
  GridSpec grid;  // bounds and nodes per cell; cells_per_dim is overridden
  InteractionModel model;
  int n_theta = 8;
  int n_epsilon = 16;
  std::vector<MaxwellianParams> components;
  int repeat = 3;
  int direct_repeat = 1;
  /// Larger grids skip the direct engine.
  int direct_max_cells = 15;
  std::size_t memory_cap = default_memory_cap;
};

struct BenchRow
{
  int cells = 0;
  double fast_seconds = 0.0;
  double direct_seconds = 0.0;  // NaN when skipped
};

/// Times one non-split operator evaluation per engine and grid, best of
/// `repeat`. Kernel precomputation and transforms are outside the timed region.
std::vector<BenchRow> run_bench(const BenchOptions& options);

/// ln(t1 / t2) / ln(m1 / m2)
double pair_exponent(double m1, double t1, double m2, double t2);

/// Least-squares slope of ln t against ln m.
double fitted_exponent(const std::vector<double>& m, const std::vector<double>& t);

}  // namespace dgboltz
