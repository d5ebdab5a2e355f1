#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <random>
#include <span>

#include "dgboltz/distribution.hpp"

namespace testing {

inline dgboltz::MeshPtr make_mesh(int m, int s, double half = 3.0)
{
  dgboltz::GridSpec g;
  g.cells_per_dim = m;
  g.nodes_per_dim = {s, s, s};
  g.domain_min = {-half, -half, -half};
  g.domain_max = {half, half, half};
  return std::make_shared<const dgboltz::VelocityMesh>(g);
}

inline dgboltz::DistributionField random_field(const dgboltz::MeshPtr& mesh, unsigned seed)
{
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  dgboltz::DistributionField f(mesh);
  for (double& x : f.values()) x = u(rng);
  return f;
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b)
{
  double d = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) d = std::max(d, std::abs(a[k] - b[k]));
  return d;
}

inline double max_abs(std::span<const double> a)
{
  double d = 0.0;
  for (double x : a) d = std::max(d, std::abs(x));
  return d;
}

inline double rel_diff(std::span<const double> a, std::span<const double> b)
{
  return max_abs_diff(a, b) / std::max(max_abs(b), 1e-300);
}

}  // namespace testing
