#include "dgboltz/bench.hpp"

#include <chrono>
#include <cmath>
#include <limits>

#include "dgboltz/convolution.hpp"

namespace dgboltz {

namespace {

template <typename F>
double best_of(int repeat, F&& run)
{
  double best = std::numeric_limits<double>::infinity();
  for (int r = 0; r < repeat; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    run();
    const auto t1 = std::chrono::steady_clock::now();
    best = std::min(best, std::chrono::duration<double>(t1 - t0).count());
  }
  return best;
}

}  // namespace

std::vector<BenchRow> run_bench(const BenchOptions& options)
{
  if (options.cells.size() < 2) throw ConfigError("bench: need at least two grid sizes");
  if (options.repeat < 1) throw ConfigError("bench: repeat must be >= 1");
  const SphereQuadrature quad = sphere_quadrature(options.n_theta, options.n_epsilon);

  std::vector<BenchRow> rows;
  for (int m : options.cells) {
    GridSpec g = options.grid;
    g.cells_per_dim = m;
    g.validate();
    auto mesh = std::make_shared<const VelocityMesh>(g);
    const DistributionField f = sample_maxwellian_sum(mesh, options.components);

    KernelTensor kernel = precompute_kernel(*mesh, options.model, quad, default_truncation_radius(g),
                                            KernelForm::non_split, options.memory_cap);
    auto spectral = std::make_shared<const SpectralKernel>(spectral_transform_kernel(kernel, options.memory_cap));
    const FastEngine engine(spectral);

    BenchRow row;
    row.cells = m;
    engine.apply(f);  // warm-up
    row.fast_seconds = best_of(options.repeat, [&] { engine.apply(f); });

    if (m <= options.direct_max_cells) {
      row.direct_seconds = best_of(options.direct_repeat, [&] { direct_convolve(f, kernel, WrapMode::circular); });
    } else {
      row.direct_seconds = std::numeric_limits<double>::quiet_NaN();
    }
    rows.push_back(row);
  }
  return rows;
}

double pair_exponent(double m1, double t1, double m2, double t2)
{
  return std::log(t1 / t2) / std::log(m1 / m2);
}

double fitted_exponent(const std::vector<double>& m, const std::vector<double>& t)
{
  const std::size_t n = std::min(m.size(), t.size());
  if (n < 2) return std::numeric_limits<double>::quiet_NaN();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const double x = std::log(m[k]);
    const double y = std::log(t[k]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace dgboltz
