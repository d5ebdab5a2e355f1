#pragma once

#include <complex>
#include <filesystem>
#include <memory>
#include <span>
#include <vector>

#include "dgboltz/distribution.hpp"
#include "dgboltz/kernel.hpp"

namespace dgboltz {

using Complex = std::complex<double>;

enum class TransformDirection
{
  forward,  // sum_n x_n W^{kn}, W = exp(-2 pi i / M)
  inverse,  // (1/M) sum_k X_k W^{-kn} per dimension
};

/// Cubic M^3 transform, row-major (u slowest).
std::vector<Complex> dft3(std::span<const Complex> values, int m, TransformDirection direction);

enum class WrapMode
{
  circular,      // shifted cell indices wrap modulo M
  zero_outside,  // shifted cells outside the domain contribute nothing
};

/// Galerkin projections I_{i;j}, node-major like DistributionField.
struct CollisionOutput
{
  MeshPtr mesh;
  std::vector<double> values;
  /// max |Im| of the final inverse transform (fast engine only).
  double imaginary_residue = 0.0;

  double max_abs() const;
  /// (8 / (omega_i dv)) I_{i;j}, the nodal time derivative.
  DistributionField nodal_rate() const;
};

/// Literal six-fold sum sum_{i',i'',j',j''} g_{i';j'+m} h_{i'';j''+m} A_{i,i',i'';j',j''}
/// for output cell c + m. Costs s^9 M^9.
CollisionOutput direct_bilinear(const DistributionField& g, const DistributionField& h,
                                const KernelTensor& kernel, WrapMode wrap);
CollisionOutput direct_convolve(const DistributionField& f, const KernelTensor& kernel,
                                WrapMode wrap);

/// Forward transform of every kernel slab in both cell triples. Entry (k, l)
/// of a slab is stored at row k, column l as F[A]_{k-l, l} (indices mod M),
/// which is the order the frequency convolution consumes it in.
struct SpectralKernel
{
  KernelForm form = KernelForm::non_split;
  GridSpec grid;
  InteractionModel model;
  double truncation_radius = 0.0;
  int n_theta = 0;
  int n_epsilon = 0;
  std::vector<Complex> values;

  int nodes_per_cell() const { return grid.nodes_per_cell(); }
  std::size_t slab_size() const { return grid.num_cells() * grid.num_cells(); }
  std::size_t slab_index(int i, int ip, int ipp) const;
  std::span<const Complex> slab(int i, int ip, int ipp) const;
  std::span<Complex> slab(int i, int ip, int ipp);

  /// F[A_{i,i',i''}]_{a, b} for flat frequency triples a and b.
  Complex at(int i, int ip, int ipp, std::size_t a, std::size_t b) const;
};

/// Bytes of the spectral kernel plus the transform scratch of one slab.
std::size_t spectral_kernel_bytes(const GridSpec& grid);

SpectralKernel spectral_transform_kernel(const KernelTensor& kernel,
                                         std::size_t memory_cap = default_memory_cap);

/// Frequency-domain evaluation with cached transform plans:
///   1. G = F^{-1}[g_i'], H = F^{-1}[h_i''] per local node
///   2. F[I_{i,i',i''}]_k = M^3 sum_l G_{k-l} H_l F[A]_{k-l,l}
///   3. sum over (i', i'')
///   4. inverse transform and reorder to output cells.
/// Throws NumericError when the imaginary residue exceeds 1e-6 max|I|.
class FastEngine
{
 public:
  explicit FastEngine(std::shared_ptr<const SpectralKernel> kernel);
  ~FastEngine();
  FastEngine(const FastEngine&) = delete;
  FastEngine& operator=(const FastEngine&) = delete;

  CollisionOutput bilinear(const DistributionField& g, const DistributionField& h) const;
  CollisionOutput apply(const DistributionField& f) const { return bilinear(f, f); }

  const SpectralKernel& kernel() const { return *kernel_; }

 private:
  struct Plans;
  std::shared_ptr<const SpectralKernel> kernel_;
  std::unique_ptr<Plans> plans_;
};

CollisionOutput fast_bilinear(const DistributionField& g, const DistributionField& h,
                              const SpectralKernel& kernel);
CollisionOutput fast_convolve(const DistributionField& f, const SpectralKernel& kernel);

/// I_j = sum_{j',j''} f_{j'-j} f_{j''-j} A_{j',j''}, A row-major M x M.
std::vector<double> convolve_1d_reference(std::span<const double> f, std::span<const double> a);
/// The same quantity through F[I]_k = M sum_l F^{-1}[f]_{k-l} F^{-1}[f]_l F[A]_{k-l,l}.
std::vector<double> lemma_1d_fast(std::span<const double> f, std::span<const double> a);

/// Container shares the kernel header; form tags 2 (non-split) and 3 (gain-only)
/// mark spectral payloads of interleaved re/im pairs.
void save_spectral_kernel(const SpectralKernel& kernel, const std::filesystem::path& path);
SpectralKernel load_spectral_kernel(const std::filesystem::path& path);
SpectralKernel load_spectral_kernel(const std::filesystem::path& path, const GridSpec& expected);

/// 2M cells per dimension with the same cell size, extending the box upward;
/// the original cells keep their indices.
GridSpec padded_grid(const GridSpec& grid);
DistributionField embed_padded(const DistributionField& field, MeshPtr padded);
CollisionOutput restrict_padded(const CollisionOutput& output, MeshPtr original);

}  // namespace dgboltz
