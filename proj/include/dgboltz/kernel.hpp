#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include "dgboltz/distribution.hpp"
#include "dgboltz/grid.hpp"

namespace dgboltz {

inline constexpr std::size_t default_memory_cap = std::size_t{2} << 30;

/// B(|g|, cos theta) = b0 |g|^alpha with isotropic angular part.
struct InteractionModel
{
  double alpha = 1.0;
  double b0 = 1.0 / (4.0 * pi);

  void validate() const;
  double sigma_t() const { return 4.0 * pi * b0; }
  double angular(double /*cos_theta*/) const { return b0; }

  friend bool operator==(const InteractionModel&, const InteractionModel&) = default;
};

/// Product rule on the unit sphere: Gauss-Legendre in cos(theta), periodic
/// trapezoid in the azimuth (offset by half a step so that no direction is
/// aligned with a coordinate plane).
struct SphereQuadrature
{
  int n_theta = 0;
  int n_epsilon = 0;
  std::vector<Vec3> directions;
  std::vector<double> weights;

  std::size_t size() const { return weights.size(); }
};

SphereQuadrature sphere_quadrature(int n_theta, int n_epsilon);

/// v' = v - (g - |g| w)/2, v1' = v - (g + |g| w)/2, evaluated through the
/// midpoint (v + v1)/2 +- |g| w / 2 so the pair is symmetric in (v, v1).
std::pair<Vec3, Vec3> post_collision_velocities(const Vec3& v, const Vec3& v1, const Vec3& w);

enum class KernelForm : std::uint8_t
{
  non_split = 0,  // phi(v') - phi(v)
  gain_only = 1,  // phi(v')
};

const char* to_string(KernelForm form);

/// A(vp, vpp; phi_{i;cell}) by sphere quadrature, without node weights.
/// i is 0-based; cell defaults to the generating cell.
double kernel_entry(const VelocityMesh& mesh, int i, const Vec3& vp, const Vec3& vpp,
                    const InteractionModel& model, const SphereQuadrature& quad, KernelForm form);
double kernel_entry(const VelocityMesh& mesh, int i, const CellIndex& cell, const Vec3& vp,
                    const Vec3& vpp, const InteractionModel& model, const SphereQuadrature& quad,
                    KernelForm form);

/// Dense A_{i,i',i'';j',j''} on the generating cell with the node weights
/// (omega_{i'} dv/8)(omega_{i''} dv/8) folded in. Layout: slab (i, i', i'')
/// outermost, then j' and j'' as flat cell indices (row-major).
struct KernelTensor
{
  KernelForm form = KernelForm::non_split;
  GridSpec grid;
  InteractionModel model;
  double truncation_radius = std::numeric_limits<double>::infinity();
  int n_theta = 0;
  int n_epsilon = 0;
  std::vector<double> values;

  int nodes_per_cell() const { return grid.nodes_per_cell(); }
  std::size_t slab_size() const { return grid.num_cells() * grid.num_cells(); }
  std::size_t num_slabs() const;
  std::size_t slab_index(int i, int ip, int ipp) const;

  std::span<const double> slab(int i, int ip, int ipp) const;
  std::span<double> slab(int i, int ip, int ipp);
  double at(int i, int ip, int ipp, std::size_t jp, std::size_t jpp) const
  {
    return slab(i, ip, ipp)[jp * grid.num_cells() + jpp];
  }
};

/// Bytes needed for n^3 M^6 doubles.
std::size_t kernel_bytes(const GridSpec& grid);

/// Fills the generating-cell tensor. Entries whose node pair is farther apart
/// than truncation_radius are zero. Refuses (SizingError) before allocating
/// when the tensor would exceed memory_cap bytes.
KernelTensor precompute_kernel(const VelocityMesh& mesh, const InteractionModel& model,
                               const SphereQuadrature& quad, double truncation_radius,
                               KernelForm form, std::size_t memory_cap = default_memory_cap);

/// Half the smallest linear extent of the domain.
double default_truncation_radius(const GridSpec& grid);

/// Kernel container: magic "BGKA", u16 version, u8 form tag, u8 endianness
/// marker ('L'), grid spec, fingerprint, model, R, quadrature counts, payload
/// length and the payload as little-endian f64.
void save_kernel(const KernelTensor& tensor, const std::filesystem::path& path);
KernelTensor load_kernel(const std::filesystem::path& path);
/// Also checks the stored grid against `expected`.
KernelTensor load_kernel(const std::filesystem::path& path, const GridSpec& expected);

/// sigma_T |v - v1|^alpha tabulated over node pairs by cell offset; used for
/// the loss term of the split form, nu(v) = int f(v1) sigma_T |g|^alpha dv1.
class CollisionFrequencyWeights
{
 public:
  CollisionFrequencyWeights(MeshPtr mesh, const InteractionModel& model);

  /// Table entry for nodes i (cell j) and i2 (cell j + offset); offsets lie in
  /// [-(M-1), M-1] per dimension.
  double weight(int i, int i2, const CellIndex& offset) const;

  /// nu at every node for the nodal density h, summed over the whole domain.
  std::vector<double> frequency(std::span<const double> h) const;

  const VelocityMesh& mesh() const { return *mesh_; }

 private:
  std::size_t offset_flat(const CellIndex& offset) const;

  MeshPtr mesh_;
  InteractionModel model_;
  int span_ = 0;  // 2M - 1
  std::vector<double> table_;
};

namespace detail {

/// Header shared by every kernel-container file (real and spectral).
struct KernelFileHeader
{
  std::uint8_t form_tag = 0;
  GridSpec grid;
  InteractionModel model;
  double truncation_radius = 0.0;
  int n_theta = 0;
  int n_epsilon = 0;
  std::uint64_t payload_doubles = 0;
};

void write_kernel_header(std::ostream& out, const KernelFileHeader& h);
KernelFileHeader read_kernel_header(std::istream& in);

}  // namespace detail

}  // namespace dgboltz
