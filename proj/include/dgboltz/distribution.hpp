#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "dgboltz/grid.hpp"

namespace dgboltz {

using MeshPtr = std::shared_ptr<const VelocityMesh>;

/// Nodal values f_{i;j}. Storage is node-major: values[i * M^3 + cell_flat],
/// so every local node owns a contiguous M^3 block.
class DistributionField
{
 public:
  /// Zero field.
  explicit DistributionField(MeshPtr mesh);
  /// Rejects wrong extents and non-finite values.
  DistributionField(MeshPtr mesh, std::vector<double> values);

  const VelocityMesh& mesh() const { return *mesh_; }
  const MeshPtr& mesh_ptr() const { return mesh_; }

  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }
  std::span<const double> node_block(int i) const;

  double at(int i, std::size_t cell) const { return values_[index(i, cell)]; }
  double& at(int i, std::size_t cell) { return values_[index(i, cell)]; }

  std::size_t index(int i, std::size_t cell) const
  {
    return static_cast<std::size_t>(i) * mesh_->num_cells() + cell;
  }

  bool all_finite() const;
  double max_abs() const;

  DistributionField& operator+=(const DistributionField& o);
  DistributionField& operator-=(const DistributionField& o);
  DistributionField& operator*=(double s);
  /// this += s * o
  DistributionField& axpy(double s, const DistributionField& o);

  friend DistributionField operator+(DistributionField a, const DistributionField& b) { return a += b; }
  friend DistributionField operator-(DistributionField a, const DistributionField& b) { return a -= b; }
  friend DistributionField operator*(double s, DistributionField a) { return a *= s; }

 private:
  void check_same_mesh(const DistributionField& o) const;

  MeshPtr mesh_;
  std::vector<double> values_;
};

struct MaxwellianParams
{
  double density = 1.0;
  Vec3 bulk_velocity{};
  double temperature = 1.0;

  void validate() const;

  friend bool operator==(const MaxwellianParams&, const MaxwellianParams&) = default;
};

/// Density, momentum, energy = int |v|^2 f, temperature T = 2/(3n) int |v-u|^2 f,
/// and per-axis temperatures T_d = 2/n int (v_d - u_d)^2 f.
struct MomentSet
{
  double density = 0.0;
  Vec3 momentum{};
  double energy = 0.0;
  double temperature = 0.0;
  Vec3 directional_temperatures{};

  Vec3 bulk_velocity() const { return momentum * (1.0 / density); }
};

/// Raw quadrature sums of 1, v and |v|^2 against nodal data; no admissibility checks.
struct RawMoments
{
  double mass = 0.0;
  Vec3 momentum{};
  double energy = 0.0;
};

/// n (pi T)^{-3/2} exp(-|v - u|^2 / T)
double maxwellian_eval(const MaxwellianParams& p, const Vec3& v);

DistributionField sample_field(MeshPtr mesh, const std::function<double(const Vec3&)>& f);
DistributionField sample_maxwellian(MeshPtr mesh, const MaxwellianParams& p);
DistributionField sample_maxwellian_sum(MeshPtr mesh, std::span<const MaxwellianParams> parts);

RawMoments raw_moments(const VelocityMesh& mesh, std::span<const double> nodal);
RawMoments raw_moments(const DistributionField& field);

/// Throws DegenerateFieldError when density <= 0.
MomentSet moments(const DistributionField& field);

/// sum (omega_i dv / 8) (v_axis - u_axis)^p f; axis is 1-based. When centred,
/// u is the field's instantaneous bulk velocity.
double directional_moment(const DistributionField& field, int axis, int power, bool centered);

struct Decomposition
{
  MaxwellianParams params;
  DistributionField maxwellian;
  DistributionField deviation;
};

/// f = f_M + df where f_M shares density, bulk velocity and temperature with f.
Decomposition macro_micro_decompose(const DistributionField& field);

/// Binary snapshot: magic "BGKF", u16 version, then i32 M, s_u, s_v, s_w,
/// six f64 bounds and the values, all little-endian.
void save_field(const DistributionField& field, const std::filesystem::path& path);
DistributionField load_field(const std::filesystem::path& path);
/// One row per node: u, v, w, value.
void write_field_csv(const DistributionField& field, const std::filesystem::path& path);

}  // namespace dgboltz
