#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "dgboltz/common.hpp"

namespace dgboltz {

inline constexpr int max_basis_order = 5;

/// Uniform velocity box split into M cells per dimension, with s_u x s_v x s_w
/// Gauss nodes per cell.
struct GridSpec
{
  Vec3 domain_min{-3.0, -3.0, -3.0};
  Vec3 domain_max{3.0, 3.0, 3.0};
  int cells_per_dim = 9;
  std::array<int, 3> nodes_per_dim{1, 1, 1};

  void validate() const;

  Vec3 cell_size() const;
  double cell_volume() const;
  int nodes_per_cell() const { return nodes_per_dim[0] * nodes_per_dim[1] * nodes_per_dim[2]; }
  std::size_t num_cells() const;
  std::size_t dofs() const { return num_cells() * static_cast<std::size_t>(nodes_per_cell()); }

  /// FNV-1a hash of the little-endian encoding of every field.
  std::uint64_t fingerprint() const;

  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

struct GaussRule
{
  int order = 0;
  std::vector<double> nodes;    // increasing, on [-1, 1]
  std::vector<double> weights;  // sum to 2
};

/// Gauss-Legendre rule for the nodal basis; order must lie in 1..5.
GaussRule gauss_legendre(int order);

/// Unrestricted Gauss-Legendre rule (Newton iteration on P_n), used for
/// angular quadrature where more points are needed.
GaussRule gauss_legendre_rule(int n);

/// One-dimensional Lagrange polynomial through the rule's nodes; l is 1-based.
double lagrange_eval(const GaussRule& rule, int l, double x);

/// i = (l-1) s_v s_w + (m-1) s_w + n, all indices 1-based.
int flatten_node_index(int l, int m, int n, const GridSpec& spec);

struct CellIndex
{
  int u = 0;
  int v = 0;
  int w = 0;

  constexpr int& operator[](std::size_t d) { return d == 0 ? u : (d == 1 ? v : w); }
  constexpr int operator[](std::size_t d) const { return d == 0 ? u : (d == 1 ? v : w); }
  friend constexpr bool operator==(const CellIndex&, const CellIndex&) = default;
};

/// Immutable mesh: cell geometry, node coordinates and quadrature weights.
///
/// Node i of a cell is addressed 0-based internally; the local triple (l, m, n)
/// follows flatten_node_index. Cell flat index is (u * M + v) * M + w.
class VelocityMesh
{
 public:
  explicit VelocityMesh(GridSpec spec);

  const GridSpec& spec() const { return spec_; }
  int cells_per_dim() const { return spec_.cells_per_dim; }
  int nodes_per_cell() const { return nodes_per_cell_; }
  std::size_t num_cells() const { return num_cells_; }
  std::size_t dofs() const { return num_cells_ * static_cast<std::size_t>(nodes_per_cell_); }
  const Vec3& cell_size() const { return cell_size_; }
  double cell_volume() const { return cell_volume_; }
  const GaussRule& rule(int d) const { return rules_[d]; }

  /// The cell containing the domain centre, floor(M/2) in each dimension.
  CellIndex generating_cell() const;

  std::size_t cell_flat(const CellIndex& j) const;
  CellIndex cell_unflat(std::size_t flat) const;
  bool contains_cell(const CellIndex& j) const;

  Vec3 cell_lower(const CellIndex& j) const;
  Vec3 cell_center(const CellIndex& j) const;

  /// Local (l, m, n) of node i, 0-based.
  std::array<int, 3> local_index(int i) const { return local_[i]; }

  /// Physical coordinates of node i in cell j.
  Vec3 node(int i, const CellIndex& j) const;
  const Vec3& node(int i, std::size_t cell_flat) const
  {
    return node_coords_[cell_flat * nodes_per_cell_ + i];
  }

  /// Reference product weight omega_i (sums to 8 over a cell).
  double weight(int i) const { return weights_[i]; }
  /// omega_i * |K| / 8, the physical quadrature weight of node i.
  double quadrature_weight(int i) const { return weights_[i] * cell_volume_ / 8.0; }

  /// Cell index containing v using half-open cells [L, R); may lie outside
  /// the domain. Cells of the top boundary are closed on the right.
  CellIndex locate(const Vec3& v) const;
  std::optional<CellIndex> locate_in_domain(const Vec3& v) const;

  /// phi_{i;j}(v); zero when v is outside K_j.
  double basis_eval(int i, const CellIndex& j, const Vec3& v) const;

  /// Values of all basis functions of cell j at v, which must lie in K_j.
  void basis_eval_all(const CellIndex& j, const Vec3& v, std::span<double> out) const;

  /// Offset of cell j from the generating cell, (j - c) * cell size.
  Vec3 cell_shift_vector(const CellIndex& j) const;

 private:
  GridSpec spec_;
  std::array<GaussRule, 3> rules_;
  Vec3 cell_size_;
  double cell_volume_ = 0.0;
  int nodes_per_cell_ = 0;
  std::size_t num_cells_ = 0;
  std::vector<std::array<int, 3>> local_;
  std::vector<double> weights_;
  std::vector<Vec3> node_coords_;
};

}  // namespace dgboltz
