#include "dgboltz/grid.hpp"

#include <bit>
#include <cstring>
#include <string>

namespace dgboltz {

namespace {

void hash_bytes(std::uint64_t& h, const void* data, std::size_t n)
{
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t k = 0; k < n; ++k) {
    h ^= p[k];
    h *= 1099511628211ULL;
  }
}

template <typename T>
void hash_le(std::uint64_t& h, T value)
{
  unsigned char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) {
    for (std::size_t k = 0; k < sizeof(T) / 2; ++k) std::swap(buf[k], buf[sizeof(T) - 1 - k]);
  }
  hash_bytes(h, buf, sizeof(T));
}

}  // namespace

void GridSpec::validate() const
{
  if (cells_per_dim < 1) {
    throw ConfigError("grid: cells_per_dim must be >= 1, got " + std::to_string(cells_per_dim));
  }
  for (int d = 0; d < 3; ++d) {
    if (!(domain_max[d] > domain_min[d])) {
      throw ConfigError("grid: domain_max must exceed domain_min in every dimension");
    }
    if (!std::isfinite(domain_min[d]) || !std::isfinite(domain_max[d])) {
      throw ConfigError("grid: domain bounds must be finite");
    }
    if (nodes_per_dim[d] < 1 || nodes_per_dim[d] > max_basis_order) {
      throw ConfigError("grid: nodes per dimension must lie in 1..5, got "
                        + std::to_string(nodes_per_dim[d]));
    }
  }
  const Vec3 h = cell_size();
  for (int d = 0; d < 3; ++d) {
    if (!(h[d] > 0.0)) throw ConfigError("grid: cell size must be positive");
  }
}

Vec3 GridSpec::cell_size() const
{
  const double m = static_cast<double>(cells_per_dim);
  return {(domain_max[0] - domain_min[0]) / m, (domain_max[1] - domain_min[1]) / m,
          (domain_max[2] - domain_min[2]) / m};
}

double GridSpec::cell_volume() const
{
  const Vec3 h = cell_size();
  return h[0] * h[1] * h[2];
}

std::size_t GridSpec::num_cells() const
{
  const auto m = static_cast<std::size_t>(cells_per_dim);
  return m * m * m;
}

std::uint64_t GridSpec::fingerprint() const
{
  std::uint64_t h = 14695981039346656037ULL;
  for (int d = 0; d < 3; ++d) hash_le(h, domain_min[d]);
  for (int d = 0; d < 3; ++d) hash_le(h, domain_max[d]);
  hash_le(h, static_cast<std::int32_t>(cells_per_dim));
  for (int d = 0; d < 3; ++d) hash_le(h, static_cast<std::int32_t>(nodes_per_dim[d]));
  return h;
}

GaussRule gauss_legendre_rule(int n)
{
  if (n < 1) throw ConfigError("gauss_legendre_rule: order must be >= 1");
  GaussRule rule;
  rule.order = n;
  rule.nodes.assign(n, 0.0);
  rule.weights.assign(n, 0.0);
  const int half = (n + 1) / 2;
  for (int k = 0; k < half; ++k) {
    double x = std::cos(pi * (k + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0;
      double p1 = x;
      for (int j = 2; j <= n; ++j) {
        const double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
        p0 = p1;
        p1 = p2;
      }
      // n == 1 leaves p1 = x, p0 = 1.
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    // Recompute the derivative at the converged root.
    {
      double p0 = 1.0;
      double p1 = x;
      for (int j = 2; j <= n; ++j) {
        const double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[k] = -x;
    rule.nodes[n - 1 - k] = x;
    rule.weights[k] = w;
    rule.weights[n - 1 - k] = w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  return rule;
}

GaussRule gauss_legendre(int order)
{
  if (order < 1 || order > max_basis_order) {
    throw ConfigError("gauss_legendre: order must lie in 1..5, got " + std::to_string(order));
  }
  return gauss_legendre_rule(order);
}

double lagrange_eval(const GaussRule& rule, int l, double x)
{
  const auto& k = rule.nodes;
  const int idx = l - 1;
  if (idx < 0 || idx >= rule.order) {
    throw IndexError("lagrange_eval: l=" + std::to_string(l) + " outside 1.." + std::to_string(rule.order));
  }
  double value = 1.0;
  for (int p = 0; p < rule.order; ++p) {
    if (p == idx) continue;
    value *= (k[p] - x) / (k[p] - k[idx]);
  }
  return value;
}

int flatten_node_index(int l, int m, int n, const GridSpec& spec)
{
  const auto& s = spec.nodes_per_dim;
  if (l < 1 || l > s[0] || m < 1 || m > s[1] || n < 1 || n > s[2]) {
    throw IndexError("flatten_node_index: (" + std::to_string(l) + "," + std::to_string(m) + ","
                     + std::to_string(n) + ") outside the node box");
  }
  return (l - 1) * s[1] * s[2] + (m - 1) * s[2] + n;
}

VelocityMesh::VelocityMesh(GridSpec spec) : spec_(spec)
{
  spec_.validate();
  for (int d = 0; d < 3; ++d) rules_[d] = gauss_legendre(spec_.nodes_per_dim[d]);
  cell_size_ = spec_.cell_size();
  cell_volume_ = spec_.cell_volume();
  nodes_per_cell_ = spec_.nodes_per_cell();
  num_cells_ = spec_.num_cells();

  const auto& s = spec_.nodes_per_dim;
  local_.resize(nodes_per_cell_);
  weights_.resize(nodes_per_cell_);
  for (int l = 0; l < s[0]; ++l) {
    for (int m = 0; m < s[1]; ++m) {
      for (int n = 0; n < s[2]; ++n) {
        const int i = flatten_node_index(l + 1, m + 1, n + 1, spec_) - 1;
        local_[i] = {l, m, n};
        weights_[i] = rules_[0].weights[l] * rules_[1].weights[m] * rules_[2].weights[n];
      }
    }
  }

  node_coords_.resize(num_cells_ * nodes_per_cell_);
  for (std::size_t flat = 0; flat < num_cells_; ++flat) {
    const CellIndex j = cell_unflat(flat);
    for (int i = 0; i < nodes_per_cell_; ++i) node_coords_[flat * nodes_per_cell_ + i] = node(i, j);
  }
}

CellIndex VelocityMesh::generating_cell() const
{
  const int c = spec_.cells_per_dim / 2;
  return {c, c, c};
}

std::size_t VelocityMesh::cell_flat(const CellIndex& j) const
{
  const auto m = static_cast<std::size_t>(spec_.cells_per_dim);
  return (static_cast<std::size_t>(j.u) * m + static_cast<std::size_t>(j.v)) * m
         + static_cast<std::size_t>(j.w);
}

CellIndex VelocityMesh::cell_unflat(std::size_t flat) const
{
  const auto m = static_cast<std::size_t>(spec_.cells_per_dim);
  return {static_cast<int>(flat / (m * m)), static_cast<int>((flat / m) % m),
          static_cast<int>(flat % m)};
}

bool VelocityMesh::contains_cell(const CellIndex& j) const
{
  const int m = spec_.cells_per_dim;
  return j.u >= 0 && j.u < m && j.v >= 0 && j.v < m && j.w >= 0 && j.w < m;
}

Vec3 VelocityMesh::cell_lower(const CellIndex& j) const
{
  return {spec_.domain_min[0] + j.u * cell_size_[0], spec_.domain_min[1] + j.v * cell_size_[1],
          spec_.domain_min[2] + j.w * cell_size_[2]};
}

Vec3 VelocityMesh::cell_center(const CellIndex& j) const
{
  return cell_lower(j) + 0.5 * cell_size_;
}

Vec3 VelocityMesh::node(int i, const CellIndex& j) const
{
  const Vec3 lo = cell_lower(j);
  const auto& lmn = local_[i];
  Vec3 v;
  for (int d = 0; d < 3; ++d) {
    v[d] = lo[d] + 0.5 * cell_size_[d] * (rules_[d].nodes[lmn[d]] + 1.0);
  }
  return v;
}

CellIndex VelocityMesh::locate(const Vec3& v) const
{
  const int m = spec_.cells_per_dim;
  CellIndex j;
  for (int d = 0; d < 3; ++d) {
    int k = static_cast<int>(std::floor((v[d] - spec_.domain_min[d]) / cell_size_[d]));
    if (k == m && v[d] <= spec_.domain_max[d]) k = m - 1;
    j[d] = k;
  }
  return j;
}

std::optional<CellIndex> VelocityMesh::locate_in_domain(const Vec3& v) const
{
  const CellIndex j = locate(v);
  if (!contains_cell(j)) return std::nullopt;
  return j;
}

void VelocityMesh::basis_eval_all(const CellIndex& j, const Vec3& v, std::span<double> out) const
{
  const Vec3 lo = cell_lower(j);
  std::array<std::array<double, max_basis_order>, 3> one_d{};
  for (int d = 0; d < 3; ++d) {
    const double x = 2.0 * (v[d] - lo[d]) / cell_size_[d] - 1.0;
    for (int l = 0; l < rules_[d].order; ++l) one_d[d][l] = lagrange_eval(rules_[d], l + 1, x);
  }
  for (int i = 0; i < nodes_per_cell_; ++i) {
    const auto& lmn = local_[i];
    out[i] = one_d[0][lmn[0]] * one_d[1][lmn[1]] * one_d[2][lmn[2]];
  }
}

double VelocityMesh::basis_eval(int i, const CellIndex& j, const Vec3& v) const
{
  if (!(locate(v) == j)) return 0.0;
  const Vec3 lo = cell_lower(j);
  const auto& lmn = local_[i];
  double value = 1.0;
  for (int d = 0; d < 3; ++d) {
    const double x = 2.0 * (v[d] - lo[d]) / cell_size_[d] - 1.0;
    value *= lagrange_eval(rules_[d], lmn[d] + 1, x);
  }
  return value;
}

Vec3 VelocityMesh::cell_shift_vector(const CellIndex& j) const
{
  const CellIndex c = generating_cell();
  return {(j.u - c.u) * cell_size_[0], (j.v - c.v) * cell_size_[1], (j.w - c.w) * cell_size_[2]};
}

}  // namespace dgboltz
