#include "dgboltz/distribution.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>

#include "dgboltz/binary_io.hpp"

namespace dgboltz {

DistributionField::DistributionField(MeshPtr mesh)
    : mesh_(std::move(mesh)), values_(mesh_->dofs(), 0.0)
{
}

DistributionField::DistributionField(MeshPtr mesh, std::vector<double> values)
    : mesh_(std::move(mesh)), values_(std::move(values))
{
  if (values_.size() != mesh_->dofs()) {
    throw IndexError("distribution: expected " + std::to_string(mesh_->dofs()) + " values, got "
                     + std::to_string(values_.size()));
  }
  if (!all_finite()) throw NumericError("distribution: non-finite nodal value");
}

std::span<const double> DistributionField::node_block(int i) const
{
  const std::size_t n = mesh_->num_cells();
  return std::span<const double>(values_).subspan(static_cast<std::size_t>(i) * n, n);
}

bool DistributionField::all_finite() const
{
  return std::all_of(values_.begin(), values_.end(), [](double x) { return std::isfinite(x); });
}

double DistributionField::max_abs() const
{
  double m = 0.0;
  for (double x : values_) m = std::max(m, std::abs(x));
  return m;
}

void DistributionField::check_same_mesh(const DistributionField& o) const
{
  if (mesh_ != o.mesh_ && !(mesh_->spec() == o.mesh_->spec())) {
    throw IncompatibleError("distribution: fields live on different meshes");
  }
}

DistributionField& DistributionField::operator+=(const DistributionField& o)
{
  check_same_mesh(o);
  for (std::size_t k = 0; k < values_.size(); ++k) values_[k] += o.values_[k];
  return *this;
}

DistributionField& DistributionField::operator-=(const DistributionField& o)
{
  check_same_mesh(o);
  for (std::size_t k = 0; k < values_.size(); ++k) values_[k] -= o.values_[k];
  return *this;
}

DistributionField& DistributionField::operator*=(double s)
{
  for (double& x : values_) x *= s;
  return *this;
}

DistributionField& DistributionField::axpy(double s, const DistributionField& o)
{
  check_same_mesh(o);
  for (std::size_t k = 0; k < values_.size(); ++k) values_[k] += s * o.values_[k];
  return *this;
}

void MaxwellianParams::validate() const
{
  if (!(density > 0.0)) throw ConfigError("maxwellian: density must be positive");
  if (!(temperature > 0.0)) throw ConfigError("maxwellian: temperature must be positive");
}

double maxwellian_eval(const MaxwellianParams& p, const Vec3& v)
{
  const Vec3 c = v - p.bulk_velocity;
  return p.density * std::pow(pi * p.temperature, -1.5) * std::exp(-dot(c, c) / p.temperature);
}

DistributionField sample_field(MeshPtr mesh, const std::function<double(const Vec3&)>& f)
{
  const std::size_t ncell = mesh->num_cells();
  const int s = mesh->nodes_per_cell();
  std::vector<double> values(mesh->dofs());
  for (int i = 0; i < s; ++i) {
    for (std::size_t j = 0; j < ncell; ++j) {
      const double x = f(mesh->node(i, j));
      if (!std::isfinite(x)) throw NumericError("sample_field: non-finite sample");
      values[static_cast<std::size_t>(i) * ncell + j] = x;
    }
  }
  return DistributionField(std::move(mesh), std::move(values));
}

DistributionField sample_maxwellian(MeshPtr mesh, const MaxwellianParams& p)
{
  p.validate();
  return sample_field(std::move(mesh), [&](const Vec3& v) { return maxwellian_eval(p, v); });
}

DistributionField sample_maxwellian_sum(MeshPtr mesh, std::span<const MaxwellianParams> parts)
{
  for (const auto& p : parts) p.validate();
  return sample_field(std::move(mesh), [&](const Vec3& v) {
    double sum = 0.0;
    for (const auto& p : parts) sum += maxwellian_eval(p, v);
    return sum;
  });
}

RawMoments raw_moments(const VelocityMesh& mesh, std::span<const double> nodal)
{
  const std::size_t ncell = mesh.num_cells();
  RawMoments r;
  for (int i = 0; i < mesh.nodes_per_cell(); ++i) {
    const double w = mesh.quadrature_weight(i);
    for (std::size_t j = 0; j < ncell; ++j) {
      const double f = w * nodal[static_cast<std::size_t>(i) * ncell + j];
      const Vec3& v = mesh.node(i, j);
      r.mass += f;
      r.momentum += v * f;
      r.energy += dot(v, v) * f;
    }
  }
  return r;
}

RawMoments raw_moments(const DistributionField& field)
{
  return raw_moments(field.mesh(), field.values());
}

MomentSet moments(const DistributionField& field)
{
  const VelocityMesh& mesh = field.mesh();
  const RawMoments raw = raw_moments(field);
  if (!(raw.mass > 0.0)) {
    throw DegenerateFieldError("moments: non-positive density " + std::to_string(raw.mass));
  }
  MomentSet m;
  m.density = raw.mass;
  m.momentum = raw.momentum;
  m.energy = raw.energy;
  const Vec3 u = m.bulk_velocity();

  const std::size_t ncell = mesh.num_cells();
  Vec3 second{};
  for (int i = 0; i < mesh.nodes_per_cell(); ++i) {
    const double w = mesh.quadrature_weight(i);
    for (std::size_t j = 0; j < ncell; ++j) {
      const double f = w * field.at(i, j);
      const Vec3 c = mesh.node(i, j) - u;
      for (int d = 0; d < 3; ++d) second[d] += c[d] * c[d] * f;
    }
  }
  for (int d = 0; d < 3; ++d) m.directional_temperatures[d] = 2.0 * second[d] / m.density;
  m.temperature = 2.0 * (second[0] + second[1] + second[2]) / (3.0 * m.density);
  return m;
}

double directional_moment(const DistributionField& field, int axis, int power, bool centered)
{
  if (axis < 1 || axis > 3) throw IndexError("directional_moment: axis must lie in 1..3");
  if (power < 0) throw IndexError("directional_moment: power must be non-negative");
  const VelocityMesh& mesh = field.mesh();
  const int d = axis - 1;
  double shift = 0.0;
  if (centered) shift = moments(field).bulk_velocity()[d];

  const std::size_t ncell = mesh.num_cells();
  double sum = 0.0;
  for (int i = 0; i < mesh.nodes_per_cell(); ++i) {
    const double w = mesh.quadrature_weight(i);
    for (std::size_t j = 0; j < ncell; ++j) {
      const double x = mesh.node(i, j)[d] - shift;
      sum += w * std::pow(x, power) * field.at(i, j);
    }
  }
  return sum;
}

Decomposition macro_micro_decompose(const DistributionField& field)
{
  const MomentSet m = moments(field);
  if (!(m.temperature > 0.0)) {
    throw DegenerateFieldError("macro_micro_decompose: non-positive temperature");
  }
  MaxwellianParams p{m.density, m.bulk_velocity(), m.temperature};
  DistributionField fm = sample_maxwellian(field.mesh_ptr(), p);
  DistributionField df = field - fm;
  return {p, std::move(fm), std::move(df)};
}

namespace {
constexpr char field_magic[5] = "BGKF";
constexpr std::uint16_t field_version = 1;
}  // namespace

void save_field(const DistributionField& field, const std::filesystem::path& path)
{
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  const GridSpec& g = field.mesh().spec();
  detail::write_magic(out, field_magic);
  detail::write_le<std::uint16_t>(out, field_version);
  detail::write_le<std::int32_t>(out, g.cells_per_dim);
  for (int d = 0; d < 3; ++d) detail::write_le<std::int32_t>(out, g.nodes_per_dim[d]);
  for (int d = 0; d < 3; ++d) detail::write_le(out, g.domain_min[d]);
  for (int d = 0; d < 3; ++d) detail::write_le(out, g.domain_max[d]);
  detail::write_doubles(out, field.values());
  if (!out) throw IoError("write failed for " + path.string());
}

DistributionField load_field(const std::filesystem::path& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  detail::expect_magic(in, field_magic);
  if (detail::read_le<std::uint16_t>(in) != field_version) {
    throw FormatError("unsupported field file version");
  }
  GridSpec g;
  g.cells_per_dim = detail::read_le<std::int32_t>(in);
  for (int d = 0; d < 3; ++d) g.nodes_per_dim[d] = detail::read_le<std::int32_t>(in);
  for (int d = 0; d < 3; ++d) g.domain_min[d] = detail::read_le<double>(in);
  for (int d = 0; d < 3; ++d) g.domain_max[d] = detail::read_le<double>(in);
  try {
    g.validate();
  } catch (const ConfigError& e) {
    throw FormatError(std::string("field header: ") + e.what());
  }
  auto mesh = std::make_shared<const VelocityMesh>(g);
  std::vector<double> values(mesh->dofs());
  detail::read_doubles(in, values);
  return DistributionField(std::move(mesh), std::move(values));
}

void write_field_csv(const DistributionField& field, const std::filesystem::path& path)
{
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  const VelocityMesh& mesh = field.mesh();
  out << "u,v,w,f\n" << std::scientific << std::setprecision(16);
  for (std::size_t j = 0; j < mesh.num_cells(); ++j) {
    for (int i = 0; i < mesh.nodes_per_cell(); ++i) {
      const Vec3& v = mesh.node(i, j);
      out << v[0] << ',' << v[1] << ',' << v[2] << ',' << field.at(i, j) << '\n';
    }
  }
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace dgboltz
