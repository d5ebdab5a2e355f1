#include "dgboltz/kernel.hpp"

#include <algorithm>
#include <fstream>
#include <string>

#include "dgboltz/binary_io.hpp"

namespace dgboltz {

void InteractionModel::validate() const
{
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("model: alpha must lie in [0, 1]");
  if (!(b0 >= 0.0) || !std::isfinite(b0)) throw ConfigError("model: b0 must be finite and >= 0");
}

SphereQuadrature sphere_quadrature(int n_theta, int n_epsilon)
{
  if (n_theta < 2 || n_epsilon < 4) {
    throw ConfigError("sphere_quadrature: need n_theta >= 2 and n_epsilon >= 4");
  }
  const GaussRule mu = gauss_legendre_rule(n_theta);
  SphereQuadrature q;
  q.n_theta = n_theta;
  q.n_epsilon = n_epsilon;
  q.directions.reserve(static_cast<std::size_t>(n_theta) * n_epsilon);
  q.weights.reserve(q.directions.capacity());
  const double d_eps = 2.0 * pi / n_epsilon;
  for (int a = 0; a < n_theta; ++a) {
    const double z = mu.nodes[a];
    const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
    for (int b = 0; b < n_epsilon; ++b) {
      const double eps = (b + 0.5) * d_eps;
      q.directions.emplace_back(rho * std::cos(eps), rho * std::sin(eps), z);
      q.weights.push_back(mu.weights[a] * d_eps);
    }
  }
  return q;
}

std::pair<Vec3, Vec3> post_collision_velocities(const Vec3& v, const Vec3& v1, const Vec3& w)
{
  const double g = norm(v - v1);
  const Vec3 mid = (v + v1) * 0.5;
  const Vec3 half = w * (0.5 * g);
  return {mid + half, mid - half};
}

const char* to_string(KernelForm form)
{
  switch (form) {
    case KernelForm::non_split:
      return "non-split";
    case KernelForm::gain_only:
      return "gain-only";
  }
  return "unknown";
}

namespace {

bool sphere_meets_cell(const VelocityMesh& mesh, const CellIndex& cell, const Vec3& centre,
                       double radius)
{
  const Vec3 lo = mesh.cell_lower(cell);
  const Vec3& h = mesh.cell_size();
  double dmin2 = 0.0;
  double dmax2 = 0.0;
  for (int d = 0; d < 3; ++d) {
    const double a = lo[d] - centre[d];
    const double b = centre[d] - (lo[d] + h[d]);
    const double out = std::max({a, b, 0.0});
    dmin2 += out * out;
    const double far = std::max(std::abs(a), std::abs(lo[d] + h[d] - centre[d]));
    dmax2 += far * far;
  }
  const double tol = 1e-12 * (h[0] + h[1] + h[2]);
  return radius >= std::sqrt(dmin2) - tol && radius <= std::sqrt(dmax2) + tol;
}

// acc[i] = |g|^alpha sum_q w_q b (phi_i(v'_q) - [non-split] phi_i(vp)) for every
// basis function of `cell`. scratch and loss must hold nodes_per_cell values.
void sphere_sums(const VelocityMesh& mesh, const CellIndex& cell, const Vec3& vp, const Vec3& vpp,
                 const InteractionModel& model, const SphereQuadrature& quad, KernelForm form,
                 std::span<double> acc, std::span<double> scratch, std::span<double> loss)
{
  const int n = mesh.nodes_per_cell();
  std::fill(acc.begin(), acc.end(), 0.0);
  const Vec3 g = vp - vpp;
  const double gn = norm(g);
  if (gn == 0.0 && model.alpha > 0.0) return;

  const bool has_loss = form == KernelForm::non_split && mesh.locate(vp) == cell;
  if (has_loss) {
    mesh.basis_eval_all(cell, vp, loss);
  } else {
    std::fill(loss.begin(), loss.end(), 0.0);
  }
  const Vec3 mid = (vp + vpp) * 0.5;
  const double r = 0.5 * gn;
  const bool has_gain = sphere_meets_cell(mesh, cell, mid, r);
  if (!has_gain && !has_loss) return;

  for (std::size_t q = 0; q < quad.size(); ++q) {
    const Vec3& w = quad.directions[q];
    const double cos_theta = gn > 0.0 ? dot(w, g) / gn : 1.0;
    const double wb = quad.weights[q] * model.angular(cos_theta);
    const Vec3 vq = mid + w * r;
    if (has_gain && mesh.locate(vq) == cell) {
      mesh.basis_eval_all(cell, vq, scratch);
    } else {
      std::fill(scratch.begin(), scratch.end(), 0.0);
    }
    for (int i = 0; i < n; ++i) acc[i] += wb * (scratch[i] - loss[i]);
  }
  const double scale = std::pow(gn, model.alpha);
  for (int i = 0; i < n; ++i) acc[i] *= scale;
}

}  // namespace

double kernel_entry(const VelocityMesh& mesh, int i, const CellIndex& cell, const Vec3& vp,
                    const Vec3& vpp, const InteractionModel& model, const SphereQuadrature& quad,
                    KernelForm form)
{
  if (i < 0 || i >= mesh.nodes_per_cell()) throw IndexError("kernel_entry: basis index out of range");
  const auto n = static_cast<std::size_t>(mesh.nodes_per_cell());
  std::vector<double> buf(3 * n);
  std::span<double> all(buf);
  sphere_sums(mesh, cell, vp, vpp, model, quad, form, all.subspan(0, n), all.subspan(n, n),
              all.subspan(2 * n, n));
  return buf[i];
}

double kernel_entry(const VelocityMesh& mesh, int i, const Vec3& vp, const Vec3& vpp,
                    const InteractionModel& model, const SphereQuadrature& quad, KernelForm form)
{
  return kernel_entry(mesh, i, mesh.generating_cell(), vp, vpp, model, quad, form);
}

std::size_t KernelTensor::num_slabs() const
{
  const auto n = static_cast<std::size_t>(nodes_per_cell());
  return n * n * n;
}

std::size_t KernelTensor::slab_index(int i, int ip, int ipp) const
{
  const auto n = static_cast<std::size_t>(nodes_per_cell());
  return (static_cast<std::size_t>(i) * n + static_cast<std::size_t>(ip)) * n
         + static_cast<std::size_t>(ipp);
}

std::span<const double> KernelTensor::slab(int i, int ip, int ipp) const
{
  return std::span<const double>(values).subspan(slab_index(i, ip, ipp) * slab_size(), slab_size());
}

std::span<double> KernelTensor::slab(int i, int ip, int ipp)
{
  return std::span<double>(values).subspan(slab_index(i, ip, ipp) * slab_size(), slab_size());
}

std::size_t kernel_bytes(const GridSpec& grid)
{
  const auto n = static_cast<std::size_t>(grid.nodes_per_cell());
  const std::size_t cells = grid.num_cells();
  return n * n * n * cells * cells * sizeof(double);
}

double default_truncation_radius(const GridSpec& grid)
{
  double extent = grid.domain_max[0] - grid.domain_min[0];
  for (int d = 1; d < 3; ++d) extent = std::min(extent, grid.domain_max[d] - grid.domain_min[d]);
  return 0.5 * extent;
}

KernelTensor precompute_kernel(const VelocityMesh& mesh, const InteractionModel& model,
                               const SphereQuadrature& quad, double truncation_radius,
                               KernelForm form, std::size_t memory_cap)
{
  model.validate();
  if (!(truncation_radius > 0.0)) throw ConfigError("precompute_kernel: R must be positive");
  const std::size_t bytes = kernel_bytes(mesh.spec());
  if (bytes > memory_cap) {
    throw SizingError("precompute_kernel: tensor needs " + std::to_string(bytes >> 20)
                      + " MiB, cap is " + std::to_string(memory_cap >> 20) + " MiB");
  }

  KernelTensor t;
  t.form = form;
  t.grid = mesh.spec();
  t.model = model;
  t.truncation_radius = truncation_radius;
  t.n_theta = quad.n_theta;
  t.n_epsilon = quad.n_epsilon;
  t.values.assign(bytes / sizeof(double), 0.0);

  const int n = mesh.nodes_per_cell();
  const std::size_t cells = mesh.num_cells();
  const CellIndex c = mesh.generating_cell();

#pragma omp parallel
  {
    std::vector<double> buf(3 * static_cast<std::size_t>(n));
    std::span<double> all(buf);
    const auto acc = all.subspan(0, n);
    const auto scratch = all.subspan(n, n);
    const auto loss = all.subspan(2 * static_cast<std::size_t>(n), n);
#pragma omp for schedule(dynamic)
    for (std::size_t jp = 0; jp < cells; ++jp) {
      for (int ip = 0; ip < n; ++ip) {
        const Vec3& vp = mesh.node(ip, jp);
        for (std::size_t jpp = 0; jpp < cells; ++jpp) {
          for (int ipp = 0; ipp < n; ++ipp) {
            const Vec3& vpp = mesh.node(ipp, jpp);
            if (norm(vp - vpp) > truncation_radius) continue;
            sphere_sums(mesh, c, vp, vpp, model, quad, form, acc, scratch, loss);
            const double ww = mesh.quadrature_weight(ip) * mesh.quadrature_weight(ipp);
            for (int i = 0; i < n; ++i) {
              if (acc[i] != 0.0) t.slab(i, ip, ipp)[jp * cells + jpp] = acc[i] * ww;
            }
          }
        }
      }
    }
  }
  return t;
}

namespace detail {

namespace {
constexpr char kernel_magic[5] = "BGKA";
constexpr std::uint16_t kernel_version = 1;
}  // namespace

void write_kernel_header(std::ostream& out, const KernelFileHeader& h)
{
  write_magic(out, kernel_magic);
  write_le<std::uint16_t>(out, kernel_version);
  write_le<std::uint8_t>(out, h.form_tag);
  write_le<std::uint8_t>(out, static_cast<std::uint8_t>('L'));
  write_le<std::int32_t>(out, h.grid.cells_per_dim);
  for (int d = 0; d < 3; ++d) write_le<std::int32_t>(out, h.grid.nodes_per_dim[d]);
  for (int d = 0; d < 3; ++d) write_le(out, h.grid.domain_min[d]);
  for (int d = 0; d < 3; ++d) write_le(out, h.grid.domain_max[d]);
  write_le<std::uint64_t>(out, h.grid.fingerprint());
  write_le(out, h.model.alpha);
  write_le(out, h.model.b0);
  write_le(out, h.truncation_radius);
  write_le<std::int32_t>(out, h.n_theta);
  write_le<std::int32_t>(out, h.n_epsilon);
  write_le<std::uint64_t>(out, h.payload_doubles);
}

KernelFileHeader read_kernel_header(std::istream& in)
{
  expect_magic(in, kernel_magic);
  if (read_le<std::uint16_t>(in) != kernel_version) throw FormatError("unsupported kernel version");
  KernelFileHeader h;
  h.form_tag = read_le<std::uint8_t>(in);
  if (read_le<std::uint8_t>(in) != 'L') throw FormatError("unsupported endianness marker");
  h.grid.cells_per_dim = read_le<std::int32_t>(in);
  for (int d = 0; d < 3; ++d) h.grid.nodes_per_dim[d] = read_le<std::int32_t>(in);
  for (int d = 0; d < 3; ++d) h.grid.domain_min[d] = read_le<double>(in);
  for (int d = 0; d < 3; ++d) h.grid.domain_max[d] = read_le<double>(in);
  const auto fp = read_le<std::uint64_t>(in);
  try {
    h.grid.validate();
  } catch (const ConfigError& e) {
    throw FormatError(std::string("kernel header: ") + e.what());
  }
  if (fp != h.grid.fingerprint()) throw FormatError("kernel header: fingerprint does not match grid");
  h.model.alpha = read_le<double>(in);
  h.model.b0 = read_le<double>(in);
  h.truncation_radius = read_le<double>(in);
  h.n_theta = read_le<std::int32_t>(in);
  h.n_epsilon = read_le<std::int32_t>(in);
  h.payload_doubles = read_le<std::uint64_t>(in);
  return h;
}

}  // namespace detail

void save_kernel(const KernelTensor& tensor, const std::filesystem::path& path)
{
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  detail::KernelFileHeader h;
  h.form_tag = static_cast<std::uint8_t>(tensor.form);
  h.grid = tensor.grid;
  h.model = tensor.model;
  h.truncation_radius = tensor.truncation_radius;
  h.n_theta = tensor.n_theta;
  h.n_epsilon = tensor.n_epsilon;
  h.payload_doubles = tensor.values.size();
  detail::write_kernel_header(out, h);
  detail::write_doubles(out, tensor.values);
  if (!out) throw IoError("write failed for " + path.string());
}

KernelTensor load_kernel(const std::filesystem::path& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  const auto h = detail::read_kernel_header(in);
  if (h.form_tag > static_cast<std::uint8_t>(KernelForm::gain_only)) {
    throw FormatError("not a real kernel tensor (form tag " + std::to_string(h.form_tag) + ")");
  }
  KernelTensor t;
  t.form = static_cast<KernelForm>(h.form_tag);
  t.grid = h.grid;
  t.model = h.model;
  t.truncation_radius = h.truncation_radius;
  t.n_theta = h.n_theta;
  t.n_epsilon = h.n_epsilon;
  if (h.payload_doubles != kernel_bytes(h.grid) / sizeof(double)) {
    throw FormatError("kernel payload length does not match grid");
  }
  t.values.resize(h.payload_doubles);
  detail::read_doubles(in, t.values);
  return t;
}

KernelTensor load_kernel(const std::filesystem::path& path, const GridSpec& expected)
{
  KernelTensor t = load_kernel(path);
  if (t.grid.fingerprint() != expected.fingerprint() || !(t.grid == expected)) {
    throw IncompatibleError("kernel " + path.string() + " was computed for a different grid");
  }
  return t;
}

CollisionFrequencyWeights::CollisionFrequencyWeights(MeshPtr mesh, const InteractionModel& model)
    : mesh_(std::move(mesh)), model_(model)
{
  model_.validate();
  const int m = mesh_->cells_per_dim();
  const int n = mesh_->nodes_per_cell();
  span_ = 2 * m - 1;
  const auto offsets = static_cast<std::size_t>(span_) * span_ * span_;
  table_.resize(static_cast<std::size_t>(n) * n * offsets);

  const CellIndex origin{0, 0, 0};
  const Vec3 lo = mesh_->cell_lower(origin);
  const Vec3& h = mesh_->cell_size();
  for (int i = 0; i < n; ++i) {
    const Vec3 xi = mesh_->node(i, origin) - lo;
    for (int i2 = 0; i2 < n; ++i2) {
      const Vec3 xi2 = mesh_->node(i2, origin) - lo;
      const Vec3 local = xi2 - xi;
      for (int du = -(m - 1); du < m; ++du) {
        for (int dv = -(m - 1); dv < m; ++dv) {
          for (int dw = -(m - 1); dw < m; ++dw) {
            const Vec3 rel = Vec3(du * h[0], dv * h[1], dw * h[2]) + local;
            const CellIndex off{du, dv, dw};
            table_[(static_cast<std::size_t>(i) * n + i2) * offsets + offset_flat(off)] =
                model_.sigma_t() * std::pow(norm(rel), model_.alpha);
          }
        }
      }
    }
  }
}

std::size_t CollisionFrequencyWeights::offset_flat(const CellIndex& off) const
{
  const int m1 = (span_ - 1) / 2;
  return (static_cast<std::size_t>(off.u + m1) * span_ + static_cast<std::size_t>(off.v + m1)) * span_
         + static_cast<std::size_t>(off.w + m1);
}

double CollisionFrequencyWeights::weight(int i, int i2, const CellIndex& offset) const
{
  const int n = mesh_->nodes_per_cell();
  const auto offsets = static_cast<std::size_t>(span_) * span_ * span_;
  return table_[(static_cast<std::size_t>(i) * n + i2) * offsets + offset_flat(offset)];
}

std::vector<double> CollisionFrequencyWeights::frequency(std::span<const double> h) const
{
  const int m = mesh_->cells_per_dim();
  const int n = mesh_->nodes_per_cell();
  const std::size_t cells = mesh_->num_cells();
  const auto offsets = static_cast<std::size_t>(span_) * span_ * span_;
  const auto sp = static_cast<std::size_t>(span_);

  // Weighted density, node-major like the field.
  std::vector<double> wh(h.size());
  for (int i2 = 0; i2 < n; ++i2) {
    const double w = mesh_->quadrature_weight(i2);
    for (std::size_t j = 0; j < cells; ++j) wh[i2 * cells + j] = w * h[i2 * cells + j];
  }

  std::vector<double> nu(h.size(), 0.0);
#pragma omp parallel for schedule(static)
  for (std::size_t j = 0; j < cells; ++j) {
    const CellIndex cj = mesh_->cell_unflat(j);
    for (int i = 0; i < n; ++i) {
      double sum = 0.0;
      for (int i2 = 0; i2 < n; ++i2) {
        const double* tab = table_.data() + (static_cast<std::size_t>(i) * n + i2) * offsets;
        const double* src = wh.data() + static_cast<std::size_t>(i2) * cells;
        for (int u = 0; u < m; ++u) {
          for (int v = 0; v < m; ++v) {
            const double* trow =
                tab + ((static_cast<std::size_t>(u - cj.u + m - 1)) * sp + (v - cj.v + m - 1)) * sp
                + (m - 1 - cj.w);
            const double* srow = src + (static_cast<std::size_t>(u) * m + v) * m;
            for (int w = 0; w < m; ++w) sum += srow[w] * trow[w];
          }
        }
      }
      nu[static_cast<std::size_t>(i) * cells + j] = sum;
    }
  }
  return nu;
}

}  // namespace dgboltz
