#include "dgboltz/convolution.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <mutex>
#include <string>

#include "dgboltz/binary_io.hpp"

namespace dgboltz {

namespace {

// FFTW planning is not thread-safe; execution of an existing plan is.
std::mutex& planner_mutex()
{
  static std::mutex m;
  return m;
}

fftw_complex* as_fftw(Complex* p) { return reinterpret_cast<fftw_complex*>(p); }

fftw_plan plan_dft(int rank, int m, Complex* buffer, int sign)
{
  std::vector<int> dims(static_cast<std::size_t>(rank), m);
  std::lock_guard<std::mutex> lock(planner_mutex());
  fftw_plan p = fftw_plan_dft(rank, dims.data(), as_fftw(buffer), as_fftw(buffer), sign,
                              FFTW_ESTIMATE | FFTW_UNALIGNED);
  if (p == nullptr) throw NumericError("fftw: planning failed");
  return p;
}

void destroy_plan(fftw_plan p)
{
  std::lock_guard<std::mutex> lock(planner_mutex());
  fftw_destroy_plan(p);
}

int wrap(int x, int m) { return ((x % m) + m) % m; }

void check_grid(const GridSpec& a, const GridSpec& b, const char* what)
{
  if (a.fingerprint() != b.fingerprint() || !(a == b)) {
    throw IncompatibleError(std::string(what) + ": field and kernel grids differ");
  }
}

}  // namespace

std::vector<Complex> dft3(std::span<const Complex> values, int m, TransformDirection direction)
{
  if (m < 1) throw IndexError("dft3: extent must be positive");
  const std::size_t n = static_cast<std::size_t>(m) * m * m;
  if (values.size() != n) throw IndexError("dft3: expected a cubic array");
  std::vector<Complex> out(values.begin(), values.end());
  const int sign = direction == TransformDirection::forward ? FFTW_FORWARD : FFTW_BACKWARD;
  fftw_plan p = plan_dft(3, m, out.data(), sign);
  fftw_execute_dft(p, as_fftw(out.data()), as_fftw(out.data()));
  destroy_plan(p);
  if (direction == TransformDirection::inverse) {
    const double scale = 1.0 / static_cast<double>(n);
    for (auto& x : out) x *= scale;
  }
  return out;
}

double CollisionOutput::max_abs() const
{
  double m = 0.0;
  for (double x : values) m = std::max(m, std::abs(x));
  return m;
}

DistributionField CollisionOutput::nodal_rate() const
{
  std::vector<double> rate(values);
  const std::size_t cells = mesh->num_cells();
  for (int i = 0; i < mesh->nodes_per_cell(); ++i) {
    const double inv = 1.0 / mesh->quadrature_weight(i);
    for (std::size_t j = 0; j < cells; ++j) rate[i * cells + j] *= inv;
  }
  return DistributionField(mesh, std::move(rate));
}

// ---------------------------------------------------------------------------
// Direct engine

namespace {

// Extended copy of every node block over cells y in [0, 2M)^3, where y stands
// for field cell y - c.
std::vector<double> extend_field(const DistributionField& f, WrapMode wrap_mode)
{
  const VelocityMesh& mesh = f.mesh();
  const int m = mesh.cells_per_dim();
  const int e = 2 * m;
  const CellIndex c = mesh.generating_cell();
  const std::size_t ext = static_cast<std::size_t>(e) * e * e;
  std::vector<double> out(ext * mesh.nodes_per_cell(), 0.0);
  for (int i = 0; i < mesh.nodes_per_cell(); ++i) {
    const auto block = f.node_block(i);
    double* dst = out.data() + i * ext;
    for (int yu = 0; yu < e; ++yu) {
      for (int yv = 0; yv < e; ++yv) {
        for (int yw = 0; yw < e; ++yw) {
          CellIndex src{yu - c.u, yv - c.v, yw - c.w};
          if (wrap_mode == WrapMode::circular) {
            src = {wrap(src.u, m), wrap(src.v, m), wrap(src.w, m)};
          } else if (!mesh.contains_cell(src)) {
            continue;
          }
          dst[(static_cast<std::size_t>(yu) * e + yv) * e + yw] = block[mesh.cell_flat(src)];
        }
      }
    }
  }
  return out;
}

}  // namespace

CollisionOutput direct_bilinear(const DistributionField& g, const DistributionField& h,
                                const KernelTensor& kernel, WrapMode wrap_mode)
{
  check_grid(g.mesh().spec(), kernel.grid, "direct_convolve");
  check_grid(h.mesh().spec(), kernel.grid, "direct_convolve");
  const VelocityMesh& mesh = g.mesh();
  const int m = mesh.cells_per_dim();
  const int n = mesh.nodes_per_cell();
  const std::size_t cells = mesh.num_cells();
  const std::size_t e = 2 * static_cast<std::size_t>(m);
  const std::size_t ext = e * e * e;

  const std::vector<double> gext = extend_field(g, wrap_mode);
  const std::vector<double> hext = extend_field(h, wrap_mode);

  CollisionOutput out{g.mesh_ptr(), std::vector<double>(mesh.dofs(), 0.0), 0.0};
  const auto total = static_cast<std::ptrdiff_t>(mesh.dofs());

#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t o = 0; o < total; ++o) {
    const int i = static_cast<int>(static_cast<std::size_t>(o) / cells);
    const CellIndex p = mesh.cell_unflat(static_cast<std::size_t>(o) % cells);
    double sum = 0.0;
    for (int ip = 0; ip < n; ++ip) {
      const double* gx = gext.data() + ip * ext;
      for (int ipp = 0; ipp < n; ++ipp) {
        const double* hx = hext.data() + ipp * ext;
        const double* slab = kernel.slab(i, ip, ipp).data();
        std::size_t a = 0;
        for (int au = 0; au < m; ++au) {
          for (int av = 0; av < m; ++av) {
            for (int aw = 0; aw < m; ++aw, ++a) {
              const double ga = gx[((au + p.u) * e + av + p.v) * e + aw + p.w];
              const double* arow = slab + a * cells;
              double inner = 0.0;
              for (int bu = 0; bu < m; ++bu) {
                for (int bv = 0; bv < m; ++bv) {
                  const double* hrow = hx + ((bu + p.u) * e + bv + p.v) * e + p.w;
                  const double* krow = arow + (static_cast<std::size_t>(bu) * m + bv) * m;
                  for (int bw = 0; bw < m; ++bw) inner += krow[bw] * hrow[bw];
                }
              }
              sum += ga * inner;
            }
          }
        }
      }
    }
    out.values[static_cast<std::size_t>(o)] = sum;
  }
  return out;
}

CollisionOutput direct_convolve(const DistributionField& f, const KernelTensor& kernel,
                                WrapMode wrap_mode)
{
  return direct_bilinear(f, f, kernel, wrap_mode);
}

// ---------------------------------------------------------------------------
// Spectral kernel

std::size_t SpectralKernel::slab_index(int i, int ip, int ipp) const
{
  const auto n = static_cast<std::size_t>(nodes_per_cell());
  return (static_cast<std::size_t>(i) * n + static_cast<std::size_t>(ip)) * n
         + static_cast<std::size_t>(ipp);
}

std::span<const Complex> SpectralKernel::slab(int i, int ip, int ipp) const
{
  return std::span<const Complex>(values).subspan(slab_index(i, ip, ipp) * slab_size(), slab_size());
}

std::span<Complex> SpectralKernel::slab(int i, int ip, int ipp)
{
  return std::span<Complex>(values).subspan(slab_index(i, ip, ipp) * slab_size(), slab_size());
}

Complex SpectralKernel::at(int i, int ip, int ipp, std::size_t a, std::size_t b) const
{
  // Stored row k = a + b holds F[A]_{k-b, b} at column b.
  const int m = grid.cells_per_dim;
  const auto mm = static_cast<std::size_t>(m);
  const std::size_t cells = grid.num_cells();
  const int ku = wrap(static_cast<int>(a / (mm * mm) + b / (mm * mm)), m);
  const int kv = wrap(static_cast<int>((a / mm) % mm + (b / mm) % mm), m);
  const int kw = wrap(static_cast<int>(a % mm + b % mm), m);
  const std::size_t k = (static_cast<std::size_t>(ku) * mm + kv) * mm + kw;
  return slab(i, ip, ipp)[k * cells + b];
}

std::size_t spectral_kernel_bytes(const GridSpec& grid)
{
  const auto n = static_cast<std::size_t>(grid.nodes_per_cell());
  const std::size_t cells = grid.num_cells();
  return (n * n * n + 1) * cells * cells * sizeof(Complex);
}

SpectralKernel spectral_transform_kernel(const KernelTensor& kernel, std::size_t memory_cap)
{
  const std::size_t bytes = spectral_kernel_bytes(kernel.grid);
  if (bytes > memory_cap) {
    throw SizingError("spectral_transform_kernel: needs " + std::to_string(bytes >> 20)
                      + " MiB, cap is " + std::to_string(memory_cap >> 20) + " MiB");
  }
  const int m = kernel.grid.cells_per_dim;
  const int n = kernel.nodes_per_cell();
  const std::size_t cells = kernel.grid.num_cells();

  SpectralKernel sk;
  sk.form = kernel.form;
  sk.grid = kernel.grid;
  sk.model = kernel.model;
  sk.truncation_radius = kernel.truncation_radius;
  sk.n_theta = kernel.n_theta;
  sk.n_epsilon = kernel.n_epsilon;
  sk.values.assign(static_cast<std::size_t>(n) * n * n * cells * cells, Complex{});

  std::vector<Complex> buf(cells * cells);
  fftw_plan plan = plan_dft(6, m, buf.data(), FFTW_FORWARD);

  // Flat index of the cell triple k - l for every (k, l) pair, computed once.
  std::vector<std::uint32_t> diff(cells * cells);
  for (std::size_t k = 0; k < cells; ++k) {
    const int ku = static_cast<int>(k) / (m * m), kv = (static_cast<int>(k) / m) % m,
              kw = static_cast<int>(k) % m;
    for (std::size_t l = 0; l < cells; ++l) {
      const int lu = static_cast<int>(l) / (m * m), lv = (static_cast<int>(l) / m) % m,
                lw = static_cast<int>(l) % m;
      diff[k * cells + l] =
          static_cast<std::uint32_t>((wrap(ku - lu, m) * m + wrap(kv - lv, m)) * m + wrap(kw - lw, m));
    }
  }

  for (int i = 0; i < n; ++i) {
    for (int ip = 0; ip < n; ++ip) {
      for (int ipp = 0; ipp < n; ++ipp) {
        const auto src = kernel.slab(i, ip, ipp);
        std::transform(src.begin(), src.end(), buf.begin(), [](double x) { return Complex(x, 0.0); });
        fftw_execute_dft(plan, as_fftw(buf.data()), as_fftw(buf.data()));
        auto dst = sk.slab(i, ip, ipp);
#pragma omp parallel for schedule(static)
        for (std::size_t k = 0; k < cells; ++k) {
          for (std::size_t l = 0; l < cells; ++l) {
            dst[k * cells + l] = buf[static_cast<std::size_t>(diff[k * cells + l]) * cells + l];
          }
        }
      }
    }
  }
  destroy_plan(plan);
  return sk;
}

// ---------------------------------------------------------------------------
// Fast engine

struct FastEngine::Plans
{
  fftw_plan backward = nullptr;
  std::vector<Complex> scratch;
};

FastEngine::FastEngine(std::shared_ptr<const SpectralKernel> kernel)
    : kernel_(std::move(kernel)), plans_(std::make_unique<Plans>())
{
  if (!kernel_) throw ConfigError("FastEngine: null spectral kernel");
  plans_->scratch.resize(kernel_->grid.num_cells());
  plans_->backward = plan_dft(3, kernel_->grid.cells_per_dim, plans_->scratch.data(), FFTW_BACKWARD);
}

FastEngine::~FastEngine()
{
  if (plans_ && plans_->backward) destroy_plan(plans_->backward);
}

CollisionOutput FastEngine::bilinear(const DistributionField& g, const DistributionField& h) const
{
  const SpectralKernel& sk = *kernel_;
  check_grid(g.mesh().spec(), sk.grid, "fast_convolve");
  check_grid(h.mesh().spec(), sk.grid, "fast_convolve");
  const VelocityMesh& mesh = g.mesh();
  const int m = mesh.cells_per_dim();
  const int n = mesh.nodes_per_cell();
  const std::size_t cells = mesh.num_cells();
  const double inv_cells = 1.0 / static_cast<double>(cells);
  const auto mm = static_cast<std::size_t>(m);
  const std::size_t row2 = 2 * mm;

  auto inverse_transform = [&](std::span<const double> block) {
    std::vector<Complex> x(block.size());
    for (std::size_t k = 0; k < block.size(); ++k) x[k] = Complex(block[k], 0.0);
    fftw_execute_dft(plans_->backward, as_fftw(x.data()), as_fftw(x.data()));
    for (auto& v : x) v *= inv_cells;
    return x;
  };

  // Step 1. gw holds F^{-1}[g] with the last axis reflected and doubled so that
  // G_{k-l} is read contiguously as l_w increases: gw[u][v][t] = G[u][v][M-1-t].
  std::vector<std::vector<Complex>> gw(n), hs(n);
  for (int ip = 0; ip < n; ++ip) {
    const std::vector<Complex> gt = inverse_transform(g.node_block(ip));
    auto& r = gw[ip];
    r.assign(mm * mm * row2, Complex{});
    for (std::size_t uv = 0; uv < mm * mm; ++uv) {
      for (int t = 0; t < 2 * m - 1; ++t) r[uv * row2 + t] = gt[uv * mm + wrap(m - 1 - t, m)];
    }
    hs[ip] = inverse_transform(h.node_block(ip));
  }

  CollisionOutput out{g.mesh_ptr(), std::vector<double>(mesh.dofs(), 0.0), 0.0};
  std::vector<Complex> fi(cells);
  const double m3 = static_cast<double>(cells);
  const CellIndex c = mesh.generating_cell();

  for (int i = 0; i < n; ++i) {
    // Steps 2 and 3, one output frequency at a time in a fixed (i', i'', l) order.
#pragma omp parallel for schedule(static)
    for (std::size_t k = 0; k < cells; ++k) {
      const int ku = static_cast<int>(k / (mm * mm));
      const int kv = static_cast<int>((k / mm) % mm);
      const int kw = static_cast<int>(k % mm);
      double re = 0.0;
      double im = 0.0;
      for (int ip = 0; ip < n; ++ip) {
        const double* gbase = reinterpret_cast<const double*>(gw[ip].data());
        for (int ipp = 0; ipp < n; ++ipp) {
          const double* hbase = reinterpret_cast<const double*>(hs[ipp].data());
          const double* srow = reinterpret_cast<const double*>(sk.slab(i, ip, ipp).data() + k * cells);
          for (int lu = 0; lu < m; ++lu) {
            const std::size_t gu = static_cast<std::size_t>(wrap(ku - lu, m));
            for (int lv = 0; lv < m; ++lv) {
              const std::size_t gv = static_cast<std::size_t>(wrap(kv - lv, m));
              const double* gr = gbase + 2 * ((gu * mm + gv) * row2 + (mm - 1 - kw));
              const std::size_t lo = (static_cast<std::size_t>(lu) * mm + lv) * mm;
              const double* hr = hbase + 2 * lo;
              const double* sr = srow + 2 * lo;
              for (int lw = 0; lw < m; ++lw) {
                const double gre = gr[2 * lw], gim = gr[2 * lw + 1];
                const double hre = hr[2 * lw], him = hr[2 * lw + 1];
                const double sre = sr[2 * lw], sim = sr[2 * lw + 1];
                const double pre = gre * hre - gim * him;
                const double pim = gre * him + gim * hre;
                re += pre * sre - pim * sim;
                im += pre * sim + pim * sre;
              }
            }
          }
        }
      }
      fi[k] = m3 * Complex(re, im);
    }

    // Step 4. The transform yields I at cell c - p for output cell p.
    fftw_execute_dft(plans_->backward, as_fftw(fi.data()), as_fftw(fi.data()));
    double* dst = out.values.data() + static_cast<std::size_t>(i) * cells;
    for (std::size_t p = 0; p < cells; ++p) {
      const CellIndex pc = mesh.cell_unflat(p);
      const CellIndex q{wrap(c.u - pc.u, m), wrap(c.v - pc.v, m), wrap(c.w - pc.w, m)};
      const Complex v = fi[mesh.cell_flat(q)] * inv_cells;
      dst[p] = v.real();
      out.imaginary_residue = std::max(out.imaginary_residue, std::abs(v.imag()));
    }
  }

  const double scale = out.max_abs();
  if (!(out.imaginary_residue <= 1e-6 * scale) && out.imaginary_residue > 0.0) {
    throw NumericError("fast_convolve: imaginary residue " + std::to_string(out.imaginary_residue)
                       + " exceeds tolerance for max|I| = " + std::to_string(scale));
  }
  return out;
}

CollisionOutput fast_bilinear(const DistributionField& g, const DistributionField& h,
                              const SpectralKernel& kernel)
{
  const FastEngine engine(std::shared_ptr<const SpectralKernel>(&kernel, [](const SpectralKernel*) {}));
  return engine.bilinear(g, h);
}

CollisionOutput fast_convolve(const DistributionField& f, const SpectralKernel& kernel)
{
  return fast_bilinear(f, f, kernel);
}

// ---------------------------------------------------------------------------
// One-dimensional forms

namespace {

std::size_t check_1d(std::span<const double> f, std::span<const double> a)
{
  const std::size_t m = f.size();
  if (m == 0 || a.size() != m * m) throw IndexError("1-D convolution: need f of length M, A of M x M");
  return m;
}

// twiddle[n] = W^n = exp(-2 pi i n / M)
std::vector<Complex> twiddles(std::size_t m)
{
  std::vector<Complex> w(m);
  for (std::size_t k = 0; k < m; ++k) {
    const double t = -2.0 * pi * static_cast<double>(k) / static_cast<double>(m);
    w[k] = Complex(std::cos(t), std::sin(t));
  }
  return w;
}

}  // namespace

std::vector<double> convolve_1d_reference(std::span<const double> f, std::span<const double> a)
{
  const std::size_t m = check_1d(f, a);
  std::vector<double> out(m, 0.0);
  for (std::size_t j = 0; j < m; ++j) {
    double sum = 0.0;
    for (std::size_t jp = 0; jp < m; ++jp) {
      for (std::size_t jpp = 0; jpp < m; ++jpp) {
        sum += f[(jp + m - j) % m] * f[(jpp + m - j) % m] * a[jp * m + jpp];
      }
    }
    out[j] = sum;
  }
  return out;
}

std::vector<double> lemma_1d_fast(std::span<const double> f, std::span<const double> a)
{
  const std::size_t m = check_1d(f, a);
  const std::vector<Complex> w = twiddles(m);
  const double inv = 1.0 / static_cast<double>(m);

  std::vector<Complex> g(m);
  for (std::size_t q = 0; q < m; ++q) {
    Complex s{};
    for (std::size_t x = 0; x < m; ++x) s += f[x] * std::conj(w[(q * x) % m]);
    g[q] = s * inv;
  }

  std::vector<Complex> fa(m * m);
  for (std::size_t q = 0; q < m; ++q) {
    for (std::size_t r = 0; r < m; ++r) {
      Complex s{};
      for (std::size_t x = 0; x < m; ++x) {
        for (std::size_t y = 0; y < m; ++y) s += a[x * m + y] * w[(q * x + r * y) % m];
      }
      fa[q * m + r] = s;
    }
  }

  std::vector<Complex> fi(m);
  for (std::size_t k = 0; k < m; ++k) {
    Complex s{};
    for (std::size_t l = 0; l < m; ++l) {
      const std::size_t kl = (k + m - l) % m;
      s += g[kl] * g[l] * fa[kl * m + l];
    }
    fi[k] = static_cast<double>(m) * s;
  }

  std::vector<double> out(m);
  for (std::size_t j = 0; j < m; ++j) {
    Complex s{};
    for (std::size_t k = 0; k < m; ++k) s += fi[k] * std::conj(w[(k * j) % m]);
    out[j] = (s * inv).real();
  }
  return out;
}

// ---------------------------------------------------------------------------
// Persistence

void save_spectral_kernel(const SpectralKernel& kernel, const std::filesystem::path& path)
{
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  detail::KernelFileHeader h;
  h.form_tag = static_cast<std::uint8_t>(2 + static_cast<int>(kernel.form));
  h.grid = kernel.grid;
  h.model = kernel.model;
  h.truncation_radius = kernel.truncation_radius;
  h.n_theta = kernel.n_theta;
  h.n_epsilon = kernel.n_epsilon;
  h.payload_doubles = 2 * kernel.values.size();
  detail::write_kernel_header(out, h);
  const std::span<const double> raw(reinterpret_cast<const double*>(kernel.values.data()),
                                    2 * kernel.values.size());
  detail::write_doubles(out, raw);
  if (!out) throw IoError("write failed for " + path.string());
}

SpectralKernel load_spectral_kernel(const std::filesystem::path& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  const auto h = detail::read_kernel_header(in);
  if (h.form_tag != 2 && h.form_tag != 3) {
    throw FormatError("not a spectral kernel (form tag " + std::to_string(h.form_tag) + ")");
  }
  SpectralKernel sk;
  sk.form = static_cast<KernelForm>(h.form_tag - 2);
  sk.grid = h.grid;
  sk.model = h.model;
  sk.truncation_radius = h.truncation_radius;
  sk.n_theta = h.n_theta;
  sk.n_epsilon = h.n_epsilon;
  const auto n = static_cast<std::size_t>(h.grid.nodes_per_cell());
  const std::size_t expected = n * n * n * h.grid.num_cells() * h.grid.num_cells();
  if (h.payload_doubles != 2 * expected) throw FormatError("spectral payload length does not match grid");
  sk.values.resize(expected);
  detail::read_doubles(in, std::span<double>(reinterpret_cast<double*>(sk.values.data()), 2 * expected));
  return sk;
}

SpectralKernel load_spectral_kernel(const std::filesystem::path& path, const GridSpec& expected)
{
  SpectralKernel sk = load_spectral_kernel(path);
  if (sk.grid.fingerprint() != expected.fingerprint() || !(sk.grid == expected)) {
    throw IncompatibleError("spectral kernel " + path.string() + " was computed for a different grid");
  }
  return sk;
}

// ---------------------------------------------------------------------------
// Zero padding

GridSpec padded_grid(const GridSpec& grid)
{
  GridSpec p = grid;
  p.cells_per_dim = 2 * grid.cells_per_dim;
  for (int d = 0; d < 3; ++d) p.domain_max[d] = grid.domain_min[d] + 2.0 * (grid.domain_max[d] - grid.domain_min[d]);
  return p;
}

DistributionField embed_padded(const DistributionField& field, MeshPtr padded)
{
  const VelocityMesh& src = field.mesh();
  if (!(padded->spec() == padded_grid(src.spec()))) {
    throw IncompatibleError("embed_padded: target is not the padded grid of the field");
  }
  DistributionField out(padded);
  for (int i = 0; i < src.nodes_per_cell(); ++i) {
    for (std::size_t j = 0; j < src.num_cells(); ++j) {
      out.at(i, padded->cell_flat(src.cell_unflat(j))) = field.at(i, j);
    }
  }
  return out;
}

CollisionOutput restrict_padded(const CollisionOutput& output, MeshPtr original)
{
  if (!(output.mesh->spec() == padded_grid(original->spec()))) {
    throw IncompatibleError("restrict_padded: output does not live on the padded grid");
  }
  CollisionOutput out{original, std::vector<double>(original->dofs(), 0.0), output.imaginary_residue};
  const std::size_t big = output.mesh->num_cells();
  const std::size_t small = original->num_cells();
  for (int i = 0; i < original->nodes_per_cell(); ++i) {
    for (std::size_t j = 0; j < small; ++j) {
      out.values[i * small + j] = output.values[i * big + output.mesh->cell_flat(original->cell_unflat(j))];
    }
  }
  return out;
}

}  // namespace dgboltz
