// Acceptance run: one PASS/FAIL line per criterion, exit status = failures.
// Pass criterion numbers as arguments to run a subset.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <memory>
#include <random>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "dgboltz/bench.hpp"
#include "dgboltz/convolution.hpp"
#include "dgboltz/solver.hpp"

using namespace dgboltz;

namespace {

int failures = 0;

void verdict(int id, bool ok, const std::string& what)
{
  std::printf("[%s] %d %s\n", ok ? "PASS" : "FAIL", id, what.c_str());
  std::fflush(stdout);
  failures += ok ? 0 : 1;
}

template <typename... Args>
void note(const char* fmt, Args... args)
{
  std::printf("    ");
  std::printf(fmt, args...);
  std::printf("\n");
  std::fflush(stdout);
}

double rel_max(std::span<const double> a, std::span<const double> b)
{
  double d = 0.0, s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    d = std::max(d, std::abs(a[k] - b[k]));
    s = std::max(s, std::abs(b[k]));
  }
  return s > 0.0 ? d / s : d;
}

GridSpec cube(int m, int s, double half)
{
  GridSpec g;
  g.cells_per_dim = m;
  g.nodes_per_dim = {s, s, s};
  g.domain_min = {-half, -half, -half};
  g.domain_max = {half, half, half};
  return g;
}

GridSpec mach155_grid(int m)
{
  GridSpec g = preset_scenario("mach155").grid;
  g.cells_per_dim = m;
  return g;
}

DistributionField mach155_field(const MeshPtr& mesh)
{
  return sample_maxwellian_sum(mesh, preset_scenario("mach155").components);
}

DistributionField random_field(const MeshPtr& mesh, unsigned seed)
{
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  DistributionField f(mesh);
  for (double& x : f.values()) x = u(rng);
  return f;
}

struct Kernels
{
  MeshPtr mesh;
  std::shared_ptr<const KernelTensor> real;
  std::shared_ptr<const SpectralKernel> spectral;
};

// Default truncation radius and an (8, 16) sphere rule throughout.
class KernelCache
{
 public:
  const Kernels& get(const GridSpec& g, KernelForm form)
  {
    const auto key = std::make_tuple(g.fingerprint(), static_cast<int>(form));
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    Kernels k;
    k.mesh = std::make_shared<const VelocityMesh>(g);
    const auto t0 = std::chrono::steady_clock::now();
    k.real = std::make_shared<const KernelTensor>(
        precompute_kernel(*k.mesh, InteractionModel{}, sphere_quadrature(8, 16), default_truncation_radius(g), form));
    k.spectral = std::make_shared<const SpectralKernel>(spectral_transform_kernel(*k.real));
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    note("kernel %s M=%d s=%d ready in %.1f s", to_string(form), g.cells_per_dim, g.nodes_per_dim[0], secs);
    return cache_.emplace(key, std::move(k)).first->second;
  }
  void clear() { cache_.clear(); }

 private:
  std::map<std::tuple<std::uint64_t, int>, Kernels> cache_;
};

KernelCache kernels;

void frequency_convolution_1d()
{
  std::mt19937_64 rng(20240601);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double worst = 0.0;
  for (int m : {2, 3, 4, 5, 8, 16}) {
    double worst_m = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
      std::vector<double> f(m), a(static_cast<std::size_t>(m) * m);
      for (double& x : f) x = u(rng);
      for (double& x : a) x = u(rng);
      worst_m = std::max(worst_m, rel_max(lemma_1d_fast(f, a), convolve_1d_reference(f, a)));
    }
    note("M=%2d  max relative error %.2e over 100 pairs", m, worst_m);
    worst = std::max(worst, worst_m);
  }
  char buf[160];
  std::snprintf(buf, sizeof buf, "1-D frequency-domain sum equals the reference sum: max rel %.2e (<= 1e-12)", worst);
  verdict(1, worst <= 1e-12, buf);
}

void fast_equals_direct_3d()
{
  double worst = 0.0;
  std::string worst_case;
  const std::pair<int, int> cases[] = {{3, 1}, {5, 1}, {9, 1}, {3, 2}, {3, 3}};
  for (auto [m, s] : cases) {
    const GridSpec g = [&] {
      GridSpec x = mach155_grid(m);
      x.nodes_per_dim = {s, s, s};
      return x;
    }();
    const Kernels& k = kernels.get(g, KernelForm::non_split);
    std::vector<std::pair<std::string, DistributionField>> fields;
    fields.emplace_back("random", random_field(k.mesh, 17 * m + s));
    fields.emplace_back("random", random_field(k.mesh, 31 * m + s));
    fields.emplace_back("mach155", mach155_field(k.mesh));
    for (const auto& [name, f] : fields) {
      const CollisionOutput fast = fast_convolve(f, *k.spectral);
      const CollisionOutput direct = direct_convolve(f, *k.real, WrapMode::circular);
      const double r = rel_max(fast.values, direct.values);
      note("M=%d s=%d %-8s rel %.2e  imaginary residue %.1e", m, s, name.c_str(), r, fast.imaginary_residue);
      if (r >= worst) {
        worst = r;
        worst_case = "M=" + std::to_string(m) + " s=" + std::to_string(s) + " " + name;
      }
    }
  }
  kernels.clear();
  char buf[200];
  std::snprintf(buf, sizeof buf, "3-D fast engine equals the circular direct sum: max rel %.2e at %s (<= 1e-10)", worst,
                worst_case.c_str());
  verdict(2, worst <= 1e-10, buf);
}

struct Sums
{
  double mass = 0.0;
  Vec3 momentum{};
  double energy = 0.0;
};

Sums invariant_sums(const VelocityMesh& mesh, const Vec3& vp, const Vec3& vpp, const SphereQuadrature& q)
{
  Sums s;
  const InteractionModel model;
  for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
    const CellIndex j = mesh.cell_unflat(c);
    for (int i = 0; i < mesh.nodes_per_cell(); ++i) {
      const double a = kernel_entry(mesh, i, j, vp, vpp, model, q, KernelForm::non_split);
      if (a == 0.0) continue;
      const Vec3 v = mesh.node(i, j);
      s.mass += a;
      s.momentum += a * v;
      s.energy += a * dot(v, v);
    }
  }
  return s;
}

// Node pairs whose collision sphere lies inside the domain.
std::vector<std::pair<Vec3, Vec3>> interior_pairs(const VelocityMesh& mesh)
{
  const GridSpec& g = mesh.spec();
  std::vector<std::pair<Vec3, Vec3>> out;
  for (std::size_t a = 0; a < mesh.num_cells(); ++a)
    for (int ia = 0; ia < mesh.nodes_per_cell(); ++ia)
      for (std::size_t b = 0; b < mesh.num_cells(); ++b)
        for (int ib = 0; ib < mesh.nodes_per_cell(); ++ib) {
          const Vec3 vp = mesh.node(ia, a), vpp = mesh.node(ib, b);
          const Vec3 mid = 0.5 * (vp + vpp);
          const double r = 0.5 * norm(vp - vpp);
          bool inside = r > 0.0;
          for (int d = 0; d < 3; ++d) inside = inside && mid[d] - r > g.domain_min[d] && mid[d] + r < g.domain_max[d];
          if (inside) out.emplace_back(vp, vpp);
        }
  return out;
}

void collision_invariants()
{
  const SphereQuadrature q = sphere_quadrature(16, 32);
  const double sigma = InteractionModel{}.sigma_t();

  double mass_worst = 0.0;
  std::size_t mass_pairs = 0;
  for (int s : {1, 2}) {
    const VelocityMesh mesh(cube(3, s, 1.5));
    auto pairs = interior_pairs(mesh);
    if (s > 1) {
      std::shuffle(pairs.begin(), pairs.end(), std::mt19937_64(7));
      pairs.resize(200);
    }
    for (const auto& [vp, vpp] : pairs) {
      const Sums x = invariant_sums(mesh, vp, vpp, q);
      mass_worst = std::max(mass_worst, std::abs(x.mass) / (sigma * norm(vp - vpp)));
    }
    mass_pairs += pairs.size();
  }
  note("mass: %zu interior pairs, max |sum| / (sigma_T |g|) = %.2e", mass_pairs, mass_worst);

  double mom_worst = 0.0, mom_raw = 0.0;
  {
    const VelocityMesh mesh(cube(3, 2, 1.5));
    auto pairs = interior_pairs(mesh);
    std::shuffle(pairs.begin(), pairs.end(), std::mt19937_64(11));
    pairs.resize(40);
    for (const auto& [vp, vpp] : pairs) {
      const Sums a = invariant_sums(mesh, vp, vpp, q), b = invariant_sums(mesh, vpp, vp, q);
      const double scale = sigma * norm(vp - vpp) * (norm(vp) + norm(vpp));
      mom_worst = std::max(mom_worst, norm(a.momentum + b.momentum) / scale);
      mom_raw = std::max(mom_raw, norm(a.momentum) / scale);
    }
    note("momentum, 2 nodes/dim: 40 pairs, symmetrised max rel %.2e (one-sided %.2e)", mom_worst, mom_raw);
  }

  double en_worst = 0.0, en_raw = 0.0;
  {
    const VelocityMesh mesh(cube(3, 3, 1.5));
    auto pairs = interior_pairs(mesh);
    std::shuffle(pairs.begin(), pairs.end(), std::mt19937_64(13));
    pairs.resize(16);
    for (const auto& [vp, vpp] : pairs) {
      const Sums a = invariant_sums(mesh, vp, vpp, q), b = invariant_sums(mesh, vpp, vp, q);
      const double scale = sigma * norm(vp - vpp) * (dot(vp, vp) + dot(vpp, vpp));
      en_worst = std::max(en_worst, std::abs(a.energy + b.energy) / scale);
      en_raw = std::max(en_raw, std::abs(a.energy) / scale);
    }
    note("energy, 3 nodes/dim: 16 pairs, symmetrised max rel %.2e (one-sided %.2e)", en_worst, en_raw);
  }

  char buf[200];
  std::snprintf(buf, sizeof buf,
                "kernel collision invariants: mass %.1e (<= 1e-10), momentum %.1e, energy %.1e (<= 1e-6)", mass_worst,
                mom_worst, en_worst);
  verdict(3, mass_worst <= 1e-10 && mom_worst <= 1e-6 && en_worst <= 1e-6, buf);
}

void maxwellian_near_null()
{
  const MaxwellianParams p{1.0, {0.0, 0.0, 0.0}, 1.0};
  std::vector<double> max_i, max_rate;
  for (int m : {5, 9, 15}) {
    const Kernels& k = kernels.get(cube(m, 1, 3.0), KernelForm::non_split);
    const CollisionOutput out = fast_convolve(sample_maxwellian(k.mesh, p), *k.spectral);
    max_i.push_back(out.max_abs());
    max_rate.push_back(out.nodal_rate().max_abs());
    note("M=%2d  max|I| %.4e  max nodal rate %.4e", m, max_i.back(), max_rate.back());
    kernels.clear();
  }
  const bool ok = max_i[1] < max_i[0] && max_i[2] < max_i[1] && max_rate[1] < max_rate[0] && max_rate[2] < max_rate[1];
  verdict(4, ok, "sampled equilibrium: max|I| and nodal rate decrease over M = 5, 9, 15");
}

struct Conservation
{
  double mass = 0.0;
  double temperature = 0.0;
};

Conservation conservation_of(const CollisionOutput& out, const DistributionField& f)
{
  const RawMoments d = raw_moments(out.nodal_rate());
  const MomentSet m = moments(f);
  const Vec3 u = m.bulk_velocity();
  const double dt = 2.0 / (3.0 * m.density) * (d.energy - 2.0 * dot(u, d.momentum) + dot(u, u) * d.mass) -
                    m.temperature * d.mass / m.density;
  return {d.mass, dt};
}

void split_gap()
{
  bool mass_ok = true, temp_ok = true;
  for (int m : {9, 15}) {
    const GridSpec g = mach155_grid(m);
    for (Engine engine : {Engine::fast, Engine::direct}) {
      Conservation c[2];
      for (int form = 0; form < 2; ++form) {
        const Kernels& k = kernels.get(g, form == 0 ? KernelForm::non_split : KernelForm::gain_only);
        const DistributionField f = mach155_field(k.mesh);
        const CollisionOperator op = engine == Engine::fast ? CollisionOperator(k.mesh, k.spectral)
                                                            : CollisionOperator(k.mesh, k.real);
        c[form] = conservation_of(op.evaluate(f, true), f);
      }
      const double mass_ratio = std::abs(c[1].mass) / std::max(std::abs(c[0].mass), 1e-300);
      const double temp_ratio = std::abs(c[1].temperature) / std::max(std::abs(c[0].temperature), 1e-300);
      note("M=%2d %-6s  mass: non-split %.2e split %.2e (x%.1e)  temperature: non-split %.2e split %.2e (x%.2g)", m,
           to_string(engine), std::abs(c[0].mass), std::abs(c[1].mass), mass_ratio, std::abs(c[0].temperature),
           std::abs(c[1].temperature), temp_ratio);
      mass_ok = mass_ok && mass_ratio >= 100.0;
      temp_ok = temp_ok && temp_ratio >= 100.0;
    }
    if (m == 9) kernels.clear();
  }
  char buf[200];
  std::snprintf(buf, sizeof buf, "split vs non-split conservation gap >= 100x, both engines, M = 9, 15: mass %s, temperature %s",
                mass_ok ? "holds" : "fails", temp_ok ? "holds" : "fails");
  verdict(5, mass_ok && temp_ok, buf);
}

void complexity()
{
  BenchOptions o;
  o.cells = {5, 9, 15};
  o.grid = preset_scenario("mach155").grid;
  o.components = preset_scenario("mach155").components;
  o.repeat = 5;
  o.direct_repeat = 1;
  const auto rows = run_bench(o);
  std::vector<double> m, tf, td;
  for (const BenchRow& r : rows) {
    note("M=%2d  fast %.4e s  direct %.4e s", r.cells, r.fast_seconds, r.direct_seconds);
    m.push_back(r.cells);
    tf.push_back(r.fast_seconds);
    td.push_back(r.direct_seconds);
  }
  const double ef = fitted_exponent(m, tf), ed = fitted_exponent(m, td);
  const double speedup = td.back() / tf.back();
  note("pair exponents fast %.2f %.2f  direct %.2f %.2f", pair_exponent(m[0], tf[0], m[1], tf[1]),
       pair_exponent(m[1], tf[1], m[2], tf[2]), pair_exponent(m[0], td[0], m[1], td[1]),
       pair_exponent(m[1], td[1], m[2], td[2]));
  char buf[200];
  std::snprintf(buf, sizeof buf,
                "cost scaling: fast exponent %.2f in [5.5, 7.0], direct %.2f >= 7.5, speedup at M=15 %.1f >= 5", ef, ed,
                speedup);
  verdict(6, ef >= 5.5 && ef <= 7.0 && ed >= 7.5 && speedup >= 5.0, buf);
}

void relaxation()
{
  const Kernels& k = kernels.get(mach155_grid(15), KernelForm::non_split);
  const CollisionOperator op(k.mesh, k.spectral);
  RelaxationConfig c;
  c.dt = 0.01;
  c.t_final = 2.0;
  c.scheme = TimeScheme::rk4;
  c.decompose = true;
  c.record_every = 10;
  const auto t0 = std::chrono::steady_clock::now();
  const RelaxationResult r = integrate(mach155_field(k.mesh), c, op);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  double mass = 0.0, temp = 0.0;
  for (const MomentRecord& rec : r.history.records) {
    mass = std::max(mass, std::abs(rec.drift_mass));
    temp = std::max(temp, std::abs(rec.drift_temperature));
  }
  const MomentRecord& first = r.history.records.front();
  const MomentRecord& last = r.history.records.back();
  const Vec3 t = last.moments.directional_temperatures;
  const double spread = (std::max({t[0], t[1], t[2]}) - std::min({t[0], t[1], t[2]})) / last.moments.temperature;
  const Vec3 t_init = first.moments.directional_temperatures;
  note("initial T_xyz %.5f %.5f %.5f", t_init[0], t_init[1], t_init[2]);
  note("t=%.2f T_xyz %.5f %.5f %.5f  (%zu records, %.0f s, mean free time %.4f)", last.time, t[0], t[1], t[2],
       r.history.records.size(), secs, r.history.mean_free_time);
  kernels.clear();
  char buf[200];
  std::snprintf(buf, sizeof buf,
                "relaxation M=15: anisotropy %.2e (< 2e-2), mass drift %.1e (<= 1e-3), temperature drift %.1e (<= 1e-2)",
                spread, mass, temp);
  verdict(7, spread < 0.02 && mass <= 1e-3 && temp <= 1e-2, buf);
}

void engine_trajectories()
{
  const Kernels& k = kernels.get(mach155_grid(9), KernelForm::non_split);
  RelaxationConfig c;
  c.dt = 0.02;
  c.t_final = 1.0;
  c.record_every = 5;
  const DistributionField f0 = mach155_field(k.mesh);
  const RelaxationResult a = integrate(f0, c, CollisionOperator(k.mesh, k.spectral));
  const RelaxationResult b = integrate(f0, c, CollisionOperator(k.mesh, k.real));
  double worst = 0.0;
  bool aligned = a.history.records.size() == b.history.records.size();
  for (std::size_t n = 0; aligned && n < a.history.records.size(); ++n) {
    const MomentRecord& x = a.history.records[n];
    const MomentRecord& y = b.history.records[n];
    aligned = x.step == y.step;
    worst = std::max(worst, std::abs(x.moments.density - y.moments.density) / std::abs(y.moments.density));
    const Vec3 ux = x.moments.bulk_velocity(), uy = y.moments.bulk_velocity();
    worst = std::max(worst, norm(ux - uy) / norm(uy));
    for (int axis = 0; axis < 2; ++axis) {
      worst = std::max(worst, std::abs(x.directional[axis][0] - y.directional[axis][0]) / std::abs(y.directional[axis][0]));
    }
  }
  note("%zu records per engine, max relative difference %.2e", a.history.records.size(), worst);
  kernels.clear();
  char buf[160];
  std::snprintf(buf, sizeof buf, "fast and direct trajectories at M=9 agree: max rel %.2e (<= 1e-2)", worst);
  verdict(8, aligned && worst <= 1e-2, buf);
}

}  // namespace

int main(int argc, char** argv)
{
  std::set<int> only;
  for (int k = 1; k < argc; ++k) only.insert(std::atoi(argv[k]));
  auto want = [&](int id) { return only.empty() || only.count(id) > 0; };

  const std::vector<std::pair<int, void (*)()>> steps{
      {1, frequency_convolution_1d}, {2, fast_equals_direct_3d}, {3, collision_invariants},
      {4, maxwellian_near_null},     {5, split_gap},              {6, complexity},
      {7, relaxation},               {8, engine_trajectories},
  };
  for (const auto& [id, run] : steps) {
    if (!want(id)) continue;
    try {
      run();
    } catch (const std::exception& e) {
      verdict(id, false, std::string("threw: ") + e.what());
    }
  }
  return failures;
}
