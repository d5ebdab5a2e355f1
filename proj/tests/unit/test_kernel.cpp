#include "doctest.h"

#include <array>
#include <cmath>
#include <filesystem>
#include <random>

#include "dgboltz/kernel.hpp"
#include "support.hpp"

using namespace dgboltz;
namespace fs = std::filesystem;

namespace {

struct InvariantSums
{
  double mass = 0.0;
  Vec3 momentum{};
  double energy = 0.0;
};

// sum over every basis function of the domain of A(vp, vpp; phi) psi(node)
InvariantSums invariant_sums(const VelocityMesh& mesh, const Vec3& vp, const Vec3& vpp,
                             const SphereQuadrature& quad)
{
  InvariantSums s;
  const InteractionModel model;
  for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
    const CellIndex j = mesh.cell_unflat(c);
    for (int i = 0; i < mesh.nodes_per_cell(); ++i) {
      const double a = kernel_entry(mesh, i, j, vp, vpp, model, quad, KernelForm::non_split);
      const Vec3 v = mesh.node(i, j);
      s.mass += a;
      s.momentum += a * v;
      s.energy += a * dot(v, v);
    }
  }
  return s;
}

}  // namespace

TEST_CASE("post-collision velocities")
{
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  const SphereQuadrature q = sphere_quadrature(4, 8);
  for (int t = 0; t < 50; ++t) {
    const Vec3 v{u(rng), u(rng), u(rng)}, v1{u(rng), u(rng), u(rng)};
    const Vec3 g = v - v1;
    const auto [a, b] = post_collision_velocities(v, v1, g * (1.0 / norm(g)));
    CHECK(norm(a - v) < 1e-13);
    CHECK(norm(b - v1) < 1e-13);
    for (const Vec3& w : q.directions) {
      const auto [p, p1] = post_collision_velocities(v, v1, w);
      CHECK(norm(p + p1 - v - v1) < 1e-13);
      CHECK(std::abs(dot(p, p) + dot(p1, p1) - dot(v, v) - dot(v1, v1)) < 1e-13);
    }
  }
}

TEST_CASE("sphere quadrature")
{
  const SphereQuadrature q = sphere_quadrature(8, 16);
  CHECK(q.size() == 128u);
  double one = 0.0, wz = 0.0, wz2 = 0.0, wx = 0.0;
  for (std::size_t k = 0; k < q.size(); ++k) {
    CHECK(std::abs(norm(q.directions[k]) - 1.0) < 1e-15);
    one += q.weights[k];
    wz += q.weights[k] * q.directions[k][2];
    wx += q.weights[k] * q.directions[k][0];
    wz2 += q.weights[k] * q.directions[k][2] * q.directions[k][2];
  }
  CHECK(std::abs(one - 4 * pi) < 1e-12);
  CHECK(std::abs(wz) < 1e-12);
  CHECK(std::abs(wx) < 1e-12);
  CHECK(std::abs(wz2 - 4 * pi / 3) < 1e-10);
  CHECK_THROWS_AS(sphere_quadrature(1, 16), ConfigError);
  CHECK_THROWS_AS(sphere_quadrature(8, 3), ConfigError);
}

TEST_CASE("interaction model validation")
{
  InteractionModel m;
  CHECK(m.sigma_t() == doctest::Approx(1.0).epsilon(1e-15));
  m.alpha = 1.5;
  CHECK_THROWS_AS(m.validate(), ConfigError);
  m = InteractionModel{};
  m.b0 = -1.0;
  CHECK_THROWS_AS(m.validate(), ConfigError);
}

TEST_CASE("kernel entries: trivial cases")
{
  auto mesh = testing::make_mesh(5, 1, 2.5);
  const InteractionModel model;
  const SphereQuadrature q = sphere_quadrature(8, 16);
  const CellIndex c = mesh->generating_cell();
  const Vec3 v = mesh->node(0, c);
  CHECK(kernel_entry(*mesh, 0, v, v, model, q, KernelForm::non_split) == 0.0);
  CHECK(kernel_entry(*mesh, 0, v, v, model, q, KernelForm::gain_only) == 0.0);

  // both velocities and their collision sphere far from the generating cell
  const Vec3 a = mesh->node(0, CellIndex{0, 0, 0}), b = mesh->node(0, CellIndex{0, 1, 0});
  CHECK(kernel_entry(*mesh, 0, a, b, model, q, KernelForm::non_split) == 0.0);

  // neighbours across a face: exactly half the sphere enters the cell
  const Vec3 n = mesh->node(0, CellIndex{c.u + 1, c.v, c.w});
  CHECK(std::abs(kernel_entry(*mesh, 0, v, n, model, q, KernelForm::non_split) + 0.5) < 1e-14);

  CHECK_THROWS_AS(kernel_entry(*mesh, 1, v, n, model, q, KernelForm::non_split), IndexError);
}

TEST_CASE("kernel entries agree with a refined sphere quadrature")
{
  GridSpec g;
  g.cells_per_dim = 5;
  g.domain_min = {-2.5, -2.5, -2.5};
  g.domain_max = {2.5, 2.5, 2.5};
  g.nodes_per_dim = {3, 3, 3};
  const VelocityMesh mesh(g);
  const InteractionModel model;
  const CellIndex c = mesh.generating_cell();

  // the collision sphere of two nodes on a cell axis stays inside the cell,
  // so the integrand is smooth and the base rule already resolves it
  const Vec3 vp = mesh.node(flatten_node_index(1, 2, 2, g) - 1, c);
  const Vec3 vpp = mesh.node(flatten_node_index(3, 2, 2, g) - 1, c);
  for (int i : {0, 4, 13, 22}) {
    for (KernelForm form : {KernelForm::non_split, KernelForm::gain_only}) {
      const double base = kernel_entry(mesh, i, vp, vpp, model, sphere_quadrature(8, 16), form);
      const double fine = kernel_entry(mesh, i, vp, vpp, model, sphere_quadrature(32, 64), form);
      CHECK(std::abs(base - fine) <= 5e-4 * std::abs(fine));
    }
  }

  // spheres cut by cell faces converge slowly; the error still falls with
  // each refinement against a much finer reference
  g.nodes_per_dim = {1, 1, 1};
  const VelocityMesh coarse(g);
  const Vec3 a = coarse.node(0, c), b = coarse.node(0, CellIndex{2, 4, 3});
  const double ref = kernel_entry(coarse, 0, a, b, model, sphere_quadrature(256, 512), KernelForm::non_split);
  const double e8 = std::abs(kernel_entry(coarse, 0, a, b, model, sphere_quadrature(8, 16), KernelForm::non_split) - ref);
  const double e32 = std::abs(kernel_entry(coarse, 0, a, b, model, sphere_quadrature(32, 64), KernelForm::non_split) - ref);
  CHECK(e32 < e8);
  CHECK(e32 < 2e-3 * std::abs(ref));
}

TEST_CASE("mass invariant of the untruncated non-split kernel")
{
  auto mesh = testing::make_mesh(3, 1, 1.5);
  const SphereQuadrature q = sphere_quadrature(8, 16);
  int interior = 0;
  for (std::size_t a = 0; a < mesh->num_cells(); ++a) {
    for (std::size_t b = 0; b < mesh->num_cells(); ++b) {
      const Vec3 vp = mesh->node(0, a), vpp = mesh->node(0, b);
      const Vec3 mid = 0.5 * (vp + vpp);
      const double r = 0.5 * norm(vp - vpp);
      bool inside = true;
      for (int d = 0; d < 3; ++d) inside = inside && mid[d] - r > -1.5 && mid[d] + r < 1.5;
      if (!inside) continue;
      ++interior;
      const InvariantSums s = invariant_sums(*mesh, vp, vpp, q);
      CHECK(std::abs(s.mass) <= 1e-10 * 4 * pi * norm(vp - vpp) + 1e-14);
    }
  }
  CHECK(interior > 27);
}

TEST_CASE("momentum and energy invariants hold for the symmetrised pair")
{
  const SphereQuadrature q = sphere_quadrature(16, 32);
  SUBCASE("momentum, two nodes per dimension")
  {
    auto mesh = testing::make_mesh(3, 2, 1.5);
    const CellIndex c = mesh->generating_cell();
    const Vec3 vp = mesh->node(0, c), vpp = mesh->node(7, CellIndex{c.u + 1, c.v, c.w});
    const InvariantSums s1 = invariant_sums(*mesh, vp, vpp, q), s2 = invariant_sums(*mesh, vpp, vp, q);
    const double scale = 4 * pi * norm(vp - vpp) * (norm(vp) + norm(vpp));
    CHECK(norm(s1.momentum + s2.momentum) <= 1e-6 * scale);
    CHECK(std::abs(s1.mass + s2.mass) <= 1e-10 * scale);
  }
  SUBCASE("energy, three nodes per dimension")
  {
    auto mesh = testing::make_mesh(3, 3, 1.5);
    const CellIndex c = mesh->generating_cell();
    const Vec3 vp = mesh->node(0, c), vpp = mesh->node(20, CellIndex{c.u, c.v + 1, c.w});
    const InvariantSums s1 = invariant_sums(*mesh, vp, vpp, q), s2 = invariant_sums(*mesh, vpp, vp, q);
    const double scale = 4 * pi * norm(vp - vpp) * (dot(vp, vp) + dot(vpp, vpp));
    CHECK(std::abs(s1.energy + s2.energy) <= 1e-6 * scale);
  }
}

TEST_CASE("entries are shift invariant")
{
  auto mesh = testing::make_mesh(5, 2, 2.5);
  const InteractionModel model;
  const SphereQuadrature q = sphere_quadrature(8, 16);
  const CellIndex c = mesh->generating_cell();
  const CellIndex j{c.u + 1, c.v - 1, c.w + 2};
  const Vec3 shift = mesh->cell_shift_vector(j);
  const Vec3 vp = mesh->node(3, CellIndex{3, 2, 4}), vpp = mesh->node(5, CellIndex{4, 1, 3});
  for (int i = 0; i < mesh->nodes_per_cell(); ++i) {
    const double direct = kernel_entry(*mesh, i, j, vp, vpp, model, q, KernelForm::non_split);
    const double shifted = kernel_entry(*mesh, i, vp - shift, vpp - shift, model, q, KernelForm::non_split);
    CHECK(std::abs(direct - shifted) < 1e-13);
  }
}

TEST_CASE("precomputed tensor")
{
  auto mesh = testing::make_mesh(3, 2, 1.5);
  const InteractionModel model;
  const SphereQuadrature q = sphere_quadrature(4, 8);
  const std::size_t n = mesh->num_cells();

  SUBCASE("entries carry node weights and respect the truncation radius")
  {
    const double r = 1.2;
    const KernelTensor k = precompute_kernel(*mesh, model, q, r, KernelForm::non_split);
    CHECK(k.values.size() == 512u * 729u);
    CHECK(k.num_slabs() == 512u);
    std::size_t nonzero = 0;
    for (int i = 0; i < 2; ++i)
      for (int ip = 0; ip < 8; ++ip)
        for (int ipp = 0; ipp < 8; ++ipp)
          for (std::size_t a = 0; a < n; ++a)
            for (std::size_t b = 0; b < n; ++b) {
              const double v = k.at(i, ip, ipp, a, b);
              CHECK(std::isfinite(v));
              const Vec3 vp = mesh->node(ip, a), vpp = mesh->node(ipp, b);
              if (norm(vp - vpp) > r) {
                CHECK(v == 0.0);
                continue;
              }
              const double e = kernel_entry(*mesh, i, vp, vpp, model, q, KernelForm::non_split) *
                               (mesh->quadrature_weight(ip) * mesh->quadrature_weight(ipp));
              CHECK(v == e);
              nonzero += v != 0.0;
            }
    CHECK(nonzero > 0u);
  }

  SUBCASE("vanishing truncation radius gives a zero tensor")
  {
    const KernelTensor k = precompute_kernel(*mesh, model, q, 1e-12, KernelForm::non_split);
    CHECK(testing::max_abs(k.values) == 0.0);
    CHECK_THROWS_AS(precompute_kernel(*mesh, model, q, 0.0, KernelForm::non_split), ConfigError);
    CHECK_THROWS_AS(precompute_kernel(*mesh, model, q, -1.0, KernelForm::non_split), ConfigError);
  }

  SUBCASE("gain tensor is symmetric under exchanging the colliding pair")
  {
    const KernelTensor k = precompute_kernel(*mesh, model, q, 1e9, KernelForm::gain_only);
    for (int i = 0; i < 8; ++i)
      for (int ip = 0; ip < 8; ++ip)
        for (int ipp = 0; ipp < 8; ++ipp)
          for (std::size_t a = 0; a < n; ++a)
            for (std::size_t b = 0; b < n; ++b) CHECK(k.at(i, ip, ipp, a, b) == k.at(i, ipp, ip, b, a));
  }

  SUBCASE("single-node gain tensor is nonnegative")
  {
    auto m1 = testing::make_mesh(5, 1, 2.5);
    const KernelTensor k = precompute_kernel(*m1, model, q, 1e9, KernelForm::gain_only);
    for (double v : k.values) CHECK(v >= 0.0);
  }

  SUBCASE("sizing refusal")
  {
    CHECK(kernel_bytes(mesh->spec()) == 512u * 729u * 8u);
    CHECK_THROWS_AS(precompute_kernel(*mesh, model, q, 1.0, KernelForm::non_split, 1000), SizingError);
    GridSpec huge = mesh->spec();
    huge.cells_per_dim = 40;
    huge.nodes_per_dim = {5, 5, 5};
    CHECK_THROWS_AS(precompute_kernel(VelocityMesh(huge), model, q, 1.0, KernelForm::non_split), SizingError);
  }
}

TEST_CASE("default truncation radius")
{
  GridSpec g;
  g.domain_min = {-1.0, -2.0, -3.0};
  g.domain_max = {1.0, 2.0, 3.0};
  CHECK(default_truncation_radius(g) == 1.0);
}

TEST_CASE("kernel files")
{
  const fs::path dir = fs::temp_directory_path() / "dgboltz_kernel_test";
  fs::create_directories(dir);
  auto mesh = testing::make_mesh(3, 1, 1.5);
  const KernelTensor k = precompute_kernel(*mesh, InteractionModel{}, sphere_quadrature(4, 8), 2.0,
                                           KernelForm::non_split);
  save_kernel(k, dir / "k.bgka");
  const KernelTensor back = load_kernel(dir / "k.bgka", mesh->spec());
  CHECK(back.values == k.values);
  CHECK(back.grid == k.grid);
  CHECK(back.form == k.form);
  CHECK(back.truncation_radius == k.truncation_radius);
  CHECK(back.n_theta == 4);

  GridSpec other = mesh->spec();
  other.cells_per_dim = 5;
  CHECK_THROWS_AS(load_kernel(dir / "k.bgka", other), IncompatibleError);

  fs::copy_file(dir / "k.bgka", dir / "cut.bgka", fs::copy_options::overwrite_existing);
  fs::resize_file(dir / "cut.bgka", fs::file_size(dir / "k.bgka") - 16);
  CHECK_THROWS_AS(load_kernel(dir / "cut.bgka"), FormatError);
  fs::resize_file(dir / "cut.bgka", 12);
  CHECK_THROWS_AS(load_kernel(dir / "cut.bgka"), FormatError);
  CHECK_THROWS_AS(load_kernel(dir / "absent.bgka"), IoError);
  fs::remove_all(dir);
}

TEST_CASE("collision frequency table")
{
  auto mesh = testing::make_mesh(3, 2, 1.5);
  InteractionModel model;
  model.b0 = 0.3;
  const CollisionFrequencyWeights w(mesh, model);
  const CellIndex off{1, -2, 0}, neg{-1, 2, 0};
  for (int i = 0; i < 8; ++i)
    for (int i2 = 0; i2 < 8; ++i2) CHECK(w.weight(i, i2, off) == doctest::Approx(w.weight(i2, i, neg)).epsilon(1e-14));

  const DistributionField h = testing::random_field(mesh, 5);
  const std::vector<double> nu = w.frequency(h.values());
  for (std::size_t c = 0; c < mesh->num_cells(); ++c) {
    for (int i = 0; i < 8; ++i) {
      double brute = 0.0;
      const Vec3 v = mesh->node(i, c);
      for (std::size_t c2 = 0; c2 < mesh->num_cells(); ++c2)
        for (int i2 = 0; i2 < 8; ++i2)
          brute += mesh->quadrature_weight(i2) * h.at(i2, c2) * model.sigma_t() * norm(v - mesh->node(i2, c2));
      CHECK(nu[h.index(i, c)] == doctest::Approx(brute).epsilon(1e-12));
    }
  }
}
