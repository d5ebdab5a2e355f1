// Command-line driver: kernel precomputation, operator evaluation, relaxation
// runs and engine benchmarks.

#include <CLI11.hpp>
#include <json.hpp>
#include <omp.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <sstream>

#include "dgboltz/bench.hpp"
#include "dgboltz/config.hpp"
#include "dgboltz/convolution.hpp"
#include "dgboltz/solver.hpp"

namespace fs = std::filesystem;
using namespace dgboltz;
using json = nlohmann::json;

namespace {

struct Common
{
  std::string config_path;
  int threads = 0;
  std::uint64_t seed = 12345;
  std::string out_dir;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0)
{
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

RunConfig load(const Common& c)
{
  if (c.config_path.empty()) throw ConfigError("--config is required");
  RunConfig cfg = load_config(c.config_path);
  if (!c.out_dir.empty()) cfg.output_directory = c.out_dir;
  return cfg;
}

fs::path ensure_out(const RunConfig& cfg)
{
  const fs::path dir(cfg.output_directory);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
  return dir;
}

bool wants(const RunConfig& cfg, const std::string& format)
{
  return std::find(cfg.formats.begin(), cfg.formats.end(), format) != cfg.formats.end();
}

KernelTensor build_kernel(const RunConfig& cfg, const VelocityMesh& mesh, KernelForm form)
{
  return precompute_kernel(mesh, cfg.model, sphere_quadrature(cfg.n_theta, cfg.n_epsilon),
                           cfg.effective_truncation_radius(), form, cfg.memory_cap);
}

json grid_json(const GridSpec& g)
{
  return {{"domain_min", {g.domain_min[0], g.domain_min[1], g.domain_min[2]}},
          {"domain_max", {g.domain_max[0], g.domain_max[1], g.domain_max[2]}},
          {"cells_per_dim", g.cells_per_dim},
          {"nodes_per_dim", {g.nodes_per_dim[0], g.nodes_per_dim[1], g.nodes_per_dim[2]}},
          {"fingerprint", g.fingerprint()}};
}

void write_json(const json& j, const fs::path& path)
{
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << j.dump(2) << "\n";
  if (!out) throw IoError("write failed for " + path.string());
}

// ---------------------------------------------------------------------------

int cmd_precompute(const Common& common, const std::string& output, bool spectral)
{
  const RunConfig cfg = load(common);
  const fs::path dir = ensure_out(cfg);
  auto mesh = std::make_shared<const VelocityMesh>(cfg.grid);

  const auto t0 = Clock::now();
  const KernelTensor kernel = build_kernel(cfg, *mesh, cfg.kernel_form());
  const double t_kernel = seconds_since(t0);

  const fs::path path = output.empty() ? dir / "kernel.bgka" : fs::path(output);
  save_kernel(kernel, path);

  std::size_t nonzero = 0;
  for (double x : kernel.values) nonzero += x != 0.0;
  std::printf("kernel form       %s\n", to_string(kernel.form));
  std::printf("slabs             %zu\n", kernel.num_slabs());
  std::printf("entries per slab  %zu\n", kernel.slab_size());
  std::printf("entries total     %zu\n", kernel.values.size());
  std::printf("nonzero fraction  %.6f\n", static_cast<double>(nonzero) / static_cast<double>(kernel.values.size()));
  std::printf("truncation R      %.6g\n", kernel.truncation_radius);
  std::printf("wall time         %.3f s\n", t_kernel);
  std::printf("wrote             %s\n", path.string().c_str());

  if (spectral) {
    const auto t1 = Clock::now();
    const SpectralKernel sk = spectral_transform_kernel(kernel, cfg.memory_cap);
    fs::path spath = path;
    spath.replace_extension(".spectral.bgka");
    save_spectral_kernel(sk, spath);
    std::printf("spectral time     %.3f s\n", seconds_since(t1));
    std::printf("wrote             %s\n", spath.string().c_str());
  }
  return 0;
}

// ---------------------------------------------------------------------------

struct ModeSpec
{
  OperatorForm form;
  Engine engine;
};

ModeSpec parse_mode(const std::string& name)
{
  const auto dash = name.rfind('-');
  if (dash == std::string::npos) throw ConfigError("unknown mode '" + name + "'");
  return {parse_operator_form(name.substr(0, dash)), parse_engine(name.substr(dash + 1))};
}

void write_slice(const CollisionOutput& out, const fs::path& path)
{
  const VelocityMesh& mesh = *out.mesh;
  const DistributionField rate = out.nodal_rate();
  const int cw = mesh.generating_cell().w;
  std::FILE* f = std::fopen(path.string().c_str(), "w");
  if (!f) throw IoError("cannot open " + path.string() + " for writing");
  std::fputs("u,v,w,I,rate\n", f);
  for (std::size_t j = 0; j < mesh.num_cells(); ++j) {
    if (mesh.cell_unflat(j).w != cw) continue;
    for (int i = 0; i < mesh.nodes_per_cell(); ++i) {
      const Vec3& v = mesh.node(i, j);
      std::fprintf(f, "%.16e,%.16e,%.16e,%.16e,%.16e\n", v[0], v[1], v[2], out.values[i * mesh.num_cells() + j],
                   rate.at(i, j));
    }
  }
  std::fclose(f);
}

int cmd_evaluate(const Common& common, const std::vector<std::string>& mode_names, const std::string& field_path,
                 const std::string& kernel_path, const std::string& gain_kernel_path, bool decompose, bool random)
{
  const RunConfig cfg = load(common);
  std::vector<ModeSpec> modes;
  for (const auto& m : mode_names) modes.push_back(parse_mode(m));
  const fs::path dir = ensure_out(cfg);

  MeshPtr mesh;
  std::optional<DistributionField> field;
  if (!field_path.empty()) {
    field = load_field(field_path);
    mesh = field->mesh_ptr();
    if (!(mesh->spec() == cfg.grid)) throw IncompatibleError("field grid differs from the configured grid");
  } else {
    mesh = std::make_shared<const VelocityMesh>(cfg.grid);
    field = sample_maxwellian_sum(mesh, cfg.initial_components());
  }
  if (random) {
    std::mt19937_64 rng(common.seed);
    std::uniform_real_distribution<double> u(-0.1, 0.1);
    for (double& x : field->values()) x *= 1.0 + u(rng);
  }
  const MomentSet m0 = moments(*field);

  std::map<OperatorForm, std::shared_ptr<const KernelTensor>> real;
  std::map<OperatorForm, std::shared_ptr<const SpectralKernel>> spectral;
  auto real_kernel = [&](OperatorForm form) {
    auto& k = real[form];
    if (!k) {
      const std::string& path = form == OperatorForm::non_split ? kernel_path : gain_kernel_path;
      const KernelForm kf = form == OperatorForm::non_split ? KernelForm::non_split : KernelForm::gain_only;
      if (!path.empty()) {
        k = std::make_shared<const KernelTensor>(load_kernel(path, cfg.grid));
        if (k->form != kf) throw IncompatibleError("kernel file " + path + " holds the wrong kernel form");
      } else {
        k = std::make_shared<const KernelTensor>(build_kernel(cfg, *mesh, kf));
      }
    }
    return k;
  };

  json report;
  report["grid"] = grid_json(cfg.grid);
  report["decompose"] = decompose;
  std::vector<std::pair<std::string, CollisionOutput>> results;

  std::printf("%-18s %14s %14s %14s %14s %14s %10s\n", "mode", "mass", "momentum_x", "energy", "temperature",
              "max|I|", "seconds");
  for (std::size_t k = 0; k < modes.size(); ++k) {
    const ModeSpec& ms = modes[k];
    std::unique_ptr<CollisionOperator> op;
    if (ms.engine == Engine::direct) {
      op = std::make_unique<CollisionOperator>(mesh, real_kernel(ms.form));
    } else {
      auto& sk = spectral[ms.form];
      if (!sk) sk = std::make_shared<const SpectralKernel>(spectral_transform_kernel(*real_kernel(ms.form), cfg.memory_cap));
      op = std::make_unique<CollisionOperator>(mesh, sk);
    }
    const auto t0 = Clock::now();
    CollisionOutput out = op->evaluate(*field, decompose);
    const double secs = seconds_since(t0);

    const RawMoments r = raw_moments(*mesh, out.nodal_rate().values());
    const Vec3 u = m0.bulk_velocity();
    const double n = m0.density;
    const double temp = 2.0 / (3.0 * n) * (r.energy - 2.0 * dot(u, r.momentum) + dot(u, u) * r.mass)
                        - m0.temperature * r.mass / n;
    std::printf("%-18s %14.6e %14.6e %14.6e %14.6e %14.6e %10.3f\n", mode_names[k].c_str(), r.mass, r.momentum[0],
                r.energy, temp, out.max_abs(), secs);
    report["modes"][mode_names[k]] = {{"mass", r.mass},
                                      {"momentum", {r.momentum[0], r.momentum[1], r.momentum[2]}},
                                      {"energy", r.energy},
                                      {"temperature", temp},
                                      {"max_abs", out.max_abs()},
                                      {"imaginary_residue", out.imaginary_residue},
                                      {"seconds", secs}};
    if (wants(cfg, "csv")) write_slice(out, dir / ("slice_" + mode_names[k] + ".csv"));
    results.emplace_back(mode_names[k], std::move(out));
  }

  if (results.size() > 1) std::printf("\n%-38s %14s %14s\n", "pair", "L1", "Linf");
  for (std::size_t a = 0; a < results.size(); ++a) {
    for (std::size_t b = a + 1; b < results.size(); ++b) {
      double l1 = 0.0, linf = 0.0;
      const auto& x = results[a].second.values;
      const auto& y = results[b].second.values;
      for (std::size_t k = 0; k < x.size(); ++k) {
        const double d = std::abs(x[k] - y[k]);
        l1 += d;
        linf = std::max(linf, d);
      }
      const std::string name = results[a].first + " vs " + results[b].first;
      std::printf("%-38s %14.6e %14.6e\n", name.c_str(), l1, linf);
      report["differences"][name] = {{"l1", l1}, {"linf", linf}};
    }
  }
  write_json(report, dir / "evaluate.json");
  return 0;
}

// ---------------------------------------------------------------------------

int cmd_relax(const Common& common)
{
  const RunConfig cfg = load(common);
  const fs::path dir = ensure_out(cfg);
  auto mesh = std::make_shared<const VelocityMesh>(cfg.grid);
  const DistributionField f0 = sample_maxwellian_sum(mesh, cfg.initial_components());

  const auto t0 = Clock::now();
  auto kernel = std::make_shared<const KernelTensor>(build_kernel(cfg, *mesh, cfg.kernel_form()));
  std::unique_ptr<CollisionOperator> op;
  if (cfg.engine == Engine::direct) {
    op = std::make_unique<CollisionOperator>(mesh, kernel);
  } else {
    auto sk = std::make_shared<const SpectralKernel>(spectral_transform_kernel(*kernel, cfg.memory_cap));
    kernel.reset();
    op = std::make_unique<CollisionOperator>(mesh, sk);
  }
  const double t_setup = seconds_since(t0);

  json meta;
  meta["grid"] = grid_json(cfg.grid);
  meta["scenario"] = cfg.scenario;
  meta["dt"] = cfg.relax.dt;
  meta["t_final"] = cfg.relax.t_final;
  meta["scheme"] = to_string(cfg.relax.scheme);
  meta["engine"] = to_string(cfg.engine);
  meta["form"] = to_string(cfg.form);
  meta["decompose"] = cfg.relax.decompose;
  meta["moment_correction"] = cfg.relax.moment_correction;
  meta["kernel_fingerprint"] = op->kernel_fingerprint();
  meta["truncation_radius"] = cfg.effective_truncation_radius();
  meta["setup_seconds"] = t_setup;

  try {
    const auto t1 = Clock::now();
    const RelaxationResult res = integrate(f0, cfg.relax, *op);
    meta["run_seconds"] = seconds_since(t1);
    meta["mean_free_time"] = res.history.mean_free_time;
    meta["steps"] = cfg.relax.num_steps();
    meta["warnings"] = res.history.warnings;
    for (const auto& w : res.history.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());

    if (wants(cfg, "csv")) write_history_csv(res.history, dir / "history.csv");
    if (wants(cfg, "binary")) save_field(res.final_field, dir / "final_field.bgkf");
    write_json(meta, dir / "metadata.json");

    const MomentRecord& last = res.history.records.back();
    const Vec3& td = last.moments.directional_temperatures;
    std::printf("t = %.4f  n = %.8f  T = %.8f  T_xyz = (%.6f, %.6f, %.6f)\n", last.time, last.moments.density,
                last.moments.temperature, td[0], td[1], td[2]);
    std::printf("drift: mass %.3e  momentum %.3e  energy %.3e  temperature %.3e\n", last.drift_mass,
                last.drift_momentum, last.drift_energy, last.drift_temperature);
    std::printf("mean free time estimate %.4f\n", res.history.mean_free_time);
  } catch (const DivergenceError& e) {
    const fs::path snap = dir / "last_good.bgkf";
    if (e.last_good) save_field(*e.last_good, snap);
    meta["divergence_step"] = e.step;
    meta["last_good_snapshot"] = snap.string();
    write_json(meta, dir / "metadata.json");
    std::fprintf(stderr, "error: %s; last good state written to %s\n", e.what(), snap.string().c_str());
    return 3;
  }
  return 0;
}

// ---------------------------------------------------------------------------

int cmd_bench(const Common& common, const std::vector<int>& cells, int repeat, int direct_max)
{
  const RunConfig cfg = load(common);
  const fs::path dir = ensure_out(cfg);
  BenchOptions opt;
  opt.cells = cells;
  opt.grid = cfg.grid;
  opt.model = cfg.model;
  opt.n_theta = cfg.n_theta;
  opt.n_epsilon = cfg.n_epsilon;
  opt.components = cfg.initial_components();
  opt.repeat = repeat;
  opt.direct_max_cells = direct_max;
  opt.memory_cap = cfg.memory_cap;
  const std::vector<BenchRow> rows = run_bench(opt);

  std::FILE* csv = std::fopen((dir / "bench.csv").string().c_str(), "w");
  if (!csv) throw IoError("cannot open bench.csv for writing");
  std::fputs("M,fast_seconds,fast_exponent,direct_seconds,direct_exponent,speedup\n", csv);
  std::printf("%6s %14s %8s %14s %8s %10s\n", "M", "fast [s]", "alpha", "direct [s]", "alpha", "speedup");
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const BenchRow& r = rows[k];
    double af = std::nan(""), ad = std::nan("");
    if (k > 0) {
      af = pair_exponent(r.cells, r.fast_seconds, rows[k - 1].cells, rows[k - 1].fast_seconds);
      ad = pair_exponent(r.cells, r.direct_seconds, rows[k - 1].cells, rows[k - 1].direct_seconds);
    }
    const double speedup = r.direct_seconds / r.fast_seconds;
    std::printf("%6d %14.6e %8.2f %14.6e %8.2f %10.1f\n", r.cells, r.fast_seconds, af, r.direct_seconds, ad, speedup);
    std::fprintf(csv, "%d,%.16e,%.16e,%.16e,%.16e,%.16e\n", r.cells, r.fast_seconds, af, r.direct_seconds, ad,
                 speedup);
  }
  std::fclose(csv);

  std::vector<double> m, tf, md, td;
  for (const auto& r : rows) {
    m.push_back(r.cells);
    tf.push_back(r.fast_seconds);
    if (std::isfinite(r.direct_seconds)) {
      md.push_back(r.cells);
      td.push_back(r.direct_seconds);
    }
  }
  std::printf("fitted exponent: fast %.2f, direct %.2f\n", fitted_exponent(m, tf), fitted_exponent(md, td));
  return 0;
}

int exit_code_for(const std::exception& e)
{
  if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const SizingError*>(&e)
      || dynamic_cast<const IndexError*>(&e)) {
    return 2;
  }
  if (dynamic_cast<const NumericError*>(&e) || dynamic_cast<const DegenerateFieldError*>(&e)) return 3;
  if (dynamic_cast<const IoError*>(&e) || dynamic_cast<const FormatError*>(&e)
      || dynamic_cast<const IncompatibleError*>(&e)) {
    return 4;
  }
  return 1;
}

}  // namespace

int main(int argc, char** argv)
{
  CLI::App app{"Discontinuous-Galerkin Boltzmann collision operator toolkit"};
  app.require_subcommand(1);
  Common common;
  app.add_option("--config", common.config_path, "Run configuration (INI)");
  app.add_option("--threads", common.threads, "OpenMP threads (0 keeps the runtime default)")->check(CLI::NonNegativeNumber);
  app.add_option("--seed", common.seed, "Seed for randomized fields");
  app.add_option("--out", common.out_dir, "Output directory (overrides [output] directory)");

  auto* pre = app.add_subcommand("precompute-kernel", "Precompute and save the collision kernel");
  std::string pre_output;
  bool pre_spectral = false;
  pre->add_option("--output", pre_output, "Kernel file path (default <out>/kernel.bgka)");
  pre->add_flag("--spectral", pre_spectral, "Also write the transformed kernel");

  auto* ev = app.add_subcommand("evaluate", "Evaluate the collision operator in several modes");
  std::vector<std::string> modes{"non-split-fast", "non-split-direct", "split-fast", "split-direct"};
  std::string field_path, kernel_path, gain_path;
  bool decompose = false, random = false;
  ev->add_option("--modes", modes, "Modes: {non-split,split}-{fast,direct}")->delimiter(',');
  ev->add_option("--field", field_path, "Binary field snapshot (default: configured scenario)");
  ev->add_option("--kernel", kernel_path, "Non-split kernel file");
  ev->add_option("--gain-kernel", gain_path, "Gain-only kernel file");
  ev->add_flag("--decompose", decompose, "Use the macro-micro decomposition");
  ev->add_flag("--random", random, "Perturb the field by seeded +-10% noise");

  auto* rl = app.add_subcommand("relax", "Integrate the homogeneous relaxation problem");

  auto* bn = app.add_subcommand("bench", "Time both engines over several grid sizes");
  std::vector<int> cells{5, 9, 15};
  int repeat = 3, direct_max = 15;
  bn->add_option("--cells", cells, "Cells per dimension, comma separated")->delimiter(',');
  bn->add_option("--repeat", repeat, "Timing repetitions (best is kept)");
  bn->add_option("--direct-max", direct_max, "Skip the direct engine above this size");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  if (common.threads > 0) omp_set_num_threads(common.threads);

  try {
    if (pre->parsed()) return cmd_precompute(common, pre_output, pre_spectral);
    if (ev->parsed()) return cmd_evaluate(common, modes, field_path, kernel_path, gain_path, decompose, random);
    if (rl->parsed()) return cmd_relax(common);
    if (bn->parsed()) return cmd_bench(common, cells, repeat, direct_max);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return exit_code_for(e);
  }
  return 0;
}
