#include "dgboltz/solver.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace dgboltz {

const char* to_string(Engine e) { return e == Engine::direct ? "direct" : "fast"; }
const char* to_string(OperatorForm f) { return f == OperatorForm::non_split ? "non-split" : "split"; }
const char* to_string(TimeScheme s) { return s == TimeScheme::euler ? "euler" : "rk4"; }

Engine parse_engine(const std::string& s)
{
  if (s == "direct") return Engine::direct;
  if (s == "fast") return Engine::fast;
  throw ConfigError("unknown engine '" + s + "' (expected direct or fast)");
}

OperatorForm parse_operator_form(const std::string& s)
{
  if (s == "non-split" || s == "nonsplit") return OperatorForm::non_split;
  if (s == "split") return OperatorForm::split;
  throw ConfigError("unknown operator form '" + s + "' (expected non-split or split)");
}

TimeScheme parse_time_scheme(const std::string& s)
{
  if (s == "euler") return TimeScheme::euler;
  if (s == "rk4") return TimeScheme::rk4;
  throw ConfigError("unknown time scheme '" + s + "' (expected euler or rk4)");
}

namespace {

OperatorForm form_of(KernelForm k)
{
  return k == KernelForm::non_split ? OperatorForm::non_split : OperatorForm::split;
}

void check_mesh(const MeshPtr& mesh, const GridSpec& grid)
{
  if (!mesh) throw ConfigError("collision operator: null mesh");
  if (!(mesh->spec() == grid)) throw IncompatibleError("collision operator: kernel grid differs from mesh");
}

}  // namespace

CollisionOperator::CollisionOperator(MeshPtr mesh, std::shared_ptr<const KernelTensor> kernel, WrapMode wrap)
    : mesh_(std::move(mesh)), engine_(Engine::direct), form_(OperatorForm::non_split), wrap_(wrap),
      real_(std::move(kernel))
{
  if (!real_) throw ConfigError("collision operator: null kernel");
  check_mesh(mesh_, real_->grid);
  form_ = form_of(real_->form);
  model_ = real_->model;
  if (form_ == OperatorForm::split) frequency_ = std::make_unique<CollisionFrequencyWeights>(mesh_, model_);
}

CollisionOperator::CollisionOperator(MeshPtr mesh, std::shared_ptr<const SpectralKernel> kernel)
    : mesh_(std::move(mesh)), engine_(Engine::fast), form_(OperatorForm::non_split)
{
  if (!kernel) throw ConfigError("collision operator: null spectral kernel");
  check_mesh(mesh_, kernel->grid);
  form_ = form_of(kernel->form);
  model_ = kernel->model;
  fast_ = std::make_unique<FastEngine>(std::move(kernel));
  if (form_ == OperatorForm::split) frequency_ = std::make_unique<CollisionFrequencyWeights>(mesh_, model_);
}

CollisionOutput CollisionOperator::bilinear(const DistributionField& g, const DistributionField& h) const
{
  CollisionOutput out = engine_ == Engine::direct ? direct_bilinear(g, h, *real_, wrap_) : fast_->bilinear(g, h);
  if (form_ == OperatorForm::split) {
    const std::vector<double> nu = frequency_->frequency(h.values());
    const std::size_t cells = mesh_->num_cells();
    for (int i = 0; i < mesh_->nodes_per_cell(); ++i) {
      const double w = mesh_->quadrature_weight(i);
      for (std::size_t j = 0; j < cells; ++j) {
        const std::size_t k = i * cells + j;
        out.values[k] -= w * g.values()[k] * nu[k];
      }
    }
  }
  return out;
}

CollisionOutput CollisionOperator::evaluate(const DistributionField& f, bool decompose) const
{
  if (!decompose) return bilinear(f, f);
  const Decomposition d = macro_micro_decompose(f);
  CollisionOutput out = bilinear(d.maxwellian, d.deviation);
  const CollisionOutput rest = bilinear(d.deviation, f);
  for (std::size_t k = 0; k < out.values.size(); ++k) out.values[k] += rest.values[k];
  out.imaginary_residue = std::max(out.imaginary_residue, rest.imaginary_residue);
  return out;
}

DistributionField collision_rhs(const DistributionField& f, const CollisionOperator& op, bool decompose)
{
  return op.evaluate(f, decompose).nodal_rate();
}

std::vector<double> collision_frequency(const DistributionField& h, const InteractionModel& model)
{
  const CollisionFrequencyWeights weights(h.mesh_ptr(), model);
  return weights.frequency(h.values());
}

// ---------------------------------------------------------------------------

void RelaxationConfig::validate() const
{
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("run: dt must be positive");
  if (!(t_final >= 0.0) || !std::isfinite(t_final)) throw ConfigError("run: t_final must be >= 0");
  if (t_final > 0.0 && t_final < dt * (1.0 - 1e-12)) throw ConfigError("run: t_final must be 0 or >= dt");
  if (record_every < 1) throw ConfigError("run: record_every must be >= 1");
}

std::size_t RelaxationConfig::num_steps() const
{
  if (t_final <= 0.0) return 0;
  return static_cast<std::size_t>(std::ceil(t_final / dt - 1e-9));
}

double mean_free_time(const MomentSet& m, const InteractionModel& model)
{
  const double mean_g = 2.0 * std::sqrt(2.0 * m.temperature / pi);
  return 1.0 / (m.density * model.sigma_t() * std::pow(mean_g, model.alpha));
}

MomentRecord record_moments(const DistributionField& f, double time, std::size_t step, const MomentSet& initial)
{
  MomentRecord r;
  r.time = time;
  r.step = step;
  r.moments = moments(f);
  for (int a = 0; a < 2; ++a) {
    for (int p = 0; p < 4; ++p) r.directional[a][p] = directional_moment(f, a + 1, directional_powers[p], true);
  }
  r.drift_mass = (r.moments.density - initial.density) / initial.density;
  r.drift_momentum = norm(r.moments.momentum - initial.momentum) / (initial.density * std::sqrt(initial.temperature));
  r.drift_energy = (r.moments.energy - initial.energy) / initial.energy;
  r.drift_temperature = (r.moments.temperature - initial.temperature) / initial.temperature;
  return r;
}

void correct_moments(DistributionField& f, const RawMoments& target)
{
  const VelocityMesh& mesh = f.mesh();
  const RawMoments now = raw_moments(f);
  Eigen::Matrix<double, 5, 1> rhs;
  rhs << target.mass - now.mass, target.momentum[0] - now.momentum[0], target.momentum[1] - now.momentum[1],
      target.momentum[2] - now.momentum[2], target.energy - now.energy;

  auto psi = [](const Vec3& v) {
    Eigen::Matrix<double, 5, 1> p;
    p << 1.0, v[0], v[1], v[2], dot(v, v);
    return p;
  };
  Eigen::Matrix<double, 5, 5> gram = Eigen::Matrix<double, 5, 5>::Zero();
  const std::size_t cells = mesh.num_cells();
  for (int i = 0; i < mesh.nodes_per_cell(); ++i) {
    const double w = mesh.quadrature_weight(i);
    for (std::size_t j = 0; j < cells; ++j) {
      const auto p = psi(mesh.node(i, j));
      gram.noalias() += w * p * p.transpose();
    }
  }
  const Eigen::Matrix<double, 5, 1> lambda = gram.ldlt().solve(rhs);
  for (int i = 0; i < mesh.nodes_per_cell(); ++i) {
    for (std::size_t j = 0; j < cells; ++j) f.at(i, j) += lambda.dot(psi(mesh.node(i, j)));
  }
}

RelaxationResult integrate(const DistributionField& field0, const RelaxationConfig& config, const CollisionOperator& op)
{
  config.validate();
  const MomentSet m0 = moments(field0);
  const RawMoments raw0 = raw_moments(field0);

  RelaxationResult result{MomentHistory{}, field0};
  MomentHistory& hist = result.history;
  hist.mean_free_time = mean_free_time(m0, op.model());

  const std::vector<double> nu = collision_frequency(field0, op.model());
  const double nu_max = *std::max_element(nu.begin(), nu.end());
  if (config.dt * nu_max >= 1.0) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "dt * max collision frequency = %.3g >= 1; the run may be unstable",
                  config.dt * nu_max);
    hist.warnings.emplace_back(buf);
  }

  hist.records.push_back(record_moments(field0, 0.0, 0, m0));
  const std::size_t steps = config.num_steps();
  if (steps == 0) return result;

  DistributionField& f = result.final_field;
  auto rate = [&](const DistributionField& x) { return collision_rhs(x, op, config.decompose); };
  double t = 0.0;

  for (std::size_t step = 1; step <= steps; ++step) {
    const double h = step == steps ? config.t_final - t : config.dt;
    try {
      DistributionField next(f);
      if (config.scheme == TimeScheme::euler) {
        next.axpy(h, rate(f));
      } else {
        const DistributionField k1 = rate(f);
        const DistributionField k2 = rate(DistributionField(f).axpy(0.5 * h, k1));
        const DistributionField k3 = rate(DistributionField(f).axpy(0.5 * h, k2));
        const DistributionField k4 = rate(DistributionField(f).axpy(h, k3));
        next.axpy(h / 6.0, k1).axpy(h / 3.0, k2).axpy(h / 3.0, k3).axpy(h / 6.0, k4);
      }
      if (!next.all_finite()) throw NumericError("non-finite state");
      if (config.moment_correction) correct_moments(next, raw0);
      t = step == steps ? config.t_final : static_cast<double>(step) * config.dt;
      // a recorded state must have positive density and temperature
      if (step % static_cast<std::size_t>(config.record_every) == 0 || step == steps) {
        hist.records.push_back(record_moments(next, t, step, m0));
      }
      f = std::move(next);
    } catch (const Error& e) {
      if (!dynamic_cast<const NumericError*>(&e) && !dynamic_cast<const DegenerateFieldError*>(&e)) throw;
      throw DivergenceError("divergence at step " + std::to_string(step) + ": " + e.what(), step,
                            std::make_shared<DistributionField>(f));
    }
  }
  return result;
}

void write_history_csv(const MomentHistory& history, const std::filesystem::path& path)
{
  std::FILE* out = std::fopen(path.string().c_str(), "w");
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  std::fputs("t,density,momentum_x,momentum_y,momentum_z,temperature,T_x,T_y,T_z", out);
  for (int a = 1; a <= 2; ++a) {
    for (int p : directional_powers) std::fprintf(out, ",m%d_%d", a, p);
  }
  std::fputs(",drift_mass,drift_momentum,drift_energy,drift_temperature\n", out);
  for (const auto& r : history.records) {
    const MomentSet& m = r.moments;
    std::fprintf(out, "%.16e,%.16e,%.16e,%.16e,%.16e,%.16e,%.16e,%.16e,%.16e", r.time, m.density, m.momentum[0],
                 m.momentum[1], m.momentum[2], m.temperature, m.directional_temperatures[0],
                 m.directional_temperatures[1], m.directional_temperatures[2]);
    for (const auto& axis : r.directional) {
      for (double v : axis) std::fprintf(out, ",%.16e", v);
    }
    std::fprintf(out, ",%.16e,%.16e,%.16e,%.16e\n", r.drift_mass, r.drift_momentum, r.drift_energy,
                 r.drift_temperature);
  }
  const bool ok = std::ferror(out) == 0;
  std::fclose(out);
  if (!ok) throw IoError("write failed for " + path.string());
}

// ---------------------------------------------------------------------------

DistributionField ScenarioPreset::build(MeshPtr mesh) const
{
  return sample_maxwellian_sum(std::move(mesh), components);
}

double preset_half_width(const std::vector<MaxwellianParams>& components)
{
  double half = 3.0;
  for (const auto& p : components) {
    for (int d = 0; d < 3; ++d) half = std::max(half, std::abs(p.bulk_velocity[d]) + 4.0 * std::sqrt(p.temperature));
  }
  return half;
}

ScenarioPreset preset_scenario(const std::string& name)
{
  ScenarioPreset s;
  s.name = name;
  int cells = 0;
  if (name == "mach3") {
    s.components = {{1.0007, {1.2247, 0.0, 0.0}, 0.2}, {2.9992, {0.4082, 0.0, 0.0}, 0.7333}};
    cells = 33;
  } else if (name == "mach155") {
    s.components = {{1.6094, {0.7750, 0.0, 0.0}, 0.3}, {2.8628, {0.4357, 0.0, 0.0}, 0.464}};
    cells = 15;
  } else {
    throw ConfigError("unknown scenario '" + name + "' (expected mach3 or mach155)");
  }
  const double h = preset_half_width(s.components);
  s.grid.domain_min = {-h, -h, -h};
  s.grid.domain_max = {h, h, h};
  s.grid.cells_per_dim = cells;
  s.grid.nodes_per_dim = {1, 1, 1};
  return s;
}

}  // namespace dgboltz
