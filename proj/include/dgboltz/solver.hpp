#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "dgboltz/convolution.hpp"
#include "dgboltz/distribution.hpp"
#include "dgboltz/kernel.hpp"

namespace dgboltz {

enum class Engine
{
  direct,
  fast,
};

enum class OperatorForm
{
  non_split,  // one kernel carrying phi(v') - phi(v)
  split,      // gain-only kernel minus f nu[f]
};

enum class TimeScheme
{
  euler,
  rk4,
};

const char* to_string(Engine e);
const char* to_string(OperatorForm f);
const char* to_string(TimeScheme s);
Engine parse_engine(const std::string& s);
OperatorForm parse_operator_form(const std::string& s);
TimeScheme parse_time_scheme(const std::string& s);

/// Evaluates I_{i;j} for a field. The kernel's form selects the operator form:
/// a non-split kernel gives the non-split operator, a gain-only kernel gives
/// the split operator with the loss term g_i nu[h] computed over the whole domain.
class CollisionOperator
{
 public:
  /// Direct engine on a real kernel tensor.
  CollisionOperator(MeshPtr mesh, std::shared_ptr<const KernelTensor> kernel, WrapMode wrap = WrapMode::circular);
  /// Fast engine on a spectral kernel.
  CollisionOperator(MeshPtr mesh, std::shared_ptr<const SpectralKernel> kernel);

  Engine engine() const { return engine_; }
  OperatorForm form() const { return form_; }
  const InteractionModel& model() const { return model_; }
  const VelocityMesh& mesh() const { return *mesh_; }
  std::uint64_t kernel_fingerprint() const { return mesh_->spec().fingerprint(); }

  /// B(g, h); not symmetric for the non-split form.
  CollisionOutput bilinear(const DistributionField& g, const DistributionField& h) const;

  /// B(f, f), or B(f_M, df) + B(df, f) with f = f_M + df when decomposing,
  /// which never forms the equilibrium product B(f_M, f_M).
  CollisionOutput evaluate(const DistributionField& f, bool decompose) const;

 private:
  MeshPtr mesh_;
  Engine engine_;
  OperatorForm form_;
  InteractionModel model_;
  WrapMode wrap_ = WrapMode::circular;
  std::shared_ptr<const KernelTensor> real_;
  std::unique_ptr<FastEngine> fast_;
  std::unique_ptr<CollisionFrequencyWeights> frequency_;
};

/// (8 / (omega_i dv)) I_{i;j}
DistributionField collision_rhs(const DistributionField& f, const CollisionOperator& op, bool decompose);

/// Collision frequency nu[h] at every node, full-domain quadrature.
std::vector<double> collision_frequency(const DistributionField& h, const InteractionModel& model);

struct RelaxationConfig
{
  double dt = 0.01;
  double t_final = 1.0;
  TimeScheme scheme = TimeScheme::rk4;
  int record_every = 1;
  bool decompose = true;
  /// Project each new state onto the initial mass, momentum and energy.
  bool moment_correction = false;

  void validate() const;
  /// ceil(t_final / dt) up to roundoff; the last step is shortened to land on t_final.
  std::size_t num_steps() const;

  friend bool operator==(const RelaxationConfig&, const RelaxationConfig&) = default;
};

inline constexpr int directional_powers[4] = {2, 3, 4, 6};

struct MomentRecord
{
  double time = 0.0;
  std::size_t step = 0;
  MomentSet moments;
  /// Centred directional moments for axes 1 and 2 and powers 2, 3, 4, 6.
  std::array<std::array<double, 4>, 2> directional{};
  double drift_mass = 0.0;
  double drift_momentum = 0.0;  // |P - P0| / (n0 sqrt(T0))
  double drift_energy = 0.0;
  double drift_temperature = 0.0;
};

struct MomentHistory
{
  std::vector<MomentRecord> records;
  std::vector<std::string> warnings;
  double mean_free_time = 0.0;
};

struct RelaxationResult
{
  MomentHistory history;
  DistributionField final_field;
};

/// Non-finite state at some step. Carries the last finite state.
struct DivergenceError : NumericError
{
  DivergenceError(const std::string& what, std::size_t step, std::shared_ptr<DistributionField> last_good)
      : NumericError(what), step(step), last_good(std::move(last_good))
  {
  }
  std::size_t step;
  std::shared_ptr<DistributionField> last_good;
};

RelaxationResult integrate(const DistributionField& field0, const RelaxationConfig& config,
                           const CollisionOperator& op);

MomentRecord record_moments(const DistributionField& f, double time, std::size_t step,
                            const MomentSet& initial);

/// 1 / (n sigma_T <|g|>^alpha) with <|g|> = 2 sqrt(2T / pi) for the Maxwellian
/// sharing the field's moments.
double mean_free_time(const MomentSet& m, const InteractionModel& model);

/// Adds the smallest weighted correction sum_k lambda_k psi_k (psi = 1, v, |v|^2)
/// that restores the target raw moments.
void correct_moments(DistributionField& f, const RawMoments& target);

/// History as CSV: t, density, momentum, temperature, directional temperatures,
/// directional moments and drifts, in %.16e.
void write_history_csv(const MomentHistory& history, const std::filesystem::path& path);

struct ScenarioPreset
{
  std::string name;
  std::vector<MaxwellianParams> components;
  GridSpec grid;

  DistributionField build(MeshPtr mesh) const;
};

/// "mach3" or "mach155"; the recommended box is centred at the origin with
/// half-width max(3, max_d |u_d| + 4 sqrt(T)) over components.
ScenarioPreset preset_scenario(const std::string& name);

/// Origin-centred cube enclosing |u_d| + 4 sqrt(T) of every component, at least [-3, 3]^3.
double preset_half_width(const std::vector<MaxwellianParams>& components);

}  // namespace dgboltz
