#ifndef HSL_SIMGEN_HPP
#define HSL_SIMGEN_HPP

#include <cstdint>
#include <string>

#include "hsl/panel.hpp"

namespace hsl {

enum class TauKind { Linear, Cosine, Null };
enum class ErrorKind { IID, AR1 };
enum class BetaMode { SharedPerReplication, PerUnit };

struct ScenarioConfig {
  std::string name = "custom";
  int t0 = 10;
  int t1 = 10;
  int n_units = 50;
  double factor_rho = 0.95;
  double factor_noise_sd = 0.5;
  double outcome_noise_sd = 0.1;
  double loading_mean = 1.0;
  double loading_sd = 1.0;
  int d = 2;
  TauKind tau_kind = TauKind::Linear;
  ErrorKind error_kind = ErrorKind::IID;
  double ar1_phi = 0.2;
  double ar1_innovation_sd = 1.0;
  BetaMode propensity_beta_mode = BetaMode::SharedPerReplication;
  double ite_noise_sd = 0.0;  // extra noise on Y(1) on top of tau(x)
  std::uint64_t seed = 0;

  void check() const;  // throws std::invalid_argument on bad values
};

struct SimulatedPanel {
  PanelDataset dataset;
  Eigen::VectorXd true_tau_at_units;  // tau(X_i) for every unit, dataset order
  // Generator state for audit.
  Eigen::VectorXd factor;           // f_t, length T
  Eigen::VectorXd loadings;         // b_i, dataset order
  Eigen::MatrixXd propensity_beta;  // 1 x d (shared) or N x d (per unit)
};

/// Draws one panel from the factor-model process. Deterministic per config;
/// configs differing only in seed produce independent streams.
SimulatedPanel generate(const ScenarioConfig& config);

/// Closed-form tau: Linear 0.6 x1 + 0.4 x2, Cosine 0.6 cos(x1) + 0.4 cos(x2),
/// Null 0. Throws on dimension mismatch with config.d.
double true_tau(const ScenarioConfig& config, const Eigen::VectorXd& x);

/// Named presets: paper-a, paper-b, paper-c and the -ar1 variants.
ScenarioConfig preset(const std::string& name);
bool is_preset(const std::string& name);

/// JSON (de)serialization of ScenarioConfig; schema mirrors the fields.
std::string to_json(const ScenarioConfig& config);
ScenarioConfig config_from_json(const std::string& json_text);
ScenarioConfig load_scenario(const std::string& preset_or_path);

}  // namespace hsl

#endif
