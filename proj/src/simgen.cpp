#include "hsl/simgen.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "hsl/regress.hpp"
#include "hsl/rng.hpp"

namespace hsl {

void ScenarioConfig::check() const {
  if (t0 < 1 || t1 < 1) throw std::invalid_argument("t0 and t1 must be >= 1");
  if (n_units < 2) throw std::invalid_argument("need at least 2 units");
  if (d < 1) throw std::invalid_argument("need at least 1 feature");
  if (factor_noise_sd < 0 || outcome_noise_sd < 0 || loading_sd < 0 || ite_noise_sd < 0 ||
      ar1_innovation_sd < 0)
    throw std::invalid_argument("standard deviations must be >= 0");
  if (std::abs(factor_rho) > 1.0) throw std::invalid_argument("|factor_rho| must be <= 1");
}

double true_tau(const ScenarioConfig& config, const Eigen::VectorXd& x) {
  if (x.size() != config.d) throw std::invalid_argument("true_tau: dimension mismatch");
  switch (config.tau_kind) {
    case TauKind::Null:
      return 0.0;
    case TauKind::Linear: {
      double v = 0.6 * x[0];
      if (x.size() > 1) v += 0.4 * x[1];
      return v;
    }
    case TauKind::Cosine: {
      double v = 0.6 * std::cos(x[0]);
      if (x.size() > 1) v += 0.4 * std::cos(x[1]);
      return v;
    }
  }
  return 0.0;
}

namespace {

// A noise stream of `count` draws scaled by `sd`. The AR(1) variant replaces
// i.i.d. draws with eps_t = phi * eps_{t-1} + z_t, z_t ~ N(0, innovation_sd^2),
// then applies the same scale.
Eigen::VectorXd noise_stream(std::mt19937_64& rng, int count, double sd,
                             const ScenarioConfig& cfg) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::VectorXd out(count);
  if (cfg.error_kind == ErrorKind::IID) {
    for (int t = 0; t < count; ++t) out[t] = sd * gauss(rng);
  } else {
    double prev = 0.0;
    for (int t = 0; t < count; ++t) {
      prev = cfg.ar1_phi * prev + cfg.ar1_innovation_sd * gauss(rng);
      out[t] = sd * prev;
    }
  }
  return out;
}

}  // namespace

SimulatedPanel generate(const ScenarioConfig& config) {
  config.check();
  const int n = config.n_units;
  const int t = config.t0 + config.t1;
  const int d = config.d;

  std::mt19937_64 rng = make_engine(config.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  // Common factor: f_1 = 1, f_t = rho f_{t-1} + innovation.
  Eigen::VectorXd factor(t);
  const Eigen::VectorXd innov = noise_stream(rng, t, config.factor_noise_sd, config);
  factor[0] = 1.0;
  for (int s = 1; s < t; ++s) factor[s] = config.factor_rho * factor[s - 1] + innov[s];

  // Loadings and features.
  Eigen::VectorXd loadings(n);
  for (int i = 0; i < n; ++i)
    loadings[i] = config.loading_mean + config.loading_sd * gauss(rng);
  Eigen::MatrixXd features(n, d);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < d; ++k) features(i, k) = gauss(rng);

  // Untreated potential outcomes.
  Eigen::MatrixXd y0(n, t);
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd eps = noise_stream(rng, t, config.outcome_noise_sd, config);
    for (int s = 0; s < t; ++s) y0(i, s) = loadings[i] * factor[s] + eps[s];
  }

  // Treatment assignment by propensity; both classes required.
  const bool shared = config.propensity_beta_mode == BetaMode::SharedPerReplication;
  Eigen::MatrixXd beta;
  std::vector<bool> mask(n);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  bool ok = false;
  for (int attempt = 0; attempt < 100 && !ok; ++attempt) {
    beta.resize(shared ? 1 : n, d);
    for (Eigen::Index r = 0; r < beta.rows(); ++r)
      for (int k = 0; k < d; ++k) beta(r, k) = 1.0 + gauss(rng);
    int treated_count = 0;
    for (int i = 0; i < n; ++i) {
      const Eigen::VectorXd b = beta.row(shared ? 0 : i).transpose();
      const double e = expit(features.row(i) * b);
      mask[i] = unif(rng) < e;
      treated_count += mask[i];
    }
    ok = treated_count >= 1 && treated_count <= n - 1;
  }
  if (!ok)
    throw std::runtime_error("generate: degenerate treatment assignment after 100 tries");

  // tau and optional extra ITE noise on Y(1).
  Eigen::VectorXd tau(n);
  for (int i = 0; i < n; ++i) tau[i] = true_tau(config, features.row(i).transpose());

  Eigen::MatrixXd observed = y0;
  for (int i = 0; i < n; ++i) {
    if (!mask[i]) continue;
    for (int s = config.t0; s < t; ++s) {
      double extra = config.ite_noise_sd > 0 ? config.ite_noise_sd * gauss(rng) : 0.0;
      observed(i, s) = y0(i, s) + tau[i] + extra;
    }
  }

  // Normalize treated-first, matching panel ingestion.
  std::vector<int> order;
  for (int i = 0; i < n; ++i)
    if (mask[i]) order.push_back(i);
  for (int i = 0; i < n; ++i)
    if (!mask[i]) order.push_back(i);

  SimulatedPanel sim;
  sim.dataset.outcomes.resize(n, t);
  sim.dataset.features.resize(n, d);
  sim.dataset.treated_mask.resize(n);
  sim.dataset.t0 = config.t0;
  sim.true_tau_at_units.resize(n);
  sim.loadings.resize(n);
  sim.factor = factor;
  sim.propensity_beta = beta;
  for (int r = 0; r < n; ++r) {
    const int i = order[r];
    sim.dataset.outcomes.row(r) = observed.row(i);
    sim.dataset.features.row(r) = features.row(i);
    sim.dataset.treated_mask[r] = mask[i];
    sim.true_tau_at_units[r] = tau[i];
    sim.loadings[r] = loadings[i];
  }
  return sim;
}

namespace {

const char* tau_name(TauKind k) {
  switch (k) {
    case TauKind::Linear: return "linear";
    case TauKind::Cosine: return "cosine";
    case TauKind::Null: return "null";
  }
  return "?";
}

TauKind tau_from_name(const std::string& s) {
  if (s == "linear") return TauKind::Linear;
  if (s == "cosine") return TauKind::Cosine;
  if (s == "null") return TauKind::Null;
  throw std::invalid_argument("unknown tau_kind: " + s);
}

}  // namespace

ScenarioConfig preset(const std::string& name) {
  ScenarioConfig cfg;
  cfg.name = name;
  std::string base = name;
  if (base.size() > 4 && base.substr(base.size() - 4) == "-ar1") {
    cfg.error_kind = ErrorKind::AR1;
    base = base.substr(0, base.size() - 4);
  }
  if (base == "paper-a")
    cfg.tau_kind = TauKind::Linear;
  else if (base == "paper-b")
    cfg.tau_kind = TauKind::Cosine;
  else if (base == "paper-c")
    cfg.tau_kind = TauKind::Null;
  else
    throw std::invalid_argument("unknown preset: " + name);
  return cfg;
}

bool is_preset(const std::string& name) {
  try {
    preset(name);
    return true;
  } catch (const std::invalid_argument&) {
    return false;
  }
}

std::string to_json(const ScenarioConfig& c) {
  nlohmann::json j;
  j["name"] = c.name;
  j["t0"] = c.t0;
  j["t1"] = c.t1;
  j["n_units"] = c.n_units;
  j["factor_rho"] = c.factor_rho;
  j["factor_noise_sd"] = c.factor_noise_sd;
  j["outcome_noise_sd"] = c.outcome_noise_sd;
  j["loading_mean"] = c.loading_mean;
  j["loading_sd"] = c.loading_sd;
  j["d"] = c.d;
  j["tau_kind"] = tau_name(c.tau_kind);
  j["error_kind"] = c.error_kind == ErrorKind::AR1 ? "ar1" : "iid";
  j["ar1_phi"] = c.ar1_phi;
  j["ar1_innovation_sd"] = c.ar1_innovation_sd;
  j["propensity_beta_mode"] =
      c.propensity_beta_mode == BetaMode::PerUnit ? "per_unit" : "shared";
  j["ite_noise_sd"] = c.ite_noise_sd;
  j["seed"] = c.seed;
  return j.dump(2);
}

ScenarioConfig config_from_json(const std::string& text) {
  const nlohmann::json j = nlohmann::json::parse(text);
  ScenarioConfig c;
  if (j.contains("name")) c.name = j["name"].get<std::string>();
  if (j.contains("t0")) c.t0 = j["t0"].get<int>();
  if (j.contains("t1")) c.t1 = j["t1"].get<int>();
  if (j.contains("n_units")) c.n_units = j["n_units"].get<int>();
  if (j.contains("factor_rho")) c.factor_rho = j["factor_rho"].get<double>();
  if (j.contains("factor_noise_sd")) c.factor_noise_sd = j["factor_noise_sd"].get<double>();
  if (j.contains("outcome_noise_sd"))
    c.outcome_noise_sd = j["outcome_noise_sd"].get<double>();
  if (j.contains("loading_mean")) c.loading_mean = j["loading_mean"].get<double>();
  if (j.contains("loading_sd")) c.loading_sd = j["loading_sd"].get<double>();
  if (j.contains("d")) c.d = j["d"].get<int>();
  if (j.contains("tau_kind")) c.tau_kind = tau_from_name(j["tau_kind"].get<std::string>());
  if (j.contains("error_kind"))
    c.error_kind = j["error_kind"].get<std::string>() == "ar1" ? ErrorKind::AR1
                                                               : ErrorKind::IID;
  if (j.contains("ar1_phi")) c.ar1_phi = j["ar1_phi"].get<double>();
  if (j.contains("ar1_innovation_sd"))
    c.ar1_innovation_sd = j["ar1_innovation_sd"].get<double>();
  if (j.contains("propensity_beta_mode"))
    c.propensity_beta_mode = j["propensity_beta_mode"].get<std::string>() == "per_unit"
                                 ? BetaMode::PerUnit
                                 : BetaMode::SharedPerReplication;
  if (j.contains("ite_noise_sd")) c.ite_noise_sd = j["ite_noise_sd"].get<double>();
  if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
  c.check();
  return c;
}

ScenarioConfig load_scenario(const std::string& preset_or_path) {
  if (is_preset(preset_or_path)) return preset(preset_or_path);
  std::ifstream in(preset_or_path);
  if (!in) throw std::invalid_argument("not a preset and cannot open file: " + preset_or_path);
  std::stringstream ss;
  ss << in.rdbuf();
  return config_from_json(ss.str());
}

}  // namespace hsl
