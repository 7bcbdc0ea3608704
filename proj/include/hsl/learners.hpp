#ifndef HSL_LEARNERS_HPP
#define HSL_LEARNERS_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hsl/panel.hpp"
#include "hsl/regress.hpp"
#include "hsl/sc_solver.hpp"

namespace hsl {

enum class Method { H1SL, H2SL, DRH2SL, SLearner, TLearner, XLearner, RLearnerLite, DidHte };

/// CLI names: h1sl, h2sl, dr, s, t, x, rlite, did.
Method parse_method(const std::string& name);
std::string method_name(Method m);

/// Imputed individual treatment effects for one side of the panel.
/// Treated side: delta(i, s) = Y_{i,t} - Yhat_{i,t}(0);
/// control side: delta(j, s) = Yhat'_{j,t}(1) - Y_{j,t}, t = t0 + 1 + s.
struct ImputedEffects {
  UnitSide side;
  Eigen::MatrixXd values;  // units-on-side x T1
  std::vector<SyntheticFit> source_fits;
  std::vector<int> unit_indices;
};

ImputedEffects treated_side_effects(const PanelDataset& ds, const ConstraintSpec& spec,
                                    const SolverOpts& opts = {});
ImputedEffects control_side_effects(const PanelDataset& ds, const ConstraintSpec& spec,
                                    const SolverOpts& opts = {});

/// A fitted HTE function. Single-model methods evaluate one HteModel;
/// H2SL-style methods combine two with propensity weights; cross-fitted DR
/// averages two combined halves.
struct HteEstimate {
  Method method = Method::H1SL;
  enum class Combine {
    Single,              // models[0](x)
    Difference,          // models[0](x) - models[1](x)
    PropensityWeighted,  // e(x) * models[0](x) + (1 - e(x)) * models[1](x)
    Average,             // mean over models (cross-fitting)
    LinearTau,           // linear_coef . [1, x]
  };
  Combine combine = Combine::Single;

  std::vector<HteModel> models;
  std::optional<PropensityModel> propensity;
  std::optional<double> forced_propensity;  // test hook; overrides propensity
  bool s_augmented = false;  // S-learner: models[0] takes [x, D]
  Eigen::VectorXd linear_coef;

  struct Diagnostics {
    double max_pre_rmse = 0.0;
    double mean_pre_rmse = 0.0;
    bool propensity_boundary = false;
  } diagnostics;

  double evaluate(const Eigen::VectorXd& x) const;
};

struct DrOptions {
  int folds = 2;  // only 2 is supported, per the two-sample split
  bool crossfit = true;
  bool pooled_time = false;  // use all post periods instead of t = T only
  std::uint64_t seed = 0;
};

HteEstimate h1sl(const PanelDataset& ds, const RegressorSpec& spec,
                 const ConstraintSpec& constraint, const SolverOpts& opts = {});
HteEstimate h2sl(const PanelDataset& ds, const RegressorSpec& spec,
                 const ConstraintSpec& constraint, const SolverOpts& opts = {});
HteEstimate dr_h2sl(const PanelDataset& ds, const RegressorSpec& spec,
                    const ConstraintSpec& constraint, const DrOptions& dr = {},
                    const SolverOpts& opts = {});

HteEstimate s_learner(const PanelDataset& ds, const RegressorSpec& spec);
HteEstimate t_learner(const PanelDataset& ds, const RegressorSpec& spec);
HteEstimate x_learner(const PanelDataset& ds, const RegressorSpec& spec);
HteEstimate r_learner_lite(const PanelDataset& ds, const RegressorSpec& spec);
HteEstimate did_hte(const PanelDataset& ds, const RegressorSpec& spec);

/// Dispatch by method; SC-based methods use the given constraint and seed.
HteEstimate fit_method(Method m, const PanelDataset& ds, const RegressorSpec& spec,
                       const ConstraintSpec& constraint, std::uint64_t seed = 0,
                       const SolverOpts& opts = {});

/// DR pseudo-outcome: ((D - e) / (e(1-e))) * (delta - tau_d) + tau_d.
double dr_pseudo_outcome(bool treated, double ehat, double delta, double tau_d);

}  // namespace hsl

#endif
