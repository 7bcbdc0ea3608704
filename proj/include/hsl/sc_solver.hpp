#ifndef HSL_SC_SOLVER_HPP
#define HSL_SC_SOLVER_HPP

#include <Eigen/Dense>
#include <stdexcept>
#include <vector>

#include "hsl/panel.hpp"

namespace hsl {

enum class ConstraintKind { L1Ball, Simplex, PenalizedSimplex };

struct ConstraintSpec {
  ConstraintKind kind = ConstraintKind::L1Ball;
  double radius = 1.0;   // L1Ball only
  double lambda = 0.0;   // PenalizedSimplex only
  Eigen::VectorXd pairwise_distances;  // PenalizedSimplex: one per donor, >= 0
  bool intercept = true;

  static ConstraintSpec l1_ball(double radius = 1.0, bool intercept = true) {
    return {ConstraintKind::L1Ball, radius, 0.0, {}, intercept};
  }
  static ConstraintSpec simplex(bool intercept = true) {
    return {ConstraintKind::Simplex, 1.0, 0.0, {}, intercept};
  }
  static ConstraintSpec penalized_simplex(double lambda, Eigen::VectorXd distances,
                                          bool intercept = true) {
    return {ConstraintKind::PenalizedSimplex, 1.0, lambda, std::move(distances), intercept};
  }
};

struct SolverOpts {
  double tol = 1e-10;      // relative objective decrease
  int max_iters = 50000;
};

struct SyntheticFit {
  Eigen::VectorXd weights;  // over donors
  double intercept = 0.0;   // 0 when disabled
  ConstraintSpec constraint;
  double pre_rmse = 0.0;
  int iterations = 0;

  // Counterfactual prediction from donor outcomes at one period.
  double predict(const Eigen::VectorXd& donor_outcomes) const {
    return intercept + weights.dot(donor_outcomes);
  }
};

/// Raised when projected gradient fails to reach tolerance; carries the best
/// iterate and the last relative decrease observed.
class NonConvergence : public std::runtime_error {
 public:
  NonConvergence(std::string msg, SyntheticFit best, double gap)
      : std::runtime_error(std::move(msg)), best_iterate(std::move(best)), final_gap(gap) {}
  SyntheticFit best_iterate;
  double final_gap;
};

/// Restricted least squares: minimize sum_t (y_t - mu - sum_j w_j A_tj)^2
/// over the constraint set (mu fixed at 0 when spec.intercept is off).
/// PenalizedSimplex adds lambda * sum_j w_j * dist_j to the objective.
/// An optional trace receives the objective value at every iteration.
SyntheticFit fit_weights(const Eigen::VectorXd& target_pre,
                         const Eigen::MatrixXd& donors_pre, const ConstraintSpec& spec,
                         const SolverOpts& opts = {},
                         std::vector<double>* objective_trace = nullptr);

struct ImputationResult {
  std::vector<SyntheticFit> fits;  // one per target unit, in dataset order
  Eigen::MatrixXd imputed;         // targets x T1
  std::vector<int> unit_indices;   // row -> dataset unit index
};

/// Algorithm step: synthetic control for each treated unit from control
/// donors; imputed(i, s) = Yhat_i,t0+1+s(0).
ImputationResult impute_control_counterfactuals(const PanelDataset& ds,
                                                const ConstraintSpec& spec,
                                                const SolverOpts& opts = {});

/// Reverse direction: synthetic treatment for each control unit from treated
/// donors; imputed(j, s) = Yhat'_j,t0+1+s(1).
ImputationResult impute_treated_counterfactuals(const PanelDataset& ds,
                                                const ConstraintSpec& spec,
                                                const SolverOpts& opts = {});

struct TemporalFoldSpec {
  int n_folds = 2;  // consecutive held-out blocks at the end of the pre-period
};

/// Temporal cross-validation over penalty candidates: train on the earlier
/// segment, score squared error on the held-out later segment. Ties go to the
/// larger lambda. Requires t0 >= 4.
double select_penalty_cv(const Eigen::VectorXd& target_pre,
                         const Eigen::MatrixXd& donors_pre,
                         const std::vector<double>& lambdas,
                         const Eigen::VectorXd& pairwise_distances,
                         const TemporalFoldSpec& folds = {}, bool intercept = true,
                         const SolverOpts& opts = {});

}  // namespace hsl

#endif
