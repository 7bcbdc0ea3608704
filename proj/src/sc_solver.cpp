#include "hsl/sc_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hsl/projection.hpp"

namespace hsl {

namespace {

void check_spec(const ConstraintSpec& spec, int n_donors) {
  if (spec.kind == ConstraintKind::L1Ball &&
      (!(spec.radius > 0.0) || !std::isfinite(spec.radius)))
    throw std::invalid_argument("L1 ball radius must be positive and finite");
  if (spec.kind == ConstraintKind::PenalizedSimplex) {
    if (spec.lambda < 0.0) throw std::invalid_argument("penalty lambda must be >= 0");
    if (spec.pairwise_distances.size() != n_donors)
      throw std::invalid_argument("need one pairwise distance per donor");
    if ((spec.pairwise_distances.array() < 0.0).any())
      throw std::invalid_argument("pairwise distances must be >= 0");
  }
}

Eigen::VectorXd project(const Eigen::VectorXd& w, const ConstraintSpec& spec) {
  if (spec.kind == ConstraintKind::L1Ball) return project_l1_ball(w, spec.radius);
  return project_simplex(w);
}

// Largest eigenvalue of G by power iteration, deterministic start.
double spectral_radius(const Eigen::MatrixXd& g) {
  const Eigen::Index j = g.rows();
  Eigen::VectorXd v = Eigen::VectorXd::Ones(j) / std::sqrt(static_cast<double>(j));
  double lam = 0.0;
  for (int it = 0; it < 200; ++it) {
    Eigen::VectorXd gv = g * v;
    const double norm = gv.norm();
    if (norm <= 0.0) return 0.0;
    const double next = v.dot(gv);
    v = gv / norm;
    if (it > 5 && std::abs(next - lam) <= 1e-12 * std::max(1.0, std::abs(next))) {
      lam = next;
      break;
    }
    lam = next;
  }
  return std::abs(lam);
}

}  // namespace

SyntheticFit fit_weights(const Eigen::VectorXd& target_pre,
                         const Eigen::MatrixXd& donors_pre, const ConstraintSpec& spec,
                         const SolverOpts& opts, std::vector<double>* objective_trace) {
  const Eigen::Index t0 = target_pre.size();
  const Eigen::Index j = donors_pre.cols();
  if (t0 < 1 || donors_pre.rows() != t0)
    throw std::invalid_argument("fit_weights: target/donor length mismatch");
  if (j < 1) throw std::invalid_argument("fit_weights: need at least one donor");
  if (!target_pre.allFinite() || !donors_pre.allFinite())
    throw std::invalid_argument("fit_weights: non-finite input");
  check_spec(spec, static_cast<int>(j));

  // With an intercept, mu is unconstrained and separable: optimize w on
  // mean-centered data, then recover mu = mean(y) - mean(A) . w.
  Eigen::VectorXd y = target_pre;
  Eigen::MatrixXd a = donors_pre;
  Eigen::RowVectorXd col_means = Eigen::RowVectorXd::Zero(j);
  double y_mean = 0.0;
  if (spec.intercept) {
    y_mean = y.mean();
    col_means = a.colwise().mean();
    y.array() -= y_mean;
    a.rowwise() -= col_means;
  }

  const Eigen::MatrixXd gram = a.transpose() * a;
  const Eigen::VectorXd aty = a.transpose() * y;
  Eigen::VectorXd penalty = Eigen::VectorXd::Zero(j);
  if (spec.kind == ConstraintKind::PenalizedSimplex)
    penalty = spec.lambda * spec.pairwise_distances;

  const double yty = y.squaredNorm();
  // Residual form rather than the expanded quadratic: near a zero-residual
  // optimum the expanded form loses everything below eps * ||y||^2 to
  // cancellation, which caps attainable accuracy.
  auto objective = [&](const Eigen::VectorXd& w) {
    return (y - a * w).squaredNorm() + penalty.dot(w);
  };

  const double lipschitz = 2.0 * spectral_radius(gram);
  const double step = lipschitz > 0.0 ? 1.0 / lipschitz : 1.0;

  auto gradient = [&](const Eigen::VectorXd& w) -> Eigen::VectorXd {
    return 2.0 * (gram * w - aty) + penalty;
  };

  // Accelerated projected gradient, kept monotone: a momentum candidate is
  // accepted only when it lowers the objective, otherwise the momentum is
  // restarted with a plain projected step (which cannot increase f at step
  // 1/L). Convergence is declared only after a plain step makes less than
  // tol relative progress.
  Eigen::VectorXd w = project(Eigen::VectorXd::Zero(j), spec);
  double f = objective(w);
  if (objective_trace) objective_trace->push_back(f);
  Eigen::VectorXd v = w;
  double momentum = 1.0;

  int iters = 0;
  double gap = std::numeric_limits<double>::infinity();
  bool converged = (lipschitz == 0.0);  // constant objective in w
  const double floor = std::max(yty, 1.0) * 1e-26;
  while (!converged && iters < opts.max_iters) {
    ++iters;
    Eigen::VectorXd cand = project(v - step * gradient(v), spec);
    double fc = objective(cand);
    bool plain = false;
    if (fc > f) {
      cand = project(w - step * gradient(w), spec);
      fc = objective(cand);
      momentum = 1.0;
      plain = true;
    }
    gap = (f - fc) / std::max(std::abs(f), 1e-30);
    if (gap <= opts.tol || fc <= floor) {
      if (plain || fc <= floor) {
        converged = true;
      } else {
        // Accelerated progress stalled; verify with a plain step.
        Eigen::VectorXd check = project(cand - step * gradient(cand), spec);
        const double fcheck = objective(check);
        if ((fc - fcheck) / std::max(std::abs(fc), 1e-30) <= opts.tol) {
          converged = true;
          if (fcheck <= fc) {
            cand = std::move(check);
            fc = fcheck;
          }
        }
      }
    }
    const double momentum_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum * momentum));
    v = cand + ((momentum - 1.0) / momentum_next) * (cand - w);
    momentum = momentum_next;
    w = std::move(cand);
    f = fc;
    if (objective_trace) objective_trace->push_back(f);
  }

  SyntheticFit fit;
  fit.weights = w;
  fit.intercept = spec.intercept ? (y_mean - col_means.dot(w)) : 0.0;
  fit.constraint = spec;
  fit.iterations = iters;
  const Eigen::VectorXd resid = y - a * w;
  fit.pre_rmse = std::sqrt(resid.squaredNorm() / static_cast<double>(t0));

  if (!converged)
    throw NonConvergence("fit_weights: no convergence after " +
                             std::to_string(opts.max_iters) + " iterations",
                         fit, gap);
  return fit;
}

namespace {

ImputationResult impute_side(const PanelDataset& ds, const ConstraintSpec& spec,
                             const SolverOpts& opts, bool treated_targets) {
  require_valid(ds);
  const std::vector<int> targets =
      treated_targets ? ds.treated_indices() : ds.control_indices();
  const std::vector<int> donors =
      treated_targets ? ds.control_indices() : ds.treated_indices();
  const int t0 = ds.t0;
  const int t1 = ds.n_post();
  const int n_targets = static_cast<int>(targets.size());
  const int n_donors = static_cast<int>(donors.size());

  Eigen::MatrixXd donors_pre(t0, n_donors);
  Eigen::MatrixXd donors_post(t1, n_donors);
  for (int k = 0; k < n_donors; ++k) {
    donors_pre.col(k) = ds.outcomes.row(donors[k]).head(t0).transpose();
    donors_post.col(k) = ds.outcomes.row(donors[k]).tail(t1).transpose();
  }

  ImputationResult result;
  result.fits.resize(n_targets);
  result.imputed.resize(n_targets, t1);
  result.unit_indices = targets;

  // Penalized spec without explicit distances: use per-target feature
  // distances to the donors (the covariate-discrepancy penalty of the
  // penalized SC variant).
  const bool auto_distances =
      spec.kind == ConstraintKind::PenalizedSimplex && spec.pairwise_distances.size() == 0;

  std::vector<std::string> failures(n_targets);
#pragma omp parallel for schedule(dynamic)
  for (int r = 0; r < n_targets; ++r) {
    try {
      ConstraintSpec unit_spec = spec;
      if (auto_distances) {
        unit_spec.pairwise_distances.resize(n_donors);
        for (int k = 0; k < n_donors; ++k)
          unit_spec.pairwise_distances[k] =
              (ds.features.row(targets[r]) - ds.features.row(donors[k])).norm();
      }
      const Eigen::VectorXd target_pre =
          ds.outcomes.row(targets[r]).head(t0).transpose();
      result.fits[r] = fit_weights(target_pre, donors_pre, unit_spec, opts);
      for (int s = 0; s < t1; ++s)
        result.imputed(r, s) = result.fits[r].predict(donors_post.row(s).transpose());
    } catch (const std::exception& e) {
      failures[r] = e.what();
    }
  }
  for (int r = 0; r < n_targets; ++r)
    if (!failures[r].empty())
      throw std::runtime_error("unit " + std::to_string(targets[r]) + ": " + failures[r]);
  return result;
}

}  // namespace

ImputationResult impute_control_counterfactuals(const PanelDataset& ds,
                                                const ConstraintSpec& spec,
                                                const SolverOpts& opts) {
  return impute_side(ds, spec, opts, /*treated_targets=*/true);
}

ImputationResult impute_treated_counterfactuals(const PanelDataset& ds,
                                                const ConstraintSpec& spec,
                                                const SolverOpts& opts) {
  return impute_side(ds, spec, opts, /*treated_targets=*/false);
}

double select_penalty_cv(const Eigen::VectorXd& target_pre,
                         const Eigen::MatrixXd& donors_pre,
                         const std::vector<double>& lambdas,
                         const Eigen::VectorXd& pairwise_distances,
                         const TemporalFoldSpec& folds, bool intercept,
                         const SolverOpts& opts) {
  if (lambdas.empty()) throw std::invalid_argument("select_penalty_cv: no candidates");
  const int t0 = static_cast<int>(target_pre.size());
  const int n_folds = folds.n_folds;
  if (n_folds < 2) throw std::invalid_argument("select_penalty_cv: need >= 2 folds");
  if (t0 < 4 || t0 < n_folds + 2)
    throw std::invalid_argument("insufficient pre-period for CV");

  // Fold k trains on [0, split_k) and scores on [split_k, split_{k+1}).
  // Splits divide the pre-period into n_folds+1 consecutive blocks.
  std::vector<int> splits(n_folds + 1);
  for (int k = 0; k <= n_folds; ++k)
    splits[k] = static_cast<int>(std::lround(static_cast<double>(t0) * (k + 1) /
                                             (n_folds + 1)));
  splits[n_folds] = t0;

  double best_lambda = lambdas.front();
  double best_score = std::numeric_limits<double>::infinity();
  for (double lambda : lambdas) {
    if (lambda < 0.0) throw std::invalid_argument("lambda must be >= 0");
    double total = 0.0;
    int count = 0;
    for (int k = 0; k < n_folds; ++k) {
      const int train_end = splits[k];
      const int test_end = splits[k + 1];
      if (train_end < 1 || test_end <= train_end) continue;
      const auto spec =
          ConstraintSpec::penalized_simplex(lambda, pairwise_distances, intercept);
      const SyntheticFit fit = fit_weights(target_pre.head(train_end),
                                           donors_pre.topRows(train_end), spec, opts);
      for (int t = train_end; t < test_end; ++t) {
        const double pred = fit.predict(donors_pre.row(t).transpose());
        const double err = target_pre[t] - pred;
        total += err * err;
        ++count;
      }
    }
    const double score = total / std::max(count, 1);
    // >= : ties broken toward the larger (later) lambda when candidates are
    // scanned in increasing order; callers pass them sorted or not, so compare
    // explicitly.
    if (score < best_score ||
        (score == best_score && lambda > best_lambda)) {
      best_score = score;
      best_lambda = lambda;
    }
  }
  return best_lambda;
}

}  // namespace hsl
