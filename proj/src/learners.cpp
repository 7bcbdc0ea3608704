#include "hsl/learners.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include "hsl/rng.hpp"

namespace hsl {

Method parse_method(const std::string& name) {
  if (name == "h1sl") return Method::H1SL;
  if (name == "h2sl") return Method::H2SL;
  if (name == "dr") return Method::DRH2SL;
  if (name == "s") return Method::SLearner;
  if (name == "t") return Method::TLearner;
  if (name == "x") return Method::XLearner;
  if (name == "rlite") return Method::RLearnerLite;
  if (name == "did") return Method::DidHte;
  throw std::invalid_argument("unknown method: " + name);
}

std::string method_name(Method m) {
  switch (m) {
    case Method::H1SL: return "h1sl";
    case Method::H2SL: return "h2sl";
    case Method::DRH2SL: return "dr";
    case Method::SLearner: return "s";
    case Method::TLearner: return "t";
    case Method::XLearner: return "x";
    case Method::RLearnerLite: return "rlite";
    case Method::DidHte: return "did";
  }
  return "?";
}

ImputedEffects treated_side_effects(const PanelDataset& ds, const ConstraintSpec& spec,
                                    const SolverOpts& opts) {
  ImputationResult imp = impute_control_counterfactuals(ds, spec, opts);
  ImputedEffects eff;
  eff.side = UnitSide::Treated;
  eff.unit_indices = imp.unit_indices;
  eff.source_fits = std::move(imp.fits);
  eff.values.resize(imp.imputed.rows(), imp.imputed.cols());
  const int t0 = ds.t0;
  for (Eigen::Index r = 0; r < eff.values.rows(); ++r)
    for (Eigen::Index s = 0; s < eff.values.cols(); ++s)
      eff.values(r, s) = ds.outcomes(imp.unit_indices[r], t0 + s) - imp.imputed(r, s);
  return eff;
}

ImputedEffects control_side_effects(const PanelDataset& ds, const ConstraintSpec& spec,
                                    const SolverOpts& opts) {
  ImputationResult imp = impute_treated_counterfactuals(ds, spec, opts);
  ImputedEffects eff;
  eff.side = UnitSide::Control;
  eff.unit_indices = imp.unit_indices;
  eff.source_fits = std::move(imp.fits);
  eff.values.resize(imp.imputed.rows(), imp.imputed.cols());
  const int t0 = ds.t0;
  for (Eigen::Index r = 0; r < eff.values.rows(); ++r)
    for (Eigen::Index s = 0; s < eff.values.cols(); ++s)
      eff.values(r, s) = imp.imputed(r, s) - ds.outcomes(imp.unit_indices[r], t0 + s);
  return eff;
}

double HteEstimate::evaluate(const Eigen::VectorXd& x) const {
  switch (combine) {
    case Combine::Single: {
      if (!s_augmented) return models[0].predict(x);
      Eigen::VectorXd z(x.size() + 1);
      z.head(x.size()) = x;
      z[x.size()] = 1.0;
      const double f1 = models[0].predict(z);
      z[x.size()] = 0.0;
      return f1 - models[0].predict(z);
    }
    case Combine::Difference:
      return models[0].predict(x) - models[1].predict(x);
    case Combine::PropensityWeighted: {
      const double e = forced_propensity ? *forced_propensity : propensity->predict(x);
      return e * models[0].predict(x) + (1.0 - e) * models[1].predict(x);
    }
    case Combine::Average: {
      double sum = 0.0;
      for (const auto& m : models) sum += m.predict(x);
      return sum / static_cast<double>(models.size());
    }
    case Combine::LinearTau:
      return linear_coef[0] + linear_coef.tail(x.size()).dot(x);
  }
  return 0.0;
}

namespace {

// Step-3 pooling: each unit's feature row repeated once per post period.
void pool_effects(const PanelDataset& ds, const ImputedEffects& eff, Eigen::MatrixXd& x,
                  Eigen::VectorXd& y) {
  const Eigen::Index u = eff.values.rows();
  const Eigen::Index t1 = eff.values.cols();
  x.resize(u * t1, ds.n_features());
  y.resize(u * t1);
  for (Eigen::Index r = 0; r < u; ++r)
    for (Eigen::Index s = 0; s < t1; ++s) {
      x.row(r * t1 + s) = ds.features.row(eff.unit_indices[r]);
      y[r * t1 + s] = eff.values(r, s);
    }
}

void fill_rmse_diagnostics(HteEstimate& est, const std::vector<SyntheticFit>& fits) {
  double max_r = 0.0, sum_r = 0.0;
  for (const auto& f : fits) {
    max_r = std::max(max_r, f.pre_rmse);
    sum_r += f.pre_rmse;
  }
  est.diagnostics.max_pre_rmse = std::max(est.diagnostics.max_pre_rmse, max_r);
  est.diagnostics.mean_pre_rmse = fits.empty() ? 0.0 : sum_r / fits.size();
}

Eigen::MatrixXd rows_of(const PanelDataset& ds, const std::vector<int>& units) {
  Eigen::MatrixXd x(units.size(), ds.n_features());
  for (std::size_t r = 0; r < units.size(); ++r) x.row(r) = ds.features.row(units[r]);
  return x;
}

// Pooled (unit, post-period) rows, optionally restricted to one side.
void pool_post_outcomes(const PanelDataset& ds, const std::vector<int>& units,
                        Eigen::MatrixXd& x, Eigen::VectorXd& y) {
  const int t1 = ds.n_post();
  x.resize(static_cast<Eigen::Index>(units.size()) * t1, ds.n_features());
  y.resize(static_cast<Eigen::Index>(units.size()) * t1);
  for (std::size_t r = 0; r < units.size(); ++r)
    for (int s = 0; s < t1; ++s) {
      x.row(r * t1 + s) = ds.features.row(units[r]);
      y[r * t1 + s] = ds.outcomes(units[r], ds.t0 + s);
    }
}

}  // namespace

HteEstimate h1sl(const PanelDataset& ds, const RegressorSpec& spec,
                 const ConstraintSpec& constraint, const SolverOpts& opts) {
  const ImputedEffects eff = treated_side_effects(ds, constraint, opts);
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
  pool_effects(ds, eff, x, y);
  HteEstimate est;
  est.method = Method::H1SL;
  est.combine = HteEstimate::Combine::Single;
  est.models.push_back(fit(spec, x, y));
  fill_rmse_diagnostics(est, eff.source_fits);
  return est;
}

HteEstimate h2sl(const PanelDataset& ds, const RegressorSpec& spec,
                 const ConstraintSpec& constraint, const SolverOpts& opts) {
  const ImputedEffects treated_eff = treated_side_effects(ds, constraint, opts);
  const ImputedEffects control_eff = control_side_effects(ds, constraint, opts);

  Eigen::MatrixXd x0, x1;
  Eigen::VectorXd y0, y1;
  pool_effects(ds, treated_eff, x0, y0);
  pool_effects(ds, control_eff, x1, y1);

  HteEstimate est;
  est.method = Method::H2SL;
  est.combine = HteEstimate::Combine::PropensityWeighted;
  est.models.push_back(fit(spec, x0, y0));  // tau0: from treated-side effects
  est.models.push_back(fit(spec, x1, y1));  // tau1: from control-side effects
  est.propensity = fit_propensity(ds.features, ds.treated_mask);
  est.diagnostics.propensity_boundary = est.propensity->boundary_flag;
  fill_rmse_diagnostics(est, treated_eff.source_fits);
  fill_rmse_diagnostics(est, control_eff.source_fits);
  return est;
}

double dr_pseudo_outcome(bool treated, double ehat, double delta, double tau_d) {
  const double d = treated ? 1.0 : 0.0;
  return (d - ehat) / (ehat * (1.0 - ehat)) * (delta - tau_d) + tau_d;
}

namespace {

// One DR half: nuisances on `train`, pseudo-outcome regression on `estimate`.
HteModel dr_half(const PanelDataset& ds, const RegressorSpec& spec,
                 const ImputedEffects& treated_eff, const ImputedEffects& control_eff,
                 const std::vector<int>& train, const std::vector<int>& estimate,
                 bool pooled_time, bool* boundary) {
  const int t1 = ds.n_post();
  const int first_col = pooled_time ? 0 : t1 - 1;

  // unit index -> row in its side's effect matrix
  std::vector<int> row_of(ds.n_units(), -1);
  for (std::size_t r = 0; r < treated_eff.unit_indices.size(); ++r)
    row_of[treated_eff.unit_indices[r]] = static_cast<int>(r);
  for (std::size_t r = 0; r < control_eff.unit_indices.size(); ++r)
    row_of[control_eff.unit_indices[r]] = static_cast<int>(r);

  std::vector<int> train_treated, train_control;
  for (int i : train) (ds.treated_mask[i] ? train_treated : train_control).push_back(i);

  auto side_training = [&](const std::vector<int>& units, const ImputedEffects& eff,
                           Eigen::MatrixXd& x, Eigen::VectorXd& y) {
    const int cols = pooled_time ? t1 : 1;
    x.resize(static_cast<Eigen::Index>(units.size()) * cols, ds.n_features());
    y.resize(static_cast<Eigen::Index>(units.size()) * cols);
    for (std::size_t r = 0; r < units.size(); ++r)
      for (int c = 0; c < cols; ++c) {
        x.row(r * cols + c) = ds.features.row(units[r]);
        y[r * cols + c] = eff.values(row_of[units[r]], first_col + c);
      }
  };

  Eigen::MatrixXd x0, x1;
  Eigen::VectorXd y0, y1;
  side_training(train_treated, treated_eff, x0, y0);
  side_training(train_control, control_eff, x1, y1);
  const HteModel tau_treated_side = fit(spec, x0, y0);
  const HteModel tau_control_side = fit(spec, x1, y1);

  std::vector<bool> train_mask(train.size());
  for (std::size_t r = 0; r < train.size(); ++r) train_mask[r] = ds.treated_mask[train[r]];
  const PropensityModel ehat = fit_propensity(rows_of(ds, train), train_mask);
  if (ehat.boundary_flag) *boundary = true;

  const int cols = pooled_time ? t1 : 1;
  Eigen::MatrixXd px(static_cast<Eigen::Index>(estimate.size()) * cols, ds.n_features());
  Eigen::VectorXd py(px.rows());
  for (std::size_t r = 0; r < estimate.size(); ++r) {
    const int i = estimate[r];
    const bool d = ds.treated_mask[i];
    const Eigen::VectorXd xi = ds.features.row(i).transpose();
    const double e = ehat.predict(xi);
    const double tau_d = d ? tau_treated_side.predict(xi) : tau_control_side.predict(xi);
    const ImputedEffects& eff = d ? treated_eff : control_eff;
    for (int c = 0; c < cols; ++c) {
      px.row(r * cols + c) = ds.features.row(i);
      py[r * cols + c] =
          dr_pseudo_outcome(d, e, eff.values(row_of[i], first_col + c), tau_d);
    }
  }
  return fit(spec, px, py);
}

}  // namespace

HteEstimate dr_h2sl(const PanelDataset& ds, const RegressorSpec& spec,
                    const ConstraintSpec& constraint, const DrOptions& dr,
                    const SolverOpts& opts) {
  if (dr.folds != 2) throw std::invalid_argument("dr_h2sl: only folds=2 is supported");
  require_valid(ds);

  // SC imputation is computed once on the full panel; only the nuisances and
  // the second-stage regression honor the split.
  const ImputedEffects treated_eff = treated_side_effects(ds, constraint, opts);
  const ImputedEffects control_eff = control_side_effects(ds, constraint, opts);

  const int n = ds.n_units();
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::mt19937_64 rng = make_engine(dr.seed);

  std::vector<int> s1, s2;
  bool feasible = false;
  for (int attempt = 0; attempt < 100 && !feasible; ++attempt) {
    std::shuffle(perm.begin(), perm.end(), rng);
    s1.assign(perm.begin(), perm.begin() + (n + 1) / 2);
    s2.assign(perm.begin() + (n + 1) / 2, perm.end());
    auto has_both = [&](const std::vector<int>& fold) {
      bool t = false, c = false;
      for (int i : fold) (ds.treated_mask[i] ? t : c) = true;
      return t && c;
    };
    feasible = has_both(s1) && has_both(s2);
  }
  if (!feasible)
    throw std::runtime_error("dr_h2sl: no unit split with both classes per fold");
  std::sort(s1.begin(), s1.end());
  std::sort(s2.begin(), s2.end());

  HteEstimate est;
  est.method = Method::DRH2SL;
  bool boundary = false;
  est.models.push_back(dr_half(ds, spec, treated_eff, control_eff, s1, s2,
                               dr.pooled_time, &boundary));
  if (dr.crossfit) {
    est.models.push_back(dr_half(ds, spec, treated_eff, control_eff, s2, s1,
                                 dr.pooled_time, &boundary));
    est.combine = HteEstimate::Combine::Average;
  } else {
    est.combine = HteEstimate::Combine::Single;
  }
  est.diagnostics.propensity_boundary = boundary;
  fill_rmse_diagnostics(est, treated_eff.source_fits);
  fill_rmse_diagnostics(est, control_eff.source_fits);
  return est;
}

HteEstimate s_learner(const PanelDataset& ds, const RegressorSpec& spec) {
  require_valid(ds);
  const int t1 = ds.n_post();
  const int n = ds.n_units();
  const int d = ds.n_features();
  Eigen::MatrixXd x(static_cast<Eigen::Index>(n) * t1, d + 1);
  Eigen::VectorXd y(x.rows());
  for (int i = 0; i < n; ++i)
    for (int s = 0; s < t1; ++s) {
      x.row(i * t1 + s).head(d) = ds.features.row(i);
      x(i * t1 + s, d) = ds.treated_mask[i] ? 1.0 : 0.0;
      y[i * t1 + s] = ds.outcomes(i, ds.t0 + s);
    }
  HteEstimate est;
  est.method = Method::SLearner;
  est.combine = HteEstimate::Combine::Single;
  // tau(x) = f(x, 1) - f(x, 0); represented by wrapping below in evaluate is
  // avoided by fitting the model on the augmented space and differencing here.
  HteModel f = fit(spec, x, y);
  est.models.push_back(std::move(f));
  est.s_augmented = true;
  return est;
}

HteEstimate t_learner(const PanelDataset& ds, const RegressorSpec& spec) {
  require_valid(ds);
  Eigen::MatrixXd xt, xc;
  Eigen::VectorXd yt, yc;
  pool_post_outcomes(ds, ds.treated_indices(), xt, yt);
  pool_post_outcomes(ds, ds.control_indices(), xc, yc);
  HteEstimate est;
  est.method = Method::TLearner;
  est.combine = HteEstimate::Combine::Difference;
  est.models.push_back(fit(spec, xt, yt));
  est.models.push_back(fit(spec, xc, yc));
  return est;
}

HteEstimate x_learner(const PanelDataset& ds, const RegressorSpec& spec) {
  require_valid(ds);
  const auto treated = ds.treated_indices();
  const auto controls = ds.control_indices();
  Eigen::MatrixXd xt, xc;
  Eigen::VectorXd yt, yc;
  pool_post_outcomes(ds, treated, xt, yt);
  pool_post_outcomes(ds, controls, xc, yc);
  const HteModel m1 = fit(spec, xt, yt);  // treated outcome model
  const HteModel m0 = fit(spec, xc, yc);  // control outcome model

  // Cross-group imputed effects, pooled over post periods.
  Eigen::VectorXd d1(yt.size()), d0(yc.size());
  for (Eigen::Index r = 0; r < yt.size(); ++r)
    d1[r] = yt[r] - m0.predict(xt.row(r).transpose());
  for (Eigen::Index r = 0; r < yc.size(); ++r)
    d0[r] = m1.predict(xc.row(r).transpose()) - yc[r];

  HteEstimate est;
  est.method = Method::XLearner;
  est.combine = HteEstimate::Combine::PropensityWeighted;
  est.models.push_back(fit(spec, xc, d0));  // tau0: from control units
  est.models.push_back(fit(spec, xt, d1));  // tau1: from treated units
  est.propensity = fit_propensity(ds.features, ds.treated_mask);
  est.diagnostics.propensity_boundary = est.propensity->boundary_flag;
  return est;
}

HteEstimate r_learner_lite(const PanelDataset& ds, const RegressorSpec& spec) {
  require_valid(ds);
  const int t1 = ds.n_post();
  const int n = ds.n_units();
  Eigen::MatrixXd x(static_cast<Eigen::Index>(n) * t1, ds.n_features());
  Eigen::VectorXd y(x.rows()), d(x.rows());
  for (int i = 0; i < n; ++i)
    for (int s = 0; s < t1; ++s) {
      x.row(i * t1 + s) = ds.features.row(i);
      y[i * t1 + s] = ds.outcomes(i, ds.t0 + s);
      d[i * t1 + s] = ds.treated_mask[i] ? 1.0 : 0.0;
    }
  const HteModel m_y = fit(spec, x, y);
  const HteModel m_d = fit(spec, x, d);
  const Eigen::VectorXd ry = y - m_y.predict_rows(x);
  const Eigen::VectorXd rd = d - m_d.predict_rows(x);

  // Robinson step: least squares of ry on rd * [1, x].
  const int p = ds.n_features() + 1;
  Eigen::MatrixXd z(x.rows(), p);
  z.col(0) = rd;
  for (int k = 0; k < ds.n_features(); ++k) z.col(k + 1) = rd.array() * x.col(k).array();
  Eigen::MatrixXd ztz = z.transpose() * z;
  ztz.diagonal().array() += 1e-10;  // rd can be numerically degenerate
  const Eigen::VectorXd b = ztz.ldlt().solve(z.transpose() * ry);

  HteEstimate est;
  est.method = Method::RLearnerLite;
  est.combine = HteEstimate::Combine::LinearTau;
  est.linear_coef = b;
  return est;
}

HteEstimate did_hte(const PanelDataset& ds, const RegressorSpec& spec) {
  require_valid(ds);
  const int t0 = ds.t0;
  const int t1 = ds.n_post();
  auto contrast = [&](int i) {
    const double pre = ds.outcomes.row(i).head(t0).mean();
    const double post = ds.outcomes.row(i).tail(t1).mean();
    return post - pre;
  };
  const auto controls = ds.control_indices();
  const auto treated = ds.treated_indices();
  Eigen::VectorXd cc(controls.size()), ct(treated.size());
  for (std::size_t r = 0; r < controls.size(); ++r) cc[r] = contrast(controls[r]);
  for (std::size_t r = 0; r < treated.size(); ++r) ct[r] = contrast(treated[r]);

  const HteModel trend = fit(spec, rows_of(ds, controls), cc);
  Eigen::VectorXd target(treated.size());
  const Eigen::MatrixXd xt = rows_of(ds, treated);
  for (Eigen::Index r = 0; r < target.size(); ++r)
    target[r] = ct[r] - trend.predict(xt.row(r).transpose());

  HteEstimate est;
  est.method = Method::DidHte;
  est.combine = HteEstimate::Combine::Single;
  est.models.push_back(fit(spec, xt, target));
  return est;
}

HteEstimate fit_method(Method m, const PanelDataset& ds, const RegressorSpec& spec,
                       const ConstraintSpec& constraint, std::uint64_t seed,
                       const SolverOpts& opts) {
  switch (m) {
    case Method::H1SL: return h1sl(ds, spec, constraint, opts);
    case Method::H2SL: return h2sl(ds, spec, constraint, opts);
    case Method::DRH2SL: {
      DrOptions dr;
      dr.seed = seed;
      return dr_h2sl(ds, spec, constraint, dr, opts);
    }
    case Method::SLearner: return s_learner(ds, spec);
    case Method::TLearner: return t_learner(ds, spec);
    case Method::XLearner: return x_learner(ds, spec);
    case Method::RLearnerLite: return r_learner_lite(ds, spec);
    case Method::DidHte: return did_hte(ds, spec);
  }
  throw std::invalid_argument("fit_method: bad method");
}

}  // namespace hsl
