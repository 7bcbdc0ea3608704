#include "hsl/regress.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace hsl {

namespace {

Eigen::MatrixXd with_intercept(const Eigen::MatrixXd& x) {
  Eigen::MatrixXd z(x.rows(), x.cols() + 1);
  z.col(0).setOnes();
  z.rightCols(x.cols()) = x;
  return z;
}

Eigen::VectorXd solve_ols(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  const Eigen::MatrixXd z = with_intercept(x);
  if (z.rows() < z.cols())
    throw std::invalid_argument("OLS: fewer rows than coefficients; use Ridge");
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(z);
  qr.setThreshold(1e-10);
  if (qr.rank() < z.cols())
    throw std::invalid_argument("OLS: rank-deficient design; use Ridge");
  return qr.solve(y);
}

Eigen::VectorXd solve_ridge(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                            double alpha) {
  if (alpha < 0.0) throw std::invalid_argument("Ridge: alpha must be >= 0");
  const Eigen::MatrixXd z = with_intercept(x);
  Eigen::MatrixXd ztz = z.transpose() * z;
  for (Eigen::Index k = 1; k < ztz.rows(); ++k) ztz(k, k) += alpha;  // intercept unpenalized
  return ztz.ldlt().solve(z.transpose() * y);
}

double kernel_predict(const Eigen::MatrixXd& train_x, const Eigen::VectorXd& train_y,
                      double bandwidth, const Eigen::VectorXd& x, Eigen::Index skip = -1) {
  const Eigen::Index q = train_x.rows();
  Eigen::VectorXd d2(q);
  for (Eigen::Index i = 0; i < q; ++i)
    d2[i] = (train_x.row(i).transpose() - x).squaredNorm();
  // Shift by the smallest distance so the largest weight is exactly 1.
  double dmin = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < q; ++i)
    if (i != skip) dmin = std::min(dmin, d2[i]);
  const double inv = 1.0 / (2.0 * bandwidth * bandwidth);
  double wsum = 0.0, ysum = 0.0;
  for (Eigen::Index i = 0; i < q; ++i) {
    if (i == skip) continue;
    const double w = std::exp(-(d2[i] - dmin) * inv);
    wsum += w;
    ysum += w * train_y[i];
  }
  return ysum / wsum;
}

double knn_predict(const Eigen::MatrixXd& train_x, const Eigen::VectorXd& train_y, int k,
                   const Eigen::VectorXd& x) {
  const Eigen::Index q = train_x.rows();
  std::vector<std::pair<double, Eigen::Index>> dist(q);
  for (Eigen::Index i = 0; i < q; ++i)
    dist[i] = {(train_x.row(i).transpose() - x).squaredNorm(), i};
  const int kk = std::min<int>(k, static_cast<int>(q));
  std::partial_sort(dist.begin(), dist.begin() + kk, dist.end());
  double sum = 0.0;
  for (int i = 0; i < kk; ++i) sum += train_y[dist[i].second];
  return sum / kk;
}

double loocv_bandwidth(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  static const double grid[] = {0.1, 0.25, 0.5, 1.0, 2.0};
  const Eigen::Index q = x.rows();
  double best_h = grid[0];
  double best_err = std::numeric_limits<double>::infinity();
  for (double h : grid) {
    double err = 0.0;
    for (Eigen::Index i = 0; i < q; ++i) {
      const double pred = kernel_predict(x, y, h, x.row(i).transpose(), i);
      err += (pred - y[i]) * (pred - y[i]);
    }
    if (err < best_err) {
      best_err = err;
      best_h = h;
    }
  }
  return best_h;
}

}  // namespace

double HteModel::predict(const Eigen::VectorXd& x) const {
  if (x.size() != d_) throw std::invalid_argument("HteModel: dimension mismatch");
  switch (spec_.kind) {
    case RegressorKind::OLS:
    case RegressorKind::Ridge:
      return coef_[0] + coef_.tail(d_).dot(x);
    case RegressorKind::KernelSmoother:
      return kernel_predict(train_x, train_y, bandwidth_, x);
    case RegressorKind::KNearest:
      return knn_predict(train_x, train_y, spec_.k, x);
  }
  return 0.0;
}

Eigen::VectorXd HteModel::predict_rows(const Eigen::MatrixXd& xs) const {
  Eigen::VectorXd out(xs.rows());
  for (Eigen::Index i = 0; i < xs.rows(); ++i) out[i] = predict(xs.row(i).transpose());
  return out;
}

HteModel fit(const RegressorSpec& spec, const Eigen::MatrixXd& x,
             const Eigen::VectorXd& y) {
  if (x.rows() < 1 || x.rows() != y.size())
    throw std::invalid_argument("fit: empty or mismatched training data");
  if (!x.allFinite() || !y.allFinite())
    throw std::invalid_argument("fit: non-finite training data");

  HteModel model;
  model.spec_ = spec;
  model.d_ = static_cast<int>(x.cols());
  switch (spec.kind) {
    case RegressorKind::OLS:
      model.coef_ = solve_ols(x, y);
      break;
    case RegressorKind::Ridge:
      model.coef_ = solve_ridge(x, y, spec.alpha);
      break;
    case RegressorKind::KernelSmoother:
      model.train_x = x;
      model.train_y = y;
      model.bandwidth_ = spec.bandwidth > 0.0 ? spec.bandwidth : loocv_bandwidth(x, y);
      break;
    case RegressorKind::KNearest:
      if (spec.k < 1) throw std::invalid_argument("kNN: k must be >= 1");
      model.train_x = x;
      model.train_y = y;
      break;
  }
  return model;
}

double PropensityModel::predict(const Eigen::VectorXd& x) const {
  const double z = coefficients[0] + coefficients.tail(x.size()).dot(x);
  return std::clamp(expit(z), clip, 1.0 - clip);
}

PropensityModel fit_propensity(const Eigen::MatrixXd& x, const std::vector<bool>& treated,
                               double clip) {
  const Eigen::Index n = x.rows();
  if (static_cast<Eigen::Index>(treated.size()) != n)
    throw std::invalid_argument("fit_propensity: size mismatch");
  const long pos = std::count(treated.begin(), treated.end(), true);
  if (pos == 0 || pos == n)
    throw std::invalid_argument("fit_propensity: single-class input");

  const Eigen::MatrixXd z = with_intercept(x);
  Eigen::VectorXd d(n);
  for (Eigen::Index i = 0; i < n; ++i) d[i] = treated[i] ? 1.0 : 0.0;

  const Eigen::Index p = z.cols();
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);

  auto neg_loglik = [&](const Eigen::VectorXd& b) {
    const Eigen::VectorXd eta = z * b;
    double ll = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
      ll += std::log1p(std::exp(-std::abs(eta[i]))) +
            (eta[i] > 0 ? (d[i] ? 0.0 : eta[i]) : (d[i] ? -eta[i] : 0.0));
    return ll;
  };

  double f = neg_loglik(beta);
  bool converged = false;
  for (int it = 0; it < 100 && !converged; ++it) {
    const Eigen::VectorXd eta = z * beta;
    Eigen::VectorXd mu(n), w(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      mu[i] = expit(eta[i]);
      w[i] = std::max(mu[i] * (1.0 - mu[i]), 1e-12);
    }
    const Eigen::VectorXd grad = z.transpose() * (mu - d);
    if (grad.norm() <= 1e-10) {
      converged = true;
      break;
    }
    const Eigen::MatrixXd hess = z.transpose() * w.asDiagonal() * z;
    Eigen::VectorXd dir = hess.ldlt().solve(grad);
    double step = 1.0;
    for (int h = 0; h < 40; ++h) {
      const Eigen::VectorXd cand = beta - step * dir;
      const double fc = neg_loglik(cand);
      if (fc < f) {
        beta = cand;
        f = fc;
        break;
      }
      step *= 0.5;
      if (h == 39) converged = true;  // no improving step left
    }
  }

  PropensityModel model;
  model.coefficients = beta;
  model.clip = clip;
  model.boundary_flag = !converged || (z * beta).cwiseAbs().maxCoeff() > 30.0;
  // One more gradient check: perfect separation keeps improving until the
  // iteration cap, which is reported as a boundary diagnostic rather than an
  // error.
  {
    const Eigen::VectorXd eta = z * beta;
    Eigen::VectorXd mu(n);
    for (Eigen::Index i = 0; i < n; ++i) mu[i] = expit(eta[i]);
    if ((z.transpose() * (mu - d)).norm() > 1e-6) model.boundary_flag = true;
  }
  return model;
}

}  // namespace hsl
