#ifndef HSL_REGRESS_HPP
#define HSL_REGRESS_HPP

#include <Eigen/Dense>
#include <vector>

namespace hsl {

enum class RegressorKind { OLS, Ridge, KernelSmoother, KNearest };

struct RegressorSpec {
  RegressorKind kind = RegressorKind::OLS;
  double alpha = 0.0;      // Ridge
  double bandwidth = 1.0;  // KernelSmoother; <= 0 requests leave-one-out CV
  int k = 5;               // KNearest

  static RegressorSpec ols() { return {RegressorKind::OLS, 0.0, 1.0, 5}; }
  static RegressorSpec ridge(double alpha) { return {RegressorKind::Ridge, alpha, 1.0, 5}; }
  static RegressorSpec kernel(double bandwidth) {
    return {RegressorKind::KernelSmoother, 0.0, bandwidth, 5};
  }
  static RegressorSpec knn(int k) { return {RegressorKind::KNearest, 0.0, 1.0, k}; }
};

/// A fitted x -> yhat map. Linear kinds store coefficients; kernel/kNN store
/// the training set. Evaluation is deterministic.
class HteModel {
 public:
  HteModel() = default;

  double predict(const Eigen::VectorXd& x) const;
  Eigen::VectorXd predict_rows(const Eigen::MatrixXd& xs) const;

  const RegressorSpec& spec() const { return spec_; }
  int dim() const { return d_; }
  // Linear kinds: [intercept, slope...].
  const Eigen::VectorXd& coefficients() const { return coef_; }

  friend HteModel fit(const RegressorSpec& spec, const Eigen::MatrixXd& x,
                      const Eigen::VectorXd& y);

 private:
  RegressorSpec spec_;
  int d_ = 0;
  Eigen::VectorXd coef_;    // OLS/Ridge
  Eigen::MatrixXd train_x;  // kernel/kNN
  Eigen::VectorXd train_y;
  double bandwidth_ = 1.0;  // resolved (post-CV) bandwidth
};

/// Fits the requested regressor with an intercept. Rank-deficient OLS throws,
/// directing the caller to Ridge. KernelSmoother with bandwidth <= 0 selects
/// the bandwidth by leave-one-out CV over {0.1, 0.25, 0.5, 1, 2}.
HteModel fit(const RegressorSpec& spec, const Eigen::MatrixXd& x,
             const Eigen::VectorXd& y);

struct PropensityModel {
  Eigen::VectorXd coefficients;  // [intercept, slope...]
  double clip = 0.01;
  bool boundary_flag = false;  // set when Newton stopped away from a stationary point

  double predict(const Eigen::VectorXd& x) const;
};

/// Logistic regression by damped Newton (max 100 iterations, gradient norm
/// tolerance 1e-10). Throws on single-class input.
PropensityModel fit_propensity(const Eigen::MatrixXd& x, const std::vector<bool>& treated,
                               double clip = 0.01);

inline double expit(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace hsl

#endif
