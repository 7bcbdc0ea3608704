#include "hsl/projection.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace hsl {

namespace {

// Threshold theta with sum_j max(a_j - theta, 0) = radius, for a sorted
// descending vector a with l1 norm exceeding radius.
double sorted_threshold(std::vector<double>& a, double radius) {
  std::sort(a.begin(), a.end(), std::greater<double>());
  double cumsum = 0.0;
  double theta = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    cumsum += a[k];
    const double cand = (cumsum - radius) / static_cast<double>(k + 1);
    if (k + 1 == a.size() || a[k + 1] <= cand) {
      theta = cand;
      break;
    }
  }
  return theta;
}

}  // namespace

Eigen::VectorXd project_l1_ball(const Eigen::VectorXd& v, double radius) {
  if (!v.allFinite()) throw std::invalid_argument("project_l1_ball: non-finite input");
  if (!(radius > 0.0) || !std::isfinite(radius))
    throw std::invalid_argument("project_l1_ball: radius must be positive and finite");

  // Tiny relative slack so that re-projecting a boundary point (whose norm
  // can land a few ulps above radius) is an exact no-op.
  if (v.lpNorm<1>() <= radius * (1.0 + 1e-12)) return v;

  std::vector<double> mag(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) mag[i] = std::abs(v[i]);
  const double theta = sorted_threshold(mag, radius);

  Eigen::VectorXd out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double shrunk = std::max(std::abs(v[i]) - theta, 0.0);
    out[i] = (v[i] < 0.0 ? -shrunk : shrunk);
  }
  return out;
}

Eigen::VectorXd project_simplex(const Eigen::VectorXd& v) {
  if (!v.allFinite()) throw std::invalid_argument("project_simplex: non-finite input");
  if (v.size() == 0) throw std::invalid_argument("project_simplex: empty input");

  std::vector<double> a(v.data(), v.data() + v.size());
  std::sort(a.begin(), a.end(), std::greater<double>());
  double cumsum = 0.0;
  double theta = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    cumsum += a[k];
    const double cand = (cumsum - 1.0) / static_cast<double>(k + 1);
    if (a[k] - cand > 0.0) theta = cand;
  }

  Eigen::VectorXd out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) out[i] = std::max(v[i] - theta, 0.0);
  return out;
}

}  // namespace hsl
