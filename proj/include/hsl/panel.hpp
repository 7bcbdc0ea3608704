#ifndef HSL_PANEL_HPP
#define HSL_PANEL_HPP

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

namespace hsl {

enum class UnitSide { Treated, Control };

/// Balanced panel. Units are stored treated-first; original ids (when the
/// data came from a file) are kept in unit_ids. Immutable after construction.
struct PanelDataset {
  Eigen::MatrixXd outcomes;        // N x T
  Eigen::MatrixXd features;        // N x d
  std::vector<bool> treated_mask;  // length N
  int t0 = 0;                      // pre-treatment periods, 1 <= t0 <= T-1

  std::vector<std::string> unit_ids;  // optional, length N when present
  std::vector<long> periods;          // optional, length T when present

  int n_units() const { return static_cast<int>(outcomes.rows()); }
  int n_periods() const { return static_cast<int>(outcomes.cols()); }
  int n_features() const { return static_cast<int>(features.cols()); }
  int n_post() const { return n_periods() - t0; }

  int n_treated() const;
  int n_control() const;
  std::vector<int> treated_indices() const;
  std::vector<int> control_indices() const;

  // D_{i,t} = treated_mask[i] && t > t0 (t is 1-based here, column t-1).
  bool indicator(int unit, int period_1based) const {
    return treated_mask[unit] && period_1based > t0;
  }
};

struct ValidationReport {
  std::vector<std::string> violations;
  bool ok() const { return violations.empty(); }
};

/// Checks the PanelDataset invariants without mutating the input.
ValidationReport validate(const PanelDataset& ds);

/// Throws std::invalid_argument listing all violations when validation fails.
void require_valid(const PanelDataset& ds);

struct ColumnSpec {
  // When set, overrides t0 inference (last period with all D = 0).
  std::optional<int> t0;
};

/// Reads a long-format CSV: unit_id,period,outcome,treated,x1,...,xd.
/// Units are normalized to treated-first order; original ids preserved.
PanelDataset load_csv(const std::string& path, const ColumnSpec& schema = {});

/// Writes the same long format load_csv reads; doubles round-trip bitwise.
void write_csv(const PanelDataset& ds, const std::string& path);

}  // namespace hsl

#endif
