#include "hsl/panel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace hsl {

int PanelDataset::n_treated() const {
  return static_cast<int>(std::count(treated_mask.begin(), treated_mask.end(), true));
}

int PanelDataset::n_control() const { return n_units() - n_treated(); }

std::vector<int> PanelDataset::treated_indices() const {
  std::vector<int> idx;
  for (int i = 0; i < n_units(); ++i)
    if (treated_mask[i]) idx.push_back(i);
  return idx;
}

std::vector<int> PanelDataset::control_indices() const {
  std::vector<int> idx;
  for (int i = 0; i < n_units(); ++i)
    if (!treated_mask[i]) idx.push_back(i);
  return idx;
}

ValidationReport validate(const PanelDataset& ds) {
  ValidationReport rep;
  const int n = ds.n_units();
  const int t = ds.n_periods();

  if (n < 2) rep.violations.push_back("need at least 2 units");
  if (t < 2) rep.violations.push_back("need at least 2 periods");
  if (ds.features.cols() < 1) rep.violations.push_back("need at least 1 feature");
  if (ds.features.rows() != n)
    rep.violations.push_back("feature rows do not match unit count");
  if (static_cast<int>(ds.treated_mask.size()) != n)
    rep.violations.push_back("treated_mask length does not match unit count");
  if (!ds.outcomes.allFinite()) rep.violations.push_back("non-finite outcome entries");
  if (!ds.features.allFinite()) rep.violations.push_back("non-finite feature entries");

  if (ds.t0 < 1) rep.violations.push_back("t0 must be at least 1");
  if (ds.t0 > t - 1) rep.violations.push_back("no post-period (t0 must be <= T-1)");

  if (static_cast<int>(ds.treated_mask.size()) == n && n > 0) {
    const int m = ds.n_treated();
    if (m < 1) rep.violations.push_back("no treated units");
    if (n - m < 1) rep.violations.push_back("no control units");
  }
  return rep;
}

void require_valid(const PanelDataset& ds) {
  const ValidationReport rep = validate(ds);
  if (rep.ok()) return;
  std::string msg = "invalid panel:";
  for (const auto& v : rep.violations) msg += " [" + v + "]";
  throw std::invalid_argument(msg);
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

double parse_double(const std::string& s, std::size_t row) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    throw std::runtime_error("parse error at row " + std::to_string(row) +
                             ": non-numeric value '" + s + "'");
  }
  if (pos != s.size())
    throw std::runtime_error("parse error at row " + std::to_string(row) +
                             ": non-numeric value '" + s + "'");
  return v;
}

struct Cell {
  double outcome;
  int treated;
  std::vector<double> features;
};

}  // namespace

PanelDataset load_csv(const std::string& path, const ColumnSpec& schema) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open file: " + path);

  std::string header;
  if (!std::getline(in, header)) throw std::runtime_error("empty file: " + path);
  const auto cols = split_line(header);
  if (cols.size() < 5 || cols[0] != "unit_id" || cols[1] != "period" ||
      cols[2] != "outcome" || cols[3] != "treated")
    throw std::runtime_error("bad header, expected unit_id,period,outcome,treated,x1,...");
  const int d = static_cast<int>(cols.size()) - 4;

  // unit -> period -> cell, insertion order of units preserved separately
  std::map<std::string, std::map<long, Cell>> table;
  std::vector<std::string> unit_order;

  std::string line;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    const auto f = split_line(line);
    if (static_cast<int>(f.size()) != d + 4)
      throw std::runtime_error("row " + std::to_string(row) + ": wrong column count");
    Cell cell;
    const long period = static_cast<long>(parse_double(f[1], row));
    if (period <= 0)
      throw std::runtime_error("row " + std::to_string(row) + ": period must be positive");
    cell.outcome = parse_double(f[2], row);
    const double tr = parse_double(f[3], row);
    if (tr != 0.0 && tr != 1.0)
      throw std::runtime_error("row " + std::to_string(row) + ": treated must be 0 or 1");
    cell.treated = static_cast<int>(tr);
    cell.features.resize(d);
    for (int k = 0; k < d; ++k) cell.features[k] = parse_double(f[4 + k], row);

    if (table.find(f[0]) == table.end()) unit_order.push_back(f[0]);
    auto& per_unit = table[f[0]];
    if (per_unit.count(period))
      throw std::runtime_error("duplicate cell for unit " + f[0] + " period " +
                               std::to_string(period));
    per_unit[period] = std::move(cell);
  }
  if (unit_order.empty()) throw std::runtime_error("no data rows in " + path);

  // Balanced check: every unit must carry the same period set.
  const auto& ref = table[unit_order.front()];
  std::vector<long> periods;
  for (const auto& [p, _] : ref) periods.push_back(p);
  for (const auto& id : unit_order) {
    const auto& per_unit = table[id];
    if (per_unit.size() != periods.size())
      throw std::runtime_error("unbalanced panel: unit " + id + " has " +
                               std::to_string(per_unit.size()) + " periods, expected " +
                               std::to_string(periods.size()));
    for (long p : periods)
      if (!per_unit.count(p))
        throw std::runtime_error("unbalanced panel: unit " + id + " missing period " +
                                 std::to_string(p));
  }

  const int n = static_cast<int>(unit_order.size());
  const int t = static_cast<int>(periods.size());

  // Infer t0 as the last period index with all D = 0 unless overridden.
  int t0;
  if (schema.t0) {
    t0 = *schema.t0;
  } else {
    t0 = 0;
    for (int j = 0; j < t; ++j) {
      bool any_treated = false;
      for (const auto& id : unit_order)
        if (table[id].at(periods[j]).treated) any_treated = true;
      if (!any_treated)
        t0 = j + 1;
      else
        break;
    }
    if (t0 == 0) throw std::runtime_error("cannot infer t0: treatment active in period 1");
    if (t0 == t) throw std::runtime_error("cannot infer t0: no treated observations");
  }

  // Unit-level treated flag, and consistency of the per-cell indicator with
  // D_{i,t} = treated_i && t > t0.
  std::vector<bool> treated(n);
  for (int i = 0; i < n; ++i) {
    const auto& per_unit = table[unit_order[i]];
    bool any = false;
    for (int j = t0; j < t; ++j) any = any || per_unit.at(periods[j]).treated;
    treated[i] = any;
    for (int j = 0; j < t; ++j) {
      const bool expect = any && (j + 1 > t0);
      const bool got = per_unit.at(periods[j]).treated != 0;
      if (got && j + 1 <= t0)
        throw std::runtime_error("treatment before t0 for unit " + unit_order[i]);
      if (got != expect)
        throw std::runtime_error("inconsistent treatment indicator for unit " +
                                 unit_order[i] + " (treatment must persist through T)");
    }
  }

  // Time-invariant features.
  for (int i = 0; i < n; ++i) {
    const auto& per_unit = table[unit_order[i]];
    const auto& first = per_unit.at(periods[0]).features;
    for (int j = 1; j < t; ++j)
      if (per_unit.at(periods[j]).features != first)
        throw std::runtime_error("time-varying feature for unit " + unit_order[i]);
  }

  // Normalize to treated-first order, stable within each block.
  std::vector<int> order;
  for (int i = 0; i < n; ++i)
    if (treated[i]) order.push_back(i);
  for (int i = 0; i < n; ++i)
    if (!treated[i]) order.push_back(i);

  PanelDataset ds;
  ds.outcomes.resize(n, t);
  ds.features.resize(n, d);
  ds.treated_mask.resize(n);
  ds.unit_ids.resize(n);
  ds.periods = periods;
  ds.t0 = t0;
  for (int r = 0; r < n; ++r) {
    const int i = order[r];
    const auto& per_unit = table[unit_order[i]];
    for (int j = 0; j < t; ++j) ds.outcomes(r, j) = per_unit.at(periods[j]).outcome;
    const auto& fx = per_unit.at(periods[0]).features;
    for (int k = 0; k < d; ++k) ds.features(r, k) = fx[k];
    ds.treated_mask[r] = treated[i];
    ds.unit_ids[r] = unit_order[i];
  }
  return ds;
}

void write_csv(const PanelDataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  const int d = ds.n_features();
  out << "unit_id,period,outcome,treated";
  for (int k = 1; k <= d; ++k) out << ",x" << k;
  out << "\n";
  char buf[40];
  for (int i = 0; i < ds.n_units(); ++i) {
    const std::string id =
        ds.unit_ids.empty() ? ("u" + std::to_string(i + 1)) : ds.unit_ids[i];
    for (int j = 0; j < ds.n_periods(); ++j) {
      const long period = ds.periods.empty() ? (j + 1) : ds.periods[j];
      out << id << ',' << period << ',';
      std::snprintf(buf, sizeof buf, "%.17g", ds.outcomes(i, j));
      out << buf << ',' << (ds.indicator(i, j + 1) ? 1 : 0);
      for (int k = 0; k < d; ++k) {
        std::snprintf(buf, sizeof buf, "%.17g", ds.features(i, k));
        out << ',' << buf;
      }
      out << "\n";
    }
  }
}

}  // namespace hsl
