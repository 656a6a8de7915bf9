#include "ates/csv.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace ates {
namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

double parse_number(const std::string& cell) {
  if (cell == "nan" || cell.empty()) return std::nan("");
  std::size_t used = 0;
  const double v = std::stod(cell, &used);
  if (used != cell.size()) throw std::runtime_error("csv: not a number: " + cell);
  return v;
}

void write_row(std::ostream& out, const std::vector<std::string>& cells) {
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i > 0) out << ',';
    out << cells[i];
  }
  out << '\n';
}

std::vector<std::string> profile_header(const StateLayout& layout) {
  std::vector<std::string> h = {"k", "t_seconds", "u", "T_r", "T_b"};
  for (int i = 0; i < layout.profile_size(); ++i) h.push_back("Tw_" + std::to_string(i));
  for (int i = 0; i < layout.profile_size(); ++i) h.push_back("Tc_" + std::to_string(i));
  return h;
}

}  // namespace

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

std::size_t CsvTable::column(const std::string& name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw std::runtime_error("csv: missing column " + name);
  return static_cast<std::size_t>(it - header.begin());
}

double CsvTable::number(std::size_t row, const std::string& name) const {
  return parse_number(rows.at(row).at(column(name)));
}

CsvTable read_csv(std::istream& in) {
  CsvTable table;
  std::string line;
  if (!std::getline(in, line) || line.empty()) throw std::runtime_error("csv: empty input");
  table.header = split(line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto cells = split(line);
    if (cells.size() != table.header.size())
      throw std::runtime_error("csv: row " + std::to_string(table.rows.size() + 1) + " has " +
                               std::to_string(cells.size()) + " cells, header has " +
                               std::to_string(table.header.size()));
    table.rows.push_back(std::move(cells));
  }
  return table;
}

CsvTable read_csv_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("csv: cannot open " + path.string());
  return read_csv(in);
}

void write_trajectory_csv(std::ostream& out, const std::vector<Vector>& states,
                          const std::vector<double>& u, const std::vector<double>& t_r,
                          double dt, const StateLayout& layout) {
  if (u.size() != t_r.size() || u.size() > states.size())
    throw std::invalid_argument("trajectory: input and state lengths disagree");
  write_row(out, profile_header(layout));
  for (std::size_t k = 0; k < states.size(); ++k) {
    const Vector& x = states[k];
    if (x.size() != layout.size()) throw std::invalid_argument("trajectory: state size");
    const bool has_input = k < u.size();
    std::vector<std::string> row = {std::to_string(k), format_double(dt * static_cast<double>(k)),
                                    format_double(has_input ? u[k] : std::nan("")),
                                    format_double(has_input ? t_r[k] : std::nan(""))};
    for (Eigen::Index i = 0; i < x.size(); ++i) row.push_back(format_double(x[i]));
    write_row(out, row);
  }
}

Trajectory read_trajectory_csv(const CsvTable& table, const StateLayout& layout) {
  const auto header = profile_header(layout);
  std::vector<std::size_t> cols;
  for (const auto& name : header) cols.push_back(table.column(name));

  Trajectory traj;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    Vector x(layout.size());
    for (int i = 0; i < layout.size(); ++i) x[i] = parse_number(table.rows[r][cols[4 + i]]);
    traj.states.push_back(std::move(x));
    const double u = parse_number(table.rows[r][cols[2]]);
    const double t_r = parse_number(table.rows[r][cols[3]]);
    if (!std::isnan(u)) {
      if (traj.u.size() != r) throw std::runtime_error("trajectory: input gap at row " + std::to_string(r));
      traj.u.push_back(u);
      traj.t_r.push_back(t_r);
    }
  }
  return traj;
}

void write_measurements_csv(std::ostream& out, const std::vector<Vector>& measurements) {
  const int p = measurements.empty() ? 0 : static_cast<int>(measurements.front().size());
  std::vector<std::string> header = {"k"};
  for (int i = 0; i < p; ++i) header.push_back("y_" + std::to_string(i));
  write_row(out, header);
  for (std::size_t k = 0; k < measurements.size(); ++k) {
    std::vector<std::string> row = {std::to_string(k)};
    for (int i = 0; i < p; ++i) row.push_back(format_double(measurements[k][i]));
    write_row(out, row);
  }
}

std::vector<Vector> read_measurements_csv(const CsvTable& table) {
  std::vector<std::size_t> cols;
  for (int i = 0;; ++i) {
    const std::string name = "y_" + std::to_string(i);
    if (std::find(table.header.begin(), table.header.end(), name) == table.header.end()) break;
    cols.push_back(table.column(name));
  }
  if (cols.empty()) throw std::runtime_error("csv: missing column y_0");
  std::vector<Vector> ys;
  for (const auto& row : table.rows) {
    Vector y(static_cast<Eigen::Index>(cols.size()));
    for (std::size_t i = 0; i < cols.size(); ++i) y[static_cast<Eigen::Index>(i)] = parse_number(row[cols[i]]);
    ys.push_back(std::move(y));
  }
  return ys;
}

void write_estimates_csv(std::ostream& out, const EstimatorTrace& trace, int n) {
  std::vector<std::string> header = {"k", "estimator", "status"};
  for (int i = 0; i < n; ++i) header.push_back("xhat_" + std::to_string(i));
  for (const char* c : {"err_mean", "err_max", "qp_iters", "qp_residual"}) header.emplace_back(c);
  write_row(out, header);

  const std::string name(to_string(trace.kind));
  const std::string nan = format_double(std::nan(""));
  for (const auto& r : trace.rows) {
    std::vector<std::string> row = {std::to_string(r.k), name, r.status};
    for (int i = 0; i < n; ++i) row.push_back(r.estimate ? format_double((*r.estimate)[i]) : nan);
    row.push_back(r.estimate ? format_double(r.err_mean) : nan);
    row.push_back(r.estimate ? format_double(r.err_max) : nan);
    row.push_back(std::to_string(r.qp_iterations));
    row.push_back(format_double(r.qp_residual));
    write_row(out, row);
  }
}

void write_report_csv(std::ostream& out, const ComparisonReport& report) {
  write_row(out, {"k", "estimator", "status", "err_mean", "err_q025", "err_q975", "err_max_abs",
                  "violations"});
  const std::string nan = format_double(std::nan(""));
  for (const auto& trace : report.traces) {
    const std::string name(to_string(trace.kind));
    for (const auto& r : trace.rows) {
      const bool e = r.estimate.has_value();
      write_row(out, {std::to_string(r.k), name, r.status, e ? format_double(r.err_mean) : nan,
                      e ? format_double(r.err_q025) : nan, e ? format_double(r.err_q975) : nan,
                      e ? format_double(r.err_max) : nan, std::to_string(r.violations)});
    }
  }
}

void write_accuracy_csv(std::ostream& out, const AccuracyReport& report) {
  write_row(out, {"u", "mean_err", "std_err", "min_err", "max_err"});
  for (const auto& s : report.samples)
    write_row(out, {format_double(s.u), format_double(s.over_states.mean),
                    format_double(s.over_states.std), format_double(s.over_states.min),
                    format_double(s.over_states.max)});
}

void write_partition_accuracy_csv(std::ostream& out, const AccuracyReport& report,
                                  const std::vector<Partition>& partitions) {
  if (report.per_partition.size() != partitions.size())
    throw std::invalid_argument("accuracy: partition count mismatch");
  write_row(out, {"partition", "lower", "upper", "center", "count", "mean_err", "std_err",
                  "min_err", "max_err", "q025", "q975", "max_abs_err"});
  for (std::size_t i = 0; i < partitions.size(); ++i) {
    const ErrorStats& s = report.per_partition[i];
    const Partition& p = partitions[i];
    write_row(out, {std::to_string(i), format_double(p.lower), format_double(p.upper),
                    format_double(p.center), std::to_string(s.count), format_double(s.mean),
                    format_double(s.std), format_double(s.min), format_double(s.max),
                    format_double(s.q025), format_double(s.q975), format_double(s.max_abs)});
  }
}

void write_pwa_bundle(std::ostream& out, const PwaModel& pwa) {
  const auto& modes = pwa.modes();
  const Eigen::Index n = modes.empty() ? 0 : modes.front().A.rows();
  out << "pieces " << modes.size() << " n " << n << " u_max " << format_double(pwa.u_max())
      << '\n';
  for (std::size_t i = 0; i < modes.size(); ++i) {
    const AffineMode& m = modes[i];
    out << "piece " << i << " u_ref " << format_double(m.u_ref) << " lower "
        << format_double(m.region.lower) << " upper " << format_double(m.region.upper) << '\n';
    out << "A\n";
    for (Eigen::Index r = 0; r < n; ++r) {
      for (Eigen::Index c = 0; c < n; ++c) out << (c ? " " : "") << format_double(m.A(r, c));
      out << '\n';
    }
    out << "ambient\n";
    for (Eigen::Index r = 0; r < n; ++r) out << (r ? " " : "") << format_double(m.ambient[r]);
    out << "\nreturn_gain\n";
    for (Eigen::Index r = 0; r < n; ++r) out << (r ? " " : "") << format_double(m.return_gain[r]);
    out << '\n';
  }
}

void write_sensitivity_csv(std::ostream& out, const std::vector<SensitivityRow>& rows) {
  write_row(out, {"rhat_m", "rep", "inf_norm_diff"});
  for (const auto& r : rows)
    write_row(out, {format_double(r.rhat), std::to_string(r.rep), format_double(r.inf_norm_diff)});
}

}  // namespace ates
