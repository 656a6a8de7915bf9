#pragma once

#include "ates/domain.hpp"
#include "ates/experiments.hpp"
#include "ates/mpc.hpp"
#include "ates/pwa.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace ates {

/// 17 significant digits; NaN is written as "nan".
std::string format_double(double value);

/// Header plus rows of a comma separated file. Cells are kept as text.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Throws std::runtime_error naming the column if it is missing.
  std::size_t column(const std::string& name) const;
  double number(std::size_t row, const std::string& name) const;
};

/// Throws std::runtime_error on an empty file or ragged rows.
CsvTable read_csv(std::istream& in);
CsvTable read_csv_file(const std::filesystem::path& path);

/// Trajectory in the layout k, t_seconds, u, T_r, T_b, Tw_0.., Tc_0..
/// u and t_r may be one shorter than states (the last state has no input);
/// missing inputs are written as nan.
void write_trajectory_csv(std::ostream& out, const std::vector<Vector>& states,
                          const std::vector<double>& u, const std::vector<double>& t_r,
                          double dt, const StateLayout& layout);

struct Trajectory {
  std::vector<Vector> states;
  std::vector<double> u;
  std::vector<double> t_r;
};
Trajectory read_trajectory_csv(const CsvTable& table, const StateLayout& layout);

/// k, y_0 .. y_{p-1}
void write_measurements_csv(std::ostream& out, const std::vector<Vector>& measurements);
std::vector<Vector> read_measurements_csv(const CsvTable& table);

/// k, estimator, status, xhat_0 .., err_mean, err_max, qp_iters, qp_residual.
/// Rows without an estimate carry nan.
void write_estimates_csv(std::ostream& out, const EstimatorTrace& trace, int n);

/// k, estimator, status, err_mean, err_q025, err_q975, err_max_abs,
/// violations; one row per step and estimator.
void write_report_csv(std::ostream& out, const ComparisonReport& report);

/// u, mean_err, std_err, min_err, max_err; one row per sample.
void write_accuracy_csv(std::ostream& out, const AccuracyReport& report);

/// partition, lower, upper, center, count, mean_err, std_err, min_err,
/// max_err, q025, q975, max_abs_err
void write_partition_accuracy_csv(std::ostream& out, const AccuracyReport& report,
                                  const std::vector<Partition>& partitions);

/// Text bundle: one block per affine piece with u_ref, region, A (row
/// major), the ambient offset and the return-temperature gain.
void write_pwa_bundle(std::ostream& out, const PwaModel& pwa);

/// rhat_m, rep, inf_norm_diff
void write_sensitivity_csv(std::ostream& out, const std::vector<SensitivityRow>& rows);

}  // namespace ates
