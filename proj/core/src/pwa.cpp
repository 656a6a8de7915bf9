#include "ates/pwa.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>

namespace ates {

std::vector<Partition> build_partitions(double u_max, int s) {
  if (!(u_max > 0.0)) throw std::invalid_argument("partitions: u_max must be positive");
  if (s <= 3) throw std::invalid_argument("partitions: s must be greater than three");
  if (s % 2 == 0) throw std::invalid_argument("partitions: s must be odd");

  const double width = 2.0 * u_max / s;
  std::vector<Partition> parts(s);
  for (int i = 0; i < s; ++i) {
    parts[i].lower = i == 0 ? -u_max : parts[i - 1].upper;
    parts[i].upper = i == s - 1 ? u_max : -u_max + (i + 1) * width;
    parts[i].center = -u_max + (i + 0.5) * width;
  }
  parts[s / 2].center = 0.0;
  return parts;
}

int locate_partition(const std::vector<Partition>& parts, double u) {
  if (parts.empty() || !(u >= parts.front().lower) || !(u <= parts.back().upper))
    throw std::out_of_range("input " + std::to_string(u) + " outside the partitions");
  auto it = std::upper_bound(parts.begin(), parts.end(), u,
                             [](double v, const Partition& p) { return v < p.lower; });
  return static_cast<int>(std::distance(parts.begin(), it)) - 1;
}

AffineMode linearize_at(double u, const SurrogateModel& model) {
  AffineStep step = model.affine(u);
  AffineMode mode;
  mode.u_ref = u;
  mode.region = {u, u, u};
  mode.A = std::move(step.A);
  mode.ambient = std::move(step.ambient);
  mode.return_gain = std::move(step.return_gain);
  return mode;
}

OutputModel OutputModel::borehole_sensors(const StateLayout& layout) {
  OutputModel out;
  out.C = Matrix::Zero(3, layout.size());
  out.C(0, layout.building_outlet()) = 1.0;
  out.C(1, layout.warm_borehole()) = 1.0;
  out.C(2, layout.cold_borehole()) = 1.0;
  out.D = Vector::Zero(3);
  out.e = Vector::Zero(3);
  return out;
}

PwaModel::PwaModel(const SurrogateModel& nominal, double u_max, int s)
    : u_max_(u_max), middle_(s / 2), partitions_(build_partitions(u_max, s)) {
  modes_.reserve(s + 2);
  auto add = [&](double u_ref, Partition region) {
    AffineMode mode = linearize_at(u_ref, nominal);
    mode.region = region;
    modes_.push_back(std::move(mode));
  };
  for (int i = 0; i < s; ++i) {
    const Partition& p = partitions_[i];
    if (i != middle_) {
      add(p.center, p);
      continue;
    }
    add(0.5 * p.lower, {p.lower, 0.0, 0.5 * p.lower});
    add(0.0, {0.0, 0.0, 0.0});
    add(0.5 * p.upper, {0.0, p.upper, 0.5 * p.upper});
  }
}

int PwaModel::mode_index(double u) const {
  const int p = locate_partition(partitions_, u);
  if (p < middle_) return p;
  if (p > middle_) return p + 2;
  if (u < 0.0) return middle_;
  if (u == 0.0) return middle_ + 1;
  return middle_ + 2;
}

Vector pwa_step(const Vector& x, double u, double t_r, const PwaModel& model) {
  return model.step(x, u, t_r);
}

namespace {

double quantile_sorted(const std::vector<double>& sorted, double q) {
  if (sorted.size() == 1) return sorted.front();
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

}  // namespace

ErrorStats error_stats(std::vector<double> values) {
  ErrorStats st;
  if (values.empty()) return st;
  st.count = static_cast<int>(values.size());
  std::sort(values.begin(), values.end());
  st.min = values.front();
  st.max = values.back();
  st.max_abs = std::max(std::abs(st.min), std::abs(st.max));
  st.mean = std::accumulate(values.begin(), values.end(), 0.0) / st.count;
  double ss = 0.0;
  for (double v : values) ss += (v - st.mean) * (v - st.mean);
  st.std = st.count > 1 ? std::sqrt(ss / (st.count - 1)) : 0.0;
  st.q025 = quantile_sorted(values, 0.025);
  st.q975 = quantile_sorted(values, 0.975);
  return st;
}

AccuracyReport accuracy_study(const PwaModel& pwa, const SurrogateModel& nominal,
                              const std::vector<Vector>& state_pool,
                              const ScenarioConfig& cfg,
                              const AccuracyOptions& options) {
  if (options.n_samples < 1)
    throw std::invalid_argument("accuracy_study: n_samples must be >= 1");
  if (state_pool.empty())
    throw std::invalid_argument("accuracy_study: empty state pool");

  std::mt19937_64 rng(options.seed);
  std::uniform_int_distribution<std::size_t> pick(0, state_pool.size() - 1);
  std::uniform_real_distribution<double> flow(-pwa.u_max(), pwa.u_max());
  std::uniform_int_distribution<std::size_t> pick_center(0, pwa.partitions().size() - 1);

  const std::size_t n_parts = pwa.partitions().size();
  std::vector<std::vector<double>> by_partition(n_parts);
  std::vector<double> all;
  AccuracyReport report;
  report.samples.reserve(options.n_samples);

  for (int k = 0; k < options.n_samples; ++k) {
    const Vector& x = state_pool[pick(rng)];
    const double u = options.centers_only ? pwa.partitions()[pick_center(rng)].center
                                          : flow(rng);
    const double t_r = cfg.return_temperature(u);
    const Vector err = pwa.step(x, u, t_r) - nominal.step(x, u, t_r);

    std::vector<double> entries(err.data(), err.data() + err.size());
    auto& bucket = by_partition[locate_partition(pwa.partitions(), u)];
    bucket.insert(bucket.end(), entries.begin(), entries.end());
    all.insert(all.end(), entries.begin(), entries.end());
    report.samples.push_back({u, error_stats(std::move(entries))});
  }

  std::sort(report.samples.begin(), report.samples.end(),
            [](const AccuracySample& a, const AccuracySample& b) { return a.u < b.u; });
  report.per_partition.reserve(n_parts);
  for (auto& bucket : by_partition) report.per_partition.push_back(error_stats(std::move(bucket)));
  report.overall = error_stats(std::move(all));
  return report;
}

}  // namespace ates
