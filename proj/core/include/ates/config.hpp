#pragma once

#include "ates/domain.hpp"

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>

namespace ates {

/// Rejected scenario document. `field()` names the offending key (or
/// "mesh" for inconsistent geometry).
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(std::string field, const std::string& what)
      : std::invalid_argument(what), field_(std::move(field)) {}

  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

/// Parses a flat JSON object of scenario keys.
///
/// Required keys: porosity, c_a, c_w, lambda_nominal, lambda_min, lambda_max,
/// filter_length, r0, r_inf, n_cells, t_amb, dt, u_max, q_b, ua, t_r_heat,
/// t_r_cool, mhe_horizon, mpc_horizon, partitions, q_weight, r_weight,
/// s_weight, seed.
///
/// Optional keys (defaults in ScenarioConfig): initial_guess_kelvin, steps,
/// meas_noise_std, process_noise_bound, mpc_q_weight, mpc_r_weight,
/// mpc_node_budget, ukf_alpha, ukf_beta, ukf_kappa.
ScenarioConfig load_config(std::string_view text);
ScenarioConfig load_config_file(const std::filesystem::path& path);

/// Serializes a config back to the document format (all keys).
std::string dump_config(const ScenarioConfig& cfg);

/// The parameter set used throughout the numerical studies.
ScenarioConfig default_scenario();

}  // namespace ates
