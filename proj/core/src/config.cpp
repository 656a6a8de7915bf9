#include "ates/config.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace ates {

namespace {

using nlohmann::json;

const std::set<std::string>& required_keys() {
  static const std::set<std::string> keys = {
      "porosity",    "c_a",         "c_w",        "lambda_nominal",
      "lambda_min",  "lambda_max",  "filter_length", "r0",
      "r_inf",       "n_cells",     "t_amb",      "dt",
      "u_max",       "q_b",         "ua",         "t_r_heat",
      "t_r_cool",    "mhe_horizon", "mpc_horizon", "partitions",
      "q_weight",    "r_weight",    "s_weight",   "seed"};
  return keys;
}

const std::set<std::string>& optional_keys() {
  static const std::set<std::string> keys = {
      "initial_guess_kelvin", "steps",         "meas_noise_std",
      "process_noise_bound",  "mpc_q_weight",  "mpc_r_weight",
      "mpc_node_budget",      "ukf_alpha",     "ukf_beta",
      "ukf_kappa"};
  return keys;
}

double get_number(const json& doc, const std::string& key) {
  const json& v = doc.at(key);
  if (!v.is_number()) throw ConfigError(key, key + ": expected a number");
  return v.get<double>();
}

int get_int(const json& doc, const std::string& key) {
  const json& v = doc.at(key);
  if (!v.is_number_integer())
    throw ConfigError(key, key + ": expected an integer");
  const auto value = v.get<long long>();
  if (value < std::numeric_limits<int>::min() ||
      value > std::numeric_limits<int>::max())
    throw ConfigError(key, key + ": out of range");
  return static_cast<int>(value);
}

template <typename T, typename Getter>
void optional(const json& doc, const std::string& key, T& target, Getter get) {
  if (doc.contains(key)) target = get(doc, key);
}

}  // namespace

ScenarioConfig load_config(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("document", std::string("document: ") + e.what());
  }
  if (!doc.is_object())
    throw ConfigError("document", "document: expected a JSON object");

  for (const auto& [key, value] : doc.items()) {
    if (!required_keys().contains(key) && !optional_keys().contains(key))
      throw ConfigError(key, key + ": unknown key");
  }
  for (const auto& key : required_keys()) {
    if (!doc.contains(key)) throw ConfigError(key, key + ": missing key");
  }

  ScenarioConfig cfg;
  cfg.aquifer.porosity = get_number(doc, "porosity");
  cfg.aquifer.heat_capacity = get_number(doc, "c_a");
  cfg.aquifer.water_heat_capacity = get_number(doc, "c_w");
  cfg.aquifer.conductivity = get_number(doc, "lambda_nominal");
  cfg.conductivity_min = get_number(doc, "lambda_min");
  cfg.conductivity_max = get_number(doc, "lambda_max");
  cfg.aquifer.filter_length = get_number(doc, "filter_length");
  cfg.aquifer.borehole_radius = get_number(doc, "r0");
  cfg.aquifer.domain_radius = get_number(doc, "r_inf");
  cfg.n_cells = get_int(doc, "n_cells");
  cfg.aquifer.ambient_temperature = get_number(doc, "t_amb");
  cfg.dt = get_number(doc, "dt");
  cfg.u_max = get_number(doc, "u_max");
  cfg.hx.building_flow = get_number(doc, "q_b");
  cfg.hx.conductance = get_number(doc, "ua");
  cfg.t_r_heat = get_number(doc, "t_r_heat");
  cfg.t_r_cool = get_number(doc, "t_r_cool");
  cfg.mhe_horizon = get_int(doc, "mhe_horizon");
  cfg.mpc_horizon = get_int(doc, "mpc_horizon");
  cfg.partitions = get_int(doc, "partitions");
  cfg.q_weight = get_number(doc, "q_weight");
  cfg.r_weight = get_number(doc, "r_weight");
  cfg.s_weight = get_number(doc, "s_weight");
  {
    const json& seed = doc.at("seed");
    if (!seed.is_number_unsigned() && !(seed.is_number_integer() && seed.get<long long>() >= 0))
      throw ConfigError("seed", "seed: expected a non-negative integer");
    cfg.seed = seed.get<std::uint64_t>();
  }

  cfg.initial_guess = cfg.aquifer.ambient_temperature;
  optional(doc, "initial_guess_kelvin", cfg.initial_guess, get_number);
  optional(doc, "steps", cfg.steps, get_int);
  optional(doc, "meas_noise_std", cfg.noise.measurement_std, get_number);
  optional(doc, "process_noise_bound", cfg.noise.process_bound, get_number);
  optional(doc, "mpc_q_weight", cfg.mpc_q_weight, get_number);
  optional(doc, "mpc_r_weight", cfg.mpc_r_weight, get_number);
  optional(doc, "mpc_node_budget", cfg.mpc_node_budget, get_int);
  optional(doc, "ukf_alpha", cfg.ukf_alpha, get_number);
  optional(doc, "ukf_beta", cfg.ukf_beta, get_number);
  optional(doc, "ukf_kappa", cfg.ukf_kappa, get_number);

  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    const std::string what = e.what();
    const auto colon = what.find(':');
    throw ConfigError(colon == std::string::npos ? "document" : what.substr(0, colon),
                      what);
  }
  return cfg;
}

ScenarioConfig load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("document", "cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return load_config(buffer.str());
}

std::string dump_config(const ScenarioConfig& cfg) {
  json doc = {
      {"porosity", cfg.aquifer.porosity},
      {"c_a", cfg.aquifer.heat_capacity},
      {"c_w", cfg.aquifer.water_heat_capacity},
      {"lambda_nominal", cfg.aquifer.conductivity},
      {"lambda_min", cfg.conductivity_min},
      {"lambda_max", cfg.conductivity_max},
      {"filter_length", cfg.aquifer.filter_length},
      {"r0", cfg.aquifer.borehole_radius},
      {"r_inf", cfg.aquifer.domain_radius},
      {"n_cells", cfg.n_cells},
      {"t_amb", cfg.aquifer.ambient_temperature},
      {"dt", cfg.dt},
      {"u_max", cfg.u_max},
      {"q_b", cfg.hx.building_flow},
      {"ua", cfg.hx.conductance},
      {"t_r_heat", cfg.t_r_heat},
      {"t_r_cool", cfg.t_r_cool},
      {"mhe_horizon", cfg.mhe_horizon},
      {"mpc_horizon", cfg.mpc_horizon},
      {"partitions", cfg.partitions},
      {"q_weight", cfg.q_weight},
      {"r_weight", cfg.r_weight},
      {"s_weight", cfg.s_weight},
      {"seed", cfg.seed},
      {"initial_guess_kelvin", cfg.initial_guess},
      {"steps", cfg.steps},
      {"meas_noise_std", cfg.noise.measurement_std},
      {"process_noise_bound", cfg.noise.process_bound},
      {"mpc_q_weight", cfg.mpc_q_weight},
      {"mpc_r_weight", cfg.mpc_r_weight},
      {"mpc_node_budget", cfg.mpc_node_budget},
      {"ukf_alpha", cfg.ukf_alpha},
      {"ukf_beta", cfg.ukf_beta},
      {"ukf_kappa", cfg.ukf_kappa},
  };
  return doc.dump(2);
}

ScenarioConfig default_scenario() {
  ScenarioConfig cfg;
  cfg.initial_guess = cfg.aquifer.ambient_temperature;
  return cfg;
}

}  // namespace ates
