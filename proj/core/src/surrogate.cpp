#include "ates/surrogate.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace ates {

namespace {

constexpr int kIdle = 0;
constexpr int kExtract = 1;
constexpr int kInject = 2;

// In-place Thomas solve; lower[0] and upper[n-1] are ignored.
void solve_tridiagonal(Vector lower, Vector diag, Vector upper, Vector& rhs) {
  const Eigen::Index n = diag.size();
  for (Eigen::Index i = 1; i < n; ++i) {
    if (diag[i - 1] == 0.0)
      throw std::runtime_error("surrogate: singular implicit system");
    const double m = lower[i] / diag[i - 1];
    diag[i] -= m * upper[i - 1];
    rhs[i] -= m * rhs[i - 1];
  }
  if (diag[n - 1] == 0.0)
    throw std::runtime_error("surrogate: singular implicit system");
  rhs[n - 1] /= diag[n - 1];
  for (Eigen::Index i = n - 2; i >= 0; --i)
    rhs[i] = (rhs[i] - upper[i] * rhs[i + 1]) / diag[i];
}

}  // namespace

Mode mode_of(double u) {
  if (u > 0.0) return Mode::Heating;
  if (u < 0.0) return Mode::Cooling;
  return Mode::Inactivity;
}

std::string_view to_string(Mode mode) {
  switch (mode) {
    case Mode::Cooling: return "cooling";
    case Mode::Inactivity: return "inactivity";
    case Mode::Heating: return "heating";
  }
  return "unknown";
}

double darcy_velocity(double u, double r, double l, double porosity) {
  if (!(r > 0.0)) throw std::invalid_argument("darcy_velocity: r must be positive");
  if (!(l > 0.0)) throw std::invalid_argument("darcy_velocity: l must be positive");
  if (!(porosity > 0.0 && porosity < 1.0))
    throw std::invalid_argument("darcy_velocity: porosity must lie in (0, 1)");
  return u / (2.0 * std::numbers::pi * r * l * porosity);
}

double hx_alpha(double u, const HxParams& hx, double water_heat_capacity) {
  if (u == 0.0)
    throw std::invalid_argument("hx_alpha: undefined without flow through the exchanger");
  const double flow = std::abs(u);
  const double ratio = flow / hx.building_flow;
  const double ntu = hx.conductance / (water_heat_capacity * flow);
  const double alpha = -std::expm1(-ntu * (1.0 + ratio)) / (1.0 + ratio);
  return std::clamp(alpha, 0.0, 1.0);
}

ConductivityField ConductivityField::uniform(int n_cells, double lambda) {
  return {Vector::Constant(n_cells, lambda), Vector::Constant(n_cells, lambda)};
}

ConductivityField ConductivityField::sample(int n_cells, double lo, double hi,
                                            std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(lo, hi);
  ConductivityField field{Vector(n_cells), Vector(n_cells)};
  for (int i = 0; i < n_cells; ++i) field.warm[i] = dist(rng);
  for (int i = 0; i < n_cells; ++i) field.cold[i] = dist(rng);
  return field;
}

SurrogateModel::SurrogateModel(const ScenarioConfig& cfg)
    : SurrogateModel(cfg, ConductivityField::uniform(cfg.n_cells,
                                                     cfg.aquifer.conductivity)) {}

SurrogateModel::SurrogateModel(const ScenarioConfig& cfg, ConductivityField field)
    : layout_(cfg.n_cells),
      mesh_(cfg.mesh()),
      aquifer_(cfg.aquifer),
      hx_(cfg.hx),
      field_(std::move(field)),
      dt_(cfg.dt) {
  if (field_.warm.size() != cfg.n_cells || field_.cold.size() != cfg.n_cells)
    throw std::invalid_argument("conductivity field length must equal n_cells");
  if ((field_.warm.array() <= 0.0).any() || (field_.cold.array() <= 0.0).any())
    throw std::invalid_argument("conductivity must be positive in every cell");
  if (!(dt_ > 0.0)) throw std::invalid_argument("dt must be positive");
}

SurrogateModel SurrogateModel::perturbed(const ScenarioConfig& cfg,
                                         std::mt19937_64& rng) {
  return SurrogateModel(cfg, ConductivityField::sample(cfg.n_cells, cfg.conductivity_min,
                                                       cfg.conductivity_max, rng));
}

void SurrogateModel::step_storage(const Vector& old_cells, const Vector& lambda,
                                  int role, double flow_rate, double t_inj,
                                  double t_amb, Vector& new_cells) const {
  const int n = mesh_.size();
  const auto faces = mesh_.faces();
  const auto centers = mesh_.centers();
  const auto volumes = mesh_.volumes();
  const double two_pi_l = 2.0 * std::numbers::pi * mesh_.filter_length();

  Vector lower = Vector::Zero(n);
  Vector diag(n);
  Vector upper = Vector::Zero(n);
  Vector rhs(n);

  for (int i = 0; i < n; ++i) {
    const double cap = aquifer_.heat_capacity * volumes[i] / dt_;
    diag[i] = cap;
    rhs[i] = cap * old_cells[i];
  }
  // Interior faces.
  for (int i = 0; i + 1 < n; ++i) {
    const double lam = 2.0 * lambda[i] * lambda[i + 1] / (lambda[i] + lambda[i + 1]);
    const double g = two_pi_l * faces[i + 1] * lam / (centers[i + 1] - centers[i]);
    diag[i] += g;
    diag[i + 1] += g;
    upper[i] -= g;
    lower[i + 1] -= g;
  }
  // Far face.
  if (far_ == FarBoundary::Ambient) {
    const double g =
        two_pi_l * faces[n] * lambda[n - 1] / (faces[n] - centers[n - 1]);
    diag[n - 1] += g;
    rhs[n - 1] += g * t_amb;
  }
  // Borehole face: conduction only towards an injected temperature.
  if (role == kInject) {
    const double g = two_pi_l * faces[0] * lambda[0] / (centers[0] - faces[0]);
    diag[0] += g;
    rhs[0] += g * t_inj;
  }
  if (role == kInject) {
    for (int i = 0; i < n; ++i) {
      diag[i] += flow_rate;
      if (i > 0) lower[i] -= flow_rate;
    }
    rhs[0] += flow_rate * t_inj;
  } else if (role == kExtract) {
    for (int i = 0; i < n; ++i) {
      diag[i] += flow_rate;
      if (i + 1 < n) upper[i] -= flow_rate;
    }
    rhs[n - 1] += flow_rate * t_amb;
  }

  solve_tridiagonal(std::move(lower), std::move(diag), std::move(upper), rhs);
  new_cells = std::move(rhs);
}

Vector SurrogateModel::step_impl(const Vector& x, double u, double t_r,
                                 double t_amb) const {
  if (x.size() != layout_.size())
    throw std::invalid_argument("step: state length does not match layout");
  if (!std::isfinite(u) || !std::isfinite(t_r))
    throw std::invalid_argument("step: non-finite input");

  const int n = layout_.cells();
  const Vector warm_cells = x.segment(layout_.warm_cell(0), n);
  const Vector cold_cells = x.segment(layout_.cold_cell(0), n);
  Vector warm_new;
  Vector cold_new;
  Vector next(layout_.size());

  const Mode mode = mode_of(u);
  if (mode == Mode::Inactivity) {
    step_storage(warm_cells, field_.warm, kIdle, 0.0, 0.0, t_amb, warm_new);
    step_storage(cold_cells, field_.cold, kIdle, 0.0, 0.0, t_amb, cold_new);
    next[layout_.building_outlet()] = t_r;
    next[layout_.warm_borehole()] = warm_new[0];
    next[layout_.cold_borehole()] = cold_new[0];
  } else {
    const double alpha = hx_alpha(u, hx_, aquifer_.water_heat_capacity);
    const double flow_rate = aquifer_.water_heat_capacity * std::abs(u);
    const double alpha_b = std::abs(u) / hx_.building_flow * alpha;
    const bool heating = mode == Mode::Heating;
    const double t_ext =
        x[heating ? layout_.warm_borehole() : layout_.cold_borehole()];
    const double t_inj = (1.0 - alpha) * t_ext + alpha * t_r;

    step_storage(warm_cells, field_.warm, heating ? kExtract : kInject, flow_rate,
                 t_inj, t_amb, warm_new);
    step_storage(cold_cells, field_.cold, heating ? kInject : kExtract, flow_rate,
                 t_inj, t_amb, cold_new);
    next[layout_.building_outlet()] = t_r + alpha_b * (t_ext - t_r);
    next[layout_.warm_borehole()] = heating ? warm_new[0] : t_inj;
    next[layout_.cold_borehole()] = heating ? t_inj : cold_new[0];
  }
  next.segment(layout_.warm_cell(0), n) = warm_new;
  next.segment(layout_.cold_cell(0), n) = cold_new;
  return next;
}

Vector SurrogateModel::step(const Vector& x, double u, double t_r) const {
  return step_impl(x, u, t_r, aquifer_.ambient_temperature);
}

AffineStep SurrogateModel::affine(double u) const {
  const int n = layout_.size();
  AffineStep out;
  out.A.resize(n, n);
  Vector probe = Vector::Zero(n);
  for (int j = 0; j < n; ++j) {
    probe[j] = 1.0;
    out.A.col(j) = step_impl(probe, u, 0.0, 0.0);
    probe[j] = 0.0;
  }
  out.ambient = step_impl(probe, u, 0.0, aquifer_.ambient_temperature);
  out.return_gain = step_impl(probe, u, 1.0, 0.0);
  return out;
}

double SurrogateModel::cell_energy(const Vector& x, bool warm) const {
  const auto volumes = mesh_.volumes();
  double sum = 0.0;
  for (int c = 0; c < layout_.cells(); ++c) {
    const int idx = warm ? layout_.warm_cell(c) : layout_.cold_cell(c);
    sum += aquifer_.heat_capacity * volumes[c] * x[idx];
  }
  return sum;
}

Vector step_surrogate(const Vector& x, double u, double t_r,
                      const SurrogateModel& model) {
  return model.step(x, u, t_r);
}

std::vector<Vector> simulate(const Vector& x0, const std::vector<InputSample>& inputs,
                             const SurrogateModel& model) {
  std::vector<Vector> trajectory;
  trajectory.reserve(inputs.size() + 1);
  trajectory.push_back(x0);
  for (const auto& in : inputs)
    trajectory.push_back(model.step(trajectory.back(), in.u, in.t_r));
  return trajectory;
}

}  // namespace ates
