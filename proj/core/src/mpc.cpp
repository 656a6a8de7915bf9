#include "ates/mpc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <queue>
#include <stdexcept>
#include <string>

namespace ates {

double power(double u, double t_b, double t_r, double c_w) { return c_w * u * (t_b - t_r); }

double penetration_radius(int horizon, double dt, double u, double filter_length, double r0) {
  return std::sqrt(horizon * dt * u / (filter_length * std::numbers::pi) + r0 * r0);
}

CoarseModel build_coarse_model(const SurrogateModel& nominal, const Vector& x_ref,
                               const ScenarioConfig& cfg) {
  CoarseModel model;
  const double h = 1e-6 * cfg.u_max;
  auto add = [&](Mode mode, double u_ref, double lo, double hi) {
    MpcMode m;
    m.mode = mode;
    m.u_ref = u_ref;
    m.u_lower = lo;
    m.u_upper = hi;
    m.t_r = cfg.return_temperature(u_ref);
    m.A = nominal.affine(u_ref).A;
    if (mode == Mode::Inactivity) {
      m.B = Vector::Zero(x_ref.size());
    } else {
      m.B = (nominal.step(x_ref, u_ref + h, m.t_r) - nominal.step(x_ref, u_ref - h, m.t_r)) /
            (2.0 * h);
    }
    const Vector next = nominal.step(x_ref, u_ref, m.t_r);
    m.f = next - m.A * x_ref - m.B * u_ref;
    m.tb_ref = next[StateLayout::building_outlet()];
    model.modes.push_back(std::move(m));
  };
  add(Mode::Inactivity, 0.0, 0.0, 0.0);
  add(Mode::Heating, 0.5 * cfg.u_max, 0.0, cfg.u_max);
  add(Mode::Cooling, -0.5 * cfg.u_max, -cfg.u_max, 0.0);
  return model;
}

void OcpSpec::validate(int n) const {
  if (horizon < 1) throw std::invalid_argument("ocp: horizon must be >= 1");
  if (static_cast<int>(demand.size()) != horizon)
    throw std::invalid_argument("ocp: demand length must equal the horizon");
  if (!(settings.q_weight > 0.0) || !(settings.r_weight > 0.0))
    throw std::invalid_argument("ocp: weights must be positive");
  if (model.modes.size() < 3) throw std::invalid_argument("ocp: need at least three modes");
  for (const auto& m : model.modes)
    if (m.A.rows() != n || m.A.cols() != n || m.B.size() != n || m.f.size() != n)
      throw std::invalid_argument("ocp: mode dimension mismatch");
  if (bounds.lower.size() != n || bounds.upper.size() != n)
    throw std::invalid_argument("ocp: bounds dimension mismatch");
}

OcpSpec make_ocp_spec(const SurrogateModel& nominal, const Vector& x_ref,
                      const ScenarioConfig& cfg, std::vector<double> demand,
                      OcpSettings settings) {
  OcpSpec spec;
  spec.horizon = cfg.mpc_horizon;
  spec.demand = std::move(demand);
  spec.c_w = cfg.aquifer.water_heat_capacity;
  spec.u_max = cfg.u_max;
  spec.model = build_coarse_model(nominal, x_ref, cfg);
  spec.bounds = state_bounds(cfg);
  spec.settings = settings;
  spec.validate(static_cast<int>(x_ref.size()));
  return spec;
}

namespace {

double power_scale(const OcpSpec& spec) {
  double s = spec.c_w * spec.u_max;  // one kelvin at full flow
  for (double d : spec.demand) s = std::max(s, std::abs(d));
  return s;
}

}  // namespace

NodeResult solve_mode_sequence(const Vector& x0, const OcpSpec& spec,
                               const std::vector<int>& modes) {
  const int n = static_cast<int>(x0.size());
  const int depth = static_cast<int>(modes.size());
  const double ps = power_scale(spec);
  const double q = spec.settings.q_weight;
  const double r = spec.settings.r_weight;

  NodeResult res;
  res.u.assign(depth, 0.0);

  // Inputs of active steps first, then the shifted states x_1 .. x_depth.
  std::vector<int> v_idx(depth, -1);
  int nv = 0;
  for (int k = 0; k < depth; ++k) {
    const MpcMode& m = spec.model.modes.at(modes[k]);
    if (m.mode != Mode::Inactivity) v_idx[k] = nv++;
  }
  const int d = nv + n * depth;
  auto x_idx = [&](int k) { return nv + n * (k - 1); };  // k >= 1

  const double shift = x0.mean();
  const Vector xi0 = x0.array() - shift;
  const Vector ones = Vector::Ones(n);

  double constant = 0.0;
  std::vector<Eigen::Triplet<double>> h_trip, a_trip;
  Vector g = Vector::Zero(d);
  Vector lb(d), ub(d);
  Vector b_eq = Vector::Zero(n * depth);

  for (int k = 0; k < depth; ++k) {
    const MpcMode& m = spec.model.modes[modes[k]];
    const double dk = spec.demand[k];

    // Dynamics rows: xi_{k+1} - A xi_k - u_max B v_k = f + A c - c.
    const Vector rhs = m.f + m.A * (shift * ones) - shift * ones;
    for (int i = 0; i < n; ++i) {
      const int row = n * k + i;
      a_trip.emplace_back(row, x_idx(k + 1) + i, 1.0);
      b_eq[row] = rhs[i];
      if (k > 0) {
        for (int j = 0; j < n; ++j)
          if (m.A(i, j) != 0.0) a_trip.emplace_back(row, x_idx(k) + j, -m.A(i, j));
      }
      if (v_idx[k] >= 0 && m.B[i] != 0.0)
        a_trip.emplace_back(row, v_idx[k], -spec.u_max * m.B[i]);
    }
    if (k == 0) b_eq.head(n) += m.A * xi0;

    // Scaled tracking residual (D - P) / ps = w0 + w' z.
    if (v_idx[k] < 0) {
      constant += q * (dk / ps) * (dk / ps);
      continue;
    }
    const int iv = v_idx[k];
    const int itb = x_idx(k + 1) + StateLayout::building_outlet();
    const double a = spec.c_w * m.u_ref;
    const double b = spec.c_w * spec.u_max * (m.tb_ref - m.t_r);
    const double c0 = spec.c_w * m.u_ref * (shift - m.tb_ref);
    const double w0 = (dk - c0) / ps;
    const double wv = -b / ps;
    const double wt = -a / ps;
    h_trip.emplace_back(iv, iv, 2.0 * q * wv * wv + 2.0 * r * spec.u_max * spec.u_max / (ps * ps));
    h_trip.emplace_back(itb, itb, 2.0 * q * wt * wt);
    h_trip.emplace_back(iv, itb, 2.0 * q * wv * wt);
    h_trip.emplace_back(itb, iv, 2.0 * q * wv * wt);
    g[iv] += 2.0 * q * w0 * wv;
    g[itb] += 2.0 * q * w0 * wt;
    constant += q * w0 * w0;
    lb[iv] = m.u_lower / spec.u_max;
    ub[iv] = m.u_upper / spec.u_max;
  }
  for (int k = 1; k <= depth; ++k) {
    lb.segment(x_idx(k), n) = spec.bounds.lower.array() - shift;
    ub.segment(x_idx(k), n) = spec.bounds.upper.array() - shift;
  }

  if (d == 0) {
    res.bound = constant;
    res.feasible = true;
    return res;
  }

  QuadraticProgram qp;
  qp.H.resize(d, d);
  qp.H.setFromTriplets(h_trip.begin(), h_trip.end());
  qp.g = g;
  qp.constant = constant;
  qp.A_eq.resize(n * depth, d);
  qp.A_eq.setFromTriplets(a_trip.begin(), a_trip.end());
  qp.b_eq = b_eq;
  qp.lb = lb;
  qp.ub = ub;

  const QpSolution sol = solve_qp(qp, spec.settings.qp);
  if (sol.status == QpStatus::Infeasible) return res;
  res.feasible = true;
  res.reliable = sol.status == QpStatus::Optimal;
  res.bound = std::max(0.0, sol.objective);
  for (int k = 0; k < depth; ++k)
    if (v_idx[k] >= 0) res.u[k] = spec.u_max * sol.z[v_idx[k]];
  return res;
}

namespace {

struct Node {
  std::vector<int> modes;
  NodeResult result;
};

struct NodeOrder {
  bool operator()(const Node& a, const Node& b) const {
    if (a.result.bound != b.result.bound) return a.result.bound > b.result.bound;
    return a.modes > b.modes;
  }
};

void check_start(const Vector& x0, const OcpSpec& spec) {
  spec.validate(static_cast<int>(x0.size()));
  if (!spec.bounds.contains(x0, 1e-9))
    throw std::invalid_argument("ocp: initial state outside the state constraints");
}

OcpSolution finish(const Node& best, const OcpSpec& spec, int nodes, bool optimal) {
  OcpSolution sol;
  sol.u = best.result.u;
  sol.modes = best.modes;
  const double ps = power_scale(spec);
  sol.objective = best.result.bound * ps * ps;
  sol.nodes = nodes;
  sol.optimal = optimal;
  return sol;
}

}  // namespace

OcpSolution solve_ocp(const Vector& x0, const OcpSpec& spec) {
  check_start(x0, spec);
  const int n_modes = static_cast<int>(spec.model.modes.size());
  const auto& st = spec.settings;

  int nodes = 0;
  bool optimal = true;
  bool have_incumbent = false;
  Node incumbent;
  auto gap = [&](double value) { return st.abs_gap + st.rel_gap * std::abs(value); };
  auto prunable = [&](double bound) {
    return have_incumbent && bound >= incumbent.result.bound - gap(incumbent.result.bound);
  };

  std::priority_queue<Node, std::vector<Node>, NodeOrder> open;
  auto evaluate = [&](const std::vector<int>& prefix) {
    Node child{prefix, solve_mode_sequence(x0, spec, prefix)};
    ++nodes;
    if (!child.result.reliable) optimal = false;
    return child;
  };
  auto offer_leaf = [&](Node&& leaf) {
    if (!have_incumbent || leaf.result.bound < incumbent.result.bound) {
      incumbent = std::move(leaf);
      have_incumbent = true;
    }
  };

  // Greedy dive for a first incumbent: the lowest child bound, ties within
  // the gap broken by mode index. The other children wait in the queue.
  Node current{{}, {}};
  current.result.feasible = true;
  ++nodes;
  while (static_cast<int>(current.modes.size()) < spec.horizon) {
    std::vector<Node> children;
    for (int i = 0; i < n_modes; ++i) {
      std::vector<int> prefix = current.modes;
      prefix.push_back(i);
      Node child = evaluate(prefix);
      if (child.result.feasible) children.push_back(std::move(child));
    }
    if (children.empty()) break;
    double lowest = std::numeric_limits<double>::infinity();
    for (const auto& c : children) lowest = std::min(lowest, c.result.bound);
    std::size_t pick = 0;
    while (children[pick].result.bound > lowest + gap(lowest)) ++pick;
    for (std::size_t i = 0; i < children.size(); ++i)
      if (i != pick) open.push(std::move(children[i]));
    current = std::move(children[pick]);
  }
  if (static_cast<int>(current.modes.size()) == spec.horizon) offer_leaf(std::move(current));

  while (!open.empty()) {
    if (prunable(open.top().result.bound)) break;
    Node node = open.top();
    open.pop();
    if (static_cast<int>(node.modes.size()) == spec.horizon) {
      offer_leaf(std::move(node));
      continue;
    }
    if (nodes >= st.node_budget) {
      optimal = false;
      break;
    }
    for (int i = 0; i < n_modes; ++i) {
      std::vector<int> prefix = node.modes;
      prefix.push_back(i);
      Node child = evaluate(prefix);
      if (!child.result.feasible || prunable(child.result.bound)) continue;
      if (static_cast<int>(child.modes.size()) == spec.horizon) offer_leaf(std::move(child));
      else open.push(std::move(child));
    }
  }

  if (!have_incumbent) throw std::runtime_error("ocp: no feasible mode sequence");
  return finish(incumbent, spec, nodes, optimal);
}

OcpSolution enumerate_ocp(const Vector& x0, const OcpSpec& spec) {
  check_start(x0, spec);
  const int n_modes = static_cast<int>(spec.model.modes.size());
  std::vector<int> seq(spec.horizon, 0);
  int nodes = 0;
  bool reliable = true;
  bool have = false;
  Node best;
  while (true) {
    Node leaf{seq, solve_mode_sequence(x0, spec, seq)};
    ++nodes;
    reliable = reliable && leaf.result.reliable;
    if (leaf.result.feasible && (!have || leaf.result.bound < best.result.bound)) {
      best = std::move(leaf);
      have = true;
    }
    int k = spec.horizon - 1;
    while (k >= 0 && ++seq[k] == n_modes) seq[k--] = 0;
    if (k < 0) break;
  }
  if (!have) throw std::runtime_error("ocp: no feasible mode sequence");
  return finish(best, spec, nodes, reliable);
}

std::vector<double> default_demand(int horizon) {
  std::vector<double> demand(horizon);
  for (int k = 0; k < horizon; ++k)
    demand[k] = 9.1e4 * (1.0 + 0.25 * std::sin(2.0 * std::numbers::pi * k / 12.0));
  return demand;
}

Vector charged_state(const ScenarioConfig& cfg) {
  const StateLayout layout = cfg.layout();
  const RadialMesh mesh = cfg.mesh();
  const double t_amb = cfg.aquifer.ambient_temperature;
  const double r0 = cfg.aquifer.borehole_radius;
  const double decay = 1.2;
  Vector x = layout.uniform(t_amb);
  x[layout.warm_borehole()] = 291.15;
  x[layout.cold_borehole()] = 277.15;
  for (int c = 0; c < layout.cells(); ++c) {
    const double w = std::exp(-(mesh.centers()[c] - r0) / decay);
    x[layout.warm_cell(c)] = t_amb + (291.15 - t_amb) * w;
    x[layout.cold_cell(c)] = t_amb - (t_amb - 277.15) * w;
  }
  return x;
}

Vector perturb_beyond(const Vector& x0, const Vector& draw, double rhat,
                      const RadialMesh& mesh, const StateLayout& layout) {
  Vector x = x0;
  for (int c = 0; c < layout.cells(); ++c) {
    if (!(mesh.centers()[c] > rhat)) continue;
    x[layout.warm_cell(c)] = draw[layout.warm_cell(c)];
    x[layout.cold_cell(c)] = draw[layout.cold_cell(c)];
  }
  return x;
}

Vector uniform_draw(const StateConstraints& bounds, std::mt19937_64& rng) {
  Vector x(bounds.lower.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    std::uniform_real_distribution<double> dist(bounds.lower[i], bounds.upper[i]);
    x[i] = dist(rng);
  }
  return x;
}

std::vector<SensitivityRow> sensitivity_experiment(const Vector& x0,
                                                   const SurrogateModel& nominal,
                                                   const ScenarioConfig& cfg,
                                                   const std::vector<double>& demand,
                                                   const OcpSettings& settings,
                                                   const SensitivityOptions& options) {
  const double r0 = cfg.aquifer.borehole_radius;
  const double r_inf = cfg.aquifer.domain_radius;
  for (double rhat : options.rhat_grid)
    if (!(rhat >= r0 - 1e-12 && rhat <= r_inf + 1e-12))
      throw std::invalid_argument("sensitivity: rhat " + std::to_string(rhat) +
                                  " outside [r0, r_inf]");
  if (options.repetitions < 1) throw std::invalid_argument("sensitivity: repetitions must be >= 1");

  // One coarse model linearized at x0 serves both solves, so the two OCPs
  // differ only in their initial state.
  const StateConstraints bounds = state_bounds(cfg);
  const OcpSpec spec = make_ocp_spec(nominal, x0, cfg, demand, settings);
  const OcpSolution base = solve_ocp(x0, spec);

  std::vector<SensitivityRow> rows;
  for (int rep = 0; rep < options.repetitions; ++rep) {
    std::mt19937_64 rng(options.seed + static_cast<std::uint64_t>(rep));
    const Vector draw = uniform_draw(bounds, rng);
    for (double rhat : options.rhat_grid) {
      const Vector xh = perturb_beyond(x0, draw, rhat, nominal.mesh(), nominal.layout());
      SensitivityRow row{rhat, rep, 0.0, base.optimal};
      if (xh != x0) {
        const OcpSolution sol = solve_ocp(xh, spec);
        for (int k = 0; k < static_cast<int>(sol.u.size()); ++k)
          row.inf_norm_diff = std::max(row.inf_norm_diff, std::abs(sol.u[k] - base.u[k]));
        row.optimal = row.optimal && sol.optimal;
      }
      rows.push_back(row);
    }
  }
  return rows;
}

std::vector<double> uniform_grid(double r0, double r_inf, double step) {
  if (!(step > 0.0)) throw std::invalid_argument("grid: step must be positive");
  std::vector<double> grid;
  const int count = static_cast<int>(std::floor((r_inf - r0) / step + 1e-9));
  for (int i = 0; i <= count; ++i) grid.push_back(r0 + i * step);
  if (r_inf - grid.back() > 1e-9) grid.push_back(r_inf);
  return grid;
}

}  // namespace ates
