#pragma once

#include <cmath>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "cuspad/island_cuts.hpp"
#include "cuspad/network.hpp"

namespace cuspad {

class SimulationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Scripted disturbance applied at t_c.
struct ContingencyScript {
  enum class Kind { none, island, line_trip, generator_trip, bus_fault };

  Kind kind = Kind::none;
  double t_c_s = 0.0;
  IslandCut cut;                 // island
  int branch_id = -1;            // line_trip
  int generator_index = -1;      // generator_trip
  BusId fault_bus = 0;           // bus_fault
  double clearing_time_s = 0.1;  // bus_fault
  double fault_pu = 2.0;         // bus_fault shunt power draw at nominal voltage

  std::string kind_name() const {
    switch (kind) {
      case Kind::none: return "none";
      case Kind::island: return "island";
      case Kind::line_trip: return "line_trip";
      case Kind::generator_trip: return "generator_trip";
      case Kind::bus_fault: return "bus_fault";
    }
    return "?";
  }
};

// One channel of angle samples. Angles are continuous (unwrapped) when the
// flag is set; raw wrapped data lives in (-180, 180].
struct AngleTrace {
  BusId bus = 0;
  double rate_hz = 0.0;
  double t0_s = 0.0;
  std::vector<double> samples_deg;
  bool unwrapped = false;
};

struct SimOptions {
  double system_base_mva = 100.0;
  double xd_prime = 0.3;        // machine transient reactance, machine base
  double droop = 0.01;          // per-unit frequency per per-unit machine power
  double load_scale = 1.0;      // uniform multiplier on all loads
  std::vector<double> dispatch_jitter;  // per-generator multiplier, optional
  double omega_limit_rad_s = 75.0;      // blow-up guard
};

namespace detail {

struct Machine {
  int bus = -1;     // bus index
  double m = 0.0;   // inertia constant, s^2/rad, system base
  double d = 0.0;   // damping (droop equivalent), pu power per rad/s
  double bg = 0.0;  // internal coupling susceptance, pu
  double pm = 0.0;  // mechanical power, pu
};

// One contiguous time interval with fixed topology and injections.
struct SimPhase {
  double t_begin = 0.0;
  Eigen::LLT<Eigen::MatrixXd> solver;  // factor of B + diag(bg)
  Eigen::VectorXd p0;                  // static bus injections
  std::vector<char> machine_active;
};

inline Eigen::MatrixXd bus_susceptance(const NetworkModel& net, const std::vector<bool>* removed) {
  const int n = static_cast<int>(net.buses.size());
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t e = 0; e < net.branches.size(); ++e) {
    if (removed && (*removed)[e]) continue;
    const auto& br = net.branches[e];
    const int i = net.bus_index(br.from);
    const int j = net.bus_index(br.to);
    b(i, i) += br.b_pu;
    b(j, j) += br.b_pu;
    b(i, j) -= br.b_pu;
    b(j, i) -= br.b_pu;
  }
  return b;
}

// Every connected component must hold an active machine, otherwise the
// algebraic network equations are singular.
inline void check_components_have_machines(const NetworkModel& net, const std::vector<bool>* removed,
                                           const std::vector<Machine>& machines,
                                           const std::vector<char>& active) {
  auto comp = connected_components(net, removed);
  const int ncomp = *std::max_element(comp.begin(), comp.end()) + 1;
  std::vector<char> has_machine(ncomp, 0);
  for (std::size_t i = 0; i < machines.size(); ++i)
    if (active[i]) has_machine[comp[machines[i].bus]] = 1;
  for (int c = 0; c < ncomp; ++c)
    if (!has_machine[c])
      throw SimulationError(net.id + ": network component without a synchronous machine");
}

}  // namespace detail

// Reduced-order multi-machine simulation: classical swing dynamics for each
// synchronous unit behind a coupling susceptance, linear (DC-style) network
// power flow, constant-power loads and inverter-based units. Fixed-step RK4.
// Returns continuous per-bus angle trajectories in degrees.
inline std::map<BusId, AngleTrace> simulate(const NetworkModel& net, const ContingencyScript& script,
                                            double horizon_s, double dt_s, const SimOptions& opts = {}) {
  if (dt_s > 1.0 / 120.0) throw SimulationError("dt must be <= 1/120 s");
  if (script.kind != ContingencyScript::Kind::none) {
    if (script.t_c_s < 1.0) throw SimulationError("contingency needs >= 1 s of pre-event data");
    if (horizon_s < script.t_c_s + 2.0) throw SimulationError("horizon must extend >= 2 s past t_c");
  }

  const int n = static_cast<int>(net.buses.size());
  const double omega_s = 2.0 * std::numbers::pi * net.base_frequency_hz;
  const double sbase = opts.system_base_mva;

  // Machines and dispatch. Synchronous units share the (scaled) load in
  // proportion to rating, optionally jittered per unit.
  std::vector<detail::Machine> machines;
  std::vector<int> machine_of_generator(net.generators.size(), -1);
  double total_load = 0.0;
  for (const auto& l : net.loads) total_load += l.mw * opts.load_scale;

  std::vector<double> weight(net.generators.size());
  double wsum = 0.0;
  for (std::size_t i = 0; i < net.generators.size(); ++i) {
    double w = net.generators[i].rated_mw;
    if (!opts.dispatch_jitter.empty()) w *= opts.dispatch_jitter[i % opts.dispatch_jitter.size()];
    weight[i] = w;
    wsum += w;
  }
  std::vector<double> dispatch_pu(net.generators.size());
  for (std::size_t i = 0; i < net.generators.size(); ++i)
    dispatch_pu[i] = (total_load / sbase) * weight[i] / wsum;

  for (std::size_t i = 0; i < net.generators.size(); ++i) {
    const auto& g = net.generators[i];
    if (g.is_inverter_based) continue;
    detail::Machine m;
    m.bus = net.bus_index(g.bus);
    const double s_ratio = g.rated_mw / sbase;
    m.m = 2.0 * g.inertia_h_s * s_ratio / omega_s;
    m.d = s_ratio / (opts.droop * omega_s);
    m.bg = s_ratio / opts.xd_prime;
    m.pm = dispatch_pu[i];
    machine_of_generator[i] = static_cast<int>(machines.size());
    machines.push_back(m);
  }
  if (machines.empty()) throw SimulationError(net.id + ": no synchronous machine to simulate");
  const int nm = static_cast<int>(machines.size());

  // Static injections: inverter units inject, loads withdraw.
  Eigen::VectorXd p_static = Eigen::VectorXd::Zero(n);
  for (std::size_t i = 0; i < net.generators.size(); ++i)
    if (net.generators[i].is_inverter_based)
      p_static[net.bus_index(net.generators[i].bus)] += dispatch_pu[i];
  for (const auto& l : net.loads) p_static[net.bus_index(l.bus)] -= l.mw * opts.load_scale / sbase;

  const std::vector<char> all_active(nm, 1);

  auto make_phase = [&](double t_begin, const std::vector<bool>* removed,
                        const std::vector<char>& active, const Eigen::VectorXd& p0) {
    detail::check_components_have_machines(net, removed, machines, active);
    detail::SimPhase ph;
    ph.t_begin = t_begin;
    Eigen::MatrixXd k = detail::bus_susceptance(net, removed);
    for (int i = 0; i < nm; ++i)
      if (active[i]) k(machines[i].bus, machines[i].bus) += machines[i].bg;
    ph.solver.compute(k);
    if (ph.solver.info() != Eigen::Success)
      throw SimulationError(net.id + ": network matrix factorization failed");
    ph.p0 = p0;
    ph.machine_active = active;
    return ph;
  };

  // Phase list for the script.
  std::vector<detail::SimPhase> phases;
  phases.push_back(make_phase(0.0, nullptr, all_active, p_static));
  std::vector<bool> removed(net.branches.size(), false);
  switch (script.kind) {
    case ContingencyScript::Kind::none:
      break;
    case ContingencyScript::Kind::island: {
      for (int e : script.cut.removed_branches) removed[e] = true;
      phases.push_back(make_phase(script.t_c_s, &removed, all_active, p_static));
      break;
    }
    case ContingencyScript::Kind::line_trip: {
      removed[script.branch_id] = true;
      phases.push_back(make_phase(script.t_c_s, &removed, all_active, p_static));
      break;
    }
    case ContingencyScript::Kind::generator_trip: {
      const int gi = script.generator_index;
      if (gi < 0 || gi >= static_cast<int>(net.generators.size()))
        throw SimulationError("generator_trip index out of range");
      Eigen::VectorXd p0 = p_static;
      std::vector<char> active = all_active;
      if (net.generators[gi].is_inverter_based) {
        p0[net.bus_index(net.generators[gi].bus)] -= dispatch_pu[gi];
      } else {
        active[machine_of_generator[gi]] = 0;
      }
      phases.push_back(make_phase(script.t_c_s, nullptr, active, p0));
      break;
    }
    case ContingencyScript::Kind::bus_fault: {
      Eigen::VectorXd p0 = p_static;
      p0[net.bus_index(script.fault_bus)] -= script.fault_pu;
      phases.push_back(make_phase(script.t_c_s, nullptr, all_active, p0));
      phases.push_back(make_phase(script.t_c_s + script.clearing_time_s, nullptr, all_active, p_static));
      break;
    }
  }

  // Pre-contingency equilibrium: DC flow with the first bus as reference,
  // machine internal angles offset by pm/bg.
  Eigen::VectorXd p_net = p_static;
  for (const auto& m : machines) p_net[m.bus] += m.pm;
  Eigen::VectorXd theta0 = Eigen::VectorXd::Zero(n);
  {
    Eigen::MatrixXd b = detail::bus_susceptance(net, nullptr);
    const int r = n - 1;
    Eigen::MatrixXd br = b.bottomRightCorner(r, r);
    Eigen::VectorXd pr = p_net.tail(r);
    Eigen::LDLT<Eigen::MatrixXd> ldlt(br);
    if (ldlt.info() != Eigen::Success)
      throw SimulationError(net.id + ": no equilibrium found");
    theta0.tail(r) = ldlt.solve(pr);
  }

  Eigen::VectorXd delta(nm), omega = Eigen::VectorXd::Zero(nm);
  for (int i = 0; i < nm; ++i) delta[i] = theta0[machines[i].bus] + machines[i].pm / machines[i].bg;

  // Right-hand side of the swing equations under a given phase.
  Eigen::VectorXd inj(n), theta(n);
  auto bus_angles = [&](const detail::SimPhase& ph, const Eigen::VectorXd& d) -> Eigen::VectorXd {
    inj = ph.p0;
    for (int i = 0; i < nm; ++i)
      if (ph.machine_active[i]) inj[machines[i].bus] += machines[i].bg * d[i];
    return ph.solver.solve(inj);
  };
  auto deriv = [&](const detail::SimPhase& ph, const Eigen::VectorXd& d, const Eigen::VectorXd& w,
                   Eigen::VectorXd& dd, Eigen::VectorXd& dw) {
    theta = bus_angles(ph, d);
    for (int i = 0; i < nm; ++i) {
      if (!ph.machine_active[i]) {
        dd[i] = 0.0;
        dw[i] = 0.0;
        continue;
      }
      const auto& m = machines[i];
      const double pe = m.bg * (d[i] - theta[m.bus]);
      dd[i] = w[i];
      dw[i] = (m.pm - pe - m.d * w[i]) / m.m;
    }
  };

  const int steps = static_cast<int>(std::llround(horizon_s / dt_s));
  std::vector<std::vector<double>> bus_deg(n);
  for (auto& v : bus_deg) v.reserve(steps + 1);
  constexpr double rad2deg = 180.0 / std::numbers::pi;

  Eigen::VectorXd k1d(nm), k1w(nm), k2d(nm), k2w(nm), k3d(nm), k3w(nm), k4d(nm), k4w(nm), td(nm), tw(nm);
  std::size_t phase_idx = 0;
  for (int s = 0; s <= steps; ++s) {
    const double t = s * dt_s;
    while (phase_idx + 1 < phases.size() && t >= phases[phase_idx + 1].t_begin - 0.5 * dt_s) ++phase_idx;
    const auto& ph = phases[phase_idx];

    Eigen::VectorXd th = bus_angles(ph, delta);
    for (int b = 0; b < n; ++b) bus_deg[b].push_back(th[b] * rad2deg);
    if (s == steps) break;

    deriv(ph, delta, omega, k1d, k1w);
    td = delta + 0.5 * dt_s * k1d;
    tw = omega + 0.5 * dt_s * k1w;
    deriv(ph, td, tw, k2d, k2w);
    td = delta + 0.5 * dt_s * k2d;
    tw = omega + 0.5 * dt_s * k2w;
    deriv(ph, td, tw, k3d, k3w);
    td = delta + dt_s * k3d;
    tw = omega + dt_s * k3w;
    deriv(ph, td, tw, k4d, k4w);
    delta += (dt_s / 6.0) * (k1d + 2.0 * k2d + 2.0 * k3d + k4d);
    omega += (dt_s / 6.0) * (k1w + 2.0 * k2w + 2.0 * k3w + k4w);

    if ((s & 0x3f) == 0) {
      for (int i = 0; i < nm; ++i)
        if (!std::isfinite(delta[i]) || std::abs(omega[i]) > opts.omega_limit_rad_s)
          throw SimulationError(net.id + ": numerical blow-up at t=" + fmt_double(t));
    }
  }

  std::map<BusId, AngleTrace> out;
  for (int b = 0; b < n; ++b) {
    AngleTrace tr;
    tr.bus = net.buses[b];
    tr.rate_hz = 1.0 / dt_s;
    tr.t0_s = 0.0;
    tr.samples_deg = std::move(bus_deg[b]);
    tr.unwrapped = true;
    out[net.buses[b]] = std::move(tr);
  }
  return out;
}

}  // namespace cuspad
