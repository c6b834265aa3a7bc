#pragma once

#include <map>
#include <memory>

#include "cuspad/scenario.hpp"

namespace cuspad {

// A scenario's traces after measurement corruption. The per-channel offset is
// drawn once and stays constant over the whole trace; device noise is drawn
// per sample.
struct MeasuredScenario {
  std::shared_ptr<const ScenarioRecord> base;
  std::map<BusId, AngleTrace> traces;
  std::map<BusId, double> offsets_deg;  // recorded for audit, never fed to detection
  std::uint64_t seed = 0;
};

// Each bus gets an independent RNG stream derived from (seed, bus), so the
// result does not depend on iteration order and offsets are independent
// across channels.
inline MeasuredScenario inject_errors(const std::shared_ptr<const ScenarioRecord>& scenario,
                                      const ChannelErrorModel& model, std::uint64_t seed) {
  MeasuredScenario out;
  out.base = scenario;
  out.seed = seed;
  for (const auto& [bus, trace] : scenario->traces) {
    Rng rng(derive_seed(seed, 0x6d65617375726564ULL, static_cast<std::uint64_t>(bus)));
    const double offset =
        model.instr_range_deg > 0
            ? quantize_angle(rng.uniform(-model.instr_range_deg, model.instr_range_deg))
            : 0.0;
    AngleTrace m = trace;
    for (auto& s : m.samples_deg) {
      s += offset;
      if (model.pmu_sigma_deg > 0) s += rng.gaussian(0.0, model.pmu_sigma_deg);
    }
    out.offsets_deg[bus] = offset;
    out.traces[bus] = std::move(m);
  }
  return out;
}

// Pass-through measurement: convenient for the clean-training path.
inline MeasuredScenario measure_clean(const std::shared_ptr<const ScenarioRecord>& scenario) {
  return inject_errors(scenario, ChannelErrorModel{0.0, 0.0}, 0);
}

inline void save_measured(const std::string& dir, const MeasuredScenario& ms,
                          const ChannelErrorModel& model) {
  const std::string stem = dir + "/" + ms.base->id + "_measured_" + model.tag();
  save_traces_csv(stem + ".csv", ms.traces);
  json j;
  j["base"] = ms.base->id;
  j["seed"] = ms.seed;
  j["pmu_sigma_deg"] = model.pmu_sigma_deg;
  j["instr_range_deg"] = model.instr_range_deg;
  json off = json::object();
  for (const auto& [bus, v] : ms.offsets_deg) off["bus_" + std::to_string(bus)] = v;
  j["offsets_deg"] = off;
  write_json_file(stem + "_offsets.json", j);
}

}  // namespace cuspad
