#pragma once

#include <cmath>
#include <string>

#include "cuspad/rng.hpp"
#include "cuspad/swing_sim.hpp"

namespace cuspad {

// Additive measurement error model: zero-mean Gaussian device noise per
// sample plus one fixed offset per channel drawn uniformly from
// [-instr_range, +instr_range].
struct ChannelErrorModel {
  double pmu_sigma_deg = 0.104;
  double instr_range_deg = 0.0;

  std::string tag() const {
    return "s" + fmt_double(pmu_sigma_deg, 6) + "_r" + fmt_double(instr_range_deg, 6);
  }
};

// Decimate to exactly 30 samples/s. The source rate must be an integer
// multiple of 30; sample 0 is kept so phase stays aligned with t0.
inline AngleTrace resample_30hz(const AngleTrace& trace) {
  if (trace.rate_hz <= 0 || trace.samples_deg.empty())
    throw ValidationError("resample_30hz: empty trace");
  const double ratio = trace.rate_hz / 30.0;
  const long step = std::lround(ratio);
  if (step < 1 || std::abs(ratio - static_cast<double>(step)) > 1e-9)
    throw ValidationError("resample_30hz: rate " + fmt_double(trace.rate_hz) +
                          " is not an integer multiple of 30");
  AngleTrace out;
  out.bus = trace.bus;
  out.rate_hz = 30.0;
  out.t0_s = trace.t0_s;
  out.unwrapped = trace.unwrapped;
  for (std::size_t i = 0; i < trace.samples_deg.size(); i += step)
    out.samples_deg.push_back(trace.samples_deg[i]);
  return out;
}

inline double wrap_deg(double x) {
  x = std::fmod(x, 360.0);
  if (x > 180.0) x -= 360.0;
  if (x <= -180.0) x += 360.0;
  return x;
}

// Angles that enter the measurement model live on a 2^-20 degree grid
// (about one microdegree). Grid values add exactly in double precision, so a
// fixed channel offset stays bitwise constant across a whole trace.
inline double quantize_angle(double deg) { return std::round(deg * 1048576.0) / 1048576.0; }

inline AngleTrace quantize_trace(const AngleTrace& trace) {
  AngleTrace out = trace;
  for (auto& s : out.samples_deg) s = quantize_angle(s);
  return out;
}

// Restore a continuous angle stream from wrapped samples: consecutive deltas
// are forced into (-180, 180], so output == input modulo 360 per sample.
inline AngleTrace unwrap(const AngleTrace& trace) {
  AngleTrace out = trace;
  out.unwrapped = true;
  if (trace.samples_deg.size() < 2) return out;
  double shift = 0.0;
  for (std::size_t i = 1; i < trace.samples_deg.size(); ++i) {
    const double delta = trace.samples_deg[i] - trace.samples_deg[i - 1];
    if (delta > 180.0)
      shift -= 360.0 * std::ceil((delta - 180.0) / 360.0);
    else if (delta <= -180.0)
      shift += 360.0 * (std::floor((-180.0 - delta) / 360.0) + 1.0);
    out.samples_deg[i] = trace.samples_deg[i] + shift;
  }
  return out;
}

inline AngleTrace wrap_trace(const AngleTrace& trace) {
  AngleTrace out = trace;
  out.unwrapped = false;
  for (auto& s : out.samples_deg) s = wrap_deg(s);
  return out;
}

}  // namespace cuspad
