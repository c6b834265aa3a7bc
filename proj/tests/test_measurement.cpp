#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "cuspad/measured.hpp"

using namespace cuspad;

namespace {

AngleTrace make_trace(std::vector<double> samples, double rate = 600.0, BusId bus = 1) {
  AngleTrace tr;
  tr.bus = bus;
  tr.rate_hz = rate;
  tr.t0_s = 0.0;
  tr.samples_deg = std::move(samples);
  tr.unwrapped = true;
  return tr;
}

std::shared_ptr<const ScenarioRecord> toy_record(int n_buses = 3, std::size_t len = 90) {
  ScenarioRecord rec;
  rec.id = "toy";
  rec.label = 0;
  rec.t_c_s = 1.0;
  for (int b = 1; b <= n_buses; ++b) {
    std::vector<double> s(len);
    for (std::size_t i = 0; i < len; ++i) s[i] = quantize_angle(10.0 * b + 0.01 * i);
    auto tr = make_trace(std::move(s), 30.0, b);
    rec.traces[b] = tr;
  }
  return std::make_shared<const ScenarioRecord>(std::move(rec));
}

}  // namespace

TEST_CASE("resampling decimates 600/s to 30/s") {
  std::vector<double> s(600);
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = static_cast<double>(i);
  const auto out = resample_30hz(make_trace(s));
  REQUIRE(out.rate_hz == 30.0);
  REQUIRE(out.samples_deg.size() == 30);
  for (std::size_t i = 0; i < out.samples_deg.size(); ++i)
    REQUIRE(out.samples_deg[i] == 20.0 * static_cast<double>(i));
}

TEST_CASE("resampling at 30/s is the identity") {
  const auto in = make_trace({1.0, 2.0, 3.0}, 30.0);
  const auto out = resample_30hz(in);
  REQUIRE(out.samples_deg == in.samples_deg);
}

TEST_CASE("resampling preserves constants and rejects bad rates") {
  const auto out = resample_30hz(make_trace(std::vector<double>(120, 7.5), 120.0));
  for (double v : out.samples_deg) REQUIRE(v == 7.5);
  REQUIRE_THROWS_AS(resample_30hz(make_trace({1.0, 2.0}, 45.0)), ValidationError);
}

TEST_CASE("unwrap handles the textbook crossing") {
  AngleTrace tr = make_trace({179.0, -179.0}, 30.0);
  tr.unwrapped = false;
  const auto out = unwrap(tr);
  REQUIRE(out.samples_deg[0] == 179.0);
  REQUIRE(out.samples_deg[1] == Catch::Approx(181.0));
  REQUIRE(out.unwrapped);
}

TEST_CASE("unwrap leaves continuous traces unchanged") {
  const auto in = make_trace({0.0, 10.0, 25.0, 40.0, 30.0}, 30.0);
  const auto out = unwrap(in);
  REQUIRE(out.samples_deg == in.samples_deg);
}

TEST_CASE("unwrap recovers a wrapped linear ramp") {
  std::vector<double> ramp(300);
  for (std::size_t i = 0; i < ramp.size(); ++i) ramp[i] = -50.0 + 7.3 * static_cast<double>(i);
  auto wrapped = wrap_trace(make_trace(ramp, 30.0));
  const auto out = unwrap(wrapped);
  // recovered up to a constant multiple of 360 fixed by the first sample
  const double shift = out.samples_deg[0] - ramp[0];
  for (std::size_t i = 0; i < ramp.size(); ++i)
    REQUIRE(std::abs(out.samples_deg[i] - shift - ramp[i]) < 1e-9);
}

TEST_CASE("unwrap of wrap is identity for small-delta traces") {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> s(100);
    s[0] = rng.uniform(-180.0, 180.0);
    for (std::size_t i = 1; i < s.size(); ++i) s[i] = s[i - 1] + rng.uniform(-170.0, 170.0);
    const auto base = make_trace(s, 30.0);
    const auto out = unwrap(wrap_trace(base));
    const double shift = out.samples_deg[0] - s[0];
    REQUIRE(std::fmod(std::abs(shift), 360.0) == Catch::Approx(0.0).margin(1e-12));
    for (std::size_t i = 0; i < s.size(); ++i)
      REQUIRE(out.samples_deg[i] - shift == Catch::Approx(s[i]).margin(1e-9));
  }
}

TEST_CASE("zero error model reproduces the truth") {
  const auto rec = toy_record();
  const auto ms = inject_errors(rec, ChannelErrorModel{0.0, 0.0}, 99);
  for (const auto& [bus, tr] : ms.traces) {
    REQUIRE(tr.samples_deg == rec->traces.at(bus).samples_deg);
    REQUIRE(ms.offsets_deg.at(bus) == 0.0);
  }
}

TEST_CASE("offsets are fixed per channel and bounded by the range") {
  const auto rec = toy_record(4, 120);
  const auto ms = inject_errors(rec, ChannelErrorModel{0.0, 4.0}, 1234);
  for (const auto& [bus, tr] : ms.traces) {
    const auto& truth = rec->traces.at(bus).samples_deg;
    const double off = tr.samples_deg[0] - truth[0];
    REQUIRE(off >= -4.0);
    REQUIRE(off <= 4.0);
    for (std::size_t i = 0; i < truth.size(); ++i)
      REQUIRE(tr.samples_deg[i] - truth[i] == off);  // exact constancy
    REQUIRE(ms.offsets_deg.at(bus) == off);
  }
}

TEST_CASE("noise statistics match the configured sigma") {
  const auto rec = toy_record(10, 1000);
  const auto ms = inject_errors(rec, ChannelErrorModel{0.104, 0.0}, 77);
  double sum = 0.0, sum2 = 0.0;
  std::size_t n = 0;
  for (const auto& [bus, tr] : ms.traces) {
    const auto& truth = rec->traces.at(bus).samples_deg;
    for (std::size_t i = 0; i < truth.size(); ++i) {
      const double r = tr.samples_deg[i] - truth[i];
      sum += r;
      sum2 += r * r;
      ++n;
    }
  }
  const double mean = sum / n;
  const double sd = std::sqrt((sum2 - n * mean * mean) / (n - 1));
  REQUIRE(sd > 0.099);
  REQUIRE(sd < 0.109);
}

TEST_CASE("injection is deterministic in the seed and independent across buses") {
  const auto rec = toy_record(3, 60);
  const auto a = inject_errors(rec, ChannelErrorModel{0.1, 2.0}, 5);
  const auto b = inject_errors(rec, ChannelErrorModel{0.1, 2.0}, 5);
  const auto c = inject_errors(rec, ChannelErrorModel{0.1, 2.0}, 6);
  for (const auto& [bus, tr] : a.traces) REQUIRE(tr.samples_deg == b.traces.at(bus).samples_deg);
  bool any_diff = false;
  for (const auto& [bus, tr] : a.traces) any_diff |= tr.samples_deg != c.traces.at(bus).samples_deg;
  REQUIRE(any_diff);
  REQUIRE(a.offsets_deg.at(1) != a.offsets_deg.at(2));  // independent channel streams
}
