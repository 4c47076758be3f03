#pragma once

// Helpers shared by the unit tests and the acceptance runner.

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "dprsim/attacks.hpp"
#include "dprsim/scenario.hpp"

namespace support {

using namespace dprsim;

inline ApdConfig linear_apd(double p_never, double p_always) {
  ApdConfig c;
  c.mode = ApdMode::linear;
  c.p_never = p_never;
  c.p_always = p_always;
  return c;
}

// Bob's DPS readings (slots 1..n) when a linear-mode receiver sees the FSG
// train for `readings`. Returns an empty vector if an edge slot clicked.
inline std::vector<std::uint8_t> replay_dps(const std::vector<std::uint8_t>& readings, FsgPolicy policy,
                                            const BlindingThresholds& th = {}) {
  const auto plan = fsg_dps_phases(readings, policy, th.p_always);
  const auto train = fsg_train(plan, 1.0);
  DpsReceiverConfig bob;
  bob.d1 = bob.d2 = linear_apd(th.p_never, th.p_always);
  const auto got = dps_readings(dps_measure(train, bob).record);
  if (got.size() != readings.size() + 2 || got.front() != reading_none || got.back() != reading_none) return {};
  return {got.begin() + 1, got.end() - 1};
}

// Bob's COW readings per grid slot for the FSG drive of `readings`.
inline std::vector<CowReading> replay_cow(const std::vector<CowReading>& readings, double t_b,
                                          const BlindingThresholds& th, std::size_t* trailing_clicks = nullptr) {
  const auto plan = fsg_cow_drive(readings, t_b, th);
  const auto train = fsg_train(plan, 0.5);
  CowReceiverConfig bob;
  bob.t_b = t_b;
  bob.data = linear_apd(th.p_never_b, th.p_always_b);
  bob.m1 = bob.m2 = linear_apd(th.p_never, th.p_always);
  auto rec = cow_measure(train, bob).record;
  for (auto& t : rec.detectors) t.drop_front(1);
  if (trailing_clicks) {
    *trailing_clicks = 0;
    for (const auto& t : rec.detectors)
      for (std::size_t k = readings.size(); k < t.size(); ++k) *trailing_clicks += t.clicked(k) ? 1 : 0;
  }
  return cow_readings(rec, readings.size());
}

// Thresholds of the cow-blinding golden: 0.2 : 0.4 scaled down on P_always so
// the strict inequalities hold at t_B = 0.5.
inline BlindingThresholds cow_thresholds() { return {0.2, 0.3, 0.32, 0.38}; }

// Randomised CW vs pulsed blinding of the dps-blinding golden. The monitor
// threshold sits at `fraction` of the CW steady-state current.
struct CountermeasureCase {
  ScenarioConfig cw;
  ScenarioConfig pulsed;
};

inline CountermeasureCase countermeasure_case(std::mt19937_64& g) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto base = golden_config("dps-blinding");
  auto& il = base.attack.blinding.illumination;
  il.energy = 5.0 + 45.0 * u(g);
  il.decay = 0.85 + 0.1 * u(g);
  il.period_slots = 8 + static_cast<std::size_t>(g() % 9);
  // Lowest stored current of the pulsed steady state, with margin.
  const double low = il.energy * std::pow(il.decay, static_cast<double>(il.period_slots - 1)) /
                     (1.0 - std::pow(il.decay, static_cast<double>(il.period_slots)));
  il.blind_threshold = 0.9 * low;
  il.preroll_slots = 256;
  auto& mon = base.countermeasures.photocurrent_monitor;
  mon.enabled = true;
  mon.window_slots = 8 + static_cast<std::size_t>(g() % 25);
  mon.alarm_threshold = (0.5 + 0.4 * u(g)) * il.energy / (1.0 - il.decay);
  base.seed = g();

  CountermeasureCase c{base, base};
  c.cw.attack.blinding.illumination.kind = Illumination::cw;
  c.pulsed.attack.blinding.illumination.kind = Illumination::pulsed;
  return c;
}

}  // namespace support
