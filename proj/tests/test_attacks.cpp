#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "dprsim/attacks.hpp"
#include "dprsim/rng.hpp"
#include "dprsim/scenario.hpp"
#include "support.hpp"

using namespace dprsim;

namespace {

std::vector<std::uint8_t> ternary(std::size_t index, std::size_t len) {
  std::vector<std::uint8_t> r(len);
  for (auto& x : r) {
    x = static_cast<std::uint8_t>(index % 3);
    index /= 3;
  }
  return r;
}

std::vector<std::uint8_t> random_bits(std::mt19937_64& g, std::size_t n) {
  std::vector<std::uint8_t> b(n);
  for (auto& x : b) x = static_cast<std::uint8_t>(g() & 1u);
  return b;
}

}  // namespace

// ---------------------------------------------------------------------------
// feasibility

TEST_CASE("feasibility: P_always must stay strictly below 2 P_never") {
  auto r = blinding_feasible(BlindingThresholds{0.2, 0.4, 0.32, 0.38});
  CHECK_FALSE(r.always_never);
  CHECK(r.marginal);
  CHECK_FALSE(r.ok());
  r = blinding_feasible(BlindingThresholds{0.2, 0.39, 0.32, 0.38});
  CHECK(r.always_never);
  CHECK_FALSE(r.marginal);
  CHECK_FALSE(r.data_isolation.has_value());
  CHECK(r.ok());
}

TEST_CASE("feasibility: COW inequalities at t_B = 0.5 and 0.9") {
  const auto th = support::cow_thresholds();
  const auto half = blinding_feasible(th, 0.5);
  CHECK(half.always_never);
  CHECK(*half.data_isolation);
  CHECK(*half.monitor_isolation);
  CHECK(half.ok());

  // t_B/(1-t_B) = 9 blows the monitor pulse up to 9 P_always,M on the data line.
  const auto ninety = blinding_feasible(BlindingThresholds{0.2, 0.3, 0.3, 0.4}, 0.9);
  CHECK_FALSE(*ninety.data_isolation);
  CHECK_FALSE(ninety.ok());
  CHECK_THROWS_AS(blinding_feasible(th, 1.0), OpticsError);
  CHECK_THROWS_AS(blinding_feasible(th, 0.0), OpticsError);
}

TEST_CASE("feasibility: the literal 1:2 ratio fails for every t_B") {
  for (int i = 1; i < 100; ++i) {
    const double t = i / 100.0;
    CHECK_FALSE(blinding_feasible(BlindingThresholds{0.2, 0.4, 0.2, 0.4}, t).ok());
  }
}

TEST_CASE("feasibility: raising P_never only helps, raising P_always only hurts") {
  std::mt19937_64 g(9);
  std::uniform_real_distribution<double> u(0.05, 1.0);
  for (int trial = 0; trial < 2000; ++trial) {
    BlindingThresholds th{u(g), 0, u(g), 0};
    th.p_always = th.p_never * (1.15 + u(g) * 1.5);
    th.p_always_b = th.p_never_b * (1.15 + u(g) * 1.5);
    const double t = std::uniform_real_distribution<double>(0.01, 0.99)(g);
    const auto base = blinding_feasible(th, t);

    auto up = th;
    up.p_never *= 1.1;
    up.p_never_b *= 1.1;
    const auto more = blinding_feasible(up, t);
    if (base.ok()) CHECK(more.ok());

    auto hot = th;
    hot.p_always *= 1.1;
    hot.p_always_b *= 1.1;
    const auto less = blinding_feasible(hot, t);
    if (less.ok()) CHECK(base.ok());
  }
}

TEST_CASE("feasibility: invalid thresholds throw") {
  CHECK_THROWS_AS(blinding_feasible(BlindingThresholds{0.4, 0.2, 0.3, 0.4}), OpticsError);
  CHECK_THROWS_AS(blinding_feasible(BlindingThresholds{0.2, 0.3, 0.0, 0.4}, 0.5), OpticsError);
}

// ---------------------------------------------------------------------------
// faked-state generator, DPS

TEST_CASE("fsg: worked-example readings give the worked-example phases") {
  const auto readings = fsg_example_readings();
  const std::vector<std::uint8_t> expect_r{0, 1, 2, 0, 1, 2, 2, 0, 2, 2, 0, 2, 0, 0, 0};
  CHECK(std::vector<std::uint8_t>(readings.begin(), readings.end()) == expect_r);
  const auto plan = fsg_dps_phases(readings, FsgPolicy::paper_example);
  CHECK(plan.phase_units == std::vector<int>{0, 0, 2, 1, 1, 3, 1, 2, 0, 2, 1, 3, 2, 1, 2});
  CHECK(plan.pulses() == readings.size() + 1);
}

TEST_CASE("fsg: phase steps follow the reading rules under both policies") {
  std::mt19937_64 g(21);
  for (int trial = 0; trial < 300; ++trial) {
    const auto readings = ternary(g() % 14348907, 15);
    for (auto policy : {FsgPolicy::canonical, FsgPolicy::paper_example}) {
      const auto d = fsg_dps_phases(readings, policy).deltas();
      REQUIRE(d.size() == readings.size());
      for (std::size_t j = 0; j < d.size(); ++j) {
        if (readings[j] == 1) CHECK(d[j] == 0);
        if (readings[j] == 2) CHECK(d[j] == 2);
        if (readings[j] == 0) CHECK(d[j] % 2 == 1);
      }
    }
  }
}

TEST_CASE("fsg: all-D1 readings keep a constant phase") {
  const std::vector<std::uint8_t> ones(20, 1);
  const auto plan = fsg_dps_phases(ones, FsgPolicy::canonical);
  CHECK(std::all_of(plan.phase_units.begin(), plan.phase_units.end(), [](int u) { return u == 0; }));
  CHECK(plan.reference_phase_units == 0);
}

TEST_CASE("fsg: canonical plan replays every reading sequence up to length 8") {
  for (std::size_t len = 1; len <= 8; ++len) {
    std::size_t count = 1;
    for (std::size_t i = 0; i < len; ++i) count *= 3;
    std::size_t bad = 0;
    for (std::size_t idx = 0; idx < count; ++idx) {
      const auto r = ternary(idx, len);
      if (support::replay_dps(r, FsgPolicy::canonical) != r) ++bad;
    }
    CHECK_MESSAGE(bad == 0, "length " << len);
  }
}

TEST_CASE("fsg: paper-example policy replays as well") {
  const auto ex = fsg_example_readings();
  const std::vector<std::uint8_t> r(ex.begin(), ex.end());
  CHECK(support::replay_dps(r, FsgPolicy::paper_example) == r);
  std::mt19937_64 g(5);
  for (int trial = 0; trial < 500; ++trial) {
    const auto rr = ternary(g() % 43046721, 16);
    CHECK(support::replay_dps(rr, FsgPolicy::paper_example) == rr);
  }
}

TEST_CASE("fsg: train intensities sit just above P_always") {
  const BlindingThresholds th{0.2, 0.39, 0.32, 0.38};
  const std::vector<std::uint8_t> r{0, 1, 2, 2, 1};
  const auto train = fsg_train(fsg_dps_phases(r, FsgPolicy::canonical, th.p_always), 1.0);
  for (std::size_t k = 0; k < train.size(); ++k) {
    CHECK(train.intensity(k) >= th.p_always);
    CHECK(train.intensity(k) == doctest::Approx(th.p_always).epsilon(1e-8));
  }
  CHECK_THROWS_AS(fsg_dps_phases(std::vector<std::uint8_t>{3}, FsgPolicy::canonical), std::invalid_argument);
}

// ---------------------------------------------------------------------------
// faked-state generator, COW

TEST_CASE("cow reading codes") {
  CHECK(CowReading{0, false}.code() == 0);
  CHECK(CowReading{1, false}.code() == 1);  // D_M2
  CHECK(CowReading{2, false}.code() == 2);  // D_M1
  CHECK(CowReading{0, true}.code() == 3);   // D_B only
  for (std::uint8_t c = 0; c < 8; ++c) CHECK(CowReading::from_code(c).code() == c);
  CHECK_THROWS(CowReading::from_code(8));
}

TEST_CASE("cow drive: equal thresholds at t_B = 0.5 give 2P everywhere") {
  const double p = 0.3;
  const BlindingThresholds th{0.2, p, 0.2, p};
  const std::vector<CowReading> r{{0, false}, {1, true}, {2, false}, {0, true}};
  // Equal rails cannot satisfy the data-isolation inequality; only the drive is checked.
  const auto plan = fsg_cow_drive(r, 0.5, th, false);
  for (double i : plan.intensity) CHECK(i == doctest::Approx(2.0 * p).epsilon(1e-8));
}

TEST_CASE("cow drive: base and raised amplitudes") {
  const auto th = support::cow_thresholds();
  const std::vector<CowReading> r{{0, false}, {2, true}};
  const auto plan = fsg_cow_drive(r, 0.5, th);
  REQUIRE(plan.intensity.size() == 3);
  CHECK(plan.intensity[0] == doctest::Approx(th.p_always / 0.5));
  CHECK(plan.intensity[1] == doctest::Approx(th.p_always / 0.5));
  CHECK(plan.intensity[2] == doctest::Approx(th.p_always_b / 0.5));
  CHECK(plan.readings == std::vector<std::uint8_t>{0, 5});
  CHECK_THROWS_AS(fsg_cow_drive(r, 0.9, th), OpticsError);
  CHECK_NOTHROW(fsg_cow_drive(r, 0.9, th, false));
}

TEST_CASE("cow drive: every reading pattern over four grid slots replays") {
  const auto th = support::cow_thresholds();
  std::size_t bad = 0;
  for (std::size_t idx = 0; idx < 6 * 6 * 6 * 6; ++idx) {
    std::vector<CowReading> r(4);
    std::size_t x = idx;
    for (auto& c : r) {
      c.monitor = static_cast<std::uint8_t>(x % 3);
      c.data = (x / 3) % 2 == 1;
      x /= 6;
    }
    std::size_t trailing = 0;
    if (support::replay_cow(r, 0.5, th, &trailing) != r || trailing != 0) ++bad;
  }
  CHECK(bad == 0);
}

TEST_CASE("cow blinding golden: Bob's record is Eve's readings") {
  const auto rec = run_scenario(golden_config("cow-blinding"));
  REQUIRE(rec.attack);
  const auto& a = *rec.attack;
  CHECK(a.feasibility->ok());
  CHECK(a.readings_match);
  CHECK(a.spurious_monitor_clicks == 0);
  CHECK(a.bob_readings == a.eve_readings);
  CHECK(a.capture_fraction == 1.0);
  CHECK_FALSE(rec.alarms.any());
}

TEST_CASE("cow blinding: infeasible t_B breaks the replay") {
  auto cfg = golden_config("cow-blinding");
  cfg.t_b = 0.9;
  const auto rec = run_scenario(cfg);
  CHECK_FALSE(rec.attack->feasibility->ok());
  CHECK_FALSE(rec.attack->readings_match);
}

TEST_CASE("dps blinding golden: worked-example readings reach Bob") {
  const auto rec = run_scenario(golden_config("dps-blinding"));
  const auto& a = *rec.attack;
  CHECK(a.eve_readings == std::vector<std::uint8_t>{0, 1, 2, 0, 1, 2, 2, 0, 2, 2, 0, 2, 0, 0, 0});
  CHECK(a.readings_match);
  CHECK(a.plan->phase_units == std::vector<int>{0, 0, 2, 1, 1, 3, 1, 2, 0, 2, 1, 3, 2, 1, 2});
  CHECK(a.capture_fraction == 1.0);
  CHECK_FALSE(rec.alarms.any());
}

TEST_CASE("dps blinding from intercepted readings on random links") {
  std::mt19937_64 g(31);
  for (int trial = 0; trial < 20; ++trial) {
    auto cfg = golden_config("dps-blinding");
    cfg.dps_bits.reset();
    cfg.attack.blinding.dps_readings.reset();
    cfg.attack.blinding.policy = FsgPolicy::canonical;
    cfg.n_symbols = 128;
    cfg.seed = g();
    const auto rec = run_scenario(cfg);
    CHECK(rec.attack->readings_match);
    CHECK(rec.attack->capture_fraction == 1.0);
    CHECK(rec.attack->induced_qber == doctest::Approx(0.0));
    CHECK(rec.attack->bob_key_matches_baseline);
  }
}

// ---------------------------------------------------------------------------
// countermeasure

TEST_CASE("photocurrent monitor: CW blinding alarms, pulsed blinding slips through") {
  CHECK(run_scenario(golden_config("dps-blinding-cw")).alarms.photocurrent_monitor);
  CHECK_FALSE(run_scenario(golden_config("dps-blinding")).alarms.photocurrent_monitor);

  std::mt19937_64 g(77);
  for (int trial = 0; trial < 40; ++trial) {
    const auto c = support::countermeasure_case(g);
    const auto cw = run_scenario(c.cw);
    const auto pulsed = run_scenario(c.pulsed);
    CHECK(cw.alarms.photocurrent_monitor);
    CHECK_FALSE(pulsed.alarms.photocurrent_monitor);
    CHECK(pulsed.attack->readings_match);
  }
}

// ---------------------------------------------------------------------------
// backflash

TEST_CASE("backflash ideal: Eve learns the whole key") {
  for (const char* name : {"dps-backflash-ideal", "cow-backflash-ideal"}) {
    const auto rec = run_scenario(golden_config(name));
    CAPTURE(name);
    CHECK(rec.attack->capture_fraction == 1.0);
    CHECK(rec.attack->eve_key == rec.attack->bob_key);
    CHECK(rec.attack->induced_qber == 0.0);
  }
  std::mt19937_64 g(8);
  for (int trial = 0; trial < 10; ++trial) {
    auto cfg = golden_config(trial % 2 ? "dps-backflash-ideal" : "cow-backflash-ideal");
    cfg.seed = g();
    CHECK(run_scenario(cfg).attack->capture_fraction == 1.0);
  }
}

TEST_CASE("backflash: capture tracks the emission probability until it saturates") {
  ScenarioConfig cfg;
  cfg.protocol = Protocol::dps;
  cfg.n_symbols = 20001;
  cfg.seed = 3;
  cfg.attack.type = AttackType::backflash;
  const std::vector<double> scale{1, 3, 10, 30, 100};
  std::vector<double> values;
  for (double s : scale) values.push_back(2.4e-10 * s);
  const auto runs = sweep(cfg, "/attack/backflash/photons_per_electron", values, 4);
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const double p = std::min(1.0, 2.7e8 * values[i]);
    const double n = static_cast<double>(runs[i].attack->bob_key.size());
    const double sigma = std::sqrt(p * (1.0 - p) / n);
    CAPTURE(p);
    CHECK(std::abs(runs[i].attack->capture_fraction - p) <= 4.0 * sigma + 1e-12);
  }
}

TEST_CASE("backflash: leaves Bob's key alone") {
  const auto rec = run_scenario(golden_config("dps-backflash-ideal"));
  CHECK(rec.attack->bob_key_matches_baseline);
  CHECK(rec.run.qber() == 0.0);
}

// ---------------------------------------------------------------------------
// trojan horse

TEST_CASE("trojan: reflected probe carries Alice's phases at 1000 nm") {
  std::mt19937_64 g(12);
  const auto bits = random_bits(g, 64);
  const auto alice = dps_transmitter(bits, SourceConfig{});
  TrojanProbe probe;
  const auto refl = trojan_probe(alice, probe);
  REQUIRE(refl.size() == bits.size());
  CHECK(refl.wavelength_nm == 1000.0);
  for (std::size_t k = 1; k < bits.size(); ++k) {
    const Amplitude ratio = refl.slots[k] / refl.slots[k - 1];
    const double expect = (bits[k] ^ bits[k - 1]) ? -1.0 : 1.0;
    CHECK(std::abs(ratio - expect) < 1e-12);
  }
}

TEST_CASE("trojan: a timing offset shifts the bits Eve reads") {
  std::mt19937_64 g(13);
  const auto bits = random_bits(g, 64);
  const auto alice = dps_transmitter(bits, SourceConfig{});
  for (std::ptrdiff_t off : {1, 2, 5}) {
    TrojanProbe probe;
    probe.timing_offset_slots = off;
    const auto refl = trojan_probe(alice, probe);
    for (std::size_t k = 1; k + static_cast<std::size_t>(off) < bits.size(); ++k) {
      const Amplitude ratio = refl.slots[k] / refl.slots[k - 1];
      const std::size_t m = k + static_cast<std::size_t>(off);
      CHECK(std::abs(ratio - ((bits[m] ^ bits[m - 1]) ? -1.0 : 1.0)) < 1e-12);
    }
  }
  auto cfg = golden_config("dps-trojan");
  cfg.attack.trojan.probe.timing_offset_slots = 1;
  CHECK(run_scenario(cfg).attack->capture_fraction < 0.9);
}

TEST_CASE("trojan: 1924 nm comes back 20 dB weaker") {
  std::mt19937_64 g(14);
  const auto alice = dps_transmitter(random_bits(g, 16), SourceConfig{});
  TrojanProbe near, far;
  far.wavelength_nm = 1924.0;
  const auto a = trojan_probe(alice, near);
  const auto b = trojan_probe(alice, far);
  for (std::size_t k = 0; k < a.size(); ++k) CHECK(b.intensity(k) == doctest::Approx(a.intensity(k) / 100.0));
  CHECK(trojan_excess_loss_db(1000.0) == 0.0);
}

TEST_CASE("trojan: nothing above Eve's threshold decodes to an empty key") {
  std::mt19937_64 g(15);
  const auto alice = dps_transmitter(random_bits(g, 32), SourceConfig{});
  const auto refl = trojan_probe(alice, TrojanProbe{});
  const auto dec = trojan_decode(refl, Protocol::dps, 10.0 * refl.max_intensity());
  CHECK(dec.empty);
  CHECK(dec.record.total_clicks() == 0);

  auto cfg = golden_config("dps-trojan");
  cfg.attack.trojan.eve_threshold = 1e6;
  const auto rec = run_scenario(cfg);
  CHECK(rec.attack->eve_key.empty());
  CHECK(rec.attack->capture_fraction == 0.0);
}

TEST_CASE("trojan: COW bits read from the reflected intensity pattern") {
  const auto symbols = parse_cow_symbols("01d10001d1");
  const auto alice = cow_transmitter(symbols, SourceConfig{});
  const auto refl = trojan_probe(alice, TrojanProbe{});
  const auto dec = trojan_decode(refl, Protocol::cow, 0.5 * refl.max_intensity(), symbols);
  REQUIRE(dec.cow_bits.size() == symbols.size());
  for (std::size_t i = 0; i < symbols.size(); ++i) {
    if (symbols[i] == CowSymbol::decoy) {
      CHECK_FALSE(dec.cow_bits[i].has_value());
    } else {
      REQUIRE(dec.cow_bits[i].has_value());
      CHECK(*dec.cow_bits[i] == (symbols[i] == CowSymbol::bit1 ? 1 : 0));
    }
  }
  const auto rec = run_scenario(golden_config("cow-trojan"));
  CHECK(rec.attack->capture_fraction == 1.0);
  CHECK(rec.attack->bob_key_matches_baseline);
}

TEST_CASE("trojan: Bob's key is untouched and Eve's equals it") {
  std::mt19937_64 g(16);
  for (int trial = 0; trial < 10; ++trial) {
    auto cfg = golden_config("dps-trojan");
    cfg.seed = g();
    const auto rec = run_scenario(cfg);
    CHECK(rec.attack->capture_fraction == 1.0);
    CHECK(rec.attack->eve_key == rec.attack->bob_key);
    CHECK(rec.attack->bob_key_matches_baseline);
    CHECK(rec.attack->induced_qber == 0.0);
    CHECK_FALSE(rec.alarms.any());
  }
}

TEST_CASE("trojan: watchdog alarms on the probe") {
  const auto rec = run_scenario(golden_config("dps-trojan-watchdog"));
  CHECK(rec.alarms.watchdog);
  auto quiet = golden_config("dps-trojan-watchdog");
  quiet.countermeasures.watchdog.threshold = 10.0;
  CHECK_FALSE(run_scenario(quiet).alarms.watchdog);
}

TEST_CASE("trojan: probe validation") {
  const auto alice = dps_transmitter(std::vector<std::uint8_t>{0, 1}, SourceConfig{});
  TrojanProbe p;
  p.wavelength_nm = 1550.0;
  CHECK_THROWS_AS(trojan_probe(alice, p), OpticsError);
  p.wavelength_nm = 1000.0;
  p.amplitude = 0.0;
  CHECK_THROWS_AS(trojan_probe(alice, p), OpticsError);
}

TEST_CASE("score_capture counts only correct bits") {
  AttackOutcome out;
  out.bob_key = {0, 1, 1, 0};
  const std::vector<std::optional<std::uint8_t>> eve{0, std::nullopt, 0, 0};
  score_capture(out, eve);
  CHECK(out.eve_positions == std::vector<std::size_t>{0, 2, 3});
  CHECK(out.eve_key == std::vector<std::uint8_t>{0, 0, 0});
  CHECK(out.capture_fraction == doctest::Approx(0.5));
  CHECK_THROWS(score_capture(out, std::vector<std::optional<std::uint8_t>>{0}));
}
