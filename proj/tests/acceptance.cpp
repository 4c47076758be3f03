// Acceptance runner: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "dprsim/cli.hpp"
#include "dprsim/report.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace dprsim;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Check {
  bool ok = true;
  std::string detail;

  void require(bool cond, const std::string& what) {
    if (!cond && ok) detail = what;
    ok = ok && cond;
  }
  void note(const std::string& s) {
    if (ok) detail = s;
  }
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// ---------------------------------------------------------------------------

Check cow_ideal_visibility() {
  Check c;
  const auto t0 = Clock::now();
  const auto rec = run_scenario(golden_config("cow-fig2"));
  const auto m = compute_metrics(rec);
  const double dt = seconds_since(t0);
  std::size_t populated = 0;
  for (auto cls : kInterfaceClasses) {
    const auto v = rec.run.cow->visibility.of(cls).visibility();
    if (!v) continue;
    ++populated;
    c.require(*v == 1.0, std::string("class ") + label(cls) + " visibility " + fmt("%.17g", *v));
  }
  c.require(populated > 0, "no populated interface class");
  c.require(m.visibility && *m.visibility == 1.0, "overall visibility != 1");
  c.require(m.monitor_intensity_ratio && *m.monitor_intensity_ratio < 1e-9, "D_M2/D_M1 intensity ratio >= 1e-9");
  c.require(dt < 1.0, "runtime " + fmt("%.3f s", dt));
  c.note(std::to_string(populated) + " classes at V=1, D_M2/D_M1 = " + fmt("%.3g", m.monitor_intensity_ratio.value_or(-1)) +
         ", " + fmt("%.3f s", dt));
  return c;
}

Check cow_tamper_visibility() {
  Check c;
  const auto cfg = golden_config("cow-fig4-tamper");
  const auto rec = run_scenario(cfg);
  const auto v = rec.run.cow->visibility.overall.visibility();
  c.require(v && std::abs(*v - 0.2) <= 1e-6, "overall visibility " + fmt("%.17g", v.value_or(-1)));

  const auto symbols = scenario_cow_symbols(cfg);
  auto field = oracle::cow_field(to_string(std::span<const CowSymbol>(symbols)));
  c.require(field.size() <= 24, "train longer than 24 slots");
  const double amp = std::sqrt(cow_transmitter(symbols, cfg.source).pulse_intensity());
  for (auto& a : field) a *= amp;
  for (std::size_t k = 0; k < field.size() && k < cfg.channel.tamper_phase.size(); ++k)
    field[k] *= std::polar(1.0, cfg.channel.tamper_phase[k]);
  const auto o = oracle::cow_monitor_clicks(field, cfg.t_b, amp);
  const auto m1 = rec.run.bob.at(detector_id::dm1).click_count();
  const auto m2 = rec.run.bob.at(detector_id::dm2).click_count();
  c.require(m1 == o.m1 && m2 == o.m2, "oracle clicks " + std::to_string(o.m1) + "/" + std::to_string(o.m2) +
                                          " vs simulator " + std::to_string(m1) + "/" + std::to_string(m2));
  c.note("V = " + fmt("%.17g", v.value_or(-1)) + ", D_M1/D_M2 clicks " + std::to_string(m1) + "/" +
         std::to_string(m2) + " match oracle");
  return c;
}

Check dps_round_trip() {
  Check c;
  const auto t0 = Clock::now();
  ScenarioConfig cfg;
  cfg.protocol = Protocol::dps;
  cfg.n_symbols = 256;
  std::size_t bad = 0;
  for (std::uint64_t i = 0; i < 1000; ++i) {
    cfg.seed = derive_seed(2024, i);
    const auto rec = run_scenario(cfg);
    if (rec.run.qber() != 0.0 || rec.run.bob_key().size() != 255 || rec.run.alice_key() != rec.run.bob_key()) ++bad;
  }
  const double dt = seconds_since(t0);
  c.require(bad == 0, std::to_string(bad) + " of 1000 runs off");
  c.require(dt < 10.0, "runtime " + fmt("%.2f s", dt));
  c.note("1000 x 256-bit runs, QBER 0, 255 sifted bits each, " + fmt("%.2f s", dt));
  return c;
}

Check backflash_ideal() {
  Check c;
  for (const char* name : {"dps-backflash-ideal", "cow-backflash-ideal"}) {
    const auto rec = run_scenario(golden_config(name));
    const auto& a = *rec.attack;
    c.require(!a.bob_key.empty(), std::string(name) + ": empty key");
    c.require(a.eve_key == a.bob_key && a.capture_fraction == 1.0,
              std::string(name) + ": capture " + fmt("%.6g", a.capture_fraction));
  }
  c.note("DPS and COW: eve_key == bob_key");
  return c;
}

Check backflash_statistics() {
  Check c;
  const auto rec = run_scenario(golden_config("dps-backflash"));
  const auto& a = *rec.attack;
  const double p = 2.7e8 * 2.4e-10;
  const double n = static_cast<double>(a.bob_key.size());
  const double sigma = std::sqrt(p * (1.0 - p) / n);
  c.require(a.bob_clicks >= 100000, "only " + std::to_string(a.bob_clicks) + " Bob clicks");
  c.require(std::abs(a.capture_fraction - p) <= 3.0 * sigma,
            "capture " + fmt("%.5f", a.capture_fraction) + " outside " + fmt("%.4f", p) + " +- " + fmt("%.5f", 3 * sigma));
  c.note(std::to_string(a.bob_clicks) + " clicks, capture " + fmt("%.5f", a.capture_fraction) + " in " +
         fmt("%.4f", p) + " +- " + fmt("%.5f", 3 * sigma));
  return c;
}

Check fsg_reproduction() {
  Check c;
  const auto t0 = Clock::now();
  const std::vector<std::uint8_t> readings{0, 1, 2, 0, 1, 2, 2, 0, 2, 2, 0, 2, 0, 0, 0};
  const std::vector<int> phases{0, 0, 2, 1, 1, 3, 1, 2, 0, 2, 1, 3, 2, 1, 2};
  c.require(fsg_dps_phases(readings, FsgPolicy::paper_example).phase_units == phases, "worked-example phases differ");

  std::size_t bad = 0;
  std::vector<std::uint8_t> r(8);
  for (std::size_t idx = 0; idx < 6561; ++idx) {
    std::size_t x = idx;
    for (auto& v : r) {
      v = static_cast<std::uint8_t>(x % 3);
      x /= 3;
    }
    if (support::replay_dps(r, FsgPolicy::canonical) != r) ++bad;
  }
  const double dt = seconds_since(t0);
  c.require(bad == 0, std::to_string(bad) + " of 6561 sequences not reproduced");
  c.require(dt < 60.0, "runtime " + fmt("%.2f s", dt));
  c.note("worked-example phases exact; 6561/6561 length-8 sequences replayed, " + fmt("%.2f s", dt));
  return c;
}

Check cow_blinding() {
  Check c;
  const auto cfg = golden_config("cow-blinding");
  const auto& th = cfg.attack.blinding.thresholds;
  c.require(cfg.t_b == 0.5, "golden t_B is not 0.5");
  c.require(th.p_never / th.p_always >= 0.5, "P_never : P_always not within the 0.2 : 0.4 ratio");
  const auto f = blinding_feasible(th, cfg.t_b);
  c.require(f.always_never && f.data_isolation.value_or(false) && f.monitor_isolation.value_or(false) && !f.marginal,
            "feasibility inequalities not all strict and true");

  auto check_run = [&](const ScenarioConfig& sc, const std::string& what) {
    const auto rec = run_scenario(sc);
    const auto& a = *rec.attack;
    c.require(a.bob_readings == a.eve_readings && a.readings_match, what + ": Bob's record differs from Eve's readings");
    c.require(a.spurious_monitor_clicks == 0, what + ": " + std::to_string(a.spurious_monitor_clicks) + " spurious clicks");
  };
  check_run(cfg, "golden");
  std::mt19937_64 g(606);
  for (int i = 0; i < 20; ++i) {
    auto sc = cfg;
    sc.cow_symbols.reset();
    sc.attack.blinding.cow_readings.reset();
    sc.n_symbols = 64;
    sc.seed = g();
    check_run(sc, "random link " + std::to_string(i));
  }
  c.note("feasible at t_B = 0.5 with " + fmt("%.2f", th.p_never) + "/" + fmt("%.2f", th.p_always) +
         "; golden + 20 random links replayed, 0 spurious clicks");
  return c;
}

Check countermeasure() {
  Check c;
  c.require(run_scenario(golden_config("dps-blinding-cw")).alarms.photocurrent_monitor, "CW golden: no alarm");
  c.require(!run_scenario(golden_config("dps-blinding")).alarms.photocurrent_monitor, "pulsed golden: alarm");
  std::mt19937_64 g(4242);
  const int cases = 100;
  for (int i = 0; i < cases; ++i) {
    const auto k = support::countermeasure_case(g);
    const auto cw = run_scenario(k.cw);
    const auto pulsed = run_scenario(k.pulsed);
    const std::string tag = "case " + std::to_string(i);
    c.require(k.pulsed.countermeasures.photocurrent_monitor.window_slots >= 8, tag + ": window < 8");
    c.require(cw.alarms.photocurrent_monitor, tag + ": CW not flagged");
    c.require(!pulsed.alarms.photocurrent_monitor, tag + ": pulsed flagged");
    c.require(pulsed.attack->readings_match, tag + ": pulsed blinding lost control");
  }
  c.note("goldens + " + std::to_string(cases) + " randomized cases: CW alarms, pulsed silent");
  return c;
}

Check trojan() {
  Check c;
  const auto rec = run_scenario(golden_config("dps-trojan"));
  const auto& a = *rec.attack;
  c.require(rec.config.attack.trojan.probe.wavelength_nm == 1000.0, "probe not at 1000 nm");
  c.require(a.capture_fraction == 1.0, "capture " + fmt("%.6g", a.capture_fraction));
  c.require(a.bob_key_matches_baseline, "Bob's key changed under attack");

  const auto wd = golden_config("dps-trojan-watchdog");
  const double tapped = wd.countermeasures.watchdog.tap_fraction * wd.attack.trojan.probe.amplitude *
                        wd.attack.trojan.probe.amplitude;
  c.require(wd.countermeasures.watchdog.tap_fraction == 0.1, "watchdog tap != 0.1");
  c.require(wd.countermeasures.watchdog.threshold < tapped, "watchdog threshold not below the tapped probe");
  std::ostringstream out, err;
  const int code = run_cli({"attack", "--golden", "dps-trojan-watchdog", "--out", "acceptance-out/dps-trojan-watchdog"},
                           out, err);
  c.require(code == kExitAlarm, "watchdog run exit code " + std::to_string(code));
  c.note("capture 1, Bob's keys identical, watchdog exit " + std::to_string(code));
  return c;
}

Check dli_oracle() {
  Check c;
  double worst = 0.0;
  std::size_t trains = 0;
  auto compare = [&](const std::vector<int>& units, std::size_t d) {
    const auto in = oracle::from_phase_units(units);
    PulseTrain t;
    t.slots.assign(in.begin(), in.end());
    const auto got = dli(t, d);
    const auto want = oracle::dli(in, d);
    for (std::size_t k = 0; k < want.constructive.size(); ++k) {
      worst = std::max(worst, std::abs(got.constructive.intensity(k) - std::norm(want.constructive[k])));
      worst = std::max(worst, std::abs(got.destructive.intensity(k) - std::norm(want.destructive[k])));
    }
    ++trains;
  };
  // Every train up to 8 slots.
  for (std::size_t len = 1; len <= 8; ++len) {
    std::vector<int> units(len, 0);
    std::size_t count = 1;
    for (std::size_t i = 0; i < len; ++i) count *= 4;
    for (std::size_t idx = 0; idx < count; ++idx) {
      std::size_t x = idx;
      for (auto& u : units) {
        u = static_cast<int>(x % 4);
        x /= 4;
      }
      compare(units, 1);
    }
  }
  // Sampled trains from 9 to 32 slots, delays 1..3.
  std::mt19937_64 g(1234);
  for (int trial = 0; trial < 50000; ++trial) {
    std::vector<int> units(9 + g() % 24);
    for (auto& u : units) u = static_cast<int>(g() % 4);
    compare(units, 1 + g() % 3);
  }
  c.require(worst <= 1e-12, "max deviation " + fmt("%.3g", worst));
  c.note(std::to_string(trains) + " trains (exhaustive to 8 slots, sampled to 32), max deviation " +
         fmt("%.3g", worst));
  return c;
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Check()>>> criteria{
      {"cow-ideal-visibility", cow_ideal_visibility},
      {"cow-tamper-visibility", cow_tamper_visibility},
      {"dps-round-trip", dps_round_trip},
      {"backflash-ideal", backflash_ideal},
      {"backflash-statistics", backflash_statistics},
      {"fsg-sequence-reproduction", fsg_reproduction},
      {"cow-blinding", cow_blinding},
      {"countermeasure-discrimination", countermeasure},
      {"trojan-horse", trojan},
      {"dli-oracle-equivalence", dli_oracle},
  };
  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    Check c;
    try {
      c = fn();
    } catch (const std::exception& e) {
      c.ok = false;
      c.detail = std::string("exception: ") + e.what();
    }
    std::printf("%s %s: %s\n", c.ok ? "PASS" : "FAIL", name, c.detail.c_str());
    std::fflush(stdout);
    failed += c.ok ? 0 : 1;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
