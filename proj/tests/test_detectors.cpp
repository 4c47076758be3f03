#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "dprsim/detectors.hpp"
#include "dprsim/rng.hpp"

using namespace dprsim;

namespace {

ApdConfig geiger(double threshold) {
  ApdConfig c;
  c.click_threshold = threshold;
  return c;
}

ApdConfig linear(double p_never, double p_always) {
  ApdConfig c;
  c.mode = ApdMode::linear;
  c.p_never = p_never;
  c.p_always = p_always;
  return c;
}

}  // namespace

TEST_CASE("geiger: vacuum never clicks, above-threshold light always does") {
  const std::vector<double> dark(50, 0.0);
  CHECK(apd_detect("D", dark, geiger(0.5)).click_count() == 0);
  const std::vector<double> bright{0.6, 0.5, 0.4, 2.0};
  const auto t = apd_detect("D", bright, geiger(0.5));
  CHECK(t.clicks == std::vector<std::uint8_t>{1, 0, 0, 1});
  CHECK(t.intensity == bright);
}

TEST_CASE("linear mode: deterministic at the rails") {
  std::mt19937_64 g(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const double pn = 0.1 + 0.3 * u(g);
    const double pa = pn + 0.01 + 0.5 * u(g);
    auto cfg = linear(pn, pa);
    cfg.rng_seed = static_cast<std::uint64_t>(trial);
    std::vector<double> in;
    for (int k = 0; k < 40; ++k) in.push_back(k % 2 ? pa * (1.0 + u(g)) : pn * u(g));
    const auto t = apd_detect("D", in, cfg);
    for (std::size_t k = 0; k < in.size(); ++k) CHECK(t.clicked(k) == (k % 2 == 1));
  }
  CHECK(apd_detect("D", std::vector<double>{0.4}, linear(0.2, 0.4)).clicked(0));
  CHECK_FALSE(apd_detect("D", std::vector<double>{0.2}, linear(0.2, 0.4)).clicked(0));
}

TEST_CASE("dead time: clicks on one detector are never closer than the dead time") {
  std::mt19937_64 g(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::size_t dead = 0; dead < 6; ++dead) {
    auto cfg = geiger(0.5);
    cfg.dead_time_slots = dead;
    cfg.afterpulse_prob = 0.3;
    cfg.dark_count_prob = 0.05;
    cfg.rng_seed = dead;
    std::vector<double> in;
    for (int k = 0; k < 2000; ++k) in.push_back(u(g));
    const auto t = apd_detect("D", in, cfg);
    std::optional<std::size_t> last;
    for (std::size_t k = 0; k < t.size(); ++k) {
      if (!t.clicked(k)) continue;
      if (last) CHECK(k - *last > dead);
      last = k;
    }
  }
}

TEST_CASE("afterpulse: certain afterpulse fires right after the dead time") {
  auto cfg = geiger(0.5);
  cfg.dead_time_slots = 2;
  cfg.afterpulse_prob = 1.0;
  const std::vector<double> in{1.0, 0.0, 0.0, 0.0, 0.0};
  const auto t = apd_detect("D", in, cfg);
  CHECK(t.clicks == std::vector<std::uint8_t>{1, 0, 0, 1, 0});
}

TEST_CASE("afterpulse: per-wavelength override") {
  auto cfg = geiger(0.5);
  cfg.afterpulse_prob = 0.0;
  cfg.afterpulse_by_wavelength[1000.0] = 1.0;
  const std::vector<double> in{1.0, 0.0, 0.0};
  CHECK(apd_detect("D", in, cfg, 1550.0).click_count() == 1);
  CHECK(apd_detect("D", in, cfg, 1000.0).click_count() >= 2);
}

TEST_CASE("detector: same seed reproduces the same noisy record") {
  auto cfg = geiger(0.5);
  cfg.dark_count_prob = 0.2;
  cfg.rng_seed = 77;
  const std::vector<double> in(500, 0.0);
  CHECK(apd_detect("D", in, cfg) == apd_detect("D", in, cfg));
}

TEST_CASE("detector: invalid configuration throws") {
  CHECK_THROWS_AS(apd_detect("D", std::vector<double>{0.0}, linear(0.4, 0.2)), OpticsError);
  auto cfg = geiger(0.5);
  cfg.dark_count_prob = 1.5;
  CHECK_THROWS_AS(apd_detect("D", std::vector<double>{0.0}, cfg), OpticsError);
}

TEST_CASE("blinding: dark detector stays in Geiger mode") {
  const std::vector<double> dark(100, 0.0);
  const auto tr = blinding_update(BlindingState{0.0, 0.9, 1.0}, dark);
  CHECK(std::all_of(tr.mode.begin(), tr.mode.end(), [](ApdMode m) { return m == ApdMode::geiger; }));
}

TEST_CASE("blinding: sustained light at the fixed-point level converges to blinded") {
  const double decay = 0.8;
  const double threshold = 2.0;
  const std::vector<double> in(400, threshold / (1.0 - decay));
  const auto tr = blinding_update(BlindingState{0.0, decay, threshold}, in);
  CHECK(tr.mode.back() == ApdMode::linear);
  CHECK(tr.final_state.stored_photocurrent == doctest::Approx(threshold / (1.0 - decay) / (1.0 - decay)));
}

TEST_CASE("blinding: one pulse at 10x threshold with decay 1/2 blinds four slots") {
  std::vector<double> in(12, 0.0);
  in[0] = 10.0;
  const auto tr = blinding_update(BlindingState{0.0, 0.5, 1.0}, in);
  const auto linear_slots = std::count(tr.mode.begin(), tr.mode.end(), ApdMode::linear);
  CHECK(linear_slots == static_cast<long>(std::ceil(std::log2(10.0))));
  for (std::size_t k = 1; k <= 4; ++k) CHECK(tr.mode[k] == ApdMode::linear);
}

TEST_CASE("blinding: more energy never shortens the blinded period") {
  std::mt19937_64 g(4);
  std::uniform_real_distribution<double> u(0.0, 5.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> in(60);
    for (auto& x : in) x = u(g) < 1.0 ? u(g) : 0.0;
    auto more = in;
    for (auto& x : more) x += u(g) < 1.0 ? u(g) : 0.0;
    const BlindingState s{0.0, 0.7, 3.0};
    const auto a = blinding_update(s, in);
    const auto b = blinding_update(s, more);
    for (std::size_t k = 0; k < in.size(); ++k)
      if (a.mode[k] == ApdMode::linear) CHECK(b.mode[k] == ApdMode::linear);
  }
}

TEST_CASE("blinding input switches a detector to linear mode") {
  BlindingInput b;
  b.state = BlindingState{20.0, 0.9, 10.0};
  b.illumination.assign(10, 2.0);
  const std::vector<double> in(10, 0.5);
  const auto t = apd_detect("D", in, linear(0.2, 0.4), 1550.0, b);
  for (std::size_t k = 0; k < 10; ++k) CHECK(t.mode[k] == ApdMode::linear);
  CHECK(t.click_count() == 10);
  CHECK(t.photocurrent[0] == doctest::Approx(20.0 * 0.9 + 0.5 + 2.0));
}

TEST_CASE("backflash: ideal mode re-emits every clicked slot scaled by the gain") {
  DetectorTrace t;
  t.id = "D";
  t.clicks.assign(5, 1);
  PulseTrain inc;
  inc.slots = {{1, 0}, {0, 1}, {-1, 0}, {0.5, 0.5}, {2, 0}};
  BackflashConfig cfg;
  cfg.ideal_mode = true;
  cfg.emission_gain = 0.3;
  Rng rng(1);
  const auto out = backflash_emit(t, inc, cfg, rng);
  for (std::size_t k = 0; k < 5; ++k) CHECK(std::abs(out.slots[k] - 0.3 * inc.slots[k]) < 1e-15);

  t.clicks.assign(5, 0);
  const auto none = backflash_emit(t, inc, cfg, rng);
  CHECK(none.total_power() == 0.0);
}

TEST_CASE("backflash: emission probability is the product of the two constants") {
  BackflashConfig cfg;
  CHECK(cfg.emission_probability() == doctest::Approx(2.7e8 * 2.4e-10));
  cfg.photons_per_electron = 1e-6;
  CHECK(cfg.emission_probability() == 1.0);
}

TEST_CASE("backflash: emitted fraction over 1e5 clicks sits in the binomial band") {
  const std::size_t n = 100'000;
  DetectorTrace t;
  t.id = "D";
  t.clicks.assign(n, 1);
  PulseTrain inc = PulseTrain::vacuum(n);
  for (auto& a : inc.slots) a = 1.0;
  BackflashConfig cfg;
  Rng rng(derive_seed(42, "backflash.D"));
  const auto out = backflash_emit(t, inc, cfg, rng);
  std::size_t emitted = 0;
  for (auto a : out.slots) emitted += a != Amplitude{} ? 1 : 0;
  const double p = cfg.emission_probability();
  const double frac = static_cast<double>(emitted) / static_cast<double>(n);
  const double sigma = std::sqrt(p * (1.0 - p) / static_cast<double>(n));
  CHECK(std::abs(frac - p) < 3.0 * sigma);
  CHECK(std::abs(frac - 0.0648) < 0.005);
}

TEST_CASE("monitor: constant current alarms iff it reaches the threshold") {
  for (std::size_t w : {1u, 2u, 5u, 8u, 32u}) {
    for (double c : {0.0, 10.0, 74.999, 75.0, 100.0}) {
      const std::vector<double> trace(100, c);
      CHECK(photocurrent_monitor(trace, w, 75.0).alarm == (c >= 75.0));
    }
  }
}

TEST_CASE("monitor: sparse pulses averaged below threshold do not alarm") {
  std::vector<double> trace(256, 0.0);
  for (std::size_t k = 0; k < trace.size(); k += 16) trace[k] = 100.0;
  CHECK_FALSE(photocurrent_monitor(trace, 16, 75.0).alarm);
  CHECK(photocurrent_monitor(trace, 1, 75.0).alarm);
}

TEST_CASE("watchdog: bright probe alarms, weak light passes scaled") {
  const auto probe = cw_laser(4, 1.0, 1000.0);
  const auto bright = watchdog(probe, 0.1, 0.05);
  CHECK(bright.alarm);
  CHECK(bright.tapped_peak == doctest::Approx(0.1));
  const auto weak = watchdog(cw_laser(4, 0.01), 0.1, 0.05);
  CHECK_FALSE(weak.alarm);
  CHECK(weak.passthrough.intensity(0) == doctest::Approx(0.9e-4));
  CHECK(watchdog(cw_laser(1, 1.0), 0.5, 1.0).passthrough.intensity(0) == doctest::Approx(0.5));
  CHECK_THROWS_AS(watchdog(probe, 1.0, 0.1), OpticsError);
}

TEST_CASE("trace resize and drop_front keep the columns aligned") {
  DetectorTrace t{"D", {1, 0, 1}, {1.0, 0.0, 2.0}, {1.0, 0.9, 2.8}, {ApdMode::geiger, ApdMode::geiger, ApdMode::linear}};
  t.drop_front(1);
  CHECK(t.clicks == std::vector<std::uint8_t>{0, 1});
  CHECK(t.intensity == std::vector<double>{0.0, 2.0});
  t.resize(4);
  CHECK(t.size() == 4);
  CHECK(t.mode.size() == 4);
  CHECK_FALSE(t.clicked(3));
}
