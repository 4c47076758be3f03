#include "dprsim/scenario.hpp"

namespace dprsim {

const std::vector<GoldenScenario>& golden_scenarios() {
  static const std::vector<GoldenScenario> goldens{
      {"dps-fig1", "DPS link, 64 PRBS phase bits, lossless, no attack",
       R"({"protocol": "dps", "seed": 1, "n_symbols": 64})"},
      {"cow-fig2", "COW link, symbols 01d10001d1, t_B = 0.9, no attack",
       R"({"protocol": "cow", "seed": 1, "cow": {"symbols": "01d10001d1", "t_B": 0.9}})"},
      {"cow-fig4-tamper", "cow-fig2 with a pi phase flip on grid slots 5..16 in the channel",
       R"({"protocol": "cow", "seed": 1, "cow": {"symbols": "01d10001d1", "t_B": 0.9},
           "channel": {"tamper_phase": [0, 0, 0, 0, 0, "pi", "pi", "pi", "pi", "pi", "pi",
                                        "pi", "pi", "pi", "pi", "pi", "pi", 0, 0, 0]}})"},
      {"dps-backflash-ideal", "DPS, every avalanche re-emits coherently toward Eve",
       R"({"protocol": "dps", "seed": 7, "n_symbols": 256,
           "attack": {"type": "backflash", "backflash": {"ideal_mode": true}}})"},
      {"dps-backflash", "DPS, 1e5 sifted slots, measured backflash emission probability",
       R"({"protocol": "dps", "seed": 11, "n_symbols": 100001, "attack": {"type": "backflash"}})"},
      {"cow-backflash-ideal", "COW, every avalanche re-emits coherently toward Eve",
       R"({"protocol": "cow", "seed": 7, "n_symbols": 256,
           "attack": {"type": "backflash", "backflash": {"ideal_mode": true}}})"},
      {"dps-trojan", "DPS, 1000 nm probe reflected off Alice's modulators",
       R"({"protocol": "dps", "seed": 3, "n_symbols": 256, "attack": {"type": "trojan"}})"},
      {"dps-trojan-watchdog", "dps-trojan with a watchdog photodiode at Alice's entrance",
       R"({"protocol": "dps", "seed": 3, "n_symbols": 256, "attack": {"type": "trojan"},
           "countermeasures": {"watchdog": {"enabled": true, "tap_fraction": 0.1, "threshold": 0.05}}})"},
      {"cow-trojan", "COW, 1000 nm probe reflected off Alice's modulators",
       R"({"protocol": "cow", "seed": 3, "n_symbols": 64, "attack": {"type": "trojan"}})"},
      {"dps-blinding", "DPS detector blinding replaying the 15-reading worked example",
       R"({"protocol": "dps", "seed": 5, "dps": {"bits": "0001110110110000"},
           "attack": {"type": "blinding",
                      "blinding": {"policy": "paper-example", "illumination": "pulsed",
                                   "readings": "012012202202000"}},
           "countermeasures": {"photocurrent_monitor": {"enabled": true}}})"},
      {"cow-blinding", "COW detector blinding at t_B = 0.5, symbols 01d10001d1",
       R"({"protocol": "cow", "seed": 5, "cow": {"symbols": "01d10001d1", "t_B": 0.5},
           "attack": {"type": "blinding",
                      "blinding": {"illumination": "pulsed", "p_never": 0.2, "p_always": 0.3,
                                   "p_never_b": 0.32, "p_always_b": 0.38}},
           "countermeasures": {"photocurrent_monitor": {"enabled": true}}})"},
      {"dps-blinding-cw", "dps-blinding with continuous-wave blinding light",
       R"({"protocol": "dps", "seed": 5, "dps": {"bits": "0001110110110000"},
           "attack": {"type": "blinding",
                      "blinding": {"policy": "paper-example", "illumination": "cw",
                                   "readings": "012012202202000"}},
           "countermeasures": {"photocurrent_monitor": {"enabled": true}}})"},
  };
  return goldens;
}

const GoldenScenario* find_golden(std::string_view name) {
  for (const auto& g : golden_scenarios())
    if (g.name == name) return &g;
  return nullptr;
}

ScenarioConfig golden_config(std::string_view name) {
  const auto* g = find_golden(name);
  if (!g) throw ConfigError("/golden_name", "unknown golden scenario \"" + std::string(name) + "\"");
  auto cfg = config_from_json(Json::parse(g->overrides));
  cfg.golden_name = g->name;
  return cfg;
}

std::string golden_digest(std::string_view name) {
  return sha256_hex(canonical_dump(to_json(golden_config(name))));
}

}  // namespace dprsim
