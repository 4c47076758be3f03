#pragma once

// Scenario configuration, seeded execution and run records.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "dprsim/attacks.hpp"
#include "dprsim/protocol.hpp"

namespace dprsim {

using Json = nlohmann::ordered_json;

// Invalid scenario text or parameter. `path` is the JSON pointer of the
// offending field (empty for parse errors, which carry line/column instead).
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string path, const std::string& message);
  ConfigError(std::size_t line, std::size_t column, const std::string& message);
  const std::string& path() const { return path_; }
  std::size_t line() const { return line_; }

 private:
  std::string path_;
  std::size_t line_ = 0;
};

struct DetectorSettings {
  double threshold_fraction = 0.5;
  std::size_t dead_time_slots = 0;
  double afterpulse_prob = 0.0;
  double dark_count_prob = 0.0;
};

struct ChannelSettings {
  double loss_db = 0.0;
  std::vector<double> tamper_phase;  // radians per grid slot from slot 0
};

struct AttackSettings {
  AttackType type = AttackType::none;
  BackflashConfig backflash;
  TrojanConfig trojan;
  BlindingAttackConfig blinding;
};

struct Countermeasures {
  WatchdogConfig watchdog;
  PhotocurrentMonitorConfig photocurrent_monitor;
};

struct ScenarioConfig {
  std::optional<std::string> golden_name;
  Protocol protocol = Protocol::dps;
  std::uint64_t seed = 1;
  std::size_t n_symbols = 64;
  std::optional<std::vector<std::uint8_t>> dps_bits;
  std::optional<std::vector<CowSymbol>> cow_symbols;
  double t_b = 0.9;
  double decoy_fraction = 0.1;
  SourceConfig source;
  std::optional<double> slot_period;  // default 1 (DPS) or 0.5 (COW)
  DetectorSettings detectors;
  ChannelSettings channel;
  AttackSettings attack;
  Countermeasures countermeasures;

  double resolved_slot_period() const;
};

// Canonical JSON with every field present.
Json to_json(const ScenarioConfig& cfg);
// Applies defaults for missing keys, rejects unknown keys and out-of-domain
// values. A "golden_name" key loads that pinned scenario first and applies
// the remaining keys on top of it.
ScenarioConfig config_from_json(const Json& j);
ScenarioConfig load_config(std::string_view text);
ScenarioConfig load_config_file(const std::string& path);

// Phase bits or symbols the run will use (explicit or drawn from the seed).
std::vector<std::uint8_t> scenario_dps_bits(const ScenarioConfig& cfg);
std::vector<CowSymbol> scenario_cow_symbols(const ScenarioConfig& cfg);

struct RunRecord {
  ScenarioConfig config;
  ProtocolRun run;  // Bob's run (under attack when there is one)
  std::optional<AttackOutcome> attack;
  Alarms alarms;
  double wall_time_s = 0.0;
};

RunRecord run_scenario(const ScenarioConfig& cfg);

// Serialization. The canonical form leaves out the wall time so equal runs
// serialize to equal bytes.
Json to_json(const RunRecord& rec, bool include_wall_time = true);
RunRecord record_from_json(const Json& j);
std::string canonical_dump(const Json& j);
std::string sha256_hex(std::string_view data);
std::string record_digest(const RunRecord& rec);

Json to_json(const DetectionRecord& rec);
DetectionRecord detection_record_from_json(const Json& j);
Json to_json(const AttackOutcome& out);
AttackOutcome attack_outcome_from_json(const Json& j);
Json to_json(const ProtocolRun& run);
ProtocolRun protocol_run_from_json(const Json& j);

// One independent run per value; run i uses seed derive_seed(cfg.seed, i).
// `pointer` is a JSON pointer into to_json(cfg) that must address a number.
std::vector<RunRecord> sweep(const ScenarioConfig& cfg, const std::string& pointer,
                             const std::vector<double>& values, unsigned jobs = 1);
// The per-value configs sweep() would run.
std::vector<ScenarioConfig> sweep_configs(const ScenarioConfig& cfg, const std::string& pointer,
                                          const std::vector<double>& values);

// ---------------------------------------------------------------------------
// Pinned scenarios

struct GoldenScenario {
  std::string name;
  std::string description;
  std::string overrides;  // scenario JSON
};

const std::vector<GoldenScenario>& golden_scenarios();
const GoldenScenario* find_golden(std::string_view name);
ScenarioConfig golden_config(std::string_view name);
// SHA-256 of the golden's canonical configuration.
std::string golden_digest(std::string_view name);

std::string bits_to_string(std::span<const std::uint8_t> bits);
std::vector<std::uint8_t> bits_from_string(std::string_view s);

}  // namespace dprsim
