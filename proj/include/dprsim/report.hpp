#pragma once

// Metrics and on-disk outputs of a run.

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dprsim/scenario.hpp"

namespace dprsim {

struct DetectorCounts {
  std::string id;
  std::size_t slots = 0;
  std::size_t clicks = 0;

  bool operator==(const DetectorCounts&) const = default;
};

struct MetricsSummary {
  Protocol protocol = Protocol::dps;
  std::size_t alice_key_length = 0;
  std::size_t bob_key_length = 0;
  double qber = 0.0;
  // COW: overall and per-class visibility (nullopt where a class has no
  // monitor clicks), and total D_M2 over total D_M1 intensity on interface
  // slots.
  std::optional<double> visibility;
  std::map<std::string, std::optional<double>> class_visibility;
  std::optional<double> monitor_intensity_ratio;
  std::optional<std::string> attack;
  std::optional<double> capture_fraction;
  std::optional<double> induced_qber;
  std::optional<double> induced_visibility_drop;
  std::optional<bool> bob_key_matches_baseline;
  std::optional<bool> bob_record_matches_eve_readings;
  std::optional<std::size_t> spurious_monitor_clicks;
  std::optional<FeasibilityReport> feasibility;
  Alarms alarms;
  std::vector<DetectorCounts> bob_counts;
  std::vector<DetectorCounts> eve_counts;

  bool operator==(const MetricsSummary&) const = default;
};

MetricsSummary compute_metrics(const RunRecord& rec);
Json to_json(const MetricsSummary& m);
MetricsSummary metrics_from_json(const Json& j);

// Per-slot event table of Bob's (and Eve's) detectors.
std::string events_csv(const RunRecord& rec);
struct ParsedEvents {
  DetectionRecord bob;
  std::optional<DetectionRecord> eve;
};
ParsedEvents parse_events_csv(const std::string& text);

// Two-column (slot, intensity) trace.
std::string trace_dat(const DetectorTrace& trace);
std::vector<double> parse_trace_dat(const std::string& text);

std::string key_file(std::span<const std::uint8_t> key);
std::vector<std::uint8_t> parse_key_file(const std::string& text);

// Replaces the detection records of `rec` with the parsed events and
// recomputes the metrics.
MetricsSummary metrics_from_events(const RunRecord& rec, const ParsedEvents& events);

// Writes events.csv, alice.key, bob.key, eve.key (attacks only),
// metrics.json, record.json and traces/<detector>.dat.
void emit_outputs(const RunRecord& rec, const std::filesystem::path& dir);

std::string read_text_file(const std::filesystem::path& path);

}  // namespace dprsim
