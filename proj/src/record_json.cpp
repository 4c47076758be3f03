#include <openssl/evp.h>

#include <cmath>
#include <cstdio>

#include "dprsim/scenario.hpp"

namespace dprsim {

namespace {

constexpr const char* kRecordFormat = "dprsim-run v1";

template <class T>
Json opt(const std::optional<T>& v) {
  return v ? Json(*v) : Json(nullptr);
}

template <class T>
std::optional<T> opt_from(const Json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<T>();
}

std::string mode_string(const std::vector<ApdMode>& modes) {
  std::string s;
  s.reserve(modes.size());
  for (auto m : modes) s.push_back(m == ApdMode::geiger ? 'G' : 'L');
  return s;
}

std::vector<ApdMode> modes_from(const std::string& s) {
  std::vector<ApdMode> out;
  out.reserve(s.size());
  for (char c : s) {
    if (c == 'G') out.push_back(ApdMode::geiger);
    else if (c == 'L') out.push_back(ApdMode::linear);
    else throw std::invalid_argument(std::string("invalid detector mode '") + c + "'");
  }
  return out;
}

Json counts_json(const ClassCounts& c) {
  return {{"interfaces", c.interfaces}, {"m1", c.m1}, {"m2", c.m2}, {"visibility", opt(c.visibility())}};
}

Json feasibility_json(const FeasibilityReport& f) {
  return {{"always_never", f.always_never},
          {"data_isolation", opt(f.data_isolation)},
          {"monitor_isolation", opt(f.monitor_isolation)},
          {"marginal", f.marginal},
          {"ok", f.ok()}};
}

FeasibilityReport feasibility_from(const Json& j) {
  FeasibilityReport f;
  f.always_never = j.at("always_never").get<bool>();
  f.data_isolation = opt_from<bool>(j, "data_isolation");
  f.monitor_isolation = opt_from<bool>(j, "monitor_isolation");
  f.marginal = j.at("marginal").get<bool>();
  return f;
}

Json plan_json(const FsgPlan& p) {
  std::vector<int> cow;
  for (const auto& r : p.cow_readings) cow.push_back(r.code());
  return {{"readings", p.readings},
          {"cow_readings", cow},
          {"phase_units", p.phase_units},
          {"reference_phase_units", p.reference_phase_units},
          {"intensity", p.intensity}};
}

FsgPlan plan_from(const Json& j) {
  FsgPlan p;
  p.readings = j.at("readings").get<std::vector<std::uint8_t>>();
  for (auto c : j.at("cow_readings").get<std::vector<std::uint8_t>>()) p.cow_readings.push_back(CowReading::from_code(c));
  p.phase_units = j.at("phase_units").get<std::vector<int>>();
  p.reference_phase_units = j.at("reference_phase_units").get<int>();
  p.intensity = j.at("intensity").get<std::vector<double>>();
  return p;
}

Json alarms_json(const Alarms& a) {
  return {{"watchdog", a.watchdog}, {"photocurrent_monitor", a.photocurrent_monitor}, {"any", a.any()}};
}

Alarms alarms_from(const Json& j) {
  Alarms a;
  a.watchdog = j.at("watchdog").get<bool>();
  a.photocurrent_monitor = j.at("photocurrent_monitor").get<bool>();
  return a;
}

}  // namespace

Json to_json(const DetectionRecord& rec) {
  Json dets = Json::array();
  for (const auto& t : rec.detectors) {
    std::string clicks;
    clicks.reserve(t.clicks.size());
    for (auto c : t.clicks) clicks.push_back(c ? '1' : '0');
    dets.push_back({{"id", t.id},
                    {"clicks", clicks},
                    {"modes", mode_string(t.mode)},
                    {"intensity", t.intensity},
                    {"photocurrent", t.photocurrent}});
  }
  return {{"detectors", dets}};
}

DetectionRecord detection_record_from_json(const Json& j) {
  DetectionRecord rec;
  for (const auto& d : j.at("detectors")) {
    DetectorTrace t;
    t.id = d.at("id").get<std::string>();
    t.clicks = bits_from_string(d.at("clicks").get<std::string>());
    t.mode = modes_from(d.at("modes").get<std::string>());
    t.intensity = d.at("intensity").get<std::vector<double>>();
    t.photocurrent = d.at("photocurrent").get<std::vector<double>>();
    rec.detectors.push_back(std::move(t));
  }
  return rec;
}

Json to_json(const ProtocolRun& run) {
  Json j;
  j["protocol"] = to_string(run.protocol);
  if (run.protocol == Protocol::dps) j["alice_bits"] = bits_to_string(run.alice_bits);
  else j["alice_symbols"] = to_string(std::span<const CowSymbol>(run.alice_symbols));
  j["bob"] = to_json(run.bob);
  Json key;
  key["alice_key"] = bits_to_string(run.alice_key());
  key["bob_key"] = bits_to_string(run.bob_key());
  key["qber"] = run.qber();
  if (run.dps) {
    key["positions"] = run.dps->positions;
    key["double_clicks"] = run.dps->double_clicks;
    key["empty"] = run.dps->empty;
  }
  if (run.cow) {
    const auto& c = *run.cow;
    key["positions"] = c.positions;
    key["decoy_positions"] = c.decoy_positions;
    key["inconsistent"] = c.inconsistent;
    key["empty"] = c.empty;
    Json classes = Json::object();
    for (auto cls : kInterfaceClasses) classes[label(cls)] = counts_json(c.visibility.of(cls));
    key["visibility"] = {{"overall", counts_json(c.visibility.overall)},
                         {"classes", classes},
                         {"unclassified_m1", c.visibility.unclassified_m1},
                         {"unclassified_m2", c.visibility.unclassified_m2}};
  }
  j["key"] = key;
  return j;
}

ProtocolRun protocol_run_from_json(const Json& j) {
  const auto protocol = j.at("protocol").get<std::string>();
  auto bob = detection_record_from_json(j.at("bob"));
  if (protocol == "dps") return make_dps_run(bits_from_string(j.at("alice_bits").get<std::string>()), std::move(bob));
  if (protocol == "cow")
    return make_cow_run(parse_cow_symbols(j.at("alice_symbols").get<std::string>()), std::move(bob));
  throw std::invalid_argument("unknown protocol '" + protocol + "'");
}

Json to_json(const AttackOutcome& out) {
  Json j;
  j["type"] = to_string(out.type);
  j["bob_key"] = bits_to_string(out.bob_key);
  j["eve_key"] = bits_to_string(out.eve_key);
  j["eve_positions"] = out.eve_positions;
  j["capture_fraction"] = out.capture_fraction;
  j["induced_qber"] = out.induced_qber;
  j["induced_visibility_drop"] = opt(out.induced_visibility_drop);
  j["bob_key_matches_baseline"] = out.bob_key_matches_baseline;
  j["alarms"] = alarms_json(out.alarms);
  j["feasibility"] = out.feasibility ? feasibility_json(*out.feasibility) : Json(nullptr);
  j["eve_record"] = out.eve_record ? to_json(*out.eve_record) : Json(nullptr);
  j["bob_clicks"] = out.bob_clicks;
  j["emissions"] = out.emissions;
  j["plan"] = out.plan ? plan_json(*out.plan) : Json(nullptr);
  j["eve_readings"] = out.eve_readings;
  j["bob_readings"] = out.bob_readings;
  j["readings_match"] = out.readings_match;
  j["spurious_monitor_clicks"] = out.spurious_monitor_clicks;
  return j;
}

AttackOutcome attack_outcome_from_json(const Json& j) {
  AttackOutcome out;
  const auto type = j.at("type").get<std::string>();
  const auto t = parse_attack_type(type);
  if (!t) throw std::invalid_argument("unknown attack type '" + type + "'");
  out.type = *t;
  out.bob_key = bits_from_string(j.at("bob_key").get<std::string>());
  out.eve_key = bits_from_string(j.at("eve_key").get<std::string>());
  out.eve_positions = j.at("eve_positions").get<std::vector<std::size_t>>();
  out.capture_fraction = j.at("capture_fraction").get<double>();
  out.induced_qber = j.at("induced_qber").get<double>();
  out.induced_visibility_drop = opt_from<double>(j, "induced_visibility_drop");
  out.bob_key_matches_baseline = j.at("bob_key_matches_baseline").get<bool>();
  out.alarms = alarms_from(j.at("alarms"));
  if (!j.at("feasibility").is_null()) out.feasibility = feasibility_from(j.at("feasibility"));
  if (!j.at("eve_record").is_null()) out.eve_record = detection_record_from_json(j.at("eve_record"));
  out.bob_clicks = j.at("bob_clicks").get<std::size_t>();
  out.emissions = j.at("emissions").get<std::size_t>();
  if (!j.at("plan").is_null()) out.plan = plan_from(j.at("plan"));
  out.eve_readings = j.at("eve_readings").get<std::vector<std::uint8_t>>();
  out.bob_readings = j.at("bob_readings").get<std::vector<std::uint8_t>>();
  out.readings_match = j.at("readings_match").get<bool>();
  out.spurious_monitor_clicks = j.at("spurious_monitor_clicks").get<std::size_t>();
  return out;
}

Json to_json(const RunRecord& rec, bool include_wall_time) {
  Json j;
  j["format"] = kRecordFormat;
  j["config"] = to_json(rec.config);
  j["run"] = to_json(rec.run);
  j["attack"] = rec.attack ? to_json(*rec.attack) : Json(nullptr);
  j["alarms"] = alarms_json(rec.alarms);
  if (include_wall_time) j["wall_time_s"] = rec.wall_time_s;
  return j;
}

RunRecord record_from_json(const Json& j) {
  if (!j.is_object() || j.value("format", "") != kRecordFormat)
    throw std::invalid_argument(std::string("not a ") + kRecordFormat + " record");
  RunRecord rec;
  rec.config = config_from_json(j.at("config"));
  rec.run = protocol_run_from_json(j.at("run"));
  if (!j.at("attack").is_null()) rec.attack = attack_outcome_from_json(j.at("attack"));
  rec.alarms = alarms_from(j.at("alarms"));
  rec.wall_time_s = j.value("wall_time_s", 0.0);
  return rec;
}

std::string canonical_dump(const Json& j) { return j.dump(); }

std::string sha256_hex(std::string_view data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("SHA-256 failed");
  std::string hex;
  hex.reserve(2 * len);
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", md[i]);
    hex += buf;
  }
  return hex;
}

std::string record_digest(const RunRecord& rec) { return sha256_hex(canonical_dump(to_json(rec, false))); }

}  // namespace dprsim
