#include "dprsim/report.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace dprsim {

namespace {

constexpr const char* kEventsHeader = "# dprsim events v1";
constexpr const char* kEvePrefix = "Eve.";

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<DetectorCounts> counts_of(const DetectionRecord& rec) {
  std::vector<DetectorCounts> out;
  for (const auto& t : rec.detectors) out.push_back({t.id, t.size(), t.click_count()});
  return out;
}

struct ReadingCheck {
  bool match = false;
  std::size_t spurious = 0;
};

// Bob's readings against what Eve asked for, from the stored records only.
ReadingCheck check_readings(const RunRecord& rec) {
  const auto& out = *rec.attack;
  ReadingCheck c;
  if (rec.run.protocol == Protocol::dps) {
    const std::size_t n = rec.run.alice_bits.size();
    const auto raw = dps_readings(rec.run.bob);
    if (raw.size() < n) return c;
    const std::vector<std::uint8_t> bob(raw.begin() + 1, raw.begin() + static_cast<std::ptrdiff_t>(n));
    c.match = bob == out.eve_readings && raw.front() == reading_none &&
              std::all_of(raw.begin() + static_cast<std::ptrdiff_t>(n), raw.end(),
                          [](std::uint8_t r) { return r == reading_none; });
    return c;
  }
  const std::size_t grid = 2 * rec.run.alice_symbols.size();
  if (out.eve_readings.size() != grid) return c;
  const auto got = cow_readings(rec.run.bob, grid);
  bool same = true;
  for (std::size_t s = 0; s < grid; ++s) {
    const auto want = CowReading::from_code(out.eve_readings[s]);
    same = same && got[s] == want;
    const int w = want.monitor;
    const int h = got[s].monitor;
    if (h == 3) c.spurious += w == 0 ? 2 : 1;
    else if (h != 0 && h != w) ++c.spurious;
  }
  for (const char* id : {detector_id::dm1, detector_id::dm2}) {
    const auto& t = rec.run.bob.at(id);
    for (std::size_t k = grid; k < t.size(); ++k) c.spurious += t.clicked(k) ? 1 : 0;
  }
  c.match = same && c.spurious == 0;
  return c;
}

std::optional<double> monitor_ratio(const ProtocolRun& run) {
  const auto& m1 = run.bob.at(detector_id::dm1);
  const auto& m2 = run.bob.at(detector_id::dm2);
  double s1 = 0.0;
  double s2 = 0.0;
  for (const auto& itf : classify_interfaces(run.alice_symbols)) {
    if (itf.slot < m1.intensity.size()) s1 += m1.intensity[itf.slot];
    if (itf.slot < m2.intensity.size()) s2 += m2.intensity[itf.slot];
  }
  if (s1 <= 0.0) return std::nullopt;
  return s2 / s1;
}

template <class T>
Json opt(const std::optional<T>& v) {
  return v ? Json(*v) : Json(nullptr);
}

template <class T>
std::optional<T> opt_from(const Json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<T>();
}

Json counts_json(const std::vector<DetectorCounts>& counts) {
  Json j = Json::array();
  for (const auto& c : counts) j.push_back({{"id", c.id}, {"slots", c.slots}, {"clicks", c.clicks}});
  return j;
}

std::vector<DetectorCounts> counts_from(const Json& j) {
  std::vector<DetectorCounts> out;
  for (const auto& c : j)
    out.push_back({c.at("id").get<std::string>(), c.at("slots").get<std::size_t>(), c.at("clicks").get<std::size_t>()});
  return out;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << text;
  if (!f) throw std::runtime_error("write failed for " + path.string());
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(line);
  while (std::getline(is, cur, sep)) out.push_back(cur);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

}  // namespace

MetricsSummary compute_metrics(const RunRecord& rec) {
  MetricsSummary m;
  const auto& run = rec.run;
  m.protocol = run.protocol;
  m.alice_key_length = run.alice_key().size();
  m.bob_key_length = run.bob_key().size();
  m.qber = run.qber();
  if (run.cow) {
    const auto& v = run.cow->visibility;
    m.visibility = v.overall.visibility();
    for (auto cls : kInterfaceClasses) m.class_visibility[label(cls)] = v.of(cls).visibility();
    m.monitor_intensity_ratio = monitor_ratio(run);
  }
  if (rec.attack) {
    const auto& a = *rec.attack;
    m.attack = to_string(a.type);
    m.capture_fraction = a.capture_fraction;
    m.induced_qber = a.induced_qber;
    m.induced_visibility_drop = a.induced_visibility_drop;
    m.bob_key_matches_baseline = a.bob_key_matches_baseline;
    m.feasibility = a.feasibility;
    if (a.type == AttackType::blinding) {
      const auto c = check_readings(rec);
      m.bob_record_matches_eve_readings = c.match;
      if (run.protocol == Protocol::cow) m.spurious_monitor_clicks = c.spurious;
    }
    if (a.eve_record) m.eve_counts = counts_of(*a.eve_record);
  }
  m.alarms = rec.alarms;
  m.bob_counts = counts_of(run.bob);
  return m;
}

Json to_json(const MetricsSummary& m) {
  Json classes = Json::object();
  for (const auto& [k, v] : m.class_visibility) classes[k] = opt(v);
  Json feas = nullptr;
  if (m.feasibility) {
    feas = {{"always_never", m.feasibility->always_never},
            {"data_isolation", opt(m.feasibility->data_isolation)},
            {"monitor_isolation", opt(m.feasibility->monitor_isolation)},
            {"marginal", m.feasibility->marginal},
            {"ok", m.feasibility->ok()}};
  }
  return {{"format", "dprsim-metrics v1"},
          {"protocol", to_string(m.protocol)},
          {"alice_key_length", m.alice_key_length},
          {"bob_key_length", m.bob_key_length},
          {"qber", m.qber},
          {"visibility", opt(m.visibility)},
          {"class_visibility", classes},
          {"monitor_intensity_ratio", opt(m.monitor_intensity_ratio)},
          {"attack", opt(m.attack)},
          {"capture_fraction", opt(m.capture_fraction)},
          {"induced_qber", opt(m.induced_qber)},
          {"induced_visibility_drop", opt(m.induced_visibility_drop)},
          {"bob_key_matches_baseline", opt(m.bob_key_matches_baseline)},
          {"bob_record_matches_eve_readings", opt(m.bob_record_matches_eve_readings)},
          {"spurious_monitor_clicks", opt(m.spurious_monitor_clicks)},
          {"feasibility", feas},
          {"alarms", {{"watchdog", m.alarms.watchdog}, {"photocurrent_monitor", m.alarms.photocurrent_monitor}}},
          {"bob_counts", counts_json(m.bob_counts)},
          {"eve_counts", counts_json(m.eve_counts)}};
}

MetricsSummary metrics_from_json(const Json& j) {
  MetricsSummary m;
  m.protocol = j.at("protocol").get<std::string>() == "cow" ? Protocol::cow : Protocol::dps;
  m.alice_key_length = j.at("alice_key_length").get<std::size_t>();
  m.bob_key_length = j.at("bob_key_length").get<std::size_t>();
  m.qber = j.at("qber").get<double>();
  m.visibility = opt_from<double>(j, "visibility");
  for (auto it = j.at("class_visibility").begin(); it != j.at("class_visibility").end(); ++it)
    m.class_visibility[it.key()] = it->is_null() ? std::nullopt : std::optional<double>(it->get<double>());
  m.monitor_intensity_ratio = opt_from<double>(j, "monitor_intensity_ratio");
  m.attack = opt_from<std::string>(j, "attack");
  m.capture_fraction = opt_from<double>(j, "capture_fraction");
  m.induced_qber = opt_from<double>(j, "induced_qber");
  m.induced_visibility_drop = opt_from<double>(j, "induced_visibility_drop");
  m.bob_key_matches_baseline = opt_from<bool>(j, "bob_key_matches_baseline");
  m.bob_record_matches_eve_readings = opt_from<bool>(j, "bob_record_matches_eve_readings");
  m.spurious_monitor_clicks = opt_from<std::size_t>(j, "spurious_monitor_clicks");
  if (!j.at("feasibility").is_null()) {
    const auto& f = j.at("feasibility");
    FeasibilityReport r;
    r.always_never = f.at("always_never").get<bool>();
    r.data_isolation = opt_from<bool>(f, "data_isolation");
    r.monitor_isolation = opt_from<bool>(f, "monitor_isolation");
    r.marginal = f.at("marginal").get<bool>();
    m.feasibility = r;
  }
  m.alarms.watchdog = j.at("alarms").at("watchdog").get<bool>();
  m.alarms.photocurrent_monitor = j.at("alarms").at("photocurrent_monitor").get<bool>();
  m.bob_counts = counts_from(j.at("bob_counts"));
  m.eve_counts = counts_from(j.at("eve_counts"));
  return m;
}

// ---------------------------------------------------------------------------
// Events

std::string events_csv(const RunRecord& rec) {
  std::string out = kEventsHeader;
  out += "\n# units=arbitrary normalization=";
  out += rec.config.source.modulator.normalization == MzmNormalization::halved ? "halved" : "paper-exact";
  out += "\nslot,detector,intensity,click,mode\n";
  auto emit = [&out](const DetectionRecord& r, const std::string& prefix) {
    for (const auto& t : r.detectors) {
      for (std::size_t k = 0; k < t.size(); ++k) {
        out += std::to_string(k);
        out += ',';
        out += prefix + t.id;
        out += ',';
        out += fmt(k < t.intensity.size() ? t.intensity[k] : 0.0);
        out += t.clicked(k) ? ",1," : ",0,";
        out += k < t.mode.size() && t.mode[k] == ApdMode::linear ? "L" : "G";
        out += '\n';
      }
    }
  };
  emit(rec.run.bob, "");
  if (rec.attack && rec.attack->eve_record) emit(*rec.attack->eve_record, kEvePrefix);
  return out;
}

ParsedEvents parse_events_csv(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line) || line != kEventsHeader) throw std::invalid_argument("missing events header");
  ParsedEvents ev;
  auto trace_for = [](DetectionRecord& r, const std::string& id) -> DetectorTrace& {
    for (auto& t : r.detectors)
      if (t.id == id) return t;
    r.detectors.push_back(DetectorTrace{id, {}, {}, {}, {}});
    return r.detectors.back();
  };
  bool header_seen = false;
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      if (line != "slot,detector,intensity,click,mode")
        throw std::invalid_argument("unexpected events column header on line " + std::to_string(line_no));
      header_seen = true;
      continue;
    }
    const auto f = split(line, ',');
    if (f.size() != 5) throw std::invalid_argument("malformed events line " + std::to_string(line_no));
    std::string id = f[1];
    DetectionRecord* r = &ev.bob;
    if (id.rfind(kEvePrefix, 0) == 0) {
      if (!ev.eve) ev.eve.emplace();
      r = &*ev.eve;
      id = id.substr(std::char_traits<char>::length(kEvePrefix));
    }
    auto& t = trace_for(*r, id);
    const auto slot = std::stoull(f[0]);
    if (slot != t.size()) throw std::invalid_argument("events out of order on line " + std::to_string(line_no));
    t.intensity.push_back(std::stod(f[2]));
    t.clicks.push_back(f[3] == "1" ? 1 : 0);
    t.mode.push_back(f[4] == "L" ? ApdMode::linear : ApdMode::geiger);
  }
  return ev;
}

std::string trace_dat(const DetectorTrace& trace) {
  std::string out = "# slot intensity (" + trace.id + ")\n";
  for (std::size_t k = 0; k < trace.intensity.size(); ++k) out += std::to_string(k) + ' ' + fmt(trace.intensity[k]) + '\n';
  return out;
}

std::vector<double> parse_trace_dat(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  std::vector<double> out;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::size_t slot = 0;
    std::string value;
    if (!(ls >> slot >> value) || slot != out.size()) throw std::invalid_argument("malformed trace line: " + line);
    out.push_back(std::stod(value));
  }
  return out;
}

std::string key_file(std::span<const std::uint8_t> key) { return bits_to_string(key) + '\n'; }

std::vector<std::uint8_t> parse_key_file(const std::string& text) {
  std::string s = text;
  while (!s.empty() && (s.back() == '\n' || s.back() == '\r')) s.pop_back();
  return bits_from_string(s);
}

MetricsSummary metrics_from_events(const RunRecord& rec, const ParsedEvents& events) {
  RunRecord copy = rec;
  // Photocurrent is not part of the event table; keep the stored values.
  auto merge = [](const DetectionRecord& stored, DetectionRecord parsed) {
    for (auto& t : parsed.detectors)
      if (stored.contains(t.id)) t.photocurrent = stored.at(t.id).photocurrent;
    return parsed;
  };
  auto bob = merge(rec.run.bob, events.bob);
  copy.run = rec.run.protocol == Protocol::dps ? make_dps_run(rec.run.alice_bits, std::move(bob))
                                               : make_cow_run(rec.run.alice_symbols, std::move(bob));
  if (copy.attack) {
    if (events.eve && copy.attack->eve_record) copy.attack->eve_record = merge(*copy.attack->eve_record, *events.eve);
    else if (events.eve) copy.attack->eve_record = events.eve;
  }
  return compute_metrics(copy);
}

void emit_outputs(const RunRecord& rec, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir / "traces");
  write_file(dir / "events.csv", events_csv(rec));
  write_file(dir / "alice.key", key_file(rec.run.alice_key()));
  write_file(dir / "bob.key", key_file(rec.run.bob_key()));
  if (rec.attack) write_file(dir / "eve.key", key_file(rec.attack->eve_key));
  write_file(dir / "metrics.json", to_json(compute_metrics(rec)).dump(2) + '\n');
  write_file(dir / "record.json", to_json(rec).dump() + '\n');
  for (const auto& t : rec.run.bob.detectors) write_file(dir / "traces" / (t.id + ".dat"), trace_dat(t));
  if (rec.attack && rec.attack->eve_record)
    for (const auto& t : rec.attack->eve_record->detectors)
      write_file(dir / "traces" / (kEvePrefix + t.id + ".dat"), trace_dat(t));
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace dprsim
