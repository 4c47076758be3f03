#include "dprsim/scenario.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <future>
#include <limits>
#include <numbers>
#include <set>
#include <sstream>

namespace dprsim {

namespace {

std::string where(const std::string& path) { return path.empty() ? "/" : path; }

std::string describe(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

}  // namespace

ConfigError::ConfigError(std::string path, const std::string& message)
    : std::runtime_error("config error at " + where(path) + ": " + message), path_(std::move(path)) {}

ConfigError::ConfigError(std::size_t line, std::size_t column, const std::string& message)
    : std::runtime_error("config parse error at line " + std::to_string(line) + ", column " +
                         std::to_string(column) + ": " + message),
      line_(line) {}

double ScenarioConfig::resolved_slot_period() const {
  if (slot_period) return *slot_period;
  return protocol == Protocol::dps ? 1.0 : 0.5;
}

std::string bits_to_string(std::span<const std::uint8_t> bits) {
  std::string s;
  s.reserve(bits.size());
  for (auto b : bits) s.push_back(static_cast<char>('0' + b));
  return s;
}

std::vector<std::uint8_t> bits_from_string(std::string_view s) {
  std::vector<std::uint8_t> out;
  out.reserve(s.size());
  for (char c : s) {
    if (c != '0' && c != '1') throw std::invalid_argument(std::string("invalid bit '") + c + "'");
    out.push_back(static_cast<std::uint8_t>(c - '0'));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Reading

namespace {

Json number_json(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

class Section {
 public:
  Section(const Json* j, std::string path) : j_(j), path_(std::move(path)) {
    if (j_ && j_->is_null()) j_ = nullptr;
    if (j_ && !j_->is_object()) throw ConfigError(path_, "expected an object");
  }

  std::string at(std::string_view key) const { return path_ + "/" + std::string(key); }

  const Json* find(std::string_view key) {
    used_.emplace(key);
    if (!j_) return nullptr;
    auto it = j_->find(key);
    if (it == j_->end() || it->is_null()) return nullptr;
    return &*it;
  }

  Section sub(std::string_view key) { return Section(find(key), at(key)); }

  std::optional<double> opt_number(std::string_view key) {
    const Json* v = find(key);
    if (!v) return std::nullopt;
    if (v->is_number()) return v->get<double>();
    if (v->is_string()) {
      const auto s = v->get<std::string>();
      if (s == "inf" || s == "+inf") return std::numeric_limits<double>::infinity();
      if (s == "-inf") return -std::numeric_limits<double>::infinity();
    }
    throw ConfigError(at(key), "expected a number");
  }

  double number(std::string_view key, double def) { return opt_number(key).value_or(def); }

  std::uint64_t unsigned_int(std::string_view key, std::uint64_t def) {
    const Json* v = find(key);
    if (!v) return def;
    if (v->is_number_unsigned()) return v->get<std::uint64_t>();
    if (v->is_number_integer()) throw ConfigError(at(key), "must be >= 0");
    if (v->is_number_float()) {
      const double d = v->get<double>();
      if (d >= 0.0 && d == std::floor(d) && d < 1.8e19) return static_cast<std::uint64_t>(d);
    }
    throw ConfigError(at(key), "expected a non-negative integer");
  }

  std::int64_t signed_int(std::string_view key, std::int64_t def) {
    const Json* v = find(key);
    if (!v) return def;
    if (v->is_number_integer()) return v->get<std::int64_t>();
    if (v->is_number_float()) {
      const double d = v->get<double>();
      if (d == std::floor(d) && std::abs(d) < 9e18) return static_cast<std::int64_t>(d);
    }
    throw ConfigError(at(key), "expected an integer");
  }

  bool boolean(std::string_view key, bool def) {
    const Json* v = find(key);
    if (!v) return def;
    if (!v->is_boolean()) throw ConfigError(at(key), "expected true or false");
    return v->get<bool>();
  }

  std::optional<std::string> opt_string(std::string_view key) {
    const Json* v = find(key);
    if (!v) return std::nullopt;
    if (!v->is_string()) throw ConfigError(at(key), "expected a string");
    return v->get<std::string>();
  }

  void finish() const {
    if (!j_) return;
    for (auto it = j_->begin(); it != j_->end(); ++it)
      if (!used_.count(it.key())) throw ConfigError(at(it.key()), "unknown key");
  }

 private:
  const Json* j_;
  std::string path_;
  std::set<std::string, std::less<>> used_;
};

void require(bool ok, const std::string& path, const std::string& rule, double value) {
  if (!ok) throw ConfigError(path, rule + ", got " + describe(value));
}

void require_open_unit(double v, const std::string& path) {
  require(v > 0.0 && v < 1.0, path, "must lie in (0, 1)", v);
}

void require_probability(double v, const std::string& path) {
  require(v >= 0.0 && v <= 1.0, path, "must lie in [0, 1]", v);
}

void require_positive(double v, const std::string& path) {
  require(v > 0.0 && std::isfinite(v), path, "must be finite and > 0", v);
}

void require_nonnegative(double v, const std::string& path) {
  require(v >= 0.0 && std::isfinite(v), path, "must be finite and >= 0", v);
}

std::vector<double> read_phases(Section& s, std::string_view key) {
  const Json* v = s.find(key);
  std::vector<double> out;
  if (!v) return out;
  if (!v->is_array()) throw ConfigError(s.at(key), "expected an array of phases");
  for (std::size_t i = 0; i < v->size(); ++i) {
    const auto& e = (*v)[i];
    const std::string path = s.at(key) + "/" + std::to_string(i);
    if (e.is_number()) {
      out.push_back(e.get<double>());
    } else if (e.is_string() && e.get<std::string>() == "pi") {
      out.push_back(std::numbers::pi);
    } else {
      throw ConfigError(path, "expected a phase in radians or \"pi\"");
    }
    require(std::isfinite(out.back()), path, "must be finite", out.back());
  }
  return out;
}

ScenarioConfig parse_fields(const Json& j) {
  ScenarioConfig c;
  Section root(&j, "");
  c.golden_name = root.opt_string("golden_name");

  const auto protocol = root.opt_string("protocol").value_or("dps");
  if (protocol == "dps") c.protocol = Protocol::dps;
  else if (protocol == "cow") c.protocol = Protocol::cow;
  else throw ConfigError("/protocol", "must be \"dps\" or \"cow\", got \"" + protocol + "\"");

  c.seed = root.unsigned_int("seed", c.seed);
  c.n_symbols = root.unsigned_int("n_symbols", c.n_symbols);

  {
    auto s = root.sub("dps");
    if (auto bits = s.opt_string("bits")) {
      try {
        c.dps_bits = bits_from_string(*bits);
      } catch (const std::invalid_argument& e) {
        throw ConfigError(s.at("bits"), e.what());
      }
    }
    s.finish();
  }
  {
    auto s = root.sub("cow");
    if (auto sym = s.opt_string("symbols")) {
      try {
        c.cow_symbols = parse_cow_symbols(*sym);
      } catch (const std::invalid_argument& e) {
        throw ConfigError(s.at("symbols"), e.what());
      }
    }
    c.t_b = s.number("t_B", c.t_b);
    require_open_unit(c.t_b, s.at("t_B"));
    c.decoy_fraction = s.number("decoy_fraction", c.decoy_fraction);
    require_probability(c.decoy_fraction, s.at("decoy_fraction"));
    s.finish();
  }

  if (c.protocol == Protocol::dps && c.dps_bits) c.n_symbols = c.dps_bits->size();
  if (c.protocol == Protocol::cow && c.cow_symbols) c.n_symbols = c.cow_symbols->size();
  const std::size_t min_symbols = c.protocol == Protocol::dps ? 2 : 1;
  require(c.n_symbols >= min_symbols && c.n_symbols <= 10'000'000, "/n_symbols",
          c.protocol == Protocol::dps ? "must lie in [2, 1e7]" : "must lie in [1, 1e7]",
          static_cast<double>(c.n_symbols));

  {
    auto s = root.sub("source");
    c.source.amplitude = s.number("amplitude", c.source.amplitude);
    require_positive(c.source.amplitude, s.at("amplitude"));
    c.slot_period = s.opt_number("slot_period");
    if (c.slot_period) require_positive(*c.slot_period, s.at("slot_period"));
    c.source.wavelength_nm = s.number("wavelength_nm", c.source.wavelength_nm);
    require_positive(c.source.wavelength_nm, s.at("wavelength_nm"));
    const auto norm = s.opt_string("normalization").value_or("halved");
    if (norm == "halved") c.source.modulator.normalization = MzmNormalization::halved;
    else if (norm == "paper-exact") c.source.modulator.normalization = MzmNormalization::paper_exact;
    else throw ConfigError(s.at("normalization"), "must be \"halved\" or \"paper-exact\", got \"" + norm + "\"");
    c.source.modulator.v_pi_rf = s.number("v_pi_rf", c.source.modulator.v_pi_rf);
    require_positive(c.source.modulator.v_pi_rf, s.at("v_pi_rf"));
    c.source.modulator.v_pi_dc = s.number("v_pi_dc", c.source.modulator.v_pi_dc);
    require_positive(c.source.modulator.v_pi_dc, s.at("v_pi_dc"));
    s.finish();
  }
  {
    auto s = root.sub("detectors");
    auto& d = c.detectors;
    d.threshold_fraction = s.number("threshold_fraction", d.threshold_fraction);
    require_positive(d.threshold_fraction, s.at("threshold_fraction"));
    d.dead_time_slots = s.unsigned_int("dead_time_slots", d.dead_time_slots);
    d.afterpulse_prob = s.number("afterpulse_prob", d.afterpulse_prob);
    require_probability(d.afterpulse_prob, s.at("afterpulse_prob"));
    d.dark_count_prob = s.number("dark_count_prob", d.dark_count_prob);
    require_probability(d.dark_count_prob, s.at("dark_count_prob"));
    s.finish();
  }
  {
    auto s = root.sub("channel");
    c.channel.loss_db = s.number("loss_db", c.channel.loss_db);
    require_nonnegative(c.channel.loss_db, s.at("loss_db"));
    c.channel.tamper_phase = read_phases(s, "tamper_phase");
    s.finish();
  }
  {
    auto a = root.sub("attack");
    const auto type = a.opt_string("type").value_or("none");
    const auto t = parse_attack_type(type);
    if (!t) throw ConfigError(a.at("type"), "must be none, backflash, trojan or blinding, got \"" + type + "\"");
    c.attack.type = *t;
    {
      auto s = a.sub("backflash");
      auto& b = c.attack.backflash;
      b.electrons_per_avalanche = s.number("electrons_per_avalanche", b.electrons_per_avalanche);
      require_nonnegative(b.electrons_per_avalanche, s.at("electrons_per_avalanche"));
      b.photons_per_electron = s.number("photons_per_electron", b.photons_per_electron);
      require_probability(b.photons_per_electron, s.at("photons_per_electron"));
      b.ideal_mode = s.boolean("ideal_mode", b.ideal_mode);
      b.emission_gain = s.number("emission_gain", b.emission_gain);
      require_nonnegative(b.emission_gain, s.at("emission_gain"));
      s.finish();
    }
    {
      auto s = a.sub("trojan");
      auto& tr = c.attack.trojan;
      tr.probe.wavelength_nm = s.number("wavelength_nm", tr.probe.wavelength_nm);
      require_positive(tr.probe.wavelength_nm, s.at("wavelength_nm"));
      if (same_wavelength(tr.probe.wavelength_nm, c.source.wavelength_nm))
        throw ConfigError(s.at("wavelength_nm"), "must differ from the signal wavelength");
      tr.probe.amplitude = s.number("amplitude", tr.probe.amplitude);
      require_positive(tr.probe.amplitude, s.at("amplitude"));
      tr.probe.timing_offset_slots = s.signed_int("timing_offset_slots", tr.probe.timing_offset_slots);
      tr.probe.reflection_db = s.number("reflection_db", tr.probe.reflection_db);
      require_nonnegative(tr.probe.reflection_db, s.at("reflection_db"));
      tr.probe.excess_loss_db = s.opt_number("excess_loss_db");
      if (tr.probe.excess_loss_db) require_nonnegative(*tr.probe.excess_loss_db, s.at("excess_loss_db"));
      tr.filter_extinction_db = s.number("filter_extinction_db", tr.filter_extinction_db);
      require(tr.filter_extinction_db >= 0.0, s.at("filter_extinction_db"), "must be >= 0", tr.filter_extinction_db);
      tr.eve_threshold = s.opt_number("eve_threshold");
      if (tr.eve_threshold) require_nonnegative(*tr.eve_threshold, s.at("eve_threshold"));
      s.finish();
    }
    {
      auto s = a.sub("blinding");
      auto& bl = c.attack.blinding;
      const auto policy = s.opt_string("policy").value_or("canonical");
      const auto p = parse_fsg_policy(policy);
      if (!p) throw ConfigError(s.at("policy"), "must be canonical or paper-example, got \"" + policy + "\"");
      bl.policy = *p;
      const auto kind = s.opt_string("illumination").value_or("pulsed");
      const auto k = parse_illumination(kind);
      if (!k) throw ConfigError(s.at("illumination"), "must be cw or pulsed, got \"" + kind + "\"");
      auto& il = bl.illumination;
      il.kind = *k;
      il.energy = s.number("energy", il.energy);
      require_nonnegative(il.energy, s.at("energy"));
      il.period_slots = s.unsigned_int("period_slots", il.period_slots);
      require(il.period_slots >= 1, s.at("period_slots"), "must be >= 1", static_cast<double>(il.period_slots));
      il.decay = s.number("decay", il.decay);
      require_open_unit(il.decay, s.at("decay"));
      il.blind_threshold = s.number("blind_threshold", il.blind_threshold);
      require_positive(il.blind_threshold, s.at("blind_threshold"));
      il.preroll_slots = s.unsigned_int("preroll_slots", il.preroll_slots);
      auto& th = bl.thresholds;
      th.p_never = s.number("p_never", th.p_never);
      require_positive(th.p_never, s.at("p_never"));
      th.p_always = s.number("p_always", th.p_always);
      require(th.p_always > th.p_never && std::isfinite(th.p_always), s.at("p_always"), "must exceed p_never",
              th.p_always);
      th.p_never_b = s.number("p_never_b", th.p_never_b);
      require_positive(th.p_never_b, s.at("p_never_b"));
      th.p_always_b = s.number("p_always_b", th.p_always_b);
      require(th.p_always_b > th.p_never_b && std::isfinite(th.p_always_b), s.at("p_always_b"),
              "must exceed p_never_b", th.p_always_b);
      if (auto readings = s.opt_string("readings")) {
        const std::string path = s.at("readings");
        const char max_code = c.protocol == Protocol::dps ? '2' : '5';
        std::vector<std::uint8_t> codes;
        for (char ch : *readings) {
          if (ch < '0' || ch > max_code)
            throw ConfigError(path, std::string("reading codes must lie in 0..") + max_code + ", got '" + ch + "'");
          codes.push_back(static_cast<std::uint8_t>(ch - '0'));
        }
        if (c.protocol == Protocol::dps) {
          require(codes.size() + 1 == c.n_symbols, path, "must hold n_symbols - 1 readings",
                  static_cast<double>(codes.size()));
          bl.dps_readings = codes;
        } else {
          require(codes.size() == 2 * c.n_symbols, path, "must hold 2 * n_symbols readings",
                  static_cast<double>(codes.size()));
          std::vector<CowReading> cow;
          for (auto code : codes) cow.push_back(CowReading::from_code(code));
          bl.cow_readings = cow;
        }
      }
      s.finish();
    }
    a.finish();
  }
  {
    auto cm = root.sub("countermeasures");
    {
      auto s = cm.sub("watchdog");
      auto& w = c.countermeasures.watchdog;
      w.enabled = s.boolean("enabled", w.enabled);
      w.tap_fraction = s.number("tap_fraction", w.tap_fraction);
      require_open_unit(w.tap_fraction, s.at("tap_fraction"));
      w.threshold = s.number("threshold", w.threshold);
      require_positive(w.threshold, s.at("threshold"));
      s.finish();
    }
    {
      auto s = cm.sub("photocurrent_monitor");
      auto& m = c.countermeasures.photocurrent_monitor;
      m.enabled = s.boolean("enabled", m.enabled);
      m.window_slots = s.unsigned_int("window_slots", m.window_slots);
      require(m.window_slots >= 1, s.at("window_slots"), "must be >= 1", static_cast<double>(m.window_slots));
      m.alarm_threshold = s.number("alarm_threshold", m.alarm_threshold);
      require_nonnegative(m.alarm_threshold, s.at("alarm_threshold"));
      s.finish();
    }
    cm.finish();
  }
  root.finish();
  return c;
}

}  // namespace

ScenarioConfig config_from_json(const Json& j) {
  if (!j.is_object()) throw ConfigError("", "expected a JSON object at the top level");
  auto it = j.find("golden_name");
  if (it == j.end() || it->is_null()) return parse_fields(j);
  if (!it->is_string()) throw ConfigError("/golden_name", "expected a string");
  Json base = to_json(golden_config(it->get<std::string>()));
  base.merge_patch(j);
  return parse_fields(base);
}

ScenarioConfig load_config(std::string_view text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    // Convert the byte offset into a line/column pair.
    const std::size_t pos = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    std::size_t line = 1;
    std::size_t col = 1;
    for (std::size_t i = 0; i < pos; ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    std::string msg = e.what();
    if (auto p = msg.find("column"); p != std::string::npos) {
      if (auto q = msg.find(": ", p); q != std::string::npos) msg = msg.substr(q + 2);
    }
    throw ConfigError(line, col, msg);
  }
  return config_from_json(j);
}

ScenarioConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return load_config(ss.str());
}

// ---------------------------------------------------------------------------
// Writing

Json to_json(const ScenarioConfig& c) {
  Json j;
  j["golden_name"] = c.golden_name ? Json(*c.golden_name) : Json(nullptr);
  j["protocol"] = to_string(c.protocol);
  j["seed"] = c.seed;
  j["n_symbols"] = c.n_symbols;
  j["dps"] = {{"bits", c.dps_bits ? Json(bits_to_string(*c.dps_bits)) : Json(nullptr)}};
  j["cow"] = {{"symbols", c.cow_symbols ? Json(to_string(std::span<const CowSymbol>(*c.cow_symbols))) : Json(nullptr)},
              {"t_B", c.t_b},
              {"decoy_fraction", c.decoy_fraction}};
  const auto& m = c.source.modulator;
  j["source"] = {{"amplitude", c.source.amplitude},
                 {"slot_period", c.slot_period ? Json(*c.slot_period) : Json(nullptr)},
                 {"wavelength_nm", c.source.wavelength_nm},
                 {"normalization", m.normalization == MzmNormalization::halved ? "halved" : "paper-exact"},
                 {"v_pi_rf", m.v_pi_rf},
                 {"v_pi_dc", m.v_pi_dc}};
  j["detectors"] = {{"threshold_fraction", c.detectors.threshold_fraction},
                    {"dead_time_slots", c.detectors.dead_time_slots},
                    {"afterpulse_prob", c.detectors.afterpulse_prob},
                    {"dark_count_prob", c.detectors.dark_count_prob}};
  j["channel"] = {{"loss_db", c.channel.loss_db}, {"tamper_phase", c.channel.tamper_phase}};

  const auto& b = c.attack.backflash;
  const auto& tr = c.attack.trojan;
  const auto& bl = c.attack.blinding;
  Json readings = nullptr;
  if (c.protocol == Protocol::dps && bl.dps_readings) {
    std::string s;
    for (auto r : *bl.dps_readings) s.push_back(static_cast<char>('0' + r));
    readings = s;
  } else if (c.protocol == Protocol::cow && bl.cow_readings) {
    std::string s;
    for (const auto& r : *bl.cow_readings) s.push_back(static_cast<char>('0' + r.code()));
    readings = s;
  }
  j["attack"] = {
      {"type", to_string(c.attack.type)},
      {"backflash",
       {{"electrons_per_avalanche", b.electrons_per_avalanche},
        {"photons_per_electron", b.photons_per_electron},
        {"ideal_mode", b.ideal_mode},
        {"emission_gain", b.emission_gain}}},
      {"trojan",
       {{"wavelength_nm", tr.probe.wavelength_nm},
        {"amplitude", tr.probe.amplitude},
        {"timing_offset_slots", tr.probe.timing_offset_slots},
        {"reflection_db", tr.probe.reflection_db},
        {"excess_loss_db", tr.probe.excess_loss_db ? number_json(*tr.probe.excess_loss_db) : Json(nullptr)},
        {"filter_extinction_db", number_json(tr.filter_extinction_db)},
        {"eve_threshold", tr.eve_threshold ? Json(*tr.eve_threshold) : Json(nullptr)}}},
      {"blinding",
       {{"policy", to_string(bl.policy)},
        {"illumination", to_string(bl.illumination.kind)},
        {"energy", bl.illumination.energy},
        {"period_slots", bl.illumination.period_slots},
        {"decay", bl.illumination.decay},
        {"blind_threshold", bl.illumination.blind_threshold},
        {"preroll_slots", bl.illumination.preroll_slots},
        {"p_never", bl.thresholds.p_never},
        {"p_always", bl.thresholds.p_always},
        {"p_never_b", bl.thresholds.p_never_b},
        {"p_always_b", bl.thresholds.p_always_b},
        {"readings", readings}}}};
  const auto& w = c.countermeasures.watchdog;
  const auto& pm = c.countermeasures.photocurrent_monitor;
  j["countermeasures"] = {
      {"watchdog", {{"enabled", w.enabled}, {"tap_fraction", w.tap_fraction}, {"threshold", w.threshold}}},
      {"photocurrent_monitor",
       {{"enabled", pm.enabled}, {"window_slots", pm.window_slots}, {"alarm_threshold", pm.alarm_threshold}}}};
  return j;
}

// ---------------------------------------------------------------------------
// Execution

std::vector<std::uint8_t> scenario_dps_bits(const ScenarioConfig& cfg) {
  if (cfg.dps_bits) return *cfg.dps_bits;
  auto prbs = PrbsState::prbs31(derive_seed(cfg.seed, "alice.prbs"));
  return prbs_bits(prbs, cfg.n_symbols);
}

std::vector<CowSymbol> scenario_cow_symbols(const ScenarioConfig& cfg) {
  if (cfg.cow_symbols) return *cfg.cow_symbols;
  auto prbs = PrbsState::prbs31(derive_seed(cfg.seed, "alice.prbs"));
  Rng decoys(derive_seed(cfg.seed, "alice.decoys"));
  std::vector<CowSymbol> out;
  out.reserve(cfg.n_symbols);
  for (std::size_t i = 0; i < cfg.n_symbols; ++i) {
    if (decoys.bernoulli(cfg.decoy_fraction)) {
      out.push_back(CowSymbol::decoy);
      continue;
    }
    const auto [bit, next] = prbs_next(prbs);
    prbs = next;
    out.push_back(bit ? CowSymbol::bit1 : CowSymbol::bit0);
  }
  return out;
}

namespace {

ApdConfig configure(ApdConfig c, const ScenarioConfig& cfg, const char* id) {
  c.dead_time_slots = cfg.detectors.dead_time_slots;
  c.afterpulse_prob = cfg.detectors.afterpulse_prob;
  c.dark_count_prob = cfg.detectors.dark_count_prob;
  c.rng_seed = derive_seed(cfg.seed, std::string("bob.") + id);
  return c;
}

SourceConfig source_of(const ScenarioConfig& cfg) {
  SourceConfig s = cfg.source;
  s.slot_period = cfg.resolved_slot_period();
  return s;
}

void apply_countermeasures(RunRecord& rec) {
  const auto& cm = rec.config.countermeasures;
  const auto type = rec.config.attack.type;
  Alarms alarms = rec.attack ? rec.attack->alarms : Alarms{};
  // Without a probe the watchdog sees only darkness, which never reaches a
  // positive threshold.
  if (cm.photocurrent_monitor.enabled && type != AttackType::blinding) {
    for (const auto& t : rec.run.bob.detectors) {
      if (t.photocurrent.empty()) continue;
      const auto r = photocurrent_monitor(t.photocurrent, cm.photocurrent_monitor.window_slots,
                                          cm.photocurrent_monitor.alarm_threshold);
      alarms.photocurrent_monitor = alarms.photocurrent_monitor || r.alarm;
    }
  }
  rec.alarms = alarms;
  if (rec.attack) rec.attack->alarms = alarms;
}

void run_dps(const ScenarioConfig& cfg, RunRecord& rec) {
  DpsLink link;
  link.bits = scenario_dps_bits(cfg);
  link.alice = dps_transmitter(link.bits, source_of(cfg));
  link.channel_loss_db = cfg.channel.loss_db;
  link.tamper_phase = cfg.channel.tamper_phase;
  const double intensity = link.bob_pulse_intensity();
  link.bob = DpsReceiverConfig::for_pulse_intensity(intensity, cfg.detectors.threshold_fraction);
  link.bob.d1 = configure(link.bob.d1, cfg, detector_id::d1);
  link.bob.d2 = configure(link.bob.d2, cfg, detector_id::d2);

  const auto meas = dps_measure(link.at_bob(link.alice.emit()), link.bob);
  ProtocolRun baseline = make_dps_run(link.bits, meas.record);

  switch (cfg.attack.type) {
    case AttackType::none:
      rec.run = std::move(baseline);
      break;
    case AttackType::backflash: {
      auto r = backflash_attack_dps(meas, link.bob, baseline, intensity, cfg.attack.backflash,
                                    derive_seed(cfg.seed, "attack.backflash"));
      rec.attack = std::move(r.outcome);
      rec.run = std::move(baseline);
      break;
    }
    case AttackType::trojan: {
      auto r = trojan_attack_dps(link, cfg.attack.trojan, cfg.countermeasures.watchdog, baseline);
      rec.attack = std::move(r.outcome);
      rec.run = std::move(r.bob_run);
      break;
    }
    case AttackType::blinding: {
      auto r = blinding_attack_dps(link, cfg.attack.blinding, cfg.countermeasures.photocurrent_monitor, baseline);
      rec.attack = std::move(r.outcome);
      rec.run = std::move(r.bob_run);
      break;
    }
  }
}

void run_cow(const ScenarioConfig& cfg, RunRecord& rec) {
  CowLink link;
  link.symbols = scenario_cow_symbols(cfg);
  link.alice = cow_transmitter(link.symbols, source_of(cfg));
  link.channel_loss_db = cfg.channel.loss_db;
  link.tamper_phase = cfg.channel.tamper_phase;
  const double intensity = link.bob_pulse_intensity();
  link.bob = CowReceiverConfig::for_pulse_intensity(intensity, cfg.t_b, cfg.detectors.threshold_fraction);
  link.bob.data = configure(link.bob.data, cfg, detector_id::db);
  link.bob.m1 = configure(link.bob.m1, cfg, detector_id::dm1);
  link.bob.m2 = configure(link.bob.m2, cfg, detector_id::dm2);

  const auto meas = cow_measure(link.at_bob(link.alice.emit()), link.bob);
  ProtocolRun baseline = make_cow_run(link.symbols, meas.record);

  switch (cfg.attack.type) {
    case AttackType::none:
      rec.run = std::move(baseline);
      break;
    case AttackType::backflash: {
      auto r = backflash_attack_cow(meas, link.bob, baseline, intensity, cfg.attack.backflash,
                                    derive_seed(cfg.seed, "attack.backflash"));
      rec.attack = std::move(r.outcome);
      rec.run = std::move(baseline);
      break;
    }
    case AttackType::trojan: {
      auto r = trojan_attack_cow(link, cfg.attack.trojan, cfg.countermeasures.watchdog, baseline);
      rec.attack = std::move(r.outcome);
      rec.run = std::move(r.bob_run);
      break;
    }
    case AttackType::blinding: {
      auto r = blinding_attack_cow(link, cfg.attack.blinding, cfg.countermeasures.photocurrent_monitor, baseline);
      rec.attack = std::move(r.outcome);
      rec.run = std::move(r.bob_run);
      break;
    }
  }
}

}  // namespace

RunRecord run_scenario(const ScenarioConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  RunRecord rec;
  rec.config = cfg;
  if (cfg.protocol == Protocol::dps) run_dps(cfg, rec);
  else run_cow(cfg, rec);
  apply_countermeasures(rec);
  rec.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rec;
}

// ---------------------------------------------------------------------------
// Sweeps

std::vector<ScenarioConfig> sweep_configs(const ScenarioConfig& cfg, const std::string& pointer,
                                          const std::vector<double>& values) {
  const Json base = to_json(cfg);
  Json::json_pointer ptr;
  try {
    ptr = Json::json_pointer(pointer);
  } catch (const Json::exception& e) {
    throw ConfigError(pointer, std::string("invalid parameter path: ") + e.what());
  }
  if (pointer.empty() || !base.contains(ptr) || !base.at(ptr).is_number())
    throw ConfigError(pointer, "sweep parameter must address a numeric field");
  const bool integral = !base.at(ptr).is_number_float();

  std::vector<ScenarioConfig> out;
  out.reserve(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    Json j = base;
    if (integral) {
      if (values[i] != std::floor(values[i]))
        throw ConfigError(pointer, "integer parameter swept with non-integer value " + describe(values[i]));
      if (base.at(ptr).is_number_unsigned() && values[i] >= 0.0) j[ptr] = static_cast<std::uint64_t>(values[i]);
      else j[ptr] = static_cast<std::int64_t>(values[i]);
    } else {
      j[ptr] = values[i];
    }
    if (pointer != "/seed") j["seed"] = derive_seed(cfg.seed, static_cast<std::uint64_t>(i));
    out.push_back(parse_fields(j));
  }
  return out;
}

std::vector<RunRecord> sweep(const ScenarioConfig& cfg, const std::string& pointer, const std::vector<double>& values,
                             unsigned jobs) {
  const auto configs = sweep_configs(cfg, pointer, values);
  std::vector<RunRecord> out(configs.size());
  if (jobs <= 1) {
    for (std::size_t i = 0; i < configs.size(); ++i) out[i] = run_scenario(configs[i]);
    return out;
  }
  for (std::size_t start = 0; start < configs.size(); start += jobs) {
    std::vector<std::future<RunRecord>> batch;
    const std::size_t end = std::min(configs.size(), start + jobs);
    for (std::size_t i = start; i < end; ++i)
      batch.push_back(std::async(std::launch::async, [&configs, i] { return run_scenario(configs[i]); }));
    for (std::size_t i = start; i < end; ++i) out[i] = batch[i - start].get();
  }
  return out;
}

}  // namespace dprsim
