#include <algorithm>

#include "dprsim/protocol.hpp"

namespace dprsim {

char to_char(CowSymbol s) {
  switch (s) {
    case CowSymbol::bit0: return '0';
    case CowSymbol::bit1: return '1';
    case CowSymbol::decoy: return 'd';
  }
  return '?';
}

std::vector<CowSymbol> parse_cow_symbols(std::string_view text) {
  std::vector<CowSymbol> out;
  out.reserve(text.size());
  for (char c : text) {
    switch (c) {
      case '0': out.push_back(CowSymbol::bit0); break;
      case '1': out.push_back(CowSymbol::bit1); break;
      case 'd':
      case 'D': out.push_back(CowSymbol::decoy); break;
      default: throw std::invalid_argument(std::string("invalid COW symbol '") + c + "' (expected 0, 1 or d)");
    }
  }
  return out;
}

std::string to_string(std::span<const CowSymbol> symbols) {
  std::string s;
  s.reserve(symbols.size());
  for (auto x : symbols) s.push_back(to_char(x));
  return s;
}

std::array<bool, 2> cow_slot_pattern(CowSymbol s) {
  switch (s) {
    case CowSymbol::bit0: return {true, false};
    case CowSymbol::bit1: return {false, true};
    case CowSymbol::decoy: return {true, true};
  }
  return {false, false};
}

AliceTransmitter cow_transmitter(std::span<const CowSymbol> symbols, const SourceConfig& source) {
  source.validate();
  if (symbols.empty()) throw OpticsError("cow_encode needs at least one symbol");
  AliceTransmitter tx;
  tx.source = source;
  std::vector<double> carve;
  carve.reserve(2 * symbols.size());
  for (auto s : symbols)
    for (bool on : cow_slot_pattern(s)) carve.push_back(on ? source.modulator.v_pi_rf / 2.0 : 0.0);
  tx.carver = DriveProfile::balanced(carve);
  return tx;
}

PulseTrain cow_encode(std::span<const CowSymbol> symbols, double amplitude, double slot_period) {
  SourceConfig src;
  src.amplitude = amplitude;
  src.slot_period = slot_period;
  return cow_transmitter(symbols, src).emit();
}

CowReceiverConfig CowReceiverConfig::for_pulse_intensity(double pulse_intensity, double t_b, double threshold_fraction) {
  CowReceiverConfig cfg;
  cfg.t_b = t_b;
  cfg.data.click_threshold = threshold_fraction * t_b * pulse_intensity;
  cfg.m1.click_threshold = threshold_fraction * (1.0 - t_b) * pulse_intensity;
  cfg.m2 = cfg.m1;
  return cfg;
}

CowMeasurement cow_measure(const WdmSignal& signal, const CowReceiverConfig& cfg) {
  if (signal.channels.empty()) throw OpticsError("cow_measure: no optical channel");
  if (!(cfg.t_b > 0.0 && cfg.t_b < 1.0)) throw OpticsError("COW splitter transmittance t_B must lie in (0, 1)");
  const CouplerRatio splitter(cfg.t_b);

  CowMeasurement m;
  std::vector<double> idata;
  std::vector<double> im1;
  std::vector<double> im2;
  auto accumulate = [](std::vector<double>& acc, const std::vector<double>& add) {
    if (acc.size() < add.size()) acc.resize(add.size(), 0.0);
    for (std::size_t k = 0; k < add.size(); ++k) acc[k] += add[k];
  };
  for (std::size_t c = 0; c < signal.channels.size(); ++c) {
    const auto& in = signal.channels[c];
    const auto vac = PulseTrain::vacuum(in.size(), in.slot_period, in.wavelength_nm);
    auto lines = coupler_2x2(in, vac, splitter);
    auto ports = dli(lines.b, cfg.delay_slots);
    accumulate(idata, lines.a.intensities());
    accumulate(im1, ports.constructive.intensities());
    accumulate(im2, ports.destructive.intensities());
    if (c == 0) {
      m.data_line = std::move(lines.a);
      m.monitor_line = std::move(lines.b);
      m.monitor_ports = std::move(ports);
    }
  }
  const double wl = signal.channels.front().wavelength_nm;
  m.record.detectors.push_back(apd_detect(detector_id::db, idata, cfg.data, wl, cfg.blind_data));
  m.record.detectors.push_back(apd_detect(detector_id::dm1, im1, cfg.m1, wl, cfg.blind_m1));
  m.record.detectors.push_back(apd_detect(detector_id::dm2, im2, cfg.m2, wl, cfg.blind_m2));
  return m;
}

CowMeasurement cow_measure(const PulseTrain& train, const CowReceiverConfig& cfg) {
  train.validate();
  return cow_measure(WdmSignal{{train}}, cfg);
}

// ---------------------------------------------------------------------------

const char* label(InterfaceClass c) {
  switch (c) {
    case InterfaceClass::d: return "d";
    case InterfaceClass::c01: return "01";
    case InterfaceClass::c0d: return "0d";
    case InterfaceClass::cd1: return "d1";
    case InterfaceClass::cdd: return "dd";
  }
  return "?";
}

std::optional<InterfaceClass> parse_interface_class(std::string_view s) {
  for (auto c : kInterfaceClasses)
    if (s == label(c)) return c;
  return std::nullopt;
}

std::optional<InterfaceClass> boundary_class(CowSymbol earlier, CowSymbol later) {
  if (!cow_slot_pattern(earlier)[1] || !cow_slot_pattern(later)[0]) return std::nullopt;
  if (later == CowSymbol::bit0) return earlier == CowSymbol::bit1 ? InterfaceClass::c01 : InterfaceClass::c0d;
  return earlier == CowSymbol::bit1 ? InterfaceClass::cd1 : InterfaceClass::cdd;
}

std::vector<PulseInterface> classify_interfaces(std::span<const CowSymbol> symbols) {
  std::vector<PulseInterface> out;
  for (std::size_t i = 0; i < symbols.size(); ++i) {
    if (i > 0) {
      if (auto c = boundary_class(symbols[i - 1], symbols[i])) out.push_back({2 * i, *c});
    }
    if (symbols[i] == CowSymbol::decoy) out.push_back({2 * i + 1, InterfaceClass::d});
  }
  return out;
}

std::optional<double> visibility_of(std::size_t m1, std::size_t m2) {
  if (m1 + m2 == 0) return std::nullopt;
  const double a = static_cast<double>(m1);
  const double b = static_cast<double>(m2);
  return std::abs((a - b) / (a + b));
}

std::optional<double> ClassCounts::visibility() const { return visibility_of(m1, m2); }

VisibilityReport visibility(const DetectionRecord& monitor, std::span<const CowSymbol> symbols) {
  const auto& m1 = monitor.at(detector_id::dm1);
  const auto& m2 = monitor.at(detector_id::dm2);
  VisibilityReport rep;
  std::vector<bool> is_interface(std::max(m1.size(), m2.size()), false);
  for (const auto& itf : classify_interfaces(symbols)) {
    auto& cc = rep.classes[static_cast<std::size_t>(itf.cls)];
    ++cc.interfaces;
    ++rep.overall.interfaces;
    if (m1.clicked(itf.slot)) {
      ++cc.m1;
      ++rep.overall.m1;
    }
    if (m2.clicked(itf.slot)) {
      ++cc.m2;
      ++rep.overall.m2;
    }
    if (itf.slot < is_interface.size()) is_interface[itf.slot] = true;
  }
  for (std::size_t k = 0; k < is_interface.size(); ++k) {
    if (is_interface[k]) continue;
    if (m1.clicked(k)) ++rep.unclassified_m1;
    if (m2.clicked(k)) ++rep.unclassified_m2;
  }
  return rep;
}

CowKeyMaterial cow_sift(std::span<const CowSymbol> symbols, const DetectionRecord& record,
                        const VisibilityReport& report) {
  const auto& db = record.at(detector_id::db);
  if (db.size() != 2 * symbols.size())
    throw std::invalid_argument("cow_sift: data record has " + std::to_string(db.size()) + " slots, expected " +
                                std::to_string(2 * symbols.size()));
  CowKeyMaterial km;
  km.visibility = report;
  std::size_t errors = 0;
  for (std::size_t i = 0; i < symbols.size(); ++i) {
    if (symbols[i] == CowSymbol::decoy) {
      km.decoy_positions.push_back(i);
      continue;
    }
    const bool early = db.clicked(2 * i);
    const bool late = db.clicked(2 * i + 1);
    if (early && late) {
      ++km.inconsistent;
      continue;
    }
    if (!early && !late) continue;
    const std::uint8_t alice = symbols[i] == CowSymbol::bit1 ? 1 : 0;
    const std::uint8_t bob = late ? 1 : 0;
    km.positions.push_back(i);
    km.alice_key.push_back(alice);
    km.bob_key.push_back(bob);
    errors += (alice != bob) ? 1 : 0;
  }
  const std::size_t scored = km.bob_key.size() + km.inconsistent;
  km.empty = km.bob_key.empty();
  km.qber = scored == 0 ? 0.0 : static_cast<double>(errors + km.inconsistent) / static_cast<double>(scored);
  return km;
}

ProtocolRun make_cow_run(std::vector<CowSymbol> symbols, DetectionRecord bob) {
  ProtocolRun run;
  run.protocol = Protocol::cow;
  const auto rep = visibility(bob, symbols);
  run.cow = cow_sift(symbols, bob, rep);
  run.alice_symbols = std::move(symbols);
  run.bob = std::move(bob);
  return run;
}

}  // namespace dprsim
