#include <cmath>

#include "dprsim/attacks.hpp"

namespace dprsim {

void TrojanProbe::validate(double signal_wavelength_nm) const {
  if (!(wavelength_nm > 0.0)) throw OpticsError("probe wavelength must be > 0");
  if (same_wavelength(wavelength_nm, signal_wavelength_nm))
    throw OpticsError("probe wavelength must differ from the signal wavelength");
  if (!std::isfinite(amplitude) || amplitude <= 0.0) throw OpticsError("probe amplitude must be > 0");
  if (!(reflection_db >= 0.0)) throw OpticsError("reflection loss must be >= 0 dB");
  if (excess_loss_db && !(*excess_loss_db >= 0.0)) throw OpticsError("excess loss must be >= 0 dB");
}

double trojan_excess_loss_db(double wavelength_nm) {
  // Fiber loss at 1924 nm exceeds the 1550 nm value by about 20 dB.
  if (same_wavelength(wavelength_nm, 1924.0)) return 20.0;
  return 0.0;
}

PulseTrain trojan_probe_train(const AliceTransmitter& alice, const TrojanProbe& probe) {
  probe.validate(alice.source.wavelength_nm);
  return cw_laser(alice.size(), probe.amplitude, probe.wavelength_nm, alice.source.slot_period);
}

PulseTrain trojan_reflect(const AliceTransmitter& alice, const PulseTrain& incoming, const TrojanProbe& probe) {
  probe.validate(alice.source.wavelength_nm);
  const double loss = probe.reflection_db + probe.excess_loss_db.value_or(trojan_excess_loss_db(probe.wavelength_nm));
  return attenuate(alice.modulate(incoming, probe.timing_offset_slots), loss);
}

PulseTrain trojan_probe(const AliceTransmitter& alice, const TrojanProbe& probe) {
  return trojan_reflect(alice, trojan_probe_train(alice, probe), probe);
}

TrojanDecode trojan_decode(const PulseTrain& reflected, Protocol protocol, double threshold,
                           std::span<const CowSymbol> cow_symbols) {
  if (!(threshold >= 0.0)) throw OpticsError("Eve's threshold must be >= 0");
  ApdConfig cfg;
  cfg.click_threshold = threshold;
  TrojanDecode out;
  if (protocol == Protocol::dps) {
    const auto ports = dli(reflected, 1);
    out.record.detectors.push_back(apd_detect(detector_id::d1, ports.constructive, cfg));
    out.record.detectors.push_back(apd_detect(detector_id::d2, ports.destructive, cfg));
    out.dps_readings = dps_readings(out.record);
  } else {
    out.record.detectors.push_back(apd_detect(detector_id::db, reflected, cfg));
    const auto& db = out.record.detectors.front();
    out.cow_bits.resize(cow_symbols.size());
    for (std::size_t i = 0; i < cow_symbols.size(); ++i) {
      if (cow_symbols[i] == CowSymbol::decoy) continue;
      const bool early = db.clicked(2 * i);
      const bool late = db.clicked(2 * i + 1);
      if (early != late) out.cow_bits[i] = late ? 1 : 0;
    }
  }
  out.empty = out.record.total_clicks() == 0;
  return out;
}

namespace {

struct ProbePath {
  PulseTrain alice_out;
  PulseTrain reflected;
  std::optional<WatchdogResult> watchdog;
  double expected_intensity = 0.0;  // reflected pulse intensity for aligned timing
};

ProbePath probe_alice(const AliceTransmitter& alice, const TrojanConfig& cfg, const WatchdogConfig& wd) {
  ProbePath p;
  p.alice_out = alice.emit();
  PulseTrain incoming = trojan_probe_train(alice, cfg.probe);
  double gain = 1.0;
  if (wd.enabled) {
    p.watchdog = watchdog(incoming, wd.tap_fraction, wd.threshold);
    incoming = p.watchdog->passthrough;
    gain = 1.0 - wd.tap_fraction;
  }
  p.reflected = trojan_reflect(alice, incoming, cfg.probe);
  const double loss =
      cfg.probe.reflection_db + cfg.probe.excess_loss_db.value_or(trojan_excess_loss_db(cfg.probe.wavelength_nm));
  const double transfer = alice.pulse_intensity() / (alice.source.amplitude * alice.source.amplitude);
  p.expected_intensity =
      cfg.probe.amplitude * cfg.probe.amplitude * gain * transfer * std::pow(10.0, -loss / 10.0);
  return p;
}

template <class Link>
WdmSignal toward_bob(const ProbePath& p, const Link& link, double extinction_db) {
  const std::vector<PulseTrain> channels{p.alice_out, p.reflected};
  auto filtered = optical_filter(wavelength_mux(channels), link.alice.source.wavelength_nm, extinction_db);
  for (auto& c : filtered.channels) c = link.at_bob(c);
  return filtered;
}

}  // namespace

TrojanAttackResult trojan_attack_dps(const DpsLink& link, const TrojanConfig& cfg, const WatchdogConfig& wd,
                                     const ProtocolRun& baseline) {
  const auto path = probe_alice(link.alice, cfg, wd);
  TrojanAttackResult res;
  res.reflected = path.reflected;
  res.watchdog = path.watchdog;
  res.at_bob = toward_bob(path, link, cfg.filter_extinction_db);
  res.bob_run = make_dps_run(link.bits, dps_measure(res.at_bob, link.bob).record);

  const double threshold = cfg.eve_threshold.value_or(0.5 * path.expected_intensity);
  const auto decode = trojan_decode(path.reflected, Protocol::dps, threshold);

  auto& out = res.outcome;
  out.type = AttackType::trojan;
  const auto& km = *res.bob_run.dps;
  out.bob_key = km.sifted_bob;
  std::vector<std::optional<std::uint8_t>> bits(km.positions.size());
  for (std::size_t i = 0; i < km.positions.size(); ++i) {
    const std::size_t k = km.positions[i];
    const std::uint8_t r = k < decode.dps_readings.size() ? decode.dps_readings[k] : std::uint8_t{reading_none};
    if (r == reading_d1) bits[i] = 0;
    if (r == reading_d2) bits[i] = 1;
  }
  score_capture(out, bits);
  out.induced_qber = res.bob_run.qber() - baseline.qber();
  out.bob_key_matches_baseline = res.bob_run.bob_key() == baseline.bob_key();
  out.alarms.watchdog = path.watchdog && path.watchdog->alarm;
  out.eve_record = decode.record;
  return res;
}

TrojanAttackResult trojan_attack_cow(const CowLink& link, const TrojanConfig& cfg, const WatchdogConfig& wd,
                                     const ProtocolRun& baseline) {
  const auto path = probe_alice(link.alice, cfg, wd);
  TrojanAttackResult res;
  res.reflected = path.reflected;
  res.watchdog = path.watchdog;
  res.at_bob = toward_bob(path, link, cfg.filter_extinction_db);
  res.bob_run = make_cow_run(link.symbols, cow_measure(res.at_bob, link.bob).record);

  const double threshold = cfg.eve_threshold.value_or(0.5 * path.expected_intensity);
  const auto decode = trojan_decode(path.reflected, Protocol::cow, threshold, link.symbols);

  auto& out = res.outcome;
  out.type = AttackType::trojan;
  const auto& km = *res.bob_run.cow;
  out.bob_key = km.bob_key;
  std::vector<std::optional<std::uint8_t>> bits(km.positions.size());
  for (std::size_t i = 0; i < km.positions.size(); ++i) bits[i] = decode.cow_bits[km.positions[i]];
  score_capture(out, bits);
  out.induced_qber = res.bob_run.qber() - baseline.qber();
  out.bob_key_matches_baseline = res.bob_run.bob_key() == baseline.bob_key();
  const auto v_before = baseline.cow->visibility.overall.visibility();
  const auto v_after = km.visibility.overall.visibility();
  if (v_before && v_after) out.induced_visibility_drop = *v_before - *v_after;
  out.alarms.watchdog = path.watchdog && path.watchdog->alarm;
  out.eve_record = decode.record;
  return res;
}

}  // namespace dprsim
