#include <algorithm>
#include <cmath>

#include "dprsim/protocol.hpp"

namespace dprsim {

const char* to_string(Protocol p) { return p == Protocol::dps ? "dps" : "cow"; }

void SourceConfig::validate() const {
  if (!std::isfinite(amplitude) || amplitude <= 0.0) throw OpticsError("source amplitude must be > 0");
  if (!(slot_period > 0.0)) throw OpticsError("source slot_period must be > 0");
  if (!(wavelength_nm > 0.0)) throw OpticsError("source wavelength must be > 0");
  modulator.validate();
}

MzmParams AliceTransmitter::carver_params() const {
  MzmParams p = source.modulator;
  p.v_bias_1 = -p.v_pi_dc / 2.0;
  p.v_bias_2 = p.v_pi_dc / 2.0;
  return p;
}

MzmParams AliceTransmitter::phase_params() const {
  MzmParams p = source.modulator;
  p.v_bias_1 = 0.0;
  p.v_bias_2 = 0.0;
  return p;
}

PulseTrain AliceTransmitter::emit() const {
  const PulseTrain cw = cw_laser(size(), source.amplitude, source.wavelength_nm, source.slot_period);
  return modulate(cw, 0);
}

PulseTrain AliceTransmitter::modulate(const PulseTrain& probe, std::ptrdiff_t offset) const {
  PulseTrain out = mzm_transfer(probe, carver.shifted(offset), carver_params());
  if (phase) out = mzm_transfer(out, phase->shifted(offset), phase_params());
  return out;
}

double AliceTransmitter::pulse_intensity() const {
  const double on = source.modulator.v_pi_rf / 2.0;
  const auto cp = carver_params();
  double a = source.amplitude * std::abs(mzm_slot_transfer(on, -on, cp));
  if (phase) a *= std::abs(mzm_slot_transfer(0.0, 0.0, phase_params()));
  return a * a;
}

AliceTransmitter dps_transmitter(std::span<const std::uint8_t> phase_bits, const SourceConfig& source) {
  source.validate();
  if (phase_bits.empty()) throw OpticsError("dps_encode needs at least one bit");
  AliceTransmitter tx;
  tx.source = source;

  // Periodic pulses: the carver's PRBS is forced to all ones.
  PrbsState ones = PrbsState::all_ones();
  std::vector<double> carve;
  carve.reserve(phase_bits.size());
  for (auto bit : prbs_bits(ones, phase_bits.size()))
    carve.push_back(bit ? source.modulator.v_pi_rf / 2.0 : 0.0);
  tx.carver = DriveProfile::balanced(carve);

  std::vector<double> v;
  v.reserve(phase_bits.size());
  for (auto b : phase_bits) {
    if (b > 1) throw OpticsError("DPS phase bits must be 0 or 1");
    v.push_back(b ? source.modulator.v_pi_rf : 0.0);
  }
  tx.phase = DriveProfile::common(v);
  return tx;
}

PulseTrain dps_encode(std::span<const std::uint8_t> phase_bits, double pulse_amplitude, double slot_period) {
  SourceConfig src;
  src.amplitude = pulse_amplitude;
  src.slot_period = slot_period;
  return dps_transmitter(phase_bits, src).emit();
}

DpsReceiverConfig DpsReceiverConfig::for_pulse_intensity(double pulse_intensity, double threshold_fraction) {
  DpsReceiverConfig cfg;
  cfg.d1.click_threshold = threshold_fraction * pulse_intensity;
  cfg.d2 = cfg.d1;
  return cfg;
}

DpsMeasurement dps_measure(const WdmSignal& signal, const DpsReceiverConfig& cfg) {
  if (signal.channels.empty()) throw OpticsError("dps_measure: no optical channel");
  if (signal.size() < 2) throw OpticsError("dps_measure needs at least two slots");
  DpsMeasurement m;
  std::vector<double> i1;
  std::vector<double> i2;
  for (std::size_t c = 0; c < signal.channels.size(); ++c) {
    auto ports = dli(signal.channels[c], cfg.delay_slots);
    const auto p1 = ports.constructive.intensities();
    const auto p2 = ports.destructive.intensities();
    if (i1.size() < p1.size()) {
      i1.resize(p1.size(), 0.0);
      i2.resize(p2.size(), 0.0);
    }
    for (std::size_t k = 0; k < p1.size(); ++k) {
      i1[k] += p1[k];
      i2[k] += p2[k];
    }
    if (c == 0) m.ports = std::move(ports);
  }
  const double wl = signal.channels.front().wavelength_nm;
  m.record.detectors.push_back(apd_detect(detector_id::d1, i1, cfg.d1, wl, cfg.blind_d1));
  m.record.detectors.push_back(apd_detect(detector_id::d2, i2, cfg.d2, wl, cfg.blind_d2));
  return m;
}

DpsMeasurement dps_measure(const PulseTrain& train, const DpsReceiverConfig& cfg) {
  train.validate();
  return dps_measure(WdmSignal{{train}}, cfg);
}

std::vector<std::uint8_t> dps_readings(const DetectionRecord& record) {
  const auto& d1 = record.at(detector_id::d1);
  const auto& d2 = record.at(detector_id::d2);
  std::vector<std::uint8_t> out(std::max(d1.size(), d2.size()), reading_none);
  for (std::size_t k = 0; k < out.size(); ++k)
    out[k] = static_cast<std::uint8_t>((d1.clicked(k) ? 1 : 0) | (d2.clicked(k) ? 2 : 0));
  return out;
}

double hamming_fraction(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b) {
  if (a.size() != b.size()) throw std::invalid_argument("hamming_fraction: length mismatch");
  if (a.empty()) return 0.0;
  std::size_t diff = 0;
  for (std::size_t i = 0; i < a.size(); ++i) diff += (a[i] != b[i]) ? 1 : 0;
  return static_cast<double>(diff) / static_cast<double>(a.size());
}

DpsKeyMaterial dps_sift(std::span<const std::uint8_t> phase_bits, const DetectionRecord& record) {
  const auto readings = dps_readings(record);
  if (readings.size() != phase_bits.size() + 1)
    throw std::invalid_argument("dps_sift: record has " + std::to_string(readings.size()) + " slots, expected " +
                                std::to_string(phase_bits.size() + 1));
  DpsKeyMaterial km;
  for (std::size_t k = 1; k < phase_bits.size(); ++k) {
    const auto r = readings[k];
    if (r == reading_both) {
      ++km.double_clicks;
      continue;
    }
    if (r == reading_none) continue;
    km.positions.push_back(k);
    km.sifted_alice.push_back(static_cast<std::uint8_t>(phase_bits[k] ^ phase_bits[k - 1]));
    km.sifted_bob.push_back(r == reading_d2 ? 1 : 0);
  }
  km.empty = km.positions.empty();
  km.qber = hamming_fraction(km.sifted_alice, km.sifted_bob);
  return km;
}

const std::vector<std::uint8_t>& ProtocolRun::alice_key() const {
  return protocol == Protocol::dps ? dps.value().sifted_alice : cow.value().alice_key;
}

const std::vector<std::uint8_t>& ProtocolRun::bob_key() const {
  return protocol == Protocol::dps ? dps.value().sifted_bob : cow.value().bob_key;
}

double ProtocolRun::qber() const { return protocol == Protocol::dps ? dps.value().qber : cow.value().qber; }

ProtocolRun make_dps_run(std::vector<std::uint8_t> bits, DetectionRecord bob) {
  ProtocolRun run;
  run.protocol = Protocol::dps;
  run.dps = dps_sift(bits, bob);
  run.alice_bits = std::move(bits);
  run.bob = std::move(bob);
  return run;
}

}  // namespace dprsim
