#include <functional>

#include "dprsim/attacks.hpp"

namespace dprsim {

namespace {

using Backward = std::function<PulseTrain(const std::vector<PulseTrain>&)>;
using Forward = std::function<std::vector<std::vector<double>>(const PulseTrain&)>;

struct Emissions {
  std::vector<PulseTrain> fields;  // one per Bob detector
  std::size_t count = 0;
};

Emissions emit_all(const DetectionRecord& record, const std::vector<const PulseTrain*>& incident,
                   const BackflashConfig& cfg, std::uint64_t seed) {
  Emissions out;
  for (std::size_t i = 0; i < record.detectors.size(); ++i) {
    const auto& trace = record.detectors[i];
    Rng rng(derive_seed(seed, "backflash." + trace.id));
    out.fields.push_back(backflash_emit(trace, *incident[i], cfg, rng));
    for (std::size_t k = 0; k < out.fields.back().size(); ++k)
      if (trace.clicked(k) && out.fields.back().slots[k] != Amplitude{}) ++out.count;
  }
  return out;
}

void accumulate(std::vector<std::vector<double>>& acc, const std::vector<std::vector<double>>& add) {
  if (acc.size() < add.size()) acc.resize(add.size());
  for (std::size_t p = 0; p < add.size(); ++p) {
    if (acc[p].size() < add[p].size()) acc[p].resize(add[p].size(), 0.0);
    for (std::size_t k = 0; k < add[p].size(); ++k) acc[p][k] += add[p][k];
  }
}

// Intensities at Eve's detectors. Coherent: all emissions in one pass.
// Incoherent: emissions of one detector spaced `period` slots apart never
// overlap in the receiver, so each (detector, slot mod period) class is
// propagated as one field and the classes add in intensity.
std::vector<std::vector<double>> eve_intensities(const std::vector<PulseTrain>& fields, bool coherent,
                                                 std::size_t period, const Backward& back, const Forward& fwd) {
  if (coherent) return fwd(back(fields));
  std::vector<std::vector<double>> acc;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    for (std::size_t r = 0; r < period; ++r) {
      std::vector<PulseTrain> cls;
      cls.reserve(fields.size());
      for (const auto& f : fields) cls.push_back(PulseTrain::vacuum(f.size(), f.slot_period, f.wavelength_nm));
      bool any = false;
      for (std::size_t k = r; k < fields[i].size(); k += period) {
        cls[i].slots[k] = fields[i].slots[k];
        any = any || fields[i].slots[k] != Amplitude{};
      }
      if (any) accumulate(acc, fwd(back(cls)));
    }
  }
  if (acc.empty()) acc = fwd(back(fields));  // nothing emitted: vacuum everywhere
  return acc;
}

PulseTrain through_circulator(const PulseTrain& from_bob) {
  const auto vac = PulseTrain::vacuum(from_bob.size(), from_bob.slot_period, from_bob.wavelength_nm);
  return circulator(vac, from_bob, vac).port3;
}

}  // namespace

BackflashAttackResult backflash_attack_dps(const DpsMeasurement& bob, const DpsReceiverConfig& bob_cfg,
                                           const ProtocolRun& run, double pulse_intensity,
                                           const BackflashConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  if (run.protocol != Protocol::dps || !run.dps) throw std::invalid_argument("backflash_attack_dps needs a DPS run");
  const std::size_t d = bob_cfg.delay_slots;
  const auto em = emit_all(bob.record, {&bob.ports.constructive, &bob.ports.destructive}, cfg, seed);

  const Backward back = [d](const std::vector<PulseTrain>& f) {
    return through_circulator(dli_adjoint(f[0], f[1], d));
  };
  const Forward fwd = [d](const PulseTrain& x) {
    const auto ports = dli(x, d);
    return std::vector<std::vector<double>>{ports.constructive.intensities(), ports.destructive.intensities()};
  };
  const auto eve_i = eve_intensities(em.fields, cfg.ideal_mode, 4 * d, back, fwd);

  // Ideal mode returns Bob's fields up to the unclicked edges, so Bob's
  // thresholds scaled by the emission power apply. Otherwise an event gives
  // its own port I/4 and the other port at most I/8 of crosstalk.
  const double g2 = cfg.emission_gain * cfg.emission_gain;
  ApdConfig e1 = bob_cfg.d1;
  ApdConfig e2 = bob_cfg.d2;
  if (cfg.ideal_mode) {
    e1.click_threshold *= g2;
    e2.click_threshold *= g2;
  } else {
    e1.click_threshold = e2.click_threshold = 3.0 / 16.0 * g2 * pulse_intensity;
  }
  e1.dead_time_slots = e2.dead_time_slots = 0;
  e1.afterpulse_prob = e2.afterpulse_prob = 0.0;
  e1.dark_count_prob = e2.dark_count_prob = 0.0;

  BackflashAttackResult res;
  auto& out = res.outcome;
  out.type = AttackType::backflash;
  DetectionRecord eve;
  eve.detectors.push_back(apd_detect(detector_id::d1, eve_i[0], e1));
  eve.detectors.push_back(apd_detect(detector_id::d2, eve_i[1], e2));
  for (auto& t : eve.detectors) t.resize(bob.record.at(detector_id::d1).size());

  const auto readings = dps_readings(eve);
  const auto& km = *run.dps;
  out.bob_key = km.sifted_bob;
  std::vector<std::optional<std::uint8_t>> bits(km.positions.size());
  for (std::size_t i = 0; i < km.positions.size(); ++i) {
    const auto r = readings[km.positions[i]];
    if (r == reading_d1) bits[i] = 0;
    if (r == reading_d2) bits[i] = 1;
  }
  score_capture(out, bits);
  out.bob_key_matches_baseline = true;
  out.bob_clicks = bob.record.total_clicks();
  out.emissions = em.count;
  out.eve_record = std::move(eve);
  res.to_eve = back(em.fields);
  return res;
}

BackflashAttackResult backflash_attack_cow(const CowMeasurement& bob, const CowReceiverConfig& bob_cfg,
                                           const ProtocolRun& run, double /*pulse_intensity*/,
                                           const BackflashConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  if (run.protocol != Protocol::cow || !run.cow) throw std::invalid_argument("backflash_attack_cow needs a COW run");
  const std::size_t d = bob_cfg.delay_slots;
  const CouplerRatio split(bob_cfg.t_b);
  const auto em = emit_all(bob.record, {&bob.data_line, &bob.monitor_ports.constructive, &bob.monitor_ports.destructive},
                           cfg, seed);

  const Backward back = [d, split](const std::vector<PulseTrain>& f) {
    const auto monitor = dli_adjoint(f[1], f[2], d);
    const auto data = padded(f[0], monitor.size());
    return through_circulator(coupler_2x2_adjoint(data, monitor, split).a);
  };
  const Forward fwd = [d, split](const PulseTrain& x) {
    const auto lines = coupler_2x2(x, PulseTrain::vacuum(x.size(), x.slot_period, x.wavelength_nm), split);
    const auto ports = dli(lines.b, d);
    return std::vector<std::vector<double>>{lines.a.intensities(), ports.constructive.intensities(),
                                            ports.destructive.intensities()};
  };
  const auto eve_i = eve_intensities(em.fields, cfg.ideal_mode, 4 * d, back, fwd);

  // The returning light crosses Bob's splitter twice before Eve's data line.
  const double scale = cfg.emission_gain * cfg.emission_gain * bob_cfg.t_b * bob_cfg.t_b;
  ApdConfig eb = bob_cfg.data;
  ApdConfig em1 = bob_cfg.m1;
  ApdConfig em2 = bob_cfg.m2;
  for (ApdConfig* c : {&eb, &em1, &em2}) {
    c->click_threshold *= scale;
    c->dead_time_slots = 0;
    c->afterpulse_prob = 0.0;
    c->dark_count_prob = 0.0;
  }

  BackflashAttackResult res;
  auto& out = res.outcome;
  out.type = AttackType::backflash;
  DetectionRecord eve;
  eve.detectors.push_back(apd_detect(detector_id::db, eve_i[0], eb));
  eve.detectors.push_back(apd_detect(detector_id::dm1, eve_i[1], em1));
  eve.detectors.push_back(apd_detect(detector_id::dm2, eve_i[2], em2));
  for (auto& t : eve.detectors) t.resize(bob.record.at(t.id).size());

  const auto& km = *run.cow;
  const auto& db = eve.at(detector_id::db);
  out.bob_key = km.bob_key;
  std::vector<std::optional<std::uint8_t>> bits(km.positions.size());
  for (std::size_t i = 0; i < km.positions.size(); ++i) {
    const bool early = db.clicked(2 * km.positions[i]);
    const bool late = db.clicked(2 * km.positions[i] + 1);
    if (early != late) bits[i] = late ? 1 : 0;
  }
  score_capture(out, bits);
  out.bob_key_matches_baseline = true;
  out.induced_visibility_drop = 0.0;
  out.bob_clicks = bob.record.total_clicks();
  out.emissions = em.count;
  out.eve_record = std::move(eve);
  res.to_eve = back(em.fields);
  return res;
}

}  // namespace dprsim
