#include <algorithm>
#include <array>
#include <cmath>

#include "dprsim/attacks.hpp"

namespace dprsim {

void BlindingThresholds::validate() const {
  auto pair_ok = [](double never, double always) {
    return std::isfinite(never) && std::isfinite(always) && never > 0.0 && never < always;
  };
  if (!pair_ok(p_never, p_always)) throw OpticsError("blinding thresholds must satisfy 0 < P_never < P_always");
  if (!pair_ok(p_never_b, p_always_b))
    throw OpticsError("data detector thresholds must satisfy 0 < P_never,B < P_always,B");
}

FeasibilityReport blinding_feasible(const BlindingThresholds& th) {
  th.validate();
  FeasibilityReport r;
  r.always_never = th.p_always < 2.0 * th.p_never;
  r.marginal = th.p_always == 2.0 * th.p_never;
  return r;
}

FeasibilityReport blinding_feasible(const BlindingThresholds& th, double t_b) {
  if (!(t_b > 0.0 && t_b < 1.0)) throw OpticsError("t_B must lie strictly between 0 and 1");
  FeasibilityReport r = blinding_feasible(th);
  const double leak_to_data = t_b / (1.0 - t_b) * th.p_always;
  const double leak_to_monitor = (1.0 - t_b) / t_b * th.p_always_b;
  r.data_isolation = leak_to_data < th.p_never_b;
  r.monitor_isolation = leak_to_monitor < 2.0 * th.p_never;
  r.marginal = r.marginal || leak_to_data == th.p_never_b || leak_to_monitor == 2.0 * th.p_never;
  return r;
}

const char* to_string(FsgPolicy p) { return p == FsgPolicy::canonical ? "canonical" : "paper-example"; }

std::optional<FsgPolicy> parse_fsg_policy(std::string_view s) {
  if (s == "canonical") return FsgPolicy::canonical;
  if (s == "paper-example") return FsgPolicy::paper_example;
  return std::nullopt;
}

std::uint8_t CowReading::code() const {
  if (monitor > 3) throw std::invalid_argument("invalid COW monitor reading");
  static constexpr std::array<std::uint8_t, 4> no_data{0, 1, 2, 6};
  static constexpr std::array<std::uint8_t, 4> with_data{3, 4, 5, 7};
  return data ? with_data[monitor] : no_data[monitor];
}

CowReading CowReading::from_code(std::uint8_t code) {
  static constexpr std::array<CowReading, 8> table{
      CowReading{0, false}, CowReading{1, false}, CowReading{2, false}, CowReading{0, true},
      CowReading{1, true},  CowReading{2, true},  CowReading{3, false}, CowReading{3, true}};
  if (code >= table.size()) throw std::invalid_argument("invalid COW reading code " + std::to_string(code));
  return table[code];
}

std::vector<int> FsgPlan::deltas() const {
  std::vector<int> d(phase_units.size());
  int prev = reference_phase_units;
  for (std::size_t j = 0; j < phase_units.size(); ++j) {
    d[j] = ((phase_units[j] - prev) % 4 + 4) % 4;
    prev = phase_units[j];
  }
  return d;
}

namespace {

constexpr std::array<std::uint8_t, 15> kExampleReadings{0, 1, 2, 0, 1, 2, 2, 0, 2, 2, 0, 2, 0, 0, 0};
constexpr std::array<int, 15> kExamplePhases{0, 0, 2, 1, 1, 3, 1, 2, 0, 2, 1, 3, 2, 1, 2};

int mod4(int x) { return ((x % 4) + 4) % 4; }

// reading code -> phase step for the two interferometer ports.
int canonical_delta(std::uint8_t port_reading) {
  switch (port_reading) {
    case 0: return 1;  // pi/2: equal split below P_never
    case 1: return 0;  // constructive port
    case 2: return 2;  // destructive port
  }
  throw std::invalid_argument("invalid FSG reading " + std::to_string(port_reading));
}

// Cumulative phases with the first pulse after the reference at 0.
void assign_phases(FsgPlan& plan, const std::vector<int>& deltas) {
  plan.phase_units.resize(deltas.size());
  int phase = 0;
  for (std::size_t j = 0; j < deltas.size(); ++j) {
    if (j > 0) phase = mod4(phase + deltas[j]);
    plan.phase_units[j] = phase;
  }
  plan.reference_phase_units = deltas.empty() ? 0 : mod4(-deltas[0]);
}

}  // namespace

std::span<const std::uint8_t> fsg_example_readings() { return kExampleReadings; }
std::span<const int> fsg_example_phases() { return kExamplePhases; }

FsgPlan fsg_dps_phases(std::span<const std::uint8_t> readings, FsgPolicy policy, double pulse_intensity) {
  if (!(pulse_intensity > 0.0) || !std::isfinite(pulse_intensity))
    throw OpticsError("FSG pulse intensity must be > 0");
  FsgPlan plan;
  plan.readings.assign(readings.begin(), readings.end());
  std::vector<int> deltas(readings.size());
  for (std::size_t j = 0; j < readings.size(); ++j) {
    deltas[j] = canonical_delta(readings[j]);
    if (policy == FsgPolicy::paper_example && j > 0 && j < kExampleReadings.size() &&
        readings[j] == kExampleReadings[j])
      deltas[j] = mod4(kExamplePhases[j] - kExamplePhases[j - 1]);
  }
  assign_phases(plan, deltas);
  plan.intensity.assign(readings.size() + 1, pulse_intensity * kFsgHeadroom);
  return plan;
}

FsgPlan fsg_cow_drive(std::span<const CowReading> readings, double t_b, const BlindingThresholds& th,
                      bool require_feasible) {
  const auto feas = blinding_feasible(th, t_b);
  if (require_feasible && !feas.ok()) throw OpticsError("blinding thresholds violate the COW feasibility conditions");

  const double base = th.p_always / (1.0 - t_b) * kFsgHeadroom;
  const double raised = th.p_always_b / t_b * kFsgHeadroom;
  FsgPlan plan;
  plan.cow_readings.assign(readings.begin(), readings.end());
  std::vector<int> deltas(readings.size());
  plan.intensity.reserve(readings.size() + 1);
  plan.intensity.push_back(base);
  for (std::size_t j = 0; j < readings.size(); ++j) {
    const auto& r = readings[j];
    plan.readings.push_back(r.code());
    // D_M1 sits on the constructive port, D_M2 on the destructive one.
    switch (r.monitor) {
      case 0: deltas[j] = canonical_delta(0); break;
      case 1: deltas[j] = canonical_delta(2); break;
      case 2: deltas[j] = canonical_delta(1); break;
      default: throw std::invalid_argument("FSG cannot fire both monitoring detectors at once");
    }
    plan.intensity.push_back(r.data ? raised : base);
  }
  assign_phases(plan, deltas);
  return plan;
}

PulseTrain fsg_train(const FsgPlan& plan, double slot_period, double wavelength_nm, const MzmParams& modulator) {
  modulator.validate();
  PulseTrain carved = PulseTrain::vacuum(plan.pulses(), slot_period, wavelength_nm);
  std::vector<double> v(plan.pulses());
  for (std::size_t k = 0; k < plan.pulses(); ++k) {
    carved.slots[k] = std::sqrt(plan.intensity[k]);
    const int u = k == 0 ? plan.reference_phase_units : plan.phase_units[k - 1];
    v[k] = u / 2.0 * modulator.v_pi_rf;
  }
  MzmParams pm = modulator;
  pm.v_bias_1 = pm.v_bias_2 = 0.0;
  // The paper-exact normalization doubles the field; undo it so the plan's
  // intensities are what leaves Eve.
  PulseTrain out = mzm_transfer(carved, DriveProfile::common(v), pm);
  const double scale = 0.5 / pm.factor();
  for (auto& a : out.slots) a *= scale;
  return out;
}

std::vector<std::uint8_t> dps_stage1_readings(const DetectionRecord& eve_replica, std::size_t n_pulses) {
  const auto all = dps_readings(eve_replica);
  std::vector<std::uint8_t> out;
  for (std::size_t k = 1; k < n_pulses; ++k) {
    const auto r = k < all.size() ? all[k] : std::uint8_t{reading_none};
    out.push_back(r == reading_both ? std::uint8_t{reading_none} : r);
  }
  return out;
}

std::vector<CowReading> cow_readings(const DetectionRecord& record, std::size_t n_grid_slots) {
  const auto& db = record.at(detector_id::db);
  const auto& m1 = record.at(detector_id::dm1);
  const auto& m2 = record.at(detector_id::dm2);
  std::vector<CowReading> out(n_grid_slots);
  for (std::size_t s = 0; s < n_grid_slots; ++s) {
    const bool a = m1.clicked(s);
    const bool b = m2.clicked(s);
    out[s].monitor = static_cast<std::uint8_t>(a && b ? 3 : a ? 2 : b ? 1 : 0);
    out[s].data = db.clicked(s);
  }
  return out;
}

// ---------------------------------------------------------------------------

const char* to_string(Illumination i) { return i == Illumination::cw ? "cw" : "pulsed"; }

std::optional<Illumination> parse_illumination(std::string_view s) {
  if (s == "cw") return Illumination::cw;
  if (s == "pulsed") return Illumination::pulsed;
  return std::nullopt;
}

void BlindingIllumination::validate() const {
  if (!(energy >= 0.0) || !std::isfinite(energy)) throw OpticsError("blinding energy must be finite and >= 0");
  if (period_slots == 0) throw OpticsError("blinding pulse period must be >= 1 slot");
  BlindingState{0.0, decay, blind_threshold}.validate();
}

std::vector<double> BlindingIllumination::schedule(std::size_t frame_slots) const {
  std::vector<double> s(preroll_slots + frame_slots, 0.0);
  for (std::size_t t = 0; t < s.size(); ++t)
    if (kind == Illumination::cw || t % period_slots == 0) s[t] = energy;
  return s;
}

namespace {

struct PreparedBlinding {
  BlindingInput input;
  std::vector<double> preroll;  // stored photocurrent during the preroll
};

PreparedBlinding prepare(const BlindingIllumination& il, std::size_t frame_slots) {
  il.validate();
  const auto sched = il.schedule(frame_slots);
  const auto head = std::span<const double>(sched).first(il.preroll_slots);
  const auto pre = blinding_update(BlindingState{0.0, il.decay, il.blind_threshold}, head);
  PreparedBlinding out;
  out.input.state = pre.final_state;
  out.input.illumination.assign(sched.begin() + static_cast<std::ptrdiff_t>(il.preroll_slots), sched.end());
  out.preroll = pre.stored;
  return out;
}

void watch_photocurrent(BlindingAttackResult& res, const DetectionRecord& record, const std::vector<double>& preroll,
                        const PhotocurrentMonitorConfig& mon) {
  for (const auto& t : record.detectors) {
    std::vector<double> trace = preroll;
    trace.insert(trace.end(), t.photocurrent.begin(), t.photocurrent.end());
    if (mon.enabled) {
      res.monitor.push_back(photocurrent_monitor(trace, mon.window_slots, mon.alarm_threshold));
      res.outcome.alarms.photocurrent_monitor = res.outcome.alarms.photocurrent_monitor || res.monitor.back().alarm;
    }
    res.photocurrent.push_back(std::move(trace));
  }
}

ApdConfig replica_of(ApdConfig c) {
  c.dead_time_slots = 0;
  c.afterpulse_prob = 0.0;
  c.dark_count_prob = 0.0;
  return c;
}

}  // namespace

BlindingAttackResult blinding_attack_dps(const DpsLink& link, const BlindingAttackConfig& cfg,
                                         const PhotocurrentMonitorConfig& mon, const ProtocolRun& baseline) {
  const std::size_t n = link.bits.size();
  const PulseTrain incoming = link.at_bob(link.alice.emit());

  BlindingAttackResult res;
  auto& out = res.outcome;
  out.type = AttackType::blinding;

  std::vector<std::uint8_t> readings;
  if (cfg.dps_readings) {
    readings = *cfg.dps_readings;
    if (readings.size() + 1 != n)
      throw std::invalid_argument("injected DPS readings must number one less than the phase bits");
  } else {
    DpsReceiverConfig replica = link.bob;
    replica.d1 = replica_of(replica.d1);
    replica.d2 = replica_of(replica.d2);
    replica.blind_d1.reset();
    replica.blind_d2.reset();
    auto eve = dps_measure(incoming, replica).record;
    readings = dps_stage1_readings(eve, n);
    out.eve_record = std::move(eve);
  }

  const auto& th = cfg.thresholds;
  out.feasibility = blinding_feasible(th);
  auto plan = fsg_dps_phases(readings, cfg.policy, th.p_always);
  res.fsg = fsg_train(plan, link.alice.source.slot_period, link.alice.source.wavelength_nm, link.alice.source.modulator);

  const auto blind = prepare(cfg.illumination, n + link.bob.delay_slots);
  DpsReceiverConfig bob = link.bob;
  for (ApdConfig* c : {&bob.d1, &bob.d2}) {
    c->p_never = th.p_never;
    c->p_always = th.p_always;
  }
  bob.blind_d1 = bob.blind_d2 = blind.input;
  auto record = dps_measure(res.fsg, bob).record;
  watch_photocurrent(res, record, blind.preroll, mon);

  const auto raw = dps_readings(record);
  out.eve_readings = readings;
  out.bob_readings.assign(raw.begin() + 1, raw.begin() + static_cast<std::ptrdiff_t>(n));
  out.readings_match = out.bob_readings == out.eve_readings && raw.front() == reading_none &&
                       std::all_of(raw.begin() + static_cast<std::ptrdiff_t>(n), raw.end(),
                                   [](std::uint8_t r) { return r == reading_none; });

  res.bob_run = make_dps_run(link.bits, std::move(record));
  const auto& km = *res.bob_run.dps;
  out.bob_key = km.sifted_bob;
  std::vector<std::optional<std::uint8_t>> bits(km.positions.size());
  for (std::size_t i = 0; i < km.positions.size(); ++i) {
    const auto r = readings[km.positions[i] - 1];
    if (r == reading_d1) bits[i] = 0;
    if (r == reading_d2) bits[i] = 1;
  }
  score_capture(out, bits);
  out.induced_qber = res.bob_run.qber() - baseline.qber();
  out.bob_key_matches_baseline = res.bob_run.bob_key() == baseline.bob_key();
  out.plan = std::move(plan);
  return res;
}

BlindingAttackResult blinding_attack_cow(const CowLink& link, const BlindingAttackConfig& cfg,
                                         const PhotocurrentMonitorConfig& mon, const ProtocolRun& baseline) {
  const std::size_t grid = 2 * link.symbols.size();
  const PulseTrain incoming = link.at_bob(link.alice.emit());

  BlindingAttackResult res;
  auto& out = res.outcome;
  out.type = AttackType::blinding;

  std::vector<CowReading> readings;
  if (cfg.cow_readings) {
    readings = *cfg.cow_readings;
    if (readings.size() != grid) throw std::invalid_argument("injected COW readings must cover every grid slot");
  } else {
    CowReceiverConfig replica = link.bob;
    replica.data = replica_of(replica.data);
    replica.m1 = replica_of(replica.m1);
    replica.m2 = replica_of(replica.m2);
    replica.blind_data.reset();
    replica.blind_m1.reset();
    replica.blind_m2.reset();
    auto eve = cow_measure(incoming, replica).record;
    readings = cow_readings(eve, grid);
    for (auto& r : readings)
      if (r.monitor == 3) r.monitor = 0;
    out.eve_record = std::move(eve);
  }

  const auto& th = cfg.thresholds;
  const double t_b = link.bob.t_b;
  out.feasibility = blinding_feasible(th, t_b);
  auto plan = fsg_cow_drive(readings, t_b, th, false);
  res.fsg = fsg_train(plan, link.alice.source.slot_period, link.alice.source.wavelength_nm, link.alice.source.modulator);

  // Eve's train starts one grid slot early with the reference pulse.
  const auto blind = prepare(cfg.illumination, grid + 1 + link.bob.delay_slots);
  CowReceiverConfig bob = link.bob;
  bob.data.p_never = th.p_never_b;
  bob.data.p_always = th.p_always_b;
  for (ApdConfig* c : {&bob.m1, &bob.m2}) {
    c->p_never = th.p_never;
    c->p_always = th.p_always;
  }
  bob.blind_data = bob.blind_m1 = bob.blind_m2 = blind.input;
  auto record = cow_measure(res.fsg, bob).record;
  watch_photocurrent(res, record, blind.preroll, mon);
  for (auto& t : record.detectors) t.drop_front(1);

  const auto got = cow_readings(record, grid);
  for (std::size_t s = 0; s < grid; ++s) {
    out.eve_readings.push_back(readings[s].code());
    out.bob_readings.push_back(got[s].code());
    const int want = readings[s].monitor;
    const int have = got[s].monitor;
    if (have == 3) out.spurious_monitor_clicks += want == 0 ? 2 : 1;
    else if (have != 0 && have != want) ++out.spurious_monitor_clicks;
  }
  for (const char* id : {detector_id::dm1, detector_id::dm2}) {
    const auto& t = record.at(id);
    for (std::size_t k = grid; k < t.size(); ++k) out.spurious_monitor_clicks += t.clicked(k) ? 1 : 0;
  }
  out.readings_match = got == readings && out.spurious_monitor_clicks == 0;

  res.bob_run = make_cow_run(link.symbols, std::move(record));
  const auto& km = *res.bob_run.cow;
  out.bob_key = km.bob_key;
  std::vector<std::optional<std::uint8_t>> bits(km.positions.size());
  for (std::size_t i = 0; i < km.positions.size(); ++i) {
    const bool early = readings[2 * km.positions[i]].data;
    const bool late = readings[2 * km.positions[i] + 1].data;
    if (early != late) bits[i] = late ? 1 : 0;
  }
  score_capture(out, bits);
  out.induced_qber = res.bob_run.qber() - baseline.qber();
  out.bob_key_matches_baseline = res.bob_run.bob_key() == baseline.bob_key();
  const auto v_before = baseline.cow->visibility.overall.visibility();
  const auto v_after = km.visibility.overall.visibility();
  if (v_before && v_after) out.induced_visibility_drop = *v_before - *v_after;
  out.plan = std::move(plan);
  return res;
}

}  // namespace dprsim
