#pragma once

// Eavesdropping attacks against the DPS and COW pipelines: backflash
// collection, Trojan-horse probing of Alice's modulators, and detector
// blinding with a faked-state generator (FSG).

#include <array>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "dprsim/detectors.hpp"
#include "dprsim/optics.hpp"
#include "dprsim/protocol.hpp"

namespace dprsim {

enum class AttackType : std::uint8_t { none, backflash, trojan, blinding };

const char* to_string(AttackType t);
std::optional<AttackType> parse_attack_type(std::string_view s);

struct Alarms {
  bool watchdog = false;
  bool photocurrent_monitor = false;

  bool any() const { return watchdog || photocurrent_monitor; }
  bool operator==(const Alarms&) const = default;
};

// ---------------------------------------------------------------------------
// Blinding feasibility

// Linear-mode trigger rails. For DPS only p_never/p_always are used; for COW
// they belong to the monitoring detectors and the *_b pair to the data
// detector.
struct BlindingThresholds {
  double p_never = 0.2;
  double p_always = 0.39;
  double p_never_b = 0.32;
  double p_always_b = 0.38;

  void validate() const;
  bool operator==(const BlindingThresholds&) const = default;
};

struct FeasibilityReport {
  bool always_never = false;             // P_always < 2 P_never
  std::optional<bool> data_isolation;    // t_B/(1-t_B) P_always,M < P_never,B
  std::optional<bool> monitor_isolation; // (1-t_B)/t_B P_always,B < 2 P_never,M
  bool marginal = false;                 // some inequality holds with equality

  bool ok() const {
    return always_never && data_isolation.value_or(true) && monitor_isolation.value_or(true);
  }
  bool operator==(const FeasibilityReport&) const = default;
};

// Only the P_always < 2 P_never condition (DPS).
FeasibilityReport blinding_feasible(const BlindingThresholds& th);
// All three conditions (COW). Throws for t_B outside (0, 1).
FeasibilityReport blinding_feasible(const BlindingThresholds& th, double t_b);

// ---------------------------------------------------------------------------
// Faked-state generator

enum class FsgPolicy : std::uint8_t { canonical, paper_example };

const char* to_string(FsgPolicy p);
std::optional<FsgPolicy> parse_fsg_policy(std::string_view s);

// Readings of a COW receiver in one grid slot. Monitor: 0 none, 1 D_M2,
// 2 D_M1, 3 both.
struct CowReading {
  std::uint8_t monitor = 0;
  bool data = false;

  // 0 none, 1 D_M2, 2 D_M1, 3 D_B only, 4 D_B + D_M2, 5 D_B + D_M1,
  // 6 both monitors, 7 both monitors + D_B.
  std::uint8_t code() const;
  static CowReading from_code(std::uint8_t code);
  bool operator==(const CowReading&) const = default;
};

// Eve's train: a reference pulse followed by one pulse per reading. Pulse
// j + 1 interferes with pulse j in Bob's interferometer and produces reading
// j. Phases are in units of pi/2.
struct FsgPlan {
  std::vector<std::uint8_t> readings;  // DPS 0/1/2, COW CowReading codes
  std::vector<CowReading> cow_readings;
  std::vector<int> phase_units;        // pulse j + 1, in [0, 4)
  int reference_phase_units = 0;
  std::vector<double> intensity;       // per pulse including the reference

  std::size_t pulses() const { return intensity.size(); }
  // Phase differences between consecutive pulses, mod 4; entry j belongs
  // to reading j.
  std::vector<int> deltas() const;
};

// Extra intensity Eve puts on top of the rails so rounding in the phase
// modulator never leaves a trigger pulse a hair below P_always.
inline constexpr double kFsgHeadroom = 1.0 + 1e-9;

// Phase plan for DPS readings over {0, 1, 2}: reading 1 -> delta = 0,
// reading 2 -> delta = 2, reading 0 -> odd delta (mod 4). Every pulse has
// intensity pulse_intensity (P_always of Bob's detectors).
FsgPlan fsg_dps_phases(std::span<const std::uint8_t> readings, FsgPolicy policy, double pulse_intensity = 1.0);

// The 15-reading worked example and the phases the paper-example policy
// assigns to it.
std::span<const std::uint8_t> fsg_example_readings();
std::span<const int> fsg_example_phases();

// Drive plan for COW: base pulses of P_always,M/(1-t_B), data pulses raised
// to P_always,B/t_B; monitor clicks steered with the DPS delta rules
// (D_M1 -> 0, D_M2 -> 2, none -> 1). Throws OpticsError when the thresholds
// are infeasible and require_feasible is set.
FsgPlan fsg_cow_drive(std::span<const CowReading> readings, double t_b, const BlindingThresholds& th,
                      bool require_feasible = true);

// Eve's transmitter: per-pulse amplitude sqrt(intensity) phase-modulated by a
// common-drive MZM at V = u/2 * V_pi_rf.
PulseTrain fsg_train(const FsgPlan& plan, double slot_period, double wavelength_nm = 1550.0,
                     const MzmParams& modulator = {});

// Eve's Geiger-mode replica readings on interior DPS slots 1..n-1 (double
// clicks read as 0).
std::vector<std::uint8_t> dps_stage1_readings(const DetectionRecord& eve_replica, std::size_t n_pulses);
// Per grid slot: monitor slot s and data slot s of a COW record.
std::vector<CowReading> cow_readings(const DetectionRecord& record, std::size_t n_grid_slots);

// ---------------------------------------------------------------------------
// Links: Alice, channel and Bob as wired for one protocol run

struct DpsLink {
  AliceTransmitter alice;
  std::vector<std::uint8_t> bits;
  DpsReceiverConfig bob;
  double channel_loss_db = 0.0;
  std::vector<double> tamper_phase;  // per slot, radians, applied mid-channel

  PulseTrain at_bob(const PulseTrain& alice_output) const;
  double bob_pulse_intensity() const;
};

struct CowLink {
  AliceTransmitter alice;
  std::vector<CowSymbol> symbols;
  CowReceiverConfig bob;
  double channel_loss_db = 0.0;
  std::vector<double> tamper_phase;  // per slot, radians, applied mid-channel

  PulseTrain at_bob(const PulseTrain& alice_output) const;
  double bob_pulse_intensity() const;
};

// ---------------------------------------------------------------------------
// Outcome

struct AttackOutcome {
  AttackType type = AttackType::none;
  std::vector<std::uint8_t> bob_key;      // Bob's sifted key under attack
  std::vector<std::uint8_t> eve_key;      // Eve's bit at each entry of eve_positions
  std::vector<std::size_t> eve_positions; // indices into bob_key
  double capture_fraction = 0.0;          // correct Eve bits / |bob_key|
  double induced_qber = 0.0;              // QBER under attack minus the no-attack QBER
  std::optional<double> induced_visibility_drop;  // COW only
  bool bob_key_matches_baseline = false;
  Alarms alarms;
  std::optional<FeasibilityReport> feasibility;
  std::optional<DetectionRecord> eve_record;

  // backflash
  std::size_t bob_clicks = 0;
  std::size_t emissions = 0;

  // blinding
  std::optional<FsgPlan> plan;
  std::vector<std::uint8_t> eve_readings;  // codes, one per reading slot
  std::vector<std::uint8_t> bob_readings;
  bool readings_match = false;
  std::size_t spurious_monitor_clicks = 0;
};

// Fills eve_key/eve_positions/capture_fraction from per-position Eve bits
// (nullopt where Eve has nothing).
void score_capture(AttackOutcome& out, std::span<const std::optional<std::uint8_t>> eve_bits);

// ---------------------------------------------------------------------------
// Backflash

struct BackflashAttackResult {
  AttackOutcome outcome;
  PulseTrain to_eve;  // backward light at the circulator's Eve port (ideal mode)
};

// Bob's clicked detectors re-emit toward the channel; a circulator routes
// the light to Eve, who measures it with a replica of Bob's receiver. In
// ideal mode every avalanche emits and all emissions add coherently;
// otherwise emissions are independent incoherent events.
BackflashAttackResult backflash_attack_dps(const DpsMeasurement& bob, const DpsReceiverConfig& bob_cfg,
                                           const ProtocolRun& run, double pulse_intensity,
                                           const BackflashConfig& cfg, std::uint64_t seed);
BackflashAttackResult backflash_attack_cow(const CowMeasurement& bob, const CowReceiverConfig& bob_cfg,
                                           const ProtocolRun& run, double pulse_intensity,
                                           const BackflashConfig& cfg, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Trojan horse

struct TrojanProbe {
  double wavelength_nm = 1000.0;
  double amplitude = 1.0;
  std::ptrdiff_t timing_offset_slots = 0;
  double reflection_db = 0.0;
  std::optional<double> excess_loss_db;  // default: trojan_excess_loss_db(wavelength)

  void validate(double signal_wavelength_nm) const;
};

// Extra channel loss of a probe wavelength relative to 1550 nm.
double trojan_excess_loss_db(double wavelength_nm);

// Incoming probe train for Alice's transmitter (one pulse per slot).
PulseTrain trojan_probe_train(const AliceTransmitter& alice, const TrojanProbe& probe);

// Probe reflected out of Alice's modulators: it carries her per-slot
// modulation (shifted by the timing offset) and is attenuated by the
// reflection and excess loss.
PulseTrain trojan_probe(const AliceTransmitter& alice, const TrojanProbe& probe);
// Same, for an already prepared incoming probe (e.g. after a watchdog tap).
PulseTrain trojan_reflect(const AliceTransmitter& alice, const PulseTrain& incoming, const TrojanProbe& probe);

struct TrojanDecode {
  DetectionRecord record;
  // DPS: reading per DLI slot; COW: per symbol bit (nullopt for decoys and
  // unreadable symbols).
  std::vector<std::uint8_t> dps_readings;
  std::vector<std::optional<std::uint8_t>> cow_bits;
  bool empty = true;  // nothing crossed Eve's threshold
};

// Eve's decoding of the reflected probe channel. DPS: replica DLI with
// Geiger detectors at `threshold`; COW: one detector reading the intensity
// pattern, decoys taken from Alice's public announcement.
TrojanDecode trojan_decode(const PulseTrain& reflected, Protocol protocol, double threshold,
                           std::span<const CowSymbol> cow_symbols = {});

struct TrojanConfig {
  TrojanProbe probe;
  double filter_extinction_db = std::numeric_limits<double>::infinity();
  std::optional<double> eve_threshold;  // default half the expected reflected intensity
};

struct WatchdogConfig {
  bool enabled = false;
  double tap_fraction = 0.1;
  double threshold = 1e-3;
};

struct TrojanAttackResult {
  AttackOutcome outcome;
  ProtocolRun bob_run;
  PulseTrain reflected;
  WdmSignal at_bob;  // after Eve's filter and the channel
  std::optional<WatchdogResult> watchdog;
};

// Eve injects the probe at Alice's output, splits the reflection off with a
// filter and forwards the filtered signal to Bob.
TrojanAttackResult trojan_attack_dps(const DpsLink& link, const TrojanConfig& cfg, const WatchdogConfig& watchdog,
                                     const ProtocolRun& baseline);
TrojanAttackResult trojan_attack_cow(const CowLink& link, const TrojanConfig& cfg, const WatchdogConfig& watchdog,
                                     const ProtocolRun& baseline);

// ---------------------------------------------------------------------------
// Blinding

enum class Illumination : std::uint8_t { cw, pulsed };

const char* to_string(Illumination i);
std::optional<Illumination> parse_illumination(std::string_view s);

struct BlindingIllumination {
  Illumination kind = Illumination::pulsed;
  double energy = 15.0;         // deposited per illumination pulse
  std::size_t period_slots = 8; // pulsed only
  double decay = 0.9;
  double blind_threshold = 10.0;
  std::size_t preroll_slots = 64;

  // Illumination per slot over preroll + frame slots.
  std::vector<double> schedule(std::size_t frame_slots) const;
  void validate() const;
};

struct PhotocurrentMonitorConfig {
  bool enabled = false;
  std::size_t window_slots = 8;
  double alarm_threshold = 75.0;
};

struct BlindingAttackConfig {
  BlindingThresholds thresholds;
  FsgPolicy policy = FsgPolicy::canonical;
  BlindingIllumination illumination;
  std::optional<std::vector<std::uint8_t>> dps_readings;   // replaces stage 1
  std::optional<std::vector<CowReading>> cow_readings;     // replaces stage 1
};

struct BlindingAttackResult {
  AttackOutcome outcome;
  ProtocolRun bob_run;
  PulseTrain fsg;
  // Photocurrent of each Bob detector over preroll + frame, in record order.
  std::vector<std::vector<double>> photocurrent;
  std::vector<MonitorResult> monitor;
};

// Stage 1: Eve's replica measures Alice (or injected readings are used).
// Stage 2: FSG plan. Stage 3: Bob's detectors, held in linear mode by the
// illumination, measure Eve's train.
BlindingAttackResult blinding_attack_dps(const DpsLink& link, const BlindingAttackConfig& cfg,
                                         const PhotocurrentMonitorConfig& monitor, const ProtocolRun& baseline);
BlindingAttackResult blinding_attack_cow(const CowLink& link, const BlindingAttackConfig& cfg,
                                         const PhotocurrentMonitorConfig& monitor, const ProtocolRun& baseline);

}  // namespace dprsim
