#pragma once

// Avalanche photodiode models: Geiger-mode and linear-mode clicking, backflash
// re-emission, blinding dynamics and the two countermeasure monitors.

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dprsim/optics.hpp"
#include "dprsim/rng.hpp"

namespace dprsim {

enum class ApdMode : std::uint8_t { geiger, linear };

const char* to_string(ApdMode mode);

// Thresholds are intensities (|a|^2) in the run's arbitrary units.
struct ApdConfig {
  ApdMode mode = ApdMode::geiger;
  double click_threshold = 0.0;  // Geiger: click iff intensity > click_threshold
  double p_never = 0.2;          // linear: never clicks at or below
  double p_always = 0.4;         // linear: always clicks at or above
  std::size_t dead_time_slots = 0;
  double afterpulse_prob = 0.0;
  // Per-wavelength override of afterpulse_prob (nm -> probability).
  std::map<double, double> afterpulse_by_wavelength;
  double dark_count_prob = 0.0;
  std::uint64_t rng_seed = 0;

  double afterpulse_for(double wavelength_nm) const;
  // Flawless-blinding condition P_always < 2 P_never.
  bool blinding_feasible() const { return p_always < 2.0 * p_never; }
  void validate() const;
};

// Charge left on the detector by absorbed light. The detector is in linear
// mode while the stored photocurrent is at or above blind_threshold.
struct BlindingState {
  double stored_photocurrent = 0.0;
  double decay_per_slot = 0.9;
  double blind_threshold = 1.0;

  bool blinded() const { return stored_photocurrent >= blind_threshold; }
  void validate() const;
};

struct BlindingTrace {
  BlindingState final_state;
  std::vector<double> stored;   // stored photocurrent after each slot
  std::vector<ApdMode> mode;    // operating mode during each slot
};

// Per slot: the mode is read from the state carried into the slot, then
// stored <- stored * decay + incident. Light absorbed in slot k therefore
// affects the mode from slot k + 1 on.
BlindingTrace blinding_update(const BlindingState& state, std::span<const double> incident_intensity);

// Blinding light reaching a detector next to the signal. It feeds the stored
// photocurrent but arrives outside the detection gates, so it never decides
// a click on its own.
struct BlindingInput {
  BlindingState state;
  std::vector<double> illumination;  // per slot; missing slots are dark
};

struct DetectorTrace {
  std::string id;
  std::vector<std::uint8_t> clicks;    // 0/1 per slot
  std::vector<double> intensity;       // incident signal intensity per slot
  std::vector<double> photocurrent;    // per slot, arbitrary units
  std::vector<ApdMode> mode;

  std::size_t size() const { return clicks.size(); }
  bool clicked(std::size_t k) const { return k < clicks.size() && clicks[k] != 0; }
  std::size_t click_count() const;
  // Removes the first `n` slots (re-aligns a record to another clock).
  void drop_front(std::size_t n);
  // Truncates or pads with dark, non-clicking slots to exactly `n` slots.
  void resize(std::size_t n);

  bool operator==(const DetectorTrace&) const = default;
};

struct DetectionRecord {
  std::vector<DetectorTrace> detectors;

  const DetectorTrace& at(const std::string& id) const;
  DetectorTrace& at(const std::string& id);
  bool contains(const std::string& id) const;
  std::size_t total_clicks() const;

  bool operator==(const DetectionRecord&) const = default;
};

// Detector ids used throughout.
namespace detector_id {
inline constexpr const char* d1 = "D1";
inline constexpr const char* d2 = "D2";
inline constexpr const char* db = "D_B";
inline constexpr const char* dm1 = "D_M1";
inline constexpr const char* dm2 = "D_M2";
}  // namespace detector_id

DetectorTrace apd_detect(std::string id, std::span<const double> intensity, const ApdConfig& cfg,
                         double wavelength_nm = 1550.0,
                         const std::optional<BlindingInput>& blinding = std::nullopt);

DetectorTrace apd_detect(std::string id, const PulseTrain& input, const ApdConfig& cfg,
                         const std::optional<BlindingInput>& blinding = std::nullopt);

// ---------------------------------------------------------------------------
// Backflash

struct BackflashConfig {
  double electrons_per_avalanche = 2.7e8;
  double photons_per_electron = 2.4e-10;
  bool ideal_mode = false;     // every avalanche re-emits, coherently
  double emission_gain = 1.0;  // amplitude scale of the re-emitted field

  double emission_probability() const;
  void validate() const;
};

// For every click, with the emission probability, re-emits emission_gain
// times the incident amplitude of that slot (phase preserved). Other slots
// are vacuum.
PulseTrain backflash_emit(const DetectorTrace& record, const PulseTrain& incident, const BackflashConfig& cfg,
                          Rng& rng);

// ---------------------------------------------------------------------------
// Countermeasures

struct MonitorResult {
  bool alarm = false;
  std::vector<double> filtered;
};

// Trailing moving average over `window_slots`, zero current assumed before
// the trace; alarm iff any filtered value reaches `alarm_threshold`.
MonitorResult photocurrent_monitor(std::span<const double> photocurrent, std::size_t window_slots,
                                   double alarm_threshold);

struct WatchdogResult {
  bool alarm = false;
  double tapped_peak = 0.0;
  PulseTrain passthrough;
};

// Taps `tap_fraction` of the incoming power onto a monitor photodiode.
WatchdogResult watchdog(const PulseTrain& input, double tap_fraction, double intensity_threshold);

}  // namespace dprsim
