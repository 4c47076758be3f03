#include "dprsim/detectors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace dprsim {

const char* to_string(ApdMode mode) { return mode == ApdMode::geiger ? "geiger" : "linear"; }

double ApdConfig::afterpulse_for(double wavelength_nm) const {
  for (const auto& [wl, p] : afterpulse_by_wavelength)
    if (same_wavelength(wl, wavelength_nm)) return p;
  return afterpulse_prob;
}

void ApdConfig::validate() const {
  auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
  if (!(click_threshold >= 0.0)) throw OpticsError("APD click threshold must be >= 0");
  if (!(p_never >= 0.0 && p_never < p_always) || !std::isfinite(p_always))
    throw OpticsError("APD thresholds must satisfy 0 <= p_never < p_always");
  if (!prob(afterpulse_prob) || !prob(dark_count_prob)) throw OpticsError("APD probabilities must lie in [0, 1]");
  for (const auto& [wl, p] : afterpulse_by_wavelength)
    if (!prob(p)) throw OpticsError("APD afterpulse probability must lie in [0, 1]");
}

void BlindingState::validate() const {
  if (!(decay_per_slot > 0.0 && decay_per_slot < 1.0)) throw OpticsError("blinding decay must lie in (0, 1)");
  if (!(stored_photocurrent >= 0.0)) throw OpticsError("stored photocurrent must be >= 0");
  if (!(blind_threshold > 0.0)) throw OpticsError("blind threshold must be > 0");
}

BlindingTrace blinding_update(const BlindingState& state, std::span<const double> incident) {
  state.validate();
  BlindingTrace out;
  out.final_state = state;
  out.stored.reserve(incident.size());
  out.mode.reserve(incident.size());
  for (double inc : incident) {
    out.mode.push_back(out.final_state.blinded() ? ApdMode::linear : ApdMode::geiger);
    out.final_state.stored_photocurrent = out.final_state.stored_photocurrent * state.decay_per_slot + std::max(inc, 0.0);
    out.stored.push_back(out.final_state.stored_photocurrent);
  }
  return out;
}

std::size_t DetectorTrace::click_count() const {
  return static_cast<std::size_t>(std::count(clicks.begin(), clicks.end(), std::uint8_t{1}));
}

void DetectorTrace::drop_front(std::size_t n) {
  auto drop = [n](auto& v) {
    v.erase(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(std::min(n, v.size())));
  };
  drop(clicks);
  drop(intensity);
  drop(photocurrent);
  drop(mode);
}

void DetectorTrace::resize(std::size_t n) {
  clicks.resize(n, 0);
  intensity.resize(n, 0.0);
  photocurrent.resize(n, 0.0);
  mode.resize(n, mode.empty() ? ApdMode::geiger : mode.back());
}

const DetectorTrace& DetectionRecord::at(const std::string& id) const {
  for (const auto& d : detectors)
    if (d.id == id) return d;
  throw std::out_of_range("no detector '" + id + "' in record");
}

DetectorTrace& DetectionRecord::at(const std::string& id) {
  for (auto& d : detectors)
    if (d.id == id) return d;
  throw std::out_of_range("no detector '" + id + "' in record");
}

bool DetectionRecord::contains(const std::string& id) const {
  return std::any_of(detectors.begin(), detectors.end(), [&](const auto& d) { return d.id == id; });
}

std::size_t DetectionRecord::total_clicks() const {
  std::size_t n = 0;
  for (const auto& d : detectors) n += d.click_count();
  return n;
}

DetectorTrace apd_detect(std::string id, std::span<const double> intensity, const ApdConfig& cfg,
                         double wavelength_nm, const std::optional<BlindingInput>& blinding) {
  cfg.validate();
  std::optional<BlindingState> state;
  if (blinding) {
    blinding->state.validate();
    state = blinding->state;
  }

  const std::size_t n = intensity.size();
  DetectorTrace tr;
  tr.id = std::move(id);
  tr.clicks.assign(n, 0);
  tr.intensity.assign(intensity.begin(), intensity.end());
  tr.photocurrent.assign(n, 0.0);
  tr.mode.assign(n, cfg.mode);

  Rng rng(cfg.rng_seed);
  const double afterpulse = cfg.afterpulse_for(wavelength_nm);
  constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
  std::size_t first_live = 0;
  std::size_t afterpulse_slot = kNone;

  for (std::size_t k = 0; k < n; ++k) {
    const double in = std::max(intensity[k], 0.0);
    if (state) {
      tr.mode[k] = state->blinded() ? ApdMode::linear : ApdMode::geiger;
      const double extra = k < blinding->illumination.size() ? std::max(blinding->illumination[k], 0.0) : 0.0;
      state->stored_photocurrent = state->stored_photocurrent * state->decay_per_slot + in + extra;
      tr.photocurrent[k] = state->stored_photocurrent;
    } else {
      tr.photocurrent[k] = in;
    }

    if (k < first_live) continue;

    bool click = false;
    if (tr.mode[k] == ApdMode::geiger) {
      click = in > cfg.click_threshold;
      if (!click && k == afterpulse_slot) click = true;
      if (!click && cfg.dark_count_prob > 0.0) click = rng.bernoulli(cfg.dark_count_prob);
    } else if (in >= cfg.p_always) {
      click = true;
    } else if (in > cfg.p_never) {
      click = rng.bernoulli((in - cfg.p_never) / (cfg.p_always - cfg.p_never));
    }

    if (click) {
      tr.clicks[k] = 1;
      first_live = k + 1 + cfg.dead_time_slots;
      afterpulse_slot = (afterpulse > 0.0 && rng.bernoulli(afterpulse)) ? first_live : kNone;
    }
  }
  return tr;
}

DetectorTrace apd_detect(std::string id, const PulseTrain& input, const ApdConfig& cfg,
                         const std::optional<BlindingInput>& blinding) {
  input.validate();
  const auto intensities = input.intensities();
  return apd_detect(std::move(id), intensities, cfg, input.wavelength_nm, blinding);
}

// ---------------------------------------------------------------------------

double BackflashConfig::emission_probability() const {
  if (ideal_mode) return 1.0;
  return std::min(1.0, electrons_per_avalanche * photons_per_electron);
}

void BackflashConfig::validate() const {
  if (!(electrons_per_avalanche >= 0.0) || !std::isfinite(electrons_per_avalanche))
    throw OpticsError("electrons_per_avalanche must be finite and >= 0");
  if (!(photons_per_electron >= 0.0 && photons_per_electron <= 1.0))
    throw OpticsError("photons_per_electron must lie in [0, 1]");
  if (!(emission_gain >= 0.0) || !std::isfinite(emission_gain)) throw OpticsError("emission_gain must be >= 0");
}

PulseTrain backflash_emit(const DetectorTrace& record, const PulseTrain& incident, const BackflashConfig& cfg,
                          Rng& rng) {
  cfg.validate();
  const double p = cfg.emission_probability();
  PulseTrain out = PulseTrain::vacuum(incident.size(), incident.slot_period, incident.wavelength_nm);
  const std::size_t n = std::min(record.size(), incident.size());
  for (std::size_t k = 0; k < n; ++k) {
    if (!record.clicked(k)) continue;
    if (rng.bernoulli(p)) out.slots[k] = cfg.emission_gain * incident.slots[k];
  }
  return out;
}

// ---------------------------------------------------------------------------

MonitorResult photocurrent_monitor(std::span<const double> photocurrent, std::size_t window_slots,
                                   double alarm_threshold) {
  if (window_slots == 0) throw OpticsError("photocurrent monitor window must be >= 1 slot");
  if (photocurrent.empty()) throw OpticsError("photocurrent monitor needs a non-empty trace");
  MonitorResult out;
  out.filtered.resize(photocurrent.size());
  for (std::size_t k = 0; k < photocurrent.size(); ++k) {
    // Filter starts from rest: slots before the trace count as zero current.
    const bool full = k + 1 >= window_slots;
    const std::size_t lo = full ? k + 1 - window_slots : 0;
    double sum = 0.0;
    double mn = full ? photocurrent[lo] : 0.0;
    double mx = mn;
    for (std::size_t j = lo; j <= k; ++j) {
      sum += photocurrent[j];
      mn = std::min(mn, photocurrent[j]);
      mx = std::max(mx, photocurrent[j]);
    }
    // A mean lies between the window's extremes; clamping removes rounding
    // drift so a constant trace filters to exactly itself.
    out.filtered[k] = std::clamp(sum / static_cast<double>(window_slots), mn, mx);
    if (out.filtered[k] >= alarm_threshold) out.alarm = true;
  }
  return out;
}

WatchdogResult watchdog(const PulseTrain& input, double tap_fraction, double intensity_threshold) {
  if (!(tap_fraction > 0.0 && tap_fraction < 1.0)) throw OpticsError("watchdog tap fraction must lie in (0, 1)");
  WatchdogResult out;
  out.tapped_peak = tap_fraction * input.max_intensity();
  out.alarm = out.tapped_peak >= intensity_threshold;
  out.passthrough = input;
  const double g = std::sqrt(1.0 - tap_fraction);
  for (auto& a : out.passthrough.slots) a *= g;
  return out;
}

}  // namespace dprsim
