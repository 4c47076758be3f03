#pragma once

// Slot-synchronous optical signal model.
//
// A PulseTrain holds one complex field amplitude per time slot on a single
// wavelength channel. Intensity is |a|^2 in arbitrary units. Every component
// below is a pure function over trains; components that need trains of equal
// length pad the shorter one with vacuum (zero amplitude) slots.

#include <complex>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace dprsim {

using Amplitude = std::complex<double>;

class OpticsError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct PulseTrain {
  std::vector<Amplitude> slots;
  double slot_period = 1.0;      // seconds
  double wavelength_nm = 1550.0;

  static PulseTrain vacuum(std::size_t n, double slot_period = 1.0, double wavelength_nm = 1550.0);

  std::size_t size() const { return slots.size(); }
  bool empty() const { return slots.empty(); }

  // Zero beyond the end of the train.
  Amplitude at(std::size_t k) const { return k < slots.size() ? slots[k] : Amplitude{}; }
  double intensity(std::size_t k) const { return std::norm(at(k)); }
  std::vector<double> intensities() const;
  double total_power() const;
  double max_intensity() const;

  // Throws OpticsError on non-finite amplitudes or non-positive period/wavelength.
  void validate() const;
};

// Throws if slot periods or wavelengths differ.
void require_same_channel(const PulseTrain& a, const PulseTrain& b, const char* where);

// Copy of `train` padded with vacuum to at least `n` slots.
PulseTrain padded(const PulseTrain& train, std::size_t n);

PulseTrain cw_laser(std::size_t n_slots, double amplitude, double wavelength_nm = 1550.0,
                    double slot_period = 1.0);

// Power attenuation in dB (amplitude scales by 10^(-dB/20)).
PulseTrain attenuate(const PulseTrain& input, double db);

// Multiplies every slot by exp(i*phase_rad).
PulseTrain apply_global_phase(const PulseTrain& input, double phase_rad);

// Phase modulator inside the channel: slot k is multiplied by
// exp(i*phase_rad[k]); slots past the end of the pattern are untouched.
PulseTrain apply_phase_pattern(const PulseTrain& input, std::span<const double> phase_rad);

// ---------------------------------------------------------------------------
// Mach-Zehnder modulator

enum class MzmNormalization {
  paper_exact,  // E_out = E_in (e^{i phi1} + e^{i phi2})
  halved,       // E_out = E_in (e^{i phi1} + e^{i phi2}) / 2
};

struct MzmParams {
  double v_pi_rf = 1.0;
  double v_pi_dc = 1.0;
  double v_bias_1 = 0.0;
  double v_bias_2 = 0.0;
  MzmNormalization normalization = MzmNormalization::halved;

  double factor() const { return normalization == MzmNormalization::halved ? 0.5 : 1.0; }
  void validate() const;
};

enum class DriveMode {
  balanced_single_drive,  // V2 = -V1
  common_drive,           // V2 = V1
  independent,
};

struct DriveProfile {
  std::vector<std::pair<double, double>> voltages;  // (V1_k, V2_k) per slot
  DriveMode mode = DriveMode::independent;

  static DriveProfile balanced(std::span<const double> v1);
  static DriveProfile common(std::span<const double> v);

  std::size_t size() const { return voltages.size(); }

  // Drive seen by a train whose slot k meets drive slot k + offset; slots
  // outside the profile get 0 V on both arms.
  DriveProfile shifted(std::ptrdiff_t offset) const;

  void validate() const;
};

// Per-arm phases phi_{1,2} = pi (V/V_pi_rf + V_bias/V_pi_dc).
std::pair<double, double> mzm_phases(double v1, double v2, const MzmParams& params);

// Complex field transfer of one slot.
Amplitude mzm_slot_transfer(double v1, double v2, const MzmParams& params);

PulseTrain mzm_transfer(const PulseTrain& input, const DriveProfile& drive, const MzmParams& params);

// ---------------------------------------------------------------------------
// Passive components

// Power transmittance to the through port.
class CouplerRatio {
 public:
  explicit CouplerRatio(double through);
  double through() const { return through_; }
  double cross() const { return 1.0 - through_; }

 private:
  double through_;
};

struct PortPair {
  PulseTrain a;
  PulseTrain b;
};

// out_a = sqrt(t) in_a + i sqrt(1-t) in_b
// out_b = i sqrt(1-t) in_a + sqrt(t) in_b
PortPair coupler_2x2(const PulseTrain& in_a, const PulseTrain& in_b, CouplerRatio ratio);

// Hermitian adjoint of coupler_2x2: maps output-port fields back to the inputs.
PortPair coupler_2x2_adjoint(const PulseTrain& out_a, const PulseTrain& out_b, CouplerRatio ratio);

PulseTrain delay_line(const PulseTrain& input, std::size_t delay_slots);

// Adjoint of delay_line: drops the first `delay_slots` slots.
PulseTrain advance_line(const PulseTrain& input, std::size_t delay_slots);

struct DliOutputs {
  PulseTrain constructive;  // slot k: i (a_k + a_{k-d}) / 2
  PulseTrain destructive;   // slot k:   (a_k - a_{k-d}) / 2
  // Set when the delay is not shorter than the train, so no pair of input
  // slots ever meets at the second coupler.
  bool no_interference = false;
};

// Delay-line interferometer: coupler(50:50) -> (pass || delay) -> coupler(50:50).
// Output trains are input.size() + delay_slots long.
DliOutputs dli(const PulseTrain& input, std::size_t delay_slots);

// Adjoint of dli restricted to the signal input port. Backward-propagates the
// port fields to the DLI input; light leaving through the unused input port is
// discarded. For fields produced by dli() this returns the original input.
PulseTrain dli_adjoint(const PulseTrain& constructive, const PulseTrain& destructive,
                       std::size_t delay_slots);

struct CirculatorPorts {
  PulseTrain port1;
  PulseTrain port2;
  PulseTrain port3;
};

// Lossless three-port circulator routing 1 -> 2, 2 -> 3, 3 -> 1.
CirculatorPorts circulator(const PulseTrain& port1_in, const PulseTrain& port2_in,
                           const PulseTrain& port3_in);

// ---------------------------------------------------------------------------
// Wavelength-multiplexed signals

// Superposition of trains on distinct wavelength channels sharing one clock.
struct WdmSignal {
  std::vector<PulseTrain> channels;

  const PulseTrain* find(double wavelength_nm) const;
  std::size_t size() const;  // longest channel
  // Sum of channel intensities per slot (what a broadband detector sees).
  std::vector<double> total_intensities() const;
};

bool same_wavelength(double a_nm, double b_nm);

WdmSignal wavelength_mux(std::span<const PulseTrain> inputs);

// Channel at `wavelength_nm`, or an empty train if not present.
PulseTrain wavelength_demux(const WdmSignal& signal, double wavelength_nm);

// Band-pass filter: the channel at `center_nm` passes untouched, every other
// channel is attenuated by `extinction_db`. Infinite extinction removes the
// out-of-band channels entirely.
WdmSignal optical_filter(const WdmSignal& signal, double center_nm, double extinction_db);

// MZM applied identically to every channel present.
WdmSignal mzm_transfer(const WdmSignal& input, const DriveProfile& drive, const MzmParams& params);

// ---------------------------------------------------------------------------
// Pseudo-random binary sequence source

struct PrbsState {
  unsigned width = 7;                // register length in bits
  std::uint64_t taps = 0x60;         // feedback mask (bit i = register bit i)
  std::uint64_t reg = 0x7f;
  std::optional<bool> constant;      // forced output, register untouched

  // x^7 + x^6 + 1, x^15 + x^14 + 1, x^31 + x^28 + 1.
  static PrbsState prbs7(std::uint64_t seed);
  static PrbsState prbs15(std::uint64_t seed);
  static PrbsState prbs31(std::uint64_t seed);
  static PrbsState all_ones();
  static PrbsState all_zeros();

  void validate() const;
};

std::pair<bool, PrbsState> prbs_next(const PrbsState& state);

// Convenience: next n bits (0/1) and the advanced state.
std::vector<std::uint8_t> prbs_bits(PrbsState& state, std::size_t n);

}  // namespace dprsim
