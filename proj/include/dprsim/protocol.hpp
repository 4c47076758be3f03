#pragma once

// Differential-phase-shift (DPS) and coherent-one-way (COW) pipelines:
// Alice's modulators, Bob's receivers, sifting, QBER and COW visibilities.

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dprsim/detectors.hpp"
#include "dprsim/optics.hpp"

namespace dprsim {

enum class Protocol : std::uint8_t { dps, cow };

const char* to_string(Protocol p);

struct SourceConfig {
  double amplitude = 1.0;  // CW laser field amplitude
  double slot_period = 1.0;
  double wavelength_nm = 1550.0;
  MzmParams modulator;     // V_pi values and normalization shared by Alice's MZMs

  void validate() const;
};

// Alice's modulator chain: CW laser -> pulse carver (balanced single-drive
// MZM) -> optional phase modulator (common-drive MZM).
struct AliceTransmitter {
  SourceConfig source;
  DriveProfile carver;
  std::optional<DriveProfile> phase;

  std::size_t size() const { return carver.size(); }
  // Carver biased at -V_pi_dc/2 and +V_pi_dc/2: 0 V blocks, V_pi_rf/2 passes.
  MzmParams carver_params() const;
  MzmParams phase_params() const;

  PulseTrain emit() const;
  // Imprints the same per-slot modulation on another train (any wavelength);
  // slot k of `probe` meets the drive of slot k + offset.
  PulseTrain modulate(const PulseTrain& probe, std::ptrdiff_t offset = 0) const;
  // Intensity of a transmitted pulse.
  double pulse_intensity() const;
};

// ---------------------------------------------------------------------------
// DPS

// Phase bit 1 -> pi. Every slot carries a pulse (carver PRBS forced to ones).
AliceTransmitter dps_transmitter(std::span<const std::uint8_t> phase_bits, const SourceConfig& source);
PulseTrain dps_encode(std::span<const std::uint8_t> phase_bits, double pulse_amplitude, double slot_period = 1.0);

struct DpsReceiverConfig {
  std::size_t delay_slots = 1;
  ApdConfig d1;
  ApdConfig d2;
  std::optional<BlindingInput> blind_d1;
  std::optional<BlindingInput> blind_d2;

  // Geiger thresholds at `threshold_fraction` of the constructive intensity
  // of two equal pulses of intensity `pulse_intensity`.
  static DpsReceiverConfig for_pulse_intensity(double pulse_intensity, double threshold_fraction = 0.5);
};

struct DpsMeasurement {
  DliOutputs ports;        // of the first channel
  DetectionRecord record;  // D1 = constructive, D2 = destructive
};

DpsMeasurement dps_measure(const PulseTrain& train, const DpsReceiverConfig& cfg);
// Every channel interferes in the DLI; detectors see the summed intensity.
DpsMeasurement dps_measure(const WdmSignal& signal, const DpsReceiverConfig& cfg);

enum DpsReading : std::uint8_t { reading_none = 0, reading_d1 = 1, reading_d2 = 2, reading_both = 3 };

// Per-slot reading of a D1/D2 record.
std::vector<std::uint8_t> dps_readings(const DetectionRecord& record);

struct DpsKeyMaterial {
  std::vector<std::uint8_t> sifted_alice;
  std::vector<std::uint8_t> sifted_bob;
  std::vector<std::size_t> positions;  // DLI output slot of each sifted bit
  std::size_t double_clicks = 0;
  double qber = 0.0;
  bool empty = true;
};

// Keeps interior slots with exactly one of D1/D2; Alice's bit for slot k is
// b_k xor b_{k-1}. The record must hold phase_bits.size() + 1 slots.
DpsKeyMaterial dps_sift(std::span<const std::uint8_t> phase_bits, const DetectionRecord& record);

// ---------------------------------------------------------------------------
// COW

enum class CowSymbol : std::uint8_t { bit0, bit1, decoy };

// '0', '1', 'd' per symbol.
std::vector<CowSymbol> parse_cow_symbols(std::string_view text);
std::string to_string(std::span<const CowSymbol> symbols);
char to_char(CowSymbol s);

// Pulse occupancy of the symbol's two grid slots: bit0 "1-0", bit1 "0-1", decoy "1-1".
std::array<bool, 2> cow_slot_pattern(CowSymbol s);

AliceTransmitter cow_transmitter(std::span<const CowSymbol> symbols, const SourceConfig& source);
PulseTrain cow_encode(std::span<const CowSymbol> symbols, double amplitude, double slot_period = 0.5);

struct CowReceiverConfig {
  double t_b = 0.9;
  std::size_t delay_slots = 1;
  ApdConfig data;
  ApdConfig m1;
  ApdConfig m2;
  std::optional<BlindingInput> blind_data;
  std::optional<BlindingInput> blind_m1;
  std::optional<BlindingInput> blind_m2;

  // Data threshold at `threshold_fraction` of t_B * I; monitor thresholds at
  // `threshold_fraction` of the single-interface constructive intensity
  // (1 - t_B) * I.
  static CowReceiverConfig for_pulse_intensity(double pulse_intensity, double t_b, double threshold_fraction = 0.5);
};

struct CowMeasurement {
  PulseTrain data_line;
  PulseTrain monitor_line;
  DliOutputs monitor_ports;  // constructive -> D_M1, destructive -> D_M2
  DetectionRecord record;    // D_B, D_M1, D_M2
};

CowMeasurement cow_measure(const PulseTrain& train, const CowReceiverConfig& cfg);
CowMeasurement cow_measure(const WdmSignal& signal, const CowReceiverConfig& cfg);

// Classes of adjacent-pulse interfaces. The label names the later symbol
// first ("01": bit 1 followed by bit 0).
enum class InterfaceClass : std::uint8_t { d, c01, c0d, cd1, cdd };
inline constexpr std::array<InterfaceClass, 5> kInterfaceClasses{InterfaceClass::d, InterfaceClass::c01,
                                                                  InterfaceClass::c0d, InterfaceClass::cd1,
                                                                  InterfaceClass::cdd};
const char* label(InterfaceClass c);
std::optional<InterfaceClass> parse_interface_class(std::string_view label);

struct PulseInterface {
  std::size_t slot;  // grid slot of the later pulse = monitor DLI output slot
  InterfaceClass cls;
};

// Every pair of pulses in consecutive grid slots.
std::vector<PulseInterface> classify_interfaces(std::span<const CowSymbol> symbols);

// Class of the interface between the last slot of `earlier` and the first
// slot of `later`, or nullopt when one side is vacuum.
std::optional<InterfaceClass> boundary_class(CowSymbol earlier, CowSymbol later);

struct ClassCounts {
  std::size_t interfaces = 0;
  std::size_t m1 = 0;
  std::size_t m2 = 0;

  // |m1 - m2| / (m1 + m2); nullopt when there were no detections.
  std::optional<double> visibility() const;
  bool operator==(const ClassCounts&) const = default;
};

std::optional<double> visibility_of(std::size_t m1, std::size_t m2);

struct VisibilityReport {
  std::array<ClassCounts, 5> classes{};  // indexed by InterfaceClass
  ClassCounts overall;
  std::size_t unclassified_m1 = 0;  // monitor clicks outside any interface slot
  std::size_t unclassified_m2 = 0;

  const ClassCounts& of(InterfaceClass c) const { return classes[static_cast<std::size_t>(c)]; }
  bool operator==(const VisibilityReport&) const = default;
};

VisibilityReport visibility(const DetectionRecord& monitor, std::span<const CowSymbol> symbols);

struct CowKeyMaterial {
  std::vector<std::uint8_t> alice_key;
  std::vector<std::uint8_t> bob_key;
  std::vector<std::size_t> positions;        // symbol index of each key bit
  std::vector<std::size_t> decoy_positions;  // announced by Alice
  std::size_t inconsistent = 0;              // both half-slots clicked on a bit symbol
  double qber = 0.0;
  bool empty = true;
  VisibilityReport visibility;
};

// Removes decoys, decides each bit from the D_B half-slot that clicked and
// scores inconsistent double clicks as errors.
CowKeyMaterial cow_sift(std::span<const CowSymbol> symbols, const DetectionRecord& record,
                        const VisibilityReport& report);

// ---------------------------------------------------------------------------

struct ProtocolRun {
  Protocol protocol = Protocol::dps;
  std::vector<std::uint8_t> alice_bits;     // DPS phase bits
  std::vector<CowSymbol> alice_symbols;     // COW symbols
  DetectionRecord bob;
  std::optional<DpsKeyMaterial> dps;
  std::optional<CowKeyMaterial> cow;

  const std::vector<std::uint8_t>& alice_key() const;
  const std::vector<std::uint8_t>& bob_key() const;
  double qber() const;
};

// Sifts an existing Bob record against Alice's data.
ProtocolRun make_dps_run(std::vector<std::uint8_t> bits, DetectionRecord bob);
ProtocolRun make_cow_run(std::vector<CowSymbol> symbols, DetectionRecord bob);

double hamming_fraction(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b);

}  // namespace dprsim
