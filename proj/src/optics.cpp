#include "dprsim/optics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace dprsim {

namespace {

constexpr Amplitude kI{0.0, 1.0};

double db_to_amplitude(double db) { return std::pow(10.0, -db / 20.0); }

}  // namespace

PulseTrain PulseTrain::vacuum(std::size_t n, double slot_period, double wavelength_nm) {
  PulseTrain t;
  t.slots.assign(n, Amplitude{});
  t.slot_period = slot_period;
  t.wavelength_nm = wavelength_nm;
  return t;
}

std::vector<double> PulseTrain::intensities() const {
  std::vector<double> out(slots.size());
  std::transform(slots.begin(), slots.end(), out.begin(), [](Amplitude a) { return std::norm(a); });
  return out;
}

double PulseTrain::total_power() const {
  double sum = 0.0;
  for (auto a : slots) sum += std::norm(a);
  return sum;
}

double PulseTrain::max_intensity() const {
  double m = 0.0;
  for (auto a : slots) m = std::max(m, std::norm(a));
  return m;
}

void PulseTrain::validate() const {
  if (!(slot_period > 0.0) || !std::isfinite(slot_period))
    throw OpticsError("pulse train slot_period must be positive");
  if (!(wavelength_nm > 0.0) || !std::isfinite(wavelength_nm))
    throw OpticsError("pulse train wavelength must be positive");
  for (auto a : slots) {
    if (!std::isfinite(a.real()) || !std::isfinite(a.imag()))
      throw OpticsError("pulse train holds a non-finite amplitude");
  }
}

void require_same_channel(const PulseTrain& a, const PulseTrain& b, const char* where) {
  if (a.slot_period != b.slot_period)
    throw OpticsError(std::string(where) + ": slot periods differ");
  if (!same_wavelength(a.wavelength_nm, b.wavelength_nm))
    throw OpticsError(std::string(where) + ": wavelength channels differ");
}

PulseTrain padded(const PulseTrain& train, std::size_t n) {
  PulseTrain out = train;
  if (out.slots.size() < n) out.slots.resize(n, Amplitude{});
  return out;
}

PulseTrain cw_laser(std::size_t n_slots, double amplitude, double wavelength_nm, double slot_period) {
  if (n_slots == 0) throw OpticsError("cw_laser needs at least one slot");
  if (!std::isfinite(amplitude)) throw OpticsError("cw_laser amplitude must be finite");
  PulseTrain t = PulseTrain::vacuum(n_slots, slot_period, wavelength_nm);
  std::fill(t.slots.begin(), t.slots.end(), Amplitude{amplitude, 0.0});
  t.validate();
  return t;
}

PulseTrain attenuate(const PulseTrain& input, double db) {
  if (!(db >= 0.0)) throw OpticsError("attenuation must be >= 0 dB");
  PulseTrain out = input;
  if (std::isinf(db)) {
    std::fill(out.slots.begin(), out.slots.end(), Amplitude{});
    return out;
  }
  const double g = db_to_amplitude(db);
  for (auto& a : out.slots) a *= g;
  return out;
}

PulseTrain apply_global_phase(const PulseTrain& input, double phase_rad) {
  PulseTrain out = input;
  const Amplitude rot = std::polar(1.0, phase_rad);
  for (auto& a : out.slots) a *= rot;
  return out;
}

PulseTrain apply_phase_pattern(const PulseTrain& input, std::span<const double> phase_rad) {
  PulseTrain out = input;
  const std::size_t n = std::min(out.size(), phase_rad.size());
  for (std::size_t k = 0; k < n; ++k) {
    if (!std::isfinite(phase_rad[k])) throw OpticsError("phase pattern entries must be finite");
    out.slots[k] *= std::polar(1.0, phase_rad[k]);
  }
  return out;
}

// ---------------------------------------------------------------------------

void MzmParams::validate() const {
  if (!(v_pi_rf > 0.0) || !std::isfinite(v_pi_rf)) throw OpticsError("MZM v_pi_rf must be > 0");
  if (!(v_pi_dc > 0.0) || !std::isfinite(v_pi_dc)) throw OpticsError("MZM v_pi_dc must be > 0");
  if (!std::isfinite(v_bias_1) || !std::isfinite(v_bias_2))
    throw OpticsError("MZM bias voltages must be finite");
}

DriveProfile DriveProfile::balanced(std::span<const double> v1) {
  DriveProfile d;
  d.mode = DriveMode::balanced_single_drive;
  d.voltages.reserve(v1.size());
  for (double v : v1) d.voltages.emplace_back(v, -v);
  return d;
}

DriveProfile DriveProfile::common(std::span<const double> v) {
  DriveProfile d;
  d.mode = DriveMode::common_drive;
  d.voltages.reserve(v.size());
  for (double x : v) d.voltages.emplace_back(x, x);
  return d;
}

DriveProfile DriveProfile::shifted(std::ptrdiff_t offset) const {
  DriveProfile d;
  d.mode = mode;
  const auto n = static_cast<std::ptrdiff_t>(voltages.size());
  d.voltages.assign(voltages.size(), {0.0, 0.0});
  for (std::ptrdiff_t k = 0; k < n; ++k) {
    const std::ptrdiff_t src = k + offset;
    if (src >= 0 && src < n) d.voltages[static_cast<std::size_t>(k)] = voltages[static_cast<std::size_t>(src)];
  }
  return d;
}

void DriveProfile::validate() const {
  for (const auto& [v1, v2] : voltages) {
    if (!std::isfinite(v1) || !std::isfinite(v2)) throw OpticsError("drive voltages must be finite");
    if (mode == DriveMode::balanced_single_drive && v2 != -v1)
      throw OpticsError("balanced single drive requires V2 = -V1");
    if (mode == DriveMode::common_drive && v2 != v1)
      throw OpticsError("common drive requires V2 = V1");
  }
}

std::pair<double, double> mzm_phases(double v1, double v2, const MzmParams& p) {
  using std::numbers::pi;
  return {pi * (v1 / p.v_pi_rf + p.v_bias_1 / p.v_pi_dc), pi * (v2 / p.v_pi_rf + p.v_bias_2 / p.v_pi_dc)};
}

Amplitude mzm_slot_transfer(double v1, double v2, const MzmParams& params) {
  const auto [phi1, phi2] = mzm_phases(v1, v2, params);
  return params.factor() * (std::polar(1.0, phi1) + std::polar(1.0, phi2));
}

PulseTrain mzm_transfer(const PulseTrain& input, const DriveProfile& drive, const MzmParams& params) {
  params.validate();
  drive.validate();
  if (drive.size() != input.size())
    throw OpticsError("mzm_transfer: drive length " + std::to_string(drive.size()) +
                      " does not match train length " + std::to_string(input.size()));
  PulseTrain out = input;
  for (std::size_t k = 0; k < out.slots.size(); ++k) {
    const auto& [v1, v2] = drive.voltages[k];
    out.slots[k] *= mzm_slot_transfer(v1, v2, params);
  }
  return out;
}

// ---------------------------------------------------------------------------

CouplerRatio::CouplerRatio(double through) : through_(through) {
  if (!(through >= 0.0 && through <= 1.0)) throw OpticsError("coupler transmittance must lie in [0, 1]");
}

PortPair coupler_2x2(const PulseTrain& in_a, const PulseTrain& in_b, CouplerRatio ratio) {
  require_same_channel(in_a, in_b, "coupler_2x2");
  const std::size_t n = std::max(in_a.size(), in_b.size());
  const double t = std::sqrt(ratio.through());
  const Amplitude r = kI * std::sqrt(ratio.cross());
  PortPair out{PulseTrain::vacuum(n, in_a.slot_period, in_a.wavelength_nm),
               PulseTrain::vacuum(n, in_a.slot_period, in_a.wavelength_nm)};
  for (std::size_t k = 0; k < n; ++k) {
    const Amplitude a = in_a.at(k);
    const Amplitude b = in_b.at(k);
    out.a.slots[k] = t * a + r * b;
    out.b.slots[k] = r * a + t * b;
  }
  return out;
}

PortPair coupler_2x2_adjoint(const PulseTrain& out_a, const PulseTrain& out_b, CouplerRatio ratio) {
  require_same_channel(out_a, out_b, "coupler_2x2_adjoint");
  const std::size_t n = std::max(out_a.size(), out_b.size());
  const double t = std::sqrt(ratio.through());
  const Amplitude r = std::conj(kI * std::sqrt(ratio.cross()));
  PortPair in{PulseTrain::vacuum(n, out_a.slot_period, out_a.wavelength_nm),
              PulseTrain::vacuum(n, out_a.slot_period, out_a.wavelength_nm)};
  for (std::size_t k = 0; k < n; ++k) {
    const Amplitude a = out_a.at(k);
    const Amplitude b = out_b.at(k);
    in.a.slots[k] = t * a + r * b;
    in.b.slots[k] = r * a + t * b;
  }
  return in;
}

PulseTrain delay_line(const PulseTrain& input, std::size_t delay_slots) {
  PulseTrain out = input;
  out.slots.insert(out.slots.begin(), delay_slots, Amplitude{});
  return out;
}

PulseTrain advance_line(const PulseTrain& input, std::size_t delay_slots) {
  PulseTrain out = input;
  const std::size_t drop = std::min(delay_slots, out.slots.size());
  out.slots.erase(out.slots.begin(), out.slots.begin() + static_cast<std::ptrdiff_t>(drop));
  return out;
}

DliOutputs dli(const PulseTrain& input, std::size_t delay_slots) {
  if (delay_slots == 0) throw OpticsError("dli delay must be at least one slot");
  const CouplerRatio half(0.5);
  const PulseTrain vac = PulseTrain::vacuum(input.size(), input.slot_period, input.wavelength_nm);
  const auto split = coupler_2x2(input, vac, half);
  const std::size_t n = input.size() + delay_slots;
  const auto recombined = coupler_2x2(padded(split.a, n), delay_line(split.b, delay_slots), half);
  return DliOutputs{recombined.b, recombined.a, delay_slots >= input.size()};
}

PulseTrain dli_adjoint(const PulseTrain& constructive, const PulseTrain& destructive, std::size_t delay_slots) {
  if (delay_slots == 0) throw OpticsError("dli delay must be at least one slot");
  const CouplerRatio half(0.5);
  const auto arms = coupler_2x2_adjoint(destructive, constructive, half);
  const PulseTrain upper = arms.a;
  const PulseTrain lower = padded(advance_line(arms.b, delay_slots), upper.size());
  return coupler_2x2_adjoint(upper, lower, half).a;
}

CirculatorPorts circulator(const PulseTrain& port1_in, const PulseTrain& port2_in, const PulseTrain& port3_in) {
  return CirculatorPorts{port3_in, port1_in, port2_in};
}

// ---------------------------------------------------------------------------

bool same_wavelength(double a_nm, double b_nm) { return std::abs(a_nm - b_nm) <= 1e-6; }

const PulseTrain* WdmSignal::find(double wavelength_nm) const {
  for (const auto& c : channels)
    if (same_wavelength(c.wavelength_nm, wavelength_nm)) return &c;
  return nullptr;
}

std::size_t WdmSignal::size() const {
  std::size_t n = 0;
  for (const auto& c : channels) n = std::max(n, c.size());
  return n;
}

std::vector<double> WdmSignal::total_intensities() const {
  std::vector<double> sum(size(), 0.0);
  for (const auto& c : channels)
    for (std::size_t k = 0; k < c.size(); ++k) sum[k] += c.intensity(k);
  return sum;
}

WdmSignal wavelength_mux(std::span<const PulseTrain> inputs) {
  WdmSignal out;
  for (const auto& t : inputs) {
    t.validate();
    if (!out.channels.empty() && out.channels.front().slot_period != t.slot_period)
      throw OpticsError("wavelength_mux: slot periods differ");
    if (out.find(t.wavelength_nm) != nullptr)
      throw OpticsError("wavelength_mux: duplicate channel at " + std::to_string(t.wavelength_nm) + " nm");
    out.channels.push_back(t);
  }
  const std::size_t n = out.size();
  for (auto& c : out.channels) c.slots.resize(n, Amplitude{});
  return out;
}

PulseTrain wavelength_demux(const WdmSignal& signal, double wavelength_nm) {
  if (const PulseTrain* c = signal.find(wavelength_nm)) return *c;
  PulseTrain empty;
  empty.wavelength_nm = wavelength_nm;
  if (!signal.channels.empty()) empty.slot_period = signal.channels.front().slot_period;
  return empty;
}

WdmSignal optical_filter(const WdmSignal& signal, double center_nm, double extinction_db) {
  if (!(extinction_db >= 0.0)) throw OpticsError("filter extinction must be >= 0 dB");
  WdmSignal out;
  for (const auto& c : signal.channels) {
    if (same_wavelength(c.wavelength_nm, center_nm)) {
      out.channels.push_back(c);
    } else if (!std::isinf(extinction_db)) {
      out.channels.push_back(attenuate(c, extinction_db));
    }
  }
  return out;
}

WdmSignal mzm_transfer(const WdmSignal& input, const DriveProfile& drive, const MzmParams& params) {
  WdmSignal out;
  out.channels.reserve(input.channels.size());
  for (const auto& c : input.channels) out.channels.push_back(mzm_transfer(c, drive, params));
  return out;
}

}  // namespace dprsim
