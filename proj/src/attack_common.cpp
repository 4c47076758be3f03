#include <cmath>

#include "dprsim/attacks.hpp"

namespace dprsim {

const char* to_string(AttackType t) {
  switch (t) {
    case AttackType::none: return "none";
    case AttackType::backflash: return "backflash";
    case AttackType::trojan: return "trojan";
    case AttackType::blinding: return "blinding";
  }
  return "?";
}

std::optional<AttackType> parse_attack_type(std::string_view s) {
  for (auto t : {AttackType::none, AttackType::backflash, AttackType::trojan, AttackType::blinding})
    if (s == to_string(t)) return t;
  return std::nullopt;
}

void score_capture(AttackOutcome& out, std::span<const std::optional<std::uint8_t>> eve_bits) {
  if (eve_bits.size() != out.bob_key.size()) throw std::invalid_argument("score_capture: length mismatch");
  out.eve_key.clear();
  out.eve_positions.clear();
  std::size_t correct = 0;
  for (std::size_t i = 0; i < eve_bits.size(); ++i) {
    if (!eve_bits[i]) continue;
    out.eve_positions.push_back(i);
    out.eve_key.push_back(*eve_bits[i]);
    if (*eve_bits[i] == out.bob_key[i]) ++correct;
  }
  out.capture_fraction =
      out.bob_key.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(out.bob_key.size());
}

PulseTrain DpsLink::at_bob(const PulseTrain& alice_output) const {
  return apply_phase_pattern(attenuate(alice_output, channel_loss_db), tamper_phase);
}

double DpsLink::bob_pulse_intensity() const {
  return alice.pulse_intensity() * std::pow(10.0, -channel_loss_db / 10.0);
}

PulseTrain CowLink::at_bob(const PulseTrain& alice_output) const {
  return apply_phase_pattern(attenuate(alice_output, channel_loss_db), tamper_phase);
}

double CowLink::bob_pulse_intensity() const {
  return alice.pulse_intensity() * std::pow(10.0, -channel_loss_db / 10.0);
}

}  // namespace dprsim
