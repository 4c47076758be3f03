#include <bit>

#include "dprsim/optics.hpp"

namespace dprsim {

namespace {

std::uint64_t width_mask(unsigned width) {
  return width >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << width) - 1;
}

PrbsState make_lfsr(unsigned width, std::uint64_t taps, std::uint64_t seed) {
  PrbsState s;
  s.width = width;
  s.taps = taps;
  s.reg = seed & width_mask(width);
  if (s.reg == 0) s.reg = 1;
  return s;
}

}  // namespace

PrbsState PrbsState::prbs7(std::uint64_t seed) { return make_lfsr(7, 0x60, seed); }
PrbsState PrbsState::prbs15(std::uint64_t seed) { return make_lfsr(15, 0x6000, seed); }
PrbsState PrbsState::prbs31(std::uint64_t seed) { return make_lfsr(31, 0x48000000, seed); }

PrbsState PrbsState::all_ones() {
  PrbsState s;
  s.constant = true;
  return s;
}

PrbsState PrbsState::all_zeros() {
  PrbsState s;
  s.constant = false;
  return s;
}

void PrbsState::validate() const {
  if (constant) return;
  if (width == 0 || width > 64) throw OpticsError("PRBS register width must be in [1, 64]");
  const std::uint64_t mask = width_mask(width);
  if ((taps & ~mask) != 0 || taps == 0) throw OpticsError("PRBS tap mask must be non-empty and within the register");
  if ((reg & mask) == 0) throw OpticsError("PRBS register is all-zero");
}

// Fibonacci LFSR: output the top bit, shift left, feed back the parity of the
// tapped bits.
std::pair<bool, PrbsState> prbs_next(const PrbsState& state) {
  state.validate();
  if (state.constant) return {*state.constant, state};
  PrbsState next = state;
  const bool out = ((state.reg >> (state.width - 1)) & 1U) != 0;
  const auto feedback = static_cast<std::uint64_t>(std::popcount(state.reg & state.taps) & 1);
  next.reg = ((state.reg << 1) | feedback) & width_mask(state.width);
  return {out, next};
}

std::vector<std::uint8_t> prbs_bits(PrbsState& state, std::size_t n) {
  std::vector<std::uint8_t> bits;
  bits.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto [bit, next] = prbs_next(state);
    bits.push_back(bit ? 1 : 0);
    state = next;
  }
  return bits;
}

}  // namespace dprsim
