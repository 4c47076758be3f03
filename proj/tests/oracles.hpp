#pragma once

// Reference computations written without the simulator's components.

#include <array>
#include <complex>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

namespace oracle {

using C = std::complex<double>;

// 2x2 coupler matrix [[sqrt(t), i sqrt(1-t)], [i sqrt(1-t), sqrt(t)]].
inline std::array<C, 2> couple(C a, C b, double t) {
  const C i(0.0, 1.0);
  return {std::sqrt(t) * a + i * std::sqrt(1.0 - t) * b, i * std::sqrt(1.0 - t) * a + std::sqrt(t) * b};
}

struct Ports {
  std::vector<C> constructive;
  std::vector<C> destructive;
};

// Coupler, delay of `d` slots on the second arm, coupler; evaluated slot by
// slot over n + d output slots. Output port 2 is the constructive port and
// output port 1 the destructive one.
inline Ports dli(const std::vector<C>& in, std::size_t d) {
  const std::size_t n = in.size() + d;
  std::vector<C> upper(n), lower(n);
  for (std::size_t k = 0; k < in.size(); ++k) {
    const auto s = couple(in[k], 0.0, 0.5);
    upper[k] = s[0];
    lower[k + d] = s[1];
  }
  Ports p;
  for (std::size_t k = 0; k < n; ++k) {
    const auto o = couple(upper[k], lower[k], 0.5);
    p.destructive.push_back(o[0]);
    p.constructive.push_back(o[1]);
  }
  return p;
}

inline std::vector<C> from_phase_units(const std::vector<int>& units, double amplitude = 1.0) {
  std::vector<C> out;
  for (int u : units) out.push_back(std::polar(amplitude, u * std::numbers::pi / 2.0));
  return out;
}

// Per-slot field of a COW symbol string: '0' -> (a, 0), '1' -> (0, a),
// 'd' -> (a, a).
inline std::vector<C> cow_field(const std::string& symbols, double amplitude = 1.0) {
  std::vector<C> out;
  for (char s : symbols) {
    out.push_back(s == '1' ? 0.0 : amplitude);
    out.push_back(s == '0' ? 0.0 : amplitude);
  }
  return out;
}

struct MonitorCounts {
  std::size_t m1 = 0;
  std::size_t m2 = 0;
};

// Monitor clicks of a COW receiver: the monitor line keeps 1 - t of the
// power; a detector clicks above half the single-interface constructive
// intensity (1 - t) * |a|^2.
inline MonitorCounts cow_monitor_clicks(const std::vector<C>& field, double t, double amplitude = 1.0) {
  MonitorCounts c;
  const double eps = 0.5 * (1.0 - t) * amplitude * amplitude;
  for (std::size_t k = 0; k <= field.size(); ++k) {
    const C cur = k < field.size() ? field[k] : 0.0;
    const C prev = k > 0 ? field[k - 1] : 0.0;
    const double plus = (1.0 - t) * std::norm(cur + prev) / 4.0;
    const double minus = (1.0 - t) * std::norm(cur - prev) / 4.0;
    c.m1 += plus > eps ? 1 : 0;
    c.m2 += minus > eps ? 1 : 0;
  }
  return c;
}

}  // namespace oracle
