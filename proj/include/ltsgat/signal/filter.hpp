#pragma once

// Butterworth IIR design (analog prototype -> frequency transform -> bilinear
// transform) realized as second-order sections, and zero-phase
// forward-backward filtering with odd-extension padding and steady-state
// initial conditions.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace ltsgat::signal {

struct Biquad {
  double b0, b1, b2;
  double a1, a2;  // a0 == 1
};

using Sos = std::vector<Biquad>;

namespace detail {

using cplx = std::complex<double>;

inline std::vector<cplx> butter_prototype_poles(int order) {
  std::vector<cplx> poles;
  for (int k = 0; k < order; ++k) {
    const double theta = std::numbers::pi * (2.0 * k + order + 1) / (2.0 * order);
    poles.push_back(std::polar(1.0, theta));
  }
  return poles;
}

inline double prewarp(double hz, double fs) { return 2.0 * fs * std::tan(std::numbers::pi * hz / fs); }

inline cplx bilinear(cplx s, double fs) { return (2.0 * fs + s) / (2.0 * fs - s); }

// Pairs conjugate poles into sections; zeros are paired first-with-middle so a
// bandpass gets one z=+1 and one z=-1 zero per section.
inline Sos to_sections(const std::vector<cplx>& poles, std::vector<double> zeros) {
  std::vector<cplx> upper;
  for (const cplx& p : poles)
    if (p.imag() > 0.0) upper.push_back(p);
  if (upper.size() * 2 != poles.size()) {
    throw std::invalid_argument("butterworth: only even-order designs with complex poles supported");
  }
  std::sort(zeros.begin(), zeros.end());
  const std::size_t half = zeros.size() / 2;
  Sos sos;
  for (std::size_t s = 0; s < upper.size(); ++s) {
    const double z1 = zeros[s], z2 = zeros[s + half];
    Biquad q{1.0, -(z1 + z2), z1 * z2, -2.0 * upper[s].real(), std::norm(upper[s])};
    sos.push_back(q);
  }
  return sos;
}

inline cplx response(const Sos& sos, double hz, double fs) {
  const cplx z1 = std::polar(1.0, -2.0 * std::numbers::pi * hz / fs);
  const cplx z2 = z1 * z1;
  cplx h = 1.0;
  for (const Biquad& q : sos) h *= (q.b0 + q.b1 * z1 + q.b2 * z2) / (1.0 + q.a1 * z1 + q.a2 * z2);
  return h;
}

inline void normalize(Sos& sos, double ref_hz, double fs) {
  const double gain = std::abs(response(sos, ref_hz, fs));
  sos.front().b0 /= gain;
  sos.front().b1 /= gain;
  sos.front().b2 /= gain;
}

}  // namespace detail

// Magnitude of the single-pass frequency response.
inline double magnitude(const Sos& sos, double hz, double fs) {
  return std::abs(detail::response(sos, hz, fs));
}

// Lowpass of even order, unity gain at DC.
inline Sos butter_lowpass(int order, double cutoff_hz, double fs) {
  if (!(cutoff_hz > 0.0 && cutoff_hz < fs / 2.0)) {
    throw std::invalid_argument("butter_lowpass: cutoff " + std::to_string(cutoff_hz) +
                                " Hz outside (0, " + std::to_string(fs / 2.0) + ")");
  }
  const double wc = detail::prewarp(cutoff_hz, fs);
  std::vector<detail::cplx> poles;
  for (auto p : detail::butter_prototype_poles(order)) poles.push_back(detail::bilinear(p * wc, fs));
  Sos sos = detail::to_sections(poles, std::vector<double>(order, -1.0));
  detail::normalize(sos, 0.0, fs);
  return sos;
}

// Bandpass from an order-N lowpass prototype (2N poles), unity gain at the
// geometric centre of the prewarped edges.
inline Sos butter_bandpass(int order, double low_hz, double high_hz, double fs) {
  if (!(low_hz > 0.0 && low_hz < high_hz && high_hz < fs / 2.0)) {
    throw std::invalid_argument("butter_bandpass: band [" + std::to_string(low_hz) + ", " +
                                std::to_string(high_hz) + "] Hz invalid for Nyquist " +
                                std::to_string(fs / 2.0));
  }
  const double wl = detail::prewarp(low_hz, fs), wh = detail::prewarp(high_hz, fs);
  const double bw = wh - wl, w0 = std::sqrt(wl * wh);
  std::vector<detail::cplx> poles;
  for (auto p : detail::butter_prototype_poles(order)) {
    const detail::cplx pl = p * bw / 2.0;
    const detail::cplx root = std::sqrt(pl * pl - w0 * w0);
    poles.push_back(detail::bilinear(pl + root, fs));
    poles.push_back(detail::bilinear(pl - root, fs));
  }
  std::vector<double> zeros(order, 1.0);
  zeros.insert(zeros.end(), order, -1.0);
  Sos sos = detail::to_sections(poles, zeros);
  const double center_hz = fs / std::numbers::pi * std::atan(w0 / (2.0 * fs));
  detail::normalize(sos, center_hz, fs);
  return sos;
}

// Transposed direct form II cascade with per-section state.
inline void sosfilt(const Sos& sos, std::span<double> x, std::vector<std::array<double, 2>>& state) {
  for (std::size_t s = 0; s < sos.size(); ++s) {
    const Biquad& q = sos[s];
    double z0 = state[s][0], z1 = state[s][1];
    for (double& v : x) {
      const double in = v;
      const double out = q.b0 * in + z0;
      z0 = q.b1 * in - q.a1 * out + z1;
      z1 = q.b2 * in - q.a2 * out;
      v = out;
    }
    state[s] = {z0, z1};
  }
}

// Steady-state section states for a unit step at the cascade input.
inline std::vector<std::array<double, 2>> sosfilt_zi(const Sos& sos) {
  std::vector<std::array<double, 2>> zi(sos.size());
  double level = 1.0;
  for (std::size_t s = 0; s < sos.size(); ++s) {
    const Biquad& q = sos[s];
    const double g = (q.b0 + q.b1 + q.b2) / (1.0 + q.a1 + q.a2);
    const double z1 = q.b2 - q.a2 * g;
    const double z0 = q.b1 - q.a1 * g + z1;
    zi[s] = {z0 * level, z1 * level};
    level *= g;
  }
  return zi;
}

// Zero-phase filtering: odd extension of 3 * (2 * sections + 1) samples on each
// side, forward pass, reverse, forward pass, reverse, trim.
inline std::vector<double> sosfiltfilt(const Sos& sos, std::span<const double> x) {
  if (x.size() < 2) return std::vector<double>(x.begin(), x.end());
  std::size_t pad = 3 * (2 * sos.size() + 1);
  pad = std::min(pad, x.size() - 1);
  std::vector<double> ext;
  ext.reserve(x.size() + 2 * pad);
  for (std::size_t i = pad; i >= 1; --i) ext.push_back(2.0 * x.front() - x[i]);
  ext.insert(ext.end(), x.begin(), x.end());
  const std::size_t last = x.size() - 1;
  for (std::size_t i = 1; i <= pad; ++i) ext.push_back(2.0 * x.back() - x[last - i]);

  const auto zi = sosfilt_zi(sos);
  auto scaled = [&](double v) {
    auto st = zi;
    for (auto& s : st) s = {s[0] * v, s[1] * v};
    return st;
  };
  auto state = scaled(ext.front());
  sosfilt(sos, ext, state);
  std::reverse(ext.begin(), ext.end());
  state = scaled(ext.front());
  sosfilt(sos, ext, state);
  std::reverse(ext.begin(), ext.end());
  return std::vector<double>(ext.begin() + static_cast<std::ptrdiff_t>(pad),
                             ext.end() - static_cast<std::ptrdiff_t>(pad));
}

}  // namespace ltsgat::signal
