#pragma once

// Frequency-response metrics and the first-order low-pass objective suite.

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "assent/circuits/mna.hpp"

namespace assent::circuits {

/// 20·log10(1/√2): the half-power level relative to DC.
inline const double kHalfPowerDb = -10.0 * std::log10(2.0);

inline double to_db(Complex h) { return 20.0 * std::log10(std::abs(h)); }
inline double rad_to_deg(double r) { return r * 180.0 / std::numbers::pi; }

struct FilterMetrics {
  double dc_gain_db = 0.0;
  double bandwidth_hz = 0.0;
  bool bandwidth_crossed = false;  // false: bandwidth is the grid maximum
  double phase_at_bw_deg = 0.0;
  std::vector<double> probe_gains_db;
  std::size_t active_count = 0;
};

inline std::vector<double> gains_db(const FrequencyResponse& r) {
  std::vector<double> g;
  g.reserve(r.size());
  for (const auto& h : r.transfer) g.push_back(to_db(h));
  return g;
}

/// Phase in degrees, unwrapped from the first sample.
inline std::vector<double> unwrapped_phase_deg(const FrequencyResponse& r) {
  std::vector<double> p;
  p.reserve(r.size());
  double offset = 0.0, prev = 0.0;
  for (std::size_t k = 0; k < r.size(); ++k) {
    const double raw = rad_to_deg(std::arg(r.transfer[k]));
    if (k) {
      double d = raw + offset - prev;
      while (d > 180.0) {
        offset -= 360.0;
        d -= 360.0;
      }
      while (d < -180.0) {
        offset += 360.0;
        d += 360.0;
      }
    }
    prev = raw + offset;
    p.push_back(prev);
  }
  return p;
}

/// Linear interpolation of `y` against log10 of the grid.
inline double interp_log(const std::vector<double>& f, const std::vector<double>& y, double at) {
  if (f.empty() || at < f.front() || at > f.back())
    throw std::invalid_argument("interp_log: frequency outside the grid");
  std::size_t k = 1;
  while (k < f.size() - 1 && f[k] < at) ++k;
  if (f.size() == 1) return y[0];
  const double t = (std::log10(at) - std::log10(f[k - 1])) / (std::log10(f[k]) - std::log10(f[k - 1]));
  return y[k - 1] + t * (y[k] - y[k - 1]);
}

inline FilterMetrics measure(const FrequencyResponse& r, const std::vector<double>& probes,
                             std::size_t active_count = 0) {
  if (r.size() < 2) throw std::invalid_argument("measure: need at least two frequencies");
  const auto g = gains_db(r);
  const auto ph = unwrapped_phase_deg(r);
  FilterMetrics m;
  m.active_count = active_count;
  m.dc_gain_db = g.front();
  const double level = m.dc_gain_db + kHalfPowerDb;
  m.bandwidth_hz = r.frequencies.back();
  m.phase_at_bw_deg = ph.back();
  for (std::size_t k = 1; k < r.size(); ++k) {
    if (!(g[k] < level)) continue;
    const double l0 = std::log10(r.frequencies[k - 1]), l1 = std::log10(r.frequencies[k]);
    const double t = (level - g[k - 1]) / (g[k] - g[k - 1]);
    m.bandwidth_hz = std::pow(10.0, l0 + t * (l1 - l0));
    m.phase_at_bw_deg = ph[k - 1] + t * (ph[k] - ph[k - 1]);
    m.bandwidth_crossed = true;
    break;
  }
  for (double p : probes) m.probe_gains_db.push_back(interp_log(r.frequencies, g, p));
  return m;
}

/// Analytic first-order low-pass: H = 1 / (1 + j f/fc).
struct FirstOrderTemplate {
  double cutoff_hz = 1000.0;
  double passband_weight = 40.0;
  double stopband_weight = 1.0;

  double magnitude_db(double f) const { return -10.0 * std::log10(1.0 + (f / cutoff_hz) * (f / cutoff_hz)); }
  double phase_deg(double f) const { return -rad_to_deg(std::atan(f / cutoff_hz)); }
  double weight(double f) const { return f <= cutoff_hz ? passband_weight : stopband_weight; }

  FrequencyResponse response(const std::vector<double>& f) const {
    FrequencyResponse r;
    r.frequencies = f;
    for (double x : f) r.transfer.push_back(1.0 / Complex(1.0, x / cutoff_hz));
    return r;
  }
};

/// (weighted |dB| deviation, weighted |degree| deviation, active count),
/// all minimized.
inline std::array<double, 3> filter_objectives(const FrequencyResponse& r, std::size_t active_count,
                                               const FirstOrderTemplate& t = {}) {
  const auto g = gains_db(r);
  const auto ph = unwrapped_phase_deg(r);
  double mag = 0.0, phase = 0.0;
  for (std::size_t k = 0; k < r.size(); ++k) {
    const double f = r.frequencies[k];
    mag += t.weight(f) * std::abs(t.magnitude_db(f) - g[k]);
    phase += t.weight(f) * std::abs(t.phase_deg(f) - ph[k]);
  }
  return {mag, phase, double(active_count)};
}

}  // namespace assent::circuits
