#pragma once

// Closed-form transfer functions for small reference circuits, and the
// netlists they describe (input node 1, output node 2).

#include <complex>
#include <numbers>

#include "assent/circuits/netlist.hpp"

namespace assent::oracles {

using circuits::ElementKind;
using circuits::Netlist;

inline double omega(double f) { return 2.0 * std::numbers::pi * f; }

/// Series R from input to output, shunt C at the output.
inline std::complex<double> rc_lowpass(double R, double C, double f) {
  return 1.0 / std::complex<double>(1.0, omega(f) * R * C);
}

/// Series L from input to output, shunt R at the output.
inline std::complex<double> rl_lowpass(double L, double R, double f) {
  return R / std::complex<double>(R, omega(f) * L);
}

/// Series R then series L into a shunt C at the output.
inline std::complex<double> rlc_lowpass(double R, double L, double C, double f) {
  const double w = omega(f);
  return 1.0 / std::complex<double>(1.0 - w * w * L * C, w * R * C);
}

inline double divider(double r_top, double r_bottom) { return r_bottom / (r_top + r_bottom); }

inline Netlist rc_netlist(double R, double C) {
  Netlist n;
  n.add(ElementKind::R, 1, 2, R);
  n.add(ElementKind::C, 2, 0, C);
  return n;
}

inline Netlist rl_netlist(double L, double R) {
  Netlist n;
  n.add(ElementKind::L, 1, 2, L);
  n.add(ElementKind::R, 2, 0, R);
  return n;
}

inline Netlist rlc_netlist(double R, double L, double C) {
  Netlist n;
  n.add(ElementKind::R, 1, 3, R);
  n.add(ElementKind::L, 3, 2, L);
  n.add(ElementKind::C, 2, 0, C);
  return n;
}

inline Netlist divider_netlist(double r_top, double r_bottom) {
  Netlist n;
  n.add(ElementKind::R, 1, 2, r_top);
  n.add(ElementKind::R, 2, 0, r_bottom);
  return n;
}

}  // namespace assent::oracles
