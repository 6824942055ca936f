#pragma once

// Reference values for the first dimension of the Sobol sequence: it is the
// van der Corput sequence visited in Gray-code order.

#include <cstdint>

namespace assent::oracles {

inline double radical_inverse_base2(std::uint64_t n) {
  double x = 0.0, f = 0.5;
  while (n) {
    if (n & 1U) x += f;
    n >>= 1;
    f *= 0.5;
  }
  return x;
}

inline double sobol_first_dimension(std::uint64_t index) {
  return radical_inverse_base2(index ^ (index >> 1));
}

}  // namespace assent::oracles
