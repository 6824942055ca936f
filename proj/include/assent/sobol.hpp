#pragma once

// Unscrambled Sobol sequence with Joe-Kuo direction numbers, plus the box
// helpers used to map unit-cube samples into design ranges.
//
// Direction table text format (the Joe-Kuo layout): a header line, then one
// line per dimension d >= 2 holding "d s a m_1 ... m_s", where s is the degree
// of the primitive polynomial, a encodes its interior coefficients and m_i are
// the initial direction integers. Dimension 1 is implicit (all m_i = 1).

#include <array>
#include <cstdint>
#include <istream>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "assent/design_space.hpp"
#include "assent/sobol_directions.inc"

namespace assent {

class SobolDirections {
 public:
  static constexpr int kBits = 32;

  struct Entry {
    unsigned degree = 0;
    std::uint32_t coefficients = 0;
    std::vector<std::uint32_t> initial;
  };

  static SobolDirections parse(std::istream& is) {
    SobolDirections table;
    std::string line;
    std::getline(is, line);  // header
    while (std::getline(is, line)) {
      if (line.empty()) continue;
      std::istringstream ls(line);
      unsigned d = 0;
      Entry e;
      if (!(ls >> d >> e.degree >> e.coefficients))
        throw std::runtime_error("malformed Sobol direction line: " + line);
      e.initial.resize(e.degree);
      for (auto& m : e.initial)
        if (!(ls >> m)) throw std::runtime_error("malformed Sobol direction line: " + line);
      if (d != table.entries_.size() + 2)
        throw std::runtime_error("Sobol direction table out of order at dimension " +
                                 std::to_string(d));
      table.entries_.push_back(std::move(e));
    }
    return table;
  }

  static const SobolDirections& builtin() {
    static const SobolDirections table = [] {
      std::istringstream is(detail::kDefaultSobolTable);
      return parse(is);
    }();
    return table;
  }

  std::size_t max_dimension() const { return entries_.size() + 1; }

  /// Direction numbers V_1..V_kBits for zero-based dimension `dim`.
  std::array<std::uint32_t, kBits> directions(std::size_t dim) const {
    std::array<std::uint32_t, kBits> v{};
    if (dim == 0) {
      for (int k = 0; k < kBits; ++k) v[k] = 1u << (kBits - 1 - k);
      return v;
    }
    const Entry& e = entries_.at(dim - 1);
    const unsigned s = e.degree;
    for (unsigned k = 0; k < s && k < static_cast<unsigned>(kBits); ++k)
      v[k] = e.initial[k] << (kBits - 1 - k);
    for (unsigned k = s; k < static_cast<unsigned>(kBits); ++k) {
      std::uint32_t x = v[k - s] ^ (v[k - s] >> s);
      for (unsigned j = 1; j < s; ++j)
        if ((e.coefficients >> (s - 1 - j)) & 1u) x ^= v[k - j];
      v[k] = x;
    }
    return v;
  }

 private:
  std::vector<Entry> entries_;
};

/// Single-consumer cursor over the standard Sobol sequence. Index 0 is the
/// all-zeros point.
class SobolStream {
 public:
  explicit SobolStream(std::size_t dimension, std::uint64_t start_index = 0,
                       const SobolDirections& table = SobolDirections::builtin())
      : dimension_(dimension), next_index_(start_index) {
    if (dimension == 0) throw std::invalid_argument("Sobol dimension must be >= 1");
    if (dimension > table.max_dimension())
      throw std::invalid_argument("Sobol dimension " + std::to_string(dimension) +
                                  " exceeds direction table (" +
                                  std::to_string(table.max_dimension()) + ")");
    directions_.reserve(dimension);
    for (std::size_t d = 0; d < dimension; ++d) directions_.push_back(table.directions(d));
  }

  std::size_t dimension() const { return dimension_; }
  std::uint64_t next_index() const { return next_index_; }

  /// Point at an arbitrary index, without moving the cursor.
  std::vector<double> point_at(std::uint64_t index) const {
    if (index >> SobolDirections::kBits)
      throw std::out_of_range("Sobol index exceeds 2^32");
    const std::uint64_t gray = index ^ (index >> 1);
    std::vector<double> out(dimension_);
    for (std::size_t d = 0; d < dimension_; ++d) {
      std::uint32_t x = 0;
      for (int k = 0; k < SobolDirections::kBits; ++k)
        if ((gray >> k) & 1u) x ^= directions_[d][k];
      out[d] = static_cast<double>(x) * 0x1.0p-32;
    }
    return out;
  }

  std::vector<double> next() { return point_at(next_index_++); }

  std::vector<std::vector<double>> next_points(std::size_t n) {
    if (n == 0) throw std::invalid_argument("next_points: n must be >= 1");
    std::vector<std::vector<double>> pts;
    pts.reserve(n);
    for (std::size_t i = 0; i < n; ++i) pts.push_back(next());
    return pts;
  }

  void skip(std::uint64_t n) { next_index_ += n; }

 private:
  std::size_t dimension_;
  std::uint64_t next_index_;
  std::vector<std::array<std::uint32_t, SobolDirections::kBits>> directions_;
};

/// Coordinate-wise affine map lower + u * (upper - lower).
inline DesignPoint scale_to_box(const std::vector<double>& unit, const Box& box) {
  if (unit.size() != box.size()) throw std::invalid_argument("scale_to_box: dimension mismatch");
  DesignPoint p;
  p.values.resize(unit.size());
  for (std::size_t i = 0; i < unit.size(); ++i)
    p[i] = box[i].lower + unit[i] * (box[i].upper - box[i].lower);
  return p;
}

/// Multiplicative box nominal*(1 -/+ fraction) clipped to the global bounds.
/// A zero coordinate uses +/- fraction * (global width) / 2 instead.
inline Box box_around(const DesignPoint& nominal, double fraction, const Box& global) {
  if (!(fraction > 0.0)) throw std::invalid_argument("box_around: fraction must be > 0");
  if (nominal.size() != global.size())
    throw std::invalid_argument("box_around: dimension mismatch");
  Box out(nominal.size());
  for (std::size_t i = 0; i < nominal.size(); ++i) {
    const double x = nominal[i];
    double lo, hi;
    if (x == 0.0) {
      const double half = fraction * global[i].width() / 2.0;
      lo = -half;
      hi = half;
    } else {
      lo = x * (1.0 - fraction);
      hi = x * (1.0 + fraction);
      if (lo > hi) std::swap(lo, hi);
    }
    out[i] = {std::max(lo, global[i].lower), std::min(hi, global[i].upper)};
  }
  return out;
}

}  // namespace assent
