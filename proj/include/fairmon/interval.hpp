#pragma once

#include <algorithm>
#include <limits>
#include <optional>

namespace fairmon {

/// Closed real interval [lo, hi]. Infinite endpoints mark an unbounded result
/// (division by an interval that straddles zero).
struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  static Interval point(double v) { return {v, v}; }
  static Interval unbounded() {
    return {-std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
  }

  bool is_bounded() const { return lo > -std::numeric_limits<double>::infinity() &&
                                   hi < std::numeric_limits<double>::infinity(); }
  bool contains(double v) const { return lo <= v && v <= hi; }
  double width() const { return hi - lo; }
  double radius() const { return 0.5 * (hi - lo); }

  bool operator==(const Interval&) const = default;
};

inline Interval operator+(Interval a, Interval b) { return {a.lo + b.lo, a.hi + b.hi}; }
inline Interval operator-(Interval a, Interval b) { return {a.lo - b.hi, a.hi - b.lo}; }

inline Interval operator*(Interval a, Interval b) {
  const double p1 = a.lo * b.lo, p2 = a.lo * b.hi, p3 = a.hi * b.lo, p4 = a.hi * b.hi;
  return {std::min({p1, p2, p3, p4}), std::max({p1, p2, p3, p4})};
}

/// 1 / [lo, hi]; empty when the interval contains zero.
inline std::optional<Interval> reciprocal(Interval a) {
  if (a.lo <= 0.0 && a.hi >= 0.0) return std::nullopt;
  return Interval{1.0 / a.hi, 1.0 / a.lo};
}

inline std::optional<Interval> divide(Interval num, Interval den) {
  auto r = reciprocal(den);
  if (!r) return std::nullopt;
  return num * *r;
}

}  // namespace fairmon
