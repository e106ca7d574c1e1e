#pragma once

#include <functional>
#include <limits>
#include <string>
#include <vector>

namespace dnes {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Open interval (lower, upper); infinite endpoints allowed.
struct Interval {
  double lower = -kInf;
  double upper = kInf;

  bool contains(double v) const { return v > lower && v < upper; }
  bool empty() const { return !(lower < upper); }
};

// Finite union of disjoint open intervals kept sorted.
class IntervalSet {
 public:
  IntervalSet() = default;
  explicit IntervalSet(std::vector<Interval> parts);

  static IntervalSet real_line() { return IntervalSet({Interval{}}); }
  static IntervalSet single(double lower, double upper) { return IntervalSet({Interval{lower, upper}}); }
  // Parses "(a, b) U (c, d)", "empty" or "(-inf, inf)".
  static IntervalSet parse(const std::string& text);

  bool empty() const { return parts_.empty(); }
  bool contains(double v) const;
  const std::vector<Interval>& intervals() const { return parts_; }
  double infimum() const;
  double supremum() const;

  IntervalSet intersect(const IntervalSet& other) const;
  IntervalSet unite(const IntervalSet& other) const;

  // Image under a map that is continuous and monotone on every part.
  IntervalSet map_monotone(const std::function<double(double)>& fn) const;

  std::string to_string(int precision = 10) const;

  bool approx_equal(const IntervalSet& other, double tol) const;

 private:
  std::vector<Interval> parts_;
};

std::string format_number(double v, int precision = 17);

}  // namespace dnes
