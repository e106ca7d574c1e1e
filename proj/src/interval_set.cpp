#include "dnes/interval_set.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "dnes/types.hpp"

namespace dnes {

IntervalSet::IntervalSet(std::vector<Interval> parts) {
  for (const auto& p : parts) {
    if (std::isnan(p.lower) || std::isnan(p.upper)) throw PreconditionError("interval endpoint is NaN");
    if (!p.empty()) parts_.push_back(p);
  }
  std::sort(parts_.begin(), parts_.end(), [](const Interval& a, const Interval& b) { return a.lower < b.lower; });
  // merge overlaps; touching open intervals keep the shared endpoint excluded
  std::vector<Interval> merged;
  for (const auto& p : parts_) {
    if (!merged.empty() && p.lower < merged.back().upper) {
      merged.back().upper = std::max(merged.back().upper, p.upper);
    } else {
      merged.push_back(p);
    }
  }
  parts_ = std::move(merged);
}

bool IntervalSet::contains(double v) const {
  return std::any_of(parts_.begin(), parts_.end(), [v](const Interval& p) { return p.contains(v); });
}

double IntervalSet::infimum() const {
  if (parts_.empty()) throw PreconditionError("infimum of an empty set");
  return parts_.front().lower;
}

double IntervalSet::supremum() const {
  if (parts_.empty()) throw PreconditionError("supremum of an empty set");
  return parts_.back().upper;
}

IntervalSet IntervalSet::intersect(const IntervalSet& other) const {
  std::vector<Interval> out;
  for (const auto& a : parts_)
    for (const auto& b : other.parts_) out.push_back({std::max(a.lower, b.lower), std::min(a.upper, b.upper)});
  return IntervalSet(out);
}

IntervalSet IntervalSet::unite(const IntervalSet& other) const {
  std::vector<Interval> out = parts_;
  out.insert(out.end(), other.parts_.begin(), other.parts_.end());
  return IntervalSet(out);
}

IntervalSet IntervalSet::map_monotone(const std::function<double(double)>& fn) const {
  std::vector<Interval> out;
  for (const auto& p : parts_) {
    const double a = fn(p.lower);
    const double b = fn(p.upper);
    out.push_back({std::min(a, b), std::max(a, b)});
  }
  return IntervalSet(out);
}

std::string format_number(double v, int precision) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", precision, v);
  return buf;
}

std::string IntervalSet::to_string(int precision) const {
  if (parts_.empty()) return "empty";
  std::ostringstream os;
  for (std::size_t i = 0; i < parts_.size(); ++i) {
    if (i) os << " U ";
    os << '(' << format_number(parts_[i].lower, precision) << ", " << format_number(parts_[i].upper, precision) << ')';
  }
  return os.str();
}

namespace {

double parse_endpoint(const std::string& raw) {
  std::string s;
  for (char c : raw)
    if (!std::isspace(static_cast<unsigned char>(c))) s += c;
  if (s == "inf" || s == "+inf") return kInf;
  if (s == "-inf") return -kInf;
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw ParseError("bad interval endpoint '" + raw + "'");
  }
  if (used != s.size()) throw ParseError("bad interval endpoint '" + raw + "'");
  return v;
}

}  // namespace

IntervalSet IntervalSet::parse(const std::string& text) {
  std::string t;
  for (char c : text)
    if (!std::isspace(static_cast<unsigned char>(c))) t += c;
  if (t == "empty") return IntervalSet();
  std::vector<Interval> parts;
  std::size_t pos = 0;
  while (pos < t.size()) {
    if (t[pos] != '(') throw ParseError("interval must start with '(' in '" + text + "'");
    const auto close = t.find(')', pos);
    const auto comma = t.find(',', pos);
    if (close == std::string::npos || comma == std::string::npos || comma > close)
      throw ParseError("malformed interval '" + text + "'");
    parts.push_back({parse_endpoint(t.substr(pos + 1, comma - pos - 1)), parse_endpoint(t.substr(comma + 1, close - comma - 1))});
    pos = close + 1;
    if (pos < t.size()) {
      if (t[pos] != 'U') throw ParseError("expected 'U' between intervals in '" + text + "'");
      ++pos;
    }
  }
  return IntervalSet(parts);
}

bool IntervalSet::approx_equal(const IntervalSet& other, double tol) const {
  if (parts_.size() != other.parts_.size()) return false;
  auto close = [tol](double a, double b) {
    if (std::isinf(a) || std::isinf(b)) return a == b;
    return std::abs(a - b) <= tol;
  };
  for (std::size_t i = 0; i < parts_.size(); ++i)
    if (!close(parts_[i].lower, other.parts_[i].lower) || !close(parts_[i].upper, other.parts_[i].upper)) return false;
  return true;
}

}  // namespace dnes
