// Mixed-type tuning-knob domain: bounds, validation, and the mapping
// between raw knob values and the normalized [-1, 1] representation the
// policy and the device models consume.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

#include "knobtune/rng.hpp"

namespace knobtune {

enum class KnobKind { kInteger, kContinuous };

// Integer ranges are capped so a categorical policy head over the range
// stays tractable.
constexpr long long kMaxIntegerRange = 256;

struct KnobSpec {
  std::string name;
  KnobKind kind = KnobKind::kInteger;
  double lower = 0.0;
  double upper = 1.0;

  long long range_size() const {
    return static_cast<long long>(upper - lower) + 1;
  }
};

struct TuningVector {
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
  double operator[](std::size_t i) const { return values[i]; }
  double& operator[](std::size_t i) { return values[i]; }
  bool operator==(const TuningVector&) const = default;
};

class SearchSpace {
 public:
  SearchSpace() = default;

  explicit SearchSpace(std::vector<KnobSpec> knobs) : knobs_(std::move(knobs)) {
    if (knobs_.empty()) throw std::invalid_argument("search space has no knobs");
    std::unordered_set<std::string> names;
    for (const auto& k : knobs_) {
      if (!names.insert(k.name).second)
        throw std::invalid_argument("duplicate knob name: " + k.name);
      if (!(k.lower < k.upper))
        throw std::invalid_argument("knob " + k.name + ": lower must be < upper");
      if (k.kind == KnobKind::kInteger) {
        if (k.lower != std::floor(k.lower) || k.upper != std::floor(k.upper))
          throw std::invalid_argument("knob " + k.name +
                                      ": integer bounds must be whole numbers");
        if (k.range_size() > kMaxIntegerRange)
          throw std::invalid_argument("knob " + k.name + ": integer range exceeds " +
                                      std::to_string(kMaxIntegerRange) + " values");
      }
    }
  }

  std::size_t dimension() const { return knobs_.size(); }
  const std::vector<KnobSpec>& knobs() const { return knobs_; }
  const KnobSpec& knob(std::size_t i) const { return knobs_[i]; }

 private:
  std::vector<KnobSpec> knobs_;
};

// Non-failing validation: collects human-readable violations instead of
// throwing, so callers can report every problem at once.
struct ValidationResult {
  std::vector<std::string> violations;
  bool ok() const { return violations.empty(); }
};

inline ValidationResult validate(const SearchSpace& space,
                                 const TuningVector& x) {
  ValidationResult result;
  if (x.size() != space.dimension()) {
    result.violations.push_back(
        "dimension mismatch: expected " + std::to_string(space.dimension()) +
        " values, got " + std::to_string(x.size()));
    return result;
  }
  for (std::size_t i = 0; i < x.size(); ++i) {
    const KnobSpec& k = space.knob(i);
    const double v = x[i];
    if (!std::isfinite(v)) {
      result.violations.push_back(k.name + ": non-finite value");
      continue;
    }
    if (v < k.lower || v > k.upper) {
      result.violations.push_back(k.name + ": value " + std::to_string(v) +
                                  " out of bounds [" + std::to_string(k.lower) +
                                  ", " + std::to_string(k.upper) + "]");
    }
    if (k.kind == KnobKind::kInteger && v != std::floor(v)) {
      result.violations.push_back(k.name + ": non-integral value " +
                                  std::to_string(v) + " on integer knob");
    }
  }
  return result;
}

inline void require_valid(const SearchSpace& space, const TuningVector& x) {
  const ValidationResult r = validate(space, x);
  if (!r.ok()) throw std::invalid_argument("invalid tuning vector: " + r.violations.front());
}

// Per dimension: y = 2 (x - lower) / (upper - lower) - 1.
inline std::vector<double> normalize(const SearchSpace& space,
                                     const TuningVector& x) {
  require_valid(space, x);
  std::vector<double> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const KnobSpec& k = space.knob(i);
    y[i] = 2.0 * (x[i] - k.lower) / (k.upper - k.lower) - 1.0;
  }
  return y;
}

// Inverse of normalize. Components outside [-1, 1] are clamped first;
// integer knobs round half-away-from-zero, then clamp to bounds.
inline TuningVector denormalize(const SearchSpace& space,
                                const std::vector<double>& y) {
  if (y.size() != space.dimension())
    throw std::invalid_argument("denormalize: dimension mismatch");
  TuningVector x;
  x.values.resize(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    const KnobSpec& k = space.knob(i);
    const double yc = std::clamp(y[i], -1.0, 1.0);
    double raw = k.lower + 0.5 * (yc + 1.0) * (k.upper - k.lower);
    if (k.kind == KnobKind::kInteger) {
      raw = std::round(raw);  // half away from zero
      raw = std::clamp(raw, k.lower, k.upper);
    }
    x.values[i] = raw;
  }
  return x;
}

inline TuningVector sample_uniform(const SearchSpace& space, Rng& rng) {
  TuningVector x;
  x.values.resize(space.dimension());
  for (std::size_t i = 0; i < space.dimension(); ++i) {
    const KnobSpec& k = space.knob(i);
    if (k.kind == KnobKind::kInteger) {
      x.values[i] = static_cast<double>(rng.uniform_int(
          static_cast<long long>(k.lower), static_cast<long long>(k.upper)));
    } else {
      x.values[i] = rng.uniform(k.lower, k.upper);
    }
  }
  return x;
}

}  // namespace knobtune
