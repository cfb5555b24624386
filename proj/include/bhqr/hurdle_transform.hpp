#ifndef BHQR_HURDLE_TRANSFORM_HPP_
#define BHQR_HURDLE_TRANSFORM_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "bhqr/distributions.hpp"
#include "bhqr/error.hpp"
#include "bhqr/random.hpp"

namespace bhqr {

inline constexpr double kDefaultMassPointThreshold = 0.06;

// Hurdle point c. Observations with value <= c belong to the point-mass part.
// An empty c means no hurdle: every observation goes to the quantile part.
struct HurdleSpec {
  std::optional<int> c;
  double threshold = kDefaultMassPointThreshold;

  static HurdleSpec none(double threshold = kDefaultMassPointThreshold) {
    check_threshold(threshold);
    return HurdleSpec{std::nullopt, threshold};
  }
  static HurdleSpec at(int c, double threshold = kDefaultMassPointThreshold) {
    if (c < 0) throw Error("hurdle point must be nonnegative");
    check_threshold(threshold);
    return HurdleSpec{c, threshold};
  }
  static void check_threshold(double threshold) {
    if (!(threshold > 0.0 && threshold < 1.0)) throw Error("mass-point threshold must lie in (0, 1)");
  }

  bool has_hurdle() const { return c.has_value(); }

  // Shift used by the jitter: c for a hurdle, -1 without one so that
  // y* = ln(y + 1 - u) stays finite for y = 0.
  int offset() const { return c.value_or(-1); }

  std::string label() const { return c ? "hurdle" + std::to_string(*c) : "no_hurdle"; }
};

// Relative frequency of every integer value observed.
struct FrequencyTable {
  std::map<std::int64_t, std::size_t> counts;
  std::size_t total = 0;

  double proportion(std::int64_t k) const {
    const auto it = counts.find(k);
    return it == counts.end() || total == 0 ? 0.0
                                            : static_cast<double>(it->second) / static_cast<double>(total);
  }
};

inline bool is_integral(double y) { return std::isfinite(y) && std::floor(y) == y; }

inline FrequencyTable frequency_table(std::span<const double> values) {
  FrequencyTable table;
  table.total = values.size();
  for (double y : values) {
    if (is_integral(y)) ++table.counts[static_cast<std::int64_t>(y)];
  }
  return table;
}

struct HurdleDetection {
  HurdleSpec spec;
  FrequencyTable table;
};

// Largest m such that each of 0..m has relative frequency >= threshold.
// When 0 itself is below the threshold there is no hurdle.
inline HurdleDetection detect_hurdle(std::span<const double> values,
                                     double threshold = kDefaultMassPointThreshold) {
  if (values.empty()) throw Error("detect_hurdle: empty input");
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw Error("detect_hurdle: threshold must lie in (0, 1)");
  }
  for (double y : values) {
    if (!(y >= 0.0) || !std::isfinite(y)) throw Error("detect_hurdle: values must be nonnegative");
  }
  HurdleDetection out{HurdleSpec::none(threshold), frequency_table(values)};
  int m = -1;
  while (out.table.proportion(m + 1) >= threshold) ++m;
  if (m >= 0) out.spec = HurdleSpec::at(m, threshold);
  return out;
}

struct JitteredValue {
  double y_star;
  double source;
  std::optional<double> u;
};

// Count-scale inverse of the transform: ceil(exp(y*) + c), floored at zero.
inline std::int64_t inverse_transform(double y_star, const HurdleSpec& spec) {
  if (!std::isfinite(y_star)) throw Error("inverse_transform: y* must be finite");
  const double y = std::ceil(std::exp(y_star) + spec.offset());
  if (!(y < 9007199254740992.0)) throw Error("inverse_transform: prediction exceeds the count range");
  return std::max<std::int64_t>(0, static_cast<std::int64_t>(y));
}

// y* = 0 for y <= c and ln(y - c - u) with u ~ Uniform(0, 1) otherwise.
// Without a hurdle every value is jittered with c = -1.
//
// For integer inputs the draw of u is repeated in the (probability ~1e-16)
// event that rounding would break ceil(exp(y*) + c) == y.
template <class URBG>
std::vector<JitteredValue> jitter_transform(std::span<const double> values, const HurdleSpec& spec,
                                            URBG& rng) {
  std::vector<JitteredValue> out;
  out.reserve(values.size());
  const double c = spec.offset();
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double y = values[i];
    if (!(y >= 0.0) || !std::isfinite(y)) {
      std::ostringstream msg;
      msg << "jitter_transform: observation " << i << " is negative or non-finite (" << y << ")";
      throw Error(msg.str());
    }
    if (spec.has_hurdle() && y <= c) {
      out.push_back({0.0, y, std::nullopt});
      continue;
    }
    if (y - c < 1.0) {
      std::ostringstream msg;
      msg << "jitter_transform: observation " << i << " (" << y << ") lies strictly between c = " << c
          << " and c + 1";
      throw Error(msg.str());
    }
    const bool integral = is_integral(y);
    while (true) {
      const double u = uniform_open01(rng);
      const double y_star = std::log(y - c - u);
      if (integral && std::ceil(std::exp(y_star) + c) != y) continue;
      out.push_back({y_star, y, u});
      break;
    }
  }
  return out;
}

enum class PlateauRule { kAtOrBelow, kStrictlyBelow };

// inf { y in data : F_n(y) >= tau } with F_n the empirical cdf.
inline double empirical_quantile(std::span<const double> data, QuantileLevel tau) {
  if (data.empty()) throw Error("empirical_quantile: empty data");
  std::vector<double> sorted(data.begin(), data.end());
  const std::size_t n = sorted.size();
  const double nd = static_cast<double>(n);
  const double t = tau.value();
  // smallest rank k with k / n >= tau, compared exactly as doubles
  std::size_t k = static_cast<std::size_t>(std::clamp(std::ceil(nd * t), 1.0, nd));
  while (k > 1 && static_cast<double>(k - 1) / nd >= t) --k;
  while (k < n && static_cast<double>(k) / nd < t) ++k;
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(k - 1), sorted.end());
  return sorted[k - 1];
}

inline double empirical_cdf(std::span<const double> data, double q,
                            PlateauRule rule = PlateauRule::kAtOrBelow) {
  const auto below = std::count_if(data.begin(), data.end(), [&](double y) {
    return rule == PlateauRule::kAtOrBelow ? y <= q : y < q;
  });
  return static_cast<double>(below) / static_cast<double>(data.size());
}

// Level on the truncated data that corresponds to the same count-scale
// value as tau does on the full data.
inline QuantileLevel remap_quantile(std::span<const double> full, std::span<const double> truncated,
                                    QuantileLevel tau, PlateauRule rule = PlateauRule::kAtOrBelow) {
  if (full.empty() || truncated.empty()) throw Error("remap_quantile: empty data");
  const double q = empirical_quantile(full, tau);
  const double level = empirical_cdf(truncated, q, rule);
  if (level <= 0.0) {
    const double smallest = *std::min_element(truncated.begin(), truncated.end());
    std::ostringstream msg;
    msg << "quantile falls inside the hurdle region: the " << tau.value() << " quantile of the full data is "
        << q << "; fit-able levels must exceed " << empirical_cdf(full, smallest, PlateauRule::kStrictlyBelow);
    throw Error(msg.str());
  }
  if (level >= 1.0) {
    std::ostringstream msg;
    msg << "quantile falls at or beyond the largest truncated value (" << q << ")";
    throw Error(msg.str());
  }
  return QuantileLevel(level);
}

}  // namespace bhqr

#endif  // BHQR_HURDLE_TRANSFORM_HPP_
