// Small numeric helpers shared by the test binaries. Deliberately written
// without the library so they can serve as independent oracles.
#ifndef BHQR_TESTS_SUPPORT_HPP_
#define BHQR_TESTS_SUPPORT_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <vector>

namespace oracle {

inline double mean(const std::vector<double>& x) {
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

inline double variance(const std::vector<double>& x) {
  const double m = mean(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return s / static_cast<double>(x.size() - 1);
}

// Composite trapezoid rule on [lo, hi] with `steps` panels.
inline double trapezoid(const std::function<double(double)>& f, double lo, double hi, long steps) {
  const double h = (hi - lo) / static_cast<double>(steps);
  double s = 0.5 * (f(lo) + f(hi));
  for (long i = 1; i < steps; ++i) s += f(lo + h * static_cast<double>(i));
  return s * h;
}

// Two-sample Kolmogorov-Smirnov statistic.
inline double ks_statistic(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / a.size() - static_cast<double>(j) / b.size()));
  }
  return d;
}

// Asymptotic 1% critical value of the two-sample KS statistic.
inline double ks_critical_1pct(std::size_t n, std::size_t m) {
  const double nn = static_cast<double>(n), mm = static_cast<double>(m);
  return 1.628 * std::sqrt((nn + mm) / (nn * mm));
}

// Sorted-copy order statistic at 1-based rank k.
inline double order_statistic(std::vector<double> x, std::size_t k) {
  std::sort(x.begin(), x.end());
  return x[k - 1];
}

// inf{ y : F_n(y) >= tau } by a brute-force scan of the sorted data.
inline double quantile_scan(std::vector<double> x, double tau) {
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    std::size_t at_or_below = i + 1;
    while (at_or_below < x.size() && x[at_or_below] == x[i]) ++at_or_below;
    if (static_cast<double>(at_or_below) / n >= tau) return x[i];
  }
  return x.back();
}

}  // namespace oracle

#endif  // BHQR_TESTS_SUPPORT_HPP_
