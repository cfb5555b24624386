#ifndef BHQR_DIAGNOSTICS_HPP_
#define BHQR_DIAGNOSTICS_HPP_

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "bhqr/distributions.hpp"
#include "bhqr/error.hpp"
#include "bhqr/hurdle_transform.hpp"
#include "bhqr/mcmc.hpp"

namespace bhqr {

namespace detail {

inline double mean_of(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

inline double sample_variance(std::span<const double> x, double mean) {
  double s = 0.0;
  for (double v : x) s += (v - mean) * (v - mean);
  return s / static_cast<double>(x.size() - 1);
}

// Lag-k autocovariance numerator sum_t (x_t - m)(x_{t+k} - m).
inline double lagged_sum(std::span<const double> x, double m, std::size_t k) {
  double s = 0.0;
  for (std::size_t t = 0; t + k < x.size(); ++t) s += (x[t] - m) * (x[t + k] - m);
  return s;
}

}  // namespace detail

// Classic Gelman-Rubin potential scale reduction factor:
// sqrt(((n - 1) / n W + B / n) / W).
inline double psrf(const std::vector<std::vector<double>>& chains) {
  if (chains.size() < 2) throw Error("psrf needs at least two chains");
  const std::size_t n = chains.front().size();
  if (n < 2) throw Error("psrf needs chains of length at least two");
  for (const auto& c : chains) {
    if (c.size() != n) throw Error("psrf needs chains of equal length");
  }
  const double m = static_cast<double>(chains.size());
  const double nd = static_cast<double>(n);
  std::vector<double> means;
  double w = 0.0;
  for (const auto& c : chains) {
    means.push_back(detail::mean_of(c));
    w += detail::sample_variance(c, means.back());
  }
  w /= m;
  if (!(w > 0.0)) throw Error("degenerate chain: zero within-chain variance");
  const double grand = detail::mean_of(means);
  double b = 0.0;
  for (double mu : means) b += (mu - grand) * (mu - grand);
  b *= nd / (m - 1.0);
  const double pooled = (nd - 1.0) / nd * w + b / nd;
  return std::sqrt(pooled / w);
}

// Sample autocorrelations at lags 0..max_lag.
inline std::vector<double> autocorrelation(std::span<const double> chain, std::size_t max_lag) {
  if (chain.size() <= max_lag) throw Error("autocorrelation: chain must be longer than max_lag");
  const double m = detail::mean_of(chain);
  const double c0 = detail::lagged_sum(chain, m, 0);
  if (!(c0 > 0.0)) throw Error("autocorrelation: constant chain");
  std::vector<double> rho(max_lag + 1);
  rho[0] = 1.0;
  for (std::size_t k = 1; k <= max_lag; ++k) rho[k] = detail::lagged_sum(chain, m, k) / c0;
  return rho;
}

// n / (1 + 2 sum_k rho_k), with the sum truncated at the first pair
// rho_{2m} + rho_{2m+1} that is not positive. Capped at n.
inline double effective_sample_size(std::span<const double> chain) {
  const std::size_t n = chain.size();
  if (n < 2) throw Error("effective_sample_size: chain too short");
  const double m = detail::mean_of(chain);
  const double c0 = detail::lagged_sum(chain, m, 0);
  if (!(c0 > 0.0)) throw Error("effective_sample_size: constant chain");
  auto rho = [&](std::size_t k) { return k == 0 ? 1.0 : detail::lagged_sum(chain, m, k) / c0; };
  double pair_sum = 0.0;
  for (std::size_t lag = 0; lag + 1 < n; lag += 2) {
    const double pair = rho(lag) + rho(lag + 1);
    if (!(pair > 0.0)) break;
    pair_sum += pair;
  }
  const double tau = -1.0 + 2.0 * pair_sum;
  const double nd = static_cast<double>(n);
  if (!(tau > 1.0)) return nd;
  return nd / tau;
}

// ESS summed over chains.
inline double effective_sample_size(const std::vector<std::vector<double>>& chains) {
  double total = 0.0;
  for (const auto& c : chains) total += effective_sample_size(std::span<const double>(c));
  return total;
}

struct CredibleInterval {
  double lower;
  double upper;
};

// Percentile interval; bounds are draw values.
inline CredibleInterval credible_interval(std::span<const double> draws, double level = 0.95) {
  if (draws.empty()) throw Error("credible_interval: no draws");
  if (!(level > 0.0 && level < 1.0)) throw Error("credible_interval: level must lie in (0, 1)");
  return {empirical_quantile(draws, QuantileLevel((1.0 - level) / 2.0)),
          empirical_quantile(draws, QuantileLevel((1.0 + level) / 2.0))};
}

struct ParameterSummary {
  std::string name;
  double mean;
  double sd;
  double lower;
  double upper;
  std::optional<double> psrf;
  std::optional<double> ess;
};

using FitSummary = std::vector<ParameterSummary>;

// Posterior mean, sd, percentile interval, PSRF and ESS for every parameter.
// PSRF is absent for single-chain runs; both are absent for constant draws.
inline FitSummary summarize(const PosteriorDraws& draws, double level = 0.95) {
  FitSummary out;
  for (std::size_t j = 0; j < draws.parameter_count(); ++j) {
    const auto chains = draws.parameter(j);
    const std::vector<double> all = draws.pooled(j);
    if (all.empty()) throw Error("summarize: no draws");
    const double mean = detail::mean_of(all);
    const double sd = all.size() > 1 ? std::sqrt(detail::sample_variance(all, mean)) : 0.0;
    const CredibleInterval ci = credible_interval(all, level);
    ParameterSummary s{draws.parameter_names[j], mean, sd, ci.lower, ci.upper, std::nullopt, std::nullopt};
    if (sd > 0.0) {
      try {
        s.ess = effective_sample_size(chains);
      } catch (const Error&) {
      }
      if (chains.size() >= 2) {
        try {
          s.psrf = psrf(chains);
        } catch (const Error&) {
        }
      }
    }
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace bhqr

#endif  // BHQR_DIAGNOSTICS_HPP_
