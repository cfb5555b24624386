#ifndef BHQR_SIMULATION_HPP_
#define BHQR_SIMULATION_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "bhqr/diagnostics.hpp"
#include "bhqr/error.hpp"
#include "bhqr/hurdle_transform.hpp"
#include "bhqr/mcmc.hpp"
#include "bhqr/qr_gibbs.hpp"
#include "bhqr/random.hpp"
#include "bhqr/two_part.hpp"

namespace bhqr {

// Citation-like generator: y ~ LogNormal(meanlog = b0 + b1 x1 + b2 x2 + eps,
// sdlog), floored below mass_cutoff to plant mass points at 0..cutoff-1.
struct SimConfig {
  int n = 1000;
  double intercept = 2.0;
  double slope1 = -0.2;
  double slope2 = 0.0;
  double lognormal_sd = 0.4;
  double mass_cutoff = 4.0;
  double x1_meanlog = 2.0;
  double x1_sdlog = 2.0;
  double x2_mean = 0.5;
  double x2_sd = 0.5;
  double eps_sd = 1.0;
  int replications = 10;
  std::vector<double> taus{0.85};
  int hurdle_c = 3;
  double level = 0.95;
  std::uint64_t seed = 2021;
  ChainConfig chain{};

  void validate() const {
    if (n <= 0) throw ConfigError("simulation sample size must be positive");
    if (replications <= 0) throw ConfigError("replication count must be positive");
    if (taus.empty()) throw ConfigError("at least one quantile level is required");
    for (double t : taus) {
      if (!(t > 0.0 && t < 1.0)) throw ConfigError("quantile levels must lie in (0, 1)");
    }
    if (hurdle_c < 0) throw ConfigError("hurdle point must be nonnegative");
    if (!(lognormal_sd >= 0.0) || !(eps_sd >= 0.0) || !(x1_sdlog >= 0.0) || !(x2_sd >= 0.0)) {
      throw ConfigError("standard deviations must be nonnegative");
    }
    chain.validate();
  }

  std::vector<double> true_slopes() const { return {slope1, slope2}; }
};

struct SimDataset {
  HurdleDataset data;
  std::vector<double> continuous;  // draws before flooring
};

template <class URBG>
SimDataset generate_dataset(const SimConfig& config, URBG& rng) {
  const auto n = static_cast<Eigen::Index>(config.n);
  SimDataset out;
  out.data.x.resize(n, 3);
  out.data.counts.reserve(static_cast<std::size_t>(n));
  out.continuous.reserve(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    const double x1 = std::exp(config.x1_meanlog + config.x1_sdlog * standard_normal(rng));
    const double x2 = config.x2_mean + config.x2_sd * standard_normal(rng);
    const double eps = config.eps_sd * standard_normal(rng);
    const double meanlog = config.intercept + config.slope1 * x1 + config.slope2 * x2 + eps;
    const double y = std::exp(meanlog + config.lognormal_sd * standard_normal(rng));
    out.continuous.push_back(y);
    out.data.counts.push_back(y < config.mass_cutoff ? std::floor(y) : y);
    out.data.x.row(i) << 1.0, x1, x2;
  }
  out.data.z = out.data.x;
  out.data.x_names = {"intercept", "x1", "x2"};
  out.data.z_names = out.data.x_names;
  return out;
}

// (1/p) sum (beta_i - beta_hat_i)^2 over the slopes (intercept excluded).
inline double parameter_mse(std::span<const double> estimates, std::span<const double> truth) {
  if (estimates.size() != truth.size()) throw Error("parameter_mse: length mismatch");
  if (estimates.empty()) throw Error("parameter_mse: no parameters");
  double s = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) s += (truth[i] - estimates[i]) * (truth[i] - estimates[i]);
  return s / static_cast<double>(truth.size());
}

// One long-format result row. Seeds are carried as integers so they survive
// serialization exactly.
struct ResultRow {
  int replication;
  std::string model;
  int n;
  double tau_requested;
  double tau_effective;
  std::string metric;
  std::string parameter;
  std::variant<double, std::uint64_t> value;

  double number() const {
    return std::holds_alternative<double>(value) ? std::get<double>(value)
                                                 : static_cast<double>(std::get<std::uint64_t>(value));
  }
};

inline constexpr std::size_t kRowsPerFit = 14;

struct ReplicationStudy {
  std::vector<ResultRow> rows;
  std::vector<std::uint64_t> seeds;
  int successful = 0;
  int failed = 0;
  std::vector<std::string> failures;
};

inline std::vector<HurdleSpec> study_models(int hurdle_c) {
  return {HurdleSpec::none(), HurdleSpec::at(0), HurdleSpec::at(hurdle_c)};
}

inline double median_of(std::vector<double> v) {
  if (v.empty()) throw Error("median of an empty set");
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

// Metrics of one fitted model: prediction errors on the observations the QR
// part was fitted to, slope MSE, and slope credible intervals.
inline std::vector<ResultRow> fit_metrics(const QrPartFit& fit, const HurdleDataset& data, const SimConfig& config,
                                          int replication, std::uint64_t seed) {
  std::vector<ResultRow> rows;
  auto add = [&](std::string metric, std::string parameter, std::variant<double, std::uint64_t> value) {
    rows.push_back({replication, fit.hurdle.label(), config.n, fit.tau_requested.value(), fit.tau_effective.value(),
                    std::move(metric), std::move(parameter), value});
  };
  const std::vector<double> residuals = prediction_residuals(fit, data, fit.rows_used);
  std::vector<double> abs_residuals;
  double abs_sum = 0.0;
  for (double r : residuals) {
    abs_residuals.push_back(std::abs(r));
    abs_sum += std::abs(r);
  }
  add("prediction_error_mean_abs", "", abs_sum / static_cast<double>(residuals.size()));
  add("prediction_error_median_abs", "", median_of(abs_residuals));
  add("prediction_error_median", "", median_of(residuals));

  const Eigen::VectorXd means = coefficient_means(fit.qr);
  const std::vector<double> slopes{means[1], means[2]};
  add("mse", "", parameter_mse(slopes, config.true_slopes()));
  add("n_used", "", static_cast<double>(fit.rows_used.size()));
  add("seed", "", seed);
  for (std::size_t j = 1; j <= 2; ++j) {
    const std::vector<double> draws = fit.qr.draws.pooled(j);
    const CredibleInterval ci = credible_interval(draws, config.level);
    const std::string& name = data.x_names[j];
    add("estimate", name, means[static_cast<Eigen::Index>(j)]);
    add("ci_lower", name, ci.lower);
    add("ci_upper", name, ci.upper);
    add("ci_width", name, ci.upper - ci.lower);
  }
  return rows;
}

// For every replication: draw a dataset, then fit plain Bayesian QR, and the
// QR parts of the hurdle-0 and hurdle-c models at the remapped levels.
inline ReplicationStudy run_replication_study(const SimConfig& config) {
  config.validate();
  ReplicationStudy study;
  const QrPriors priors = QrPriors::vague(3);
  for (int r = 0; r < config.replications; ++r) {
    const std::uint64_t seed = derive_seed(config.seed, streams::kReplications + static_cast<std::uint64_t>(r));
    study.seeds.push_back(seed);
    Rng rng(seed);
    const SimDataset sim = generate_dataset(config, rng);
    ChainConfig chain = config.chain;
    chain.seed = seed;
    std::vector<ResultRow> rows;
    try {
      for (double tau : config.taus) {
        for (const HurdleSpec& model : study_models(config.hurdle_c)) {
          const QrPartFit fit = fit_qr_part(sim.data, model, QuantileLevel(tau), priors, chain);
          auto metrics = fit_metrics(fit, sim.data, config, r, seed);
          rows.insert(rows.end(), metrics.begin(), metrics.end());
        }
      }
    } catch (const Error& e) {
      ++study.failed;
      study.failures.push_back("replication " + std::to_string(r) + ": " + e.what());
      continue;
    }
    ++study.successful;
    study.rows.insert(study.rows.end(), rows.begin(), rows.end());
  }
  return study;
}

// Median over replications of one metric for one model and tau.
inline double median_metric(const std::vector<ResultRow>& rows, const std::string& model, double tau,
                            const std::string& metric, const std::string& parameter = "") {
  std::vector<double> values;
  for (const auto& row : rows) {
    if (row.model == model && row.tau_requested == tau && row.metric == metric && row.parameter == parameter) {
      values.push_back(row.number());
    }
  }
  return median_of(values);
}

}  // namespace bhqr

#endif  // BHQR_SIMULATION_HPP_
