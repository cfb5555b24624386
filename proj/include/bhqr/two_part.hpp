#ifndef BHQR_TWO_PART_HPP_
#define BHQR_TWO_PART_HPP_

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bhqr/diagnostics.hpp"
#include "bhqr/distributions.hpp"
#include "bhqr/error.hpp"
#include "bhqr/hurdle_transform.hpp"
#include "bhqr/logistic_mcmc.hpp"
#include "bhqr/mcmc.hpp"
#include "bhqr/qr_gibbs.hpp"
#include "bhqr/random.hpp"

namespace bhqr {

// Observed values with the designs of both parts (intercepts included).
struct HurdleDataset {
  std::vector<double> counts;
  Eigen::MatrixXd x;
  Eigen::MatrixXd z;
  std::vector<std::string> x_names;
  std::vector<std::string> z_names;

  std::size_t size() const { return counts.size(); }

  void validate() const {
    const auto n = static_cast<Eigen::Index>(counts.size());
    if (x.rows() != n || z.rows() != n) throw Error("dataset designs do not match the number of observations");
  }
};

struct QrPartFit {
  HurdleSpec hurdle;
  QuantileLevel tau_requested;
  QuantileLevel tau_effective;
  QrPosterior qr;
  std::vector<JitteredValue> jitter_audit;
  std::vector<std::size_t> rows_used;
};

struct TwoPartFit {
  QrPartFit qr_part;
  std::optional<LogisticPosterior> logistic;

  const HurdleSpec& hurdle() const { return qr_part.hurdle; }
  QuantileLevel tau_requested() const { return qr_part.tau_requested; }
  QuantileLevel tau_effective() const { return qr_part.tau_effective; }
};

inline std::vector<std::size_t> rows_beyond_hurdle(const std::vector<double>& counts, const HurdleSpec& hurdle) {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (!hurdle.has_hurdle() || counts[i] > *hurdle.c) rows.push_back(i);
  }
  return rows;
}

// Quantile level of the QR part: tau itself without a hurdle, otherwise the
// level on the beyond-hurdle data matching the full-data tau quantile.
inline QuantileLevel effective_level(const std::vector<double>& counts, const HurdleSpec& hurdle, QuantileLevel tau) {
  if (!hurdle.has_hurdle()) return tau;
  std::vector<double> beyond;
  for (double y : counts) {
    if (y > *hurdle.c) beyond.push_back(y);
  }
  if (beyond.empty()) throw Error("no observations beyond the hurdle");
  return remap_quantile(counts, beyond, tau);
}

// Jitters the data, remaps tau and fits Bayesian QR
// on the observations beyond the hurdle.
inline QrPartFit fit_qr_part(const HurdleDataset& data, const HurdleSpec& hurdle, QuantileLevel tau,
                             const QrPriors& priors, const ChainConfig& config) {
  data.validate();
  const QuantileLevel tau_effective = effective_level(data.counts, hurdle, tau);
  Rng jitter_rng = make_rng(config.seed, streams::kJitter);
  std::vector<JitteredValue> jitter = jitter_transform(data.counts, hurdle, jitter_rng);
  std::vector<std::size_t> rows = rows_beyond_hurdle(data.counts, hurdle);

  QrData qr_data;
  qr_data.names = data.x_names;
  qr_data.x.resize(static_cast<Eigen::Index>(rows.size()), data.x.cols());
  qr_data.y.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto i = static_cast<Eigen::Index>(rows[r]);
    qr_data.x.row(static_cast<Eigen::Index>(r)) = data.x.row(i);
    qr_data.y[static_cast<Eigen::Index>(r)] = jitter[rows[r]].y_star;
  }
  QrPosterior qr = fit_bayesian_qr(qr_data, tau_effective, priors, config);
  return QrPartFit{hurdle, tau, tau_effective, std::move(qr), std::move(jitter), std::move(rows)};
}

inline HurdleIndicators hurdle_indicators(const HurdleDataset& data, const HurdleSpec& hurdle) {
  if (!hurdle.has_hurdle()) throw Error("hurdle indicators need a hurdle point");
  HurdleIndicators out{data.z, {}, data.z_names};
  out.indicator.reserve(data.size());
  for (double y : data.counts) out.indicator.push_back(y <= *hurdle.c ? 1 : 0);
  return out;
}

// Fits both parts of the hurdle model. The likelihood factorizes, so the
// logistic part (all observations) and the QR part (observations beyond the
// hurdle) are fitted independently. Without a hurdle only the QR part is fit.
inline TwoPartFit fit_two_part(const HurdleDataset& data, const HurdleSpec& hurdle, QuantileLevel tau,
                               const QrPriors& qr_priors, const LogisticPriors& logistic_priors,
                               const ChainConfig& config) {
  data.validate();
  if (hurdle.has_hurdle()) {
    std::size_t at_or_below = 0;
    for (double y : data.counts) at_or_below += y <= *hurdle.c ? 1 : 0;
    if (at_or_below == 0 || at_or_below == data.size()) {
      std::ostringstream msg;
      msg << "hurdle at " << *hurdle.c << " leaves one side empty (" << at_or_below << " of " << data.size()
          << " observations at or below it)";
      throw Error(msg.str());
    }
  }
  QrPartFit qr_part = fit_qr_part(data, hurdle, tau, qr_priors, config);
  std::optional<LogisticPosterior> logistic;
  if (hurdle.has_hurdle()) logistic = fit_logistic(hurdle_indicators(data, hurdle), logistic_priors, config);
  return TwoPartFit{std::move(qr_part), std::move(logistic)};
}

// Log of the two-part density at y*: log(omega) at the point mass, otherwise
// log(1 - omega) plus the normal mixture component.
inline double two_part_logdensity(double y_star, double omega, double linear_predictor, const MixtureConstants& k,
                                  double sigma, double v) {
  if (!(omega >= 0.0 && omega <= 1.0)) throw Error("two_part_logdensity: omega must lie in [0, 1]");
  if (y_star == 0.0) return omega > 0.0 ? std::log(omega) : -std::numeric_limits<double>::infinity();
  const double rest = omega < 1.0 ? std::log1p(-omega) : -std::numeric_limits<double>::infinity();
  return rest + normal_logpdf(y_star, linear_predictor + k.theta * v, k.psi_sq * sigma * v);
}

struct CountPrediction {
  double linear_predictor;  // x' E[beta] on the transformed scale
  std::int64_t point;
  std::int64_t lower;
  std::int64_t upper;
};

inline Eigen::VectorXd coefficient_means(const QrPosterior& qr) {
  return qr.draws.posterior_mean().head(qr.coefficient_count());
}

// Count-scale conditional quantile at the given covariate row (intercept
// included), from the posterior mean of beta, with a percentile interval
// over the per-draw predictions.
inline CountPrediction predict_count_quantile(const QrPartFit& fit, const Eigen::VectorXd& covariates,
                                              double level = 0.95) {
  const Eigen::Index p = fit.qr.coefficient_count();
  if (covariates.size() != p) throw Error("predict_count_quantile: covariate dimension mismatch");
  const double linear = covariates.dot(coefficient_means(fit.qr));
  std::vector<double> per_draw;
  for (const auto& chain : fit.qr.draws.chains) {
    for (Eigen::Index r = 0; r < chain.rows(); ++r) {
      per_draw.push_back(static_cast<double>(inverse_transform(chain.row(r).head(p).dot(covariates), fit.hurdle)));
    }
  }
  const CredibleInterval ci = credible_interval(per_draw, level);
  return {linear, inverse_transform(linear, fit.hurdle), static_cast<std::int64_t>(ci.lower),
          static_cast<std::int64_t>(ci.upper)};
}

// y - y_hat for the given rows, with y_hat from the posterior-mean coefficients.
inline std::vector<double> prediction_residuals(const QrPartFit& fit, const HurdleDataset& data,
                                                const std::vector<std::size_t>& rows) {
  const Eigen::VectorXd beta = coefficient_means(fit.qr);
  std::vector<double> out;
  out.reserve(rows.size());
  for (std::size_t i : rows) {
    const double linear = data.x.row(static_cast<Eigen::Index>(i)).dot(beta);
    out.push_back(data.counts[i] - static_cast<double>(inverse_transform(linear, fit.hurdle)));
  }
  return out;
}

}  // namespace bhqr

#endif  // BHQR_TWO_PART_HPP_
