#ifndef BHQR_QR_GIBBS_HPP_
#define BHQR_QR_GIBBS_HPP_

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bhqr/distributions.hpp"
#include "bhqr/error.hpp"
#include "bhqr/mcmc.hpp"
#include "bhqr/random.hpp"

namespace bhqr {

// Response y (transformed scale) and design matrix x. The design carries its
// own intercept column when one is wanted.
struct QrData {
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
  std::vector<std::string> names;

  Eigen::Index rows() const { return x.rows(); }
  Eigen::Index cols() const { return x.cols(); }
};

// beta ~ N(b_mean, b_cov), sigma ~ InverseGamma(sigma_shape, sigma_scale).
struct QrPriors {
  Eigen::VectorXd b_mean;
  Eigen::MatrixXd b_cov;
  double sigma_shape = 0.01;
  double sigma_scale = 0.01;

  static QrPriors vague(Eigen::Index p, double variance = 100.0) {
    return QrPriors{Eigen::VectorXd::Zero(p), variance * Eigen::MatrixXd::Identity(p, p), 0.01, 0.01};
  }

  void validate(Eigen::Index p) const {
    if (b_mean.size() != p || b_cov.rows() != p || b_cov.cols() != p) {
      throw Error("QR prior dimension does not match the design");
    }
    if (!b_cov.isApprox(b_cov.transpose())) throw Error("QR prior covariance must be symmetric");
    if (Eigen::LLT<Eigen::MatrixXd>(b_cov).info() != Eigen::Success) {
      throw Error("QR prior covariance must be positive definite");
    }
    if (!(sigma_shape > 0.0) || !(sigma_scale > 0.0)) {
      throw Error("inverse-gamma prior parameters must be positive");
    }
  }
};

struct QrState {
  Eigen::VectorXd beta;
  double sigma = 1.0;
  Eigen::VectorXd v;
};

// Floor applied to the latent scales so the beta precision stays finite.
inline constexpr double kMinLatentScale = 1e-12;

// Full conditional of beta: N(mean, precision^{-1}).
struct BetaConditional {
  Eigen::VectorXd mean;
  Eigen::MatrixXd precision;
  Eigen::LLT<Eigen::MatrixXd> factor;
};

inline BetaConditional beta_conditional(const QrState& state, const QrData& data, const QrPriors& priors,
                                        const MixtureConstants& k) {
  const Eigen::MatrixXd prior_precision = priors.b_cov.inverse();
  const Eigen::ArrayXd w = 1.0 / (k.psi_sq * state.sigma * state.v.array());
  Eigen::MatrixXd precision = prior_precision;
  Eigen::VectorXd rhs = prior_precision * priors.b_mean;
  if (data.rows() > 0) {
    const Eigen::MatrixXd wx = (data.x.array().colwise() * w).matrix();
    precision.noalias() += wx.transpose() * data.x;
    rhs.noalias() += wx.transpose() * (data.y - k.theta * state.v);
  }
  Eigen::LLT<Eigen::MatrixXd> llt(precision);
  // pivots tiny relative to the largest mean the precision is numerically singular
  const Eigen::VectorXd pivots = llt.matrixLLT().diagonal();
  if (llt.info() != Eigen::Success || !pivots.allFinite() ||
      pivots.minCoeff() <= 1e-7 * pivots.maxCoeff()) {
    throw Error("singular conditional precision for beta; covariates may be collinear");
  }
  Eigen::VectorXd mean = llt.solve(rhs);
  return {std::move(mean), std::move(precision), std::move(llt)};
}

inline double beta_conditional_logpdf(const Eigen::VectorXd& beta, const BetaConditional& cond) {
  constexpr double kLogTwoPi = 1.8378770664093454835606594728112;
  const Eigen::VectorXd d = beta - cond.mean;
  const Eigen::MatrixXd lower = cond.factor.matrixL();
  const double log_det = 2.0 * lower.diagonal().array().log().sum();
  return -0.5 * (static_cast<double>(beta.size()) * kLogTwoPi - log_det + d.dot(cond.precision * d));
}

template <class URBG>
Eigen::VectorXd update_beta(const QrState& state, const QrData& data, const QrPriors& priors,
                            const MixtureConstants& k, URBG& rng) {
  const BetaConditional cond = beta_conditional(state, data, priors, k);
  Eigen::VectorXd z(cond.mean.size());
  for (Eigen::Index j = 0; j < z.size(); ++j) z[j] = standard_normal(rng);
  return cond.mean + cond.factor.matrixU().solve(z);
}

// Full conditional of v_i: GIG(1/2, a_i, b).
struct LatentConditional {
  Eigen::VectorXd a;
  double b;
};

inline LatentConditional latent_conditional(const QrState& state, const QrData& data, const MixtureConstants& k) {
  const double scale = k.psi_sq * state.sigma;
  Eigen::VectorXd r = data.y - data.x * state.beta;
  return {r.array().square() / scale, 2.0 / state.sigma + k.theta * k.theta / scale};
}

// Draw from GIG(1/2, a, b). A zero (or numerically vanishing) a_i gives the
// limiting Gamma(1/2, rate b/2) law.
template <class URBG>
double sample_latent_scale(double a, double b, URBG& rng) {
  double v;
  if (a > 0.0 && std::isfinite(std::sqrt(b / a))) {
    v = sample_gig_half(a, b, rng);
  } else {
    std::gamma_distribution<double> gamma(0.5, 2.0 / b);
    v = gamma(rng);
  }
  return std::max(v, kMinLatentScale);
}

template <class URBG>
Eigen::VectorXd update_v(const QrState& state, const QrData& data, const MixtureConstants& k, URBG& rng) {
  const LatentConditional cond = latent_conditional(state, data, k);
  Eigen::VectorXd v(cond.a.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = sample_latent_scale(cond.a[i], cond.b, rng);
  return v;
}

// Same update with one generator per observation.
template <class URBG>
Eigen::VectorXd update_v(const QrState& state, const QrData& data, const MixtureConstants& k,
                         std::span<URBG> streams) {
  if (static_cast<Eigen::Index>(streams.size()) != data.rows()) {
    throw Error("update_v: one generator per observation is required");
  }
  const LatentConditional cond = latent_conditional(state, data, k);
  Eigen::VectorXd v(cond.a.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    v[i] = sample_latent_scale(cond.a[i], cond.b, streams[static_cast<std::size_t>(i)]);
  }
  return v;
}

// Full conditional of sigma: InverseGamma(shape, scale).
struct SigmaConditional {
  double shape;
  double scale;
};

inline SigmaConditional sigma_conditional(const QrState& state, const QrData& data, const QrPriors& priors,
                                          const MixtureConstants& k) {
  const double n = static_cast<double>(data.rows());
  double scale = priors.sigma_scale;
  if (data.rows() > 0) {
    const Eigen::ArrayXd r = (data.y - data.x * state.beta - k.theta * state.v).array();
    scale += (r.square() / (2.0 * k.psi_sq * state.v.array())).sum() + state.v.sum();
  }
  return {priors.sigma_shape + 1.5 * n, scale};
}

template <class URBG>
double update_sigma(const QrState& state, const QrData& data, const QrPriors& priors, const MixtureConstants& k,
                    URBG& rng) {
  const SigmaConditional cond = sigma_conditional(state, data, priors, k);
  return sample_inverse_gamma(cond.shape, cond.scale, rng);
}

// Log of the joint posterior density (up to a constant) of beta, sigma and v:
// normal mixture likelihood, exponential prior on each v_i with mean sigma,
// inverse-gamma prior on sigma and normal prior on beta.
inline double log_joint_posterior(const QrState& state, const QrData& data, const QrPriors& priors,
                                  const MixtureConstants& k) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    const double vi = state.v[i];
    const double mean = data.x.row(i).dot(state.beta) + k.theta * vi;
    total += normal_logpdf(data.y[i], mean, k.psi_sq * state.sigma * vi);
    total += -std::log(state.sigma) - vi / state.sigma;
  }
  total += inverse_gamma_logpdf(state.sigma, priors.sigma_shape, priors.sigma_scale);
  const Eigen::VectorXd d = state.beta - priors.b_mean;
  total += -0.5 * d.dot(priors.b_cov.llt().solve(d));
  return total;
}

struct QrPosterior {
  PosteriorDraws draws;
  QuantileLevel tau;
  MixtureConstants constants;

  // Coefficient draws only (sigma is the last column).
  Eigen::Index coefficient_count() const { return static_cast<Eigen::Index>(draws.parameter_count()) - 1; }
};

inline Eigen::VectorXd ordinary_least_squares(const QrData& data) {
  return data.x.colPivHouseholderQr().solve(data.y);
}

inline void check_design(const QrData& data) {
  const Eigen::Index p = data.cols();
  if (data.y.size() != data.rows()) throw Error("response and design row counts differ");
  if (data.rows() < p + 2) {
    std::ostringstream msg;
    msg << "Bayesian QR needs at least " << p + 2 << " observations for " << p << " coefficients, got "
        << data.rows();
    throw Error(msg.str());
  }
  if (!data.x.allFinite() || !data.y.allFinite()) throw Error("design or response contains non-finite values");
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(data.x);
  if (qr.rank() < p) throw Error("design matrix is rank deficient");
}

// Runs chain k of the Gibbs sampler, cycling v -> beta -> sigma.
inline Eigen::MatrixXd run_qr_chain(const QrData& data, const QrPriors& priors, const MixtureConstants& k,
                                    const ChainConfig& config, const Eigen::VectorXd& start, int chain) {
  Rng rng = make_rng(config.seed, streams::kQrChains + static_cast<std::uint64_t>(chain));
  const Eigen::Index p = data.cols();
  QrState state{start, 1.0, Eigen::VectorXd::Ones(data.rows())};
  if (chain > 0) {
    for (Eigen::Index j = 0; j < p; ++j) state.beta[j] += 0.5 * standard_normal(rng);
  }
  Eigen::MatrixXd out(config.retained(), p + 1);
  Eigen::Index row = 0;
  for (int t = 1; t <= config.iterations; ++t) {
    state.v = update_v(state, data, k, rng);
    state.beta = update_beta(state, data, priors, k, rng);
    state.sigma = update_sigma(state, data, priors, k, rng);
    if (!state.beta.allFinite() || !std::isfinite(state.sigma) || !(state.sigma > 0.0)) {
      std::ostringstream msg;
      msg << "non-finite sampler state at iteration " << t << " of chain " << chain;
      throw Error(msg.str());
    }
    if (config.keeps(t) && row < out.rows()) {
      out.row(row).head(p) = state.beta.transpose();
      out(row, p) = state.sigma;
      ++row;
    }
  }
  return out;
}

inline QrPosterior fit_bayesian_qr(const QrData& data, QuantileLevel tau, const QrPriors& priors,
                                   const ChainConfig& config) {
  config.validate();
  check_design(data);
  priors.validate(data.cols());
  const MixtureConstants k = mixture_constants(tau);
  const Eigen::VectorXd start = ordinary_least_squares(data);

  PosteriorDraws draws;
  draws.config = config;
  draws.parameter_names = data.names;
  if (draws.parameter_names.size() != static_cast<std::size_t>(data.cols())) {
    draws.parameter_names.clear();
    for (Eigen::Index j = 0; j < data.cols(); ++j) draws.parameter_names.push_back("beta" + std::to_string(j));
  }
  draws.parameter_names.push_back("sigma");
  draws.chains = run_chains<Eigen::MatrixXd>(
      config.chains, [&](int chain) { return run_qr_chain(data, priors, k, config, start, chain); });
  return QrPosterior{std::move(draws), tau, k};
}

}  // namespace bhqr

#endif  // BHQR_QR_GIBBS_HPP_
