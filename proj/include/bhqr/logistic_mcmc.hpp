#ifndef BHQR_LOGISTIC_MCMC_HPP_
#define BHQR_LOGISTIC_MCMC_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bhqr/error.hpp"
#include "bhqr/mcmc.hpp"
#include "bhqr/random.hpp"

namespace bhqr {

// gamma ~ N(g_mean, g_cov).
struct LogisticPriors {
  Eigen::VectorXd g_mean;
  Eigen::MatrixXd g_cov;

  static LogisticPriors vague(Eigen::Index p, double variance = 100.0) {
    return LogisticPriors{Eigen::VectorXd::Zero(p), variance * Eigen::MatrixXd::Identity(p, p)};
  }

  void validate(Eigen::Index p) const {
    if (g_mean.size() != p || g_cov.rows() != p || g_cov.cols() != p) {
      throw Error("logistic prior dimension does not match the design");
    }
    if (!g_cov.isApprox(g_cov.transpose())) throw Error("logistic prior covariance must be symmetric");
    if (Eigen::LLT<Eigen::MatrixXd>(g_cov).info() != Eigen::Success) {
      throw Error("logistic prior covariance must be positive definite");
    }
  }
};

// indicator[i] == 1 when observation i sits at or below the hurdle.
struct HurdleIndicators {
  Eigen::MatrixXd z;
  std::vector<std::uint8_t> indicator;
  std::vector<std::string> names;

  Eigen::Index rows() const { return z.rows(); }

  void validate() const {
    if (static_cast<Eigen::Index>(indicator.size()) != z.rows()) {
      throw Error("indicator count does not match the covariate rows");
    }
    for (auto b : indicator) {
      if (b > 1) throw Error("hurdle indicators must be 0 or 1");
    }
  }
};

// log(1 + exp(x)) without overflow.
inline double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

// sum_i [ I_i log(omega_i) + (1 - I_i) log(1 - omega_i) ], logit(omega_i) = z_i' gamma.
inline double logistic_loglik(const Eigen::VectorXd& gamma, const HurdleIndicators& data) {
  if (gamma.size() != data.z.cols()) throw Error("logistic_loglik: dimension mismatch");
  const Eigen::VectorXd eta = data.z * gamma;
  double total = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    total -= data.indicator[static_cast<std::size_t>(i)] ? softplus(-eta[i]) : softplus(eta[i]);
  }
  return total;
}

inline double logistic_log_prior(const Eigen::VectorXd& gamma, const LogisticPriors& priors) {
  const Eigen::VectorXd d = gamma - priors.g_mean;
  return -0.5 * d.dot(priors.g_cov.llt().solve(d));
}

inline double logistic_log_posterior(const Eigen::VectorXd& gamma, const HurdleIndicators& data,
                                     const LogisticPriors& priors) {
  return logistic_loglik(gamma, data) + logistic_log_prior(gamma, priors);
}

// Percentage change in the odds of falling at or below the hurdle for a unit
// increase in the covariate.
inline double odds_effect(double gamma_component) {
  if (!std::isfinite(gamma_component)) throw Error("odds_effect: coefficient must be finite");
  return std::expm1(gamma_component) * 100.0;
}

// Metropolis acceptance probability for a symmetric proposal.
inline double acceptance_probability(double log_target_current, double log_target_proposed) {
  const double d = log_target_proposed - log_target_current;
  return d >= 0.0 ? 1.0 : std::exp(d);
}

inline bool metropolis_accept(double log_target_current, double log_target_proposed, double uniform) {
  return uniform < acceptance_probability(log_target_current, log_target_proposed);
}

struct LogisticMode {
  Eigen::VectorXd gamma;
  Eigen::MatrixXd covariance;  // inverse negative Hessian of the log posterior
};

// Newton iterations with step halving on the log posterior.
inline LogisticMode logistic_posterior_mode(const HurdleIndicators& data, const LogisticPriors& priors) {
  const Eigen::Index p = data.z.cols();
  const Eigen::MatrixXd prior_precision = priors.g_cov.inverse();
  Eigen::VectorXd gamma = priors.g_mean;
  Eigen::MatrixXd neg_hessian = prior_precision;
  double current = logistic_log_posterior(gamma, data, priors);
  for (int iter = 0; iter < 100; ++iter) {
    Eigen::VectorXd grad = -prior_precision * (gamma - priors.g_mean);
    neg_hessian = prior_precision;
    const Eigen::VectorXd eta = data.z * gamma;
    for (Eigen::Index i = 0; i < data.rows(); ++i) {
      const double omega = 1.0 / (1.0 + std::exp(-eta[i]));
      grad += (static_cast<double>(data.indicator[static_cast<std::size_t>(i)]) - omega) * data.z.row(i).transpose();
      neg_hessian += omega * (1.0 - omega) * data.z.row(i).transpose() * data.z.row(i);
    }
    const Eigen::VectorXd step = neg_hessian.ldlt().solve(grad);
    double scale = 1.0;
    bool improved = false;
    for (int half = 0; half < 30; ++half, scale *= 0.5) {
      const Eigen::VectorXd trial = gamma + scale * step;
      const double value = logistic_log_posterior(trial, data, priors);
      if (value >= current) {
        gamma = trial;
        improved = value - current > 1e-12;
        current = value;
        break;
      }
    }
    if (!improved || step.norm() < 1e-10) break;
  }
  Eigen::MatrixXd cov = neg_hessian.inverse();
  if (!cov.allFinite() || Eigen::LLT<Eigen::MatrixXd>(cov).info() != Eigen::Success) {
    cov = Eigen::MatrixXd::Identity(p, p);
  }
  return {gamma, cov};
}

struct LogisticPosterior {
  PosteriorDraws draws;
  LogisticMode mode;
  std::vector<double> acceptance_rate;               // post burn-in, per chain
  std::vector<std::vector<double>> retained_scales;  // proposal scale at each retained draw
};

inline constexpr double kTargetAcceptance = 0.234;

// Random-walk Metropolis on gamma with proposal scale^2 * Sigma, where Sigma
// is the inverse negative Hessian at the posterior mode. The scale adapts
// toward the target acceptance rate during burn-in only.
inline Eigen::MatrixXd run_logistic_chain(const HurdleIndicators& data, const LogisticPriors& priors,
                                          const LogisticMode& mode, const ChainConfig& config, int chain,
                                          double& acceptance_rate, std::vector<double>& retained_scales) {
  Rng rng = make_rng(config.seed, streams::kLogisticChains + static_cast<std::uint64_t>(chain));
  const Eigen::Index p = data.z.cols();
  const Eigen::MatrixXd root = Eigen::LLT<Eigen::MatrixXd>(mode.covariance).matrixL();
  auto gaussian = [&]() {
    Eigen::VectorXd z(p);
    for (Eigen::Index j = 0; j < p; ++j) z[j] = standard_normal(rng);
    return Eigen::VectorXd(root * z);
  };
  Eigen::VectorXd gamma = mode.gamma;
  if (chain > 0) gamma += 2.0 * gaussian();
  double log_target = logistic_log_posterior(gamma, data, priors);
  double log_scale = std::log(2.38 / std::sqrt(static_cast<double>(p)));

  Eigen::MatrixXd out(config.retained(), p);
  Eigen::Index row = 0;
  long accepted = 0;
  for (int t = 1; t <= config.iterations; ++t) {
    const Eigen::VectorXd proposal = gamma + std::exp(log_scale) * gaussian();
    const double log_proposed = logistic_log_posterior(proposal, data, priors);
    const double alpha = acceptance_probability(log_target, log_proposed);
    if (uniform_open01(rng) < alpha) {
      gamma = proposal;
      log_target = log_proposed;
      if (t > config.burn_in) ++accepted;
    }
    if (t <= config.burn_in) {
      log_scale += (alpha - kTargetAcceptance) / std::pow(static_cast<double>(t), 0.6);
    }
    if (!gamma.allFinite()) {
      std::ostringstream msg;
      msg << "non-finite logistic state at iteration " << t << " of chain " << chain;
      throw Error(msg.str());
    }
    if (config.keeps(t) && row < out.rows()) {
      out.row(row++) = gamma.transpose();
      retained_scales.push_back(std::exp(log_scale));
    }
  }
  acceptance_rate = static_cast<double>(accepted) / static_cast<double>(config.iterations - config.burn_in);
  return out;
}

inline LogisticPosterior fit_logistic(const HurdleIndicators& data, const LogisticPriors& priors,
                                      const ChainConfig& config) {
  config.validate();
  data.validate();
  priors.validate(data.z.cols());
  const auto ones = std::count(data.indicator.begin(), data.indicator.end(), std::uint8_t{1});
  if (ones == 0 || ones == static_cast<std::ptrdiff_t>(data.indicator.size())) {
    throw Error("separation: hurdle part degenerate (all observations on one side of the hurdle)");
  }
  if (!data.z.allFinite()) throw Error("logistic covariates contain non-finite values");

  LogisticPosterior out;
  out.mode = logistic_posterior_mode(data, priors);
  out.draws.config = config;
  out.draws.parameter_names = data.names;
  if (out.draws.parameter_names.size() != static_cast<std::size_t>(data.z.cols())) {
    out.draws.parameter_names.clear();
    for (Eigen::Index j = 0; j < data.z.cols(); ++j) out.draws.parameter_names.push_back("gamma" + std::to_string(j));
  }
  struct ChainResult {
    Eigen::MatrixXd draws;
    double acceptance;
    std::vector<double> scales;
  };
  auto results = run_chains<ChainResult>(config.chains, [&](int chain) {
    ChainResult r;
    r.draws = run_logistic_chain(data, priors, out.mode, config, chain, r.acceptance, r.scales);
    return r;
  });
  for (auto& r : results) {
    out.draws.chains.push_back(std::move(r.draws));
    out.acceptance_rate.push_back(r.acceptance);
    out.retained_scales.push_back(std::move(r.scales));
  }
  return out;
}

}  // namespace bhqr

#endif  // BHQR_LOGISTIC_MCMC_HPP_
