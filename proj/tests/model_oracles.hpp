// Reference computations shared by the unit tests and the acceptance run.
// They use the library's data types but none of its samplers' internals.
#ifndef BHQR_TESTS_MODEL_ORACLES_HPP_
#define BHQR_TESTS_MODEL_ORACLES_HPP_

#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include <Eigen/Dense>

#include "bhqr/logistic_mcmc.hpp"
#include "bhqr/qr_gibbs.hpp"

namespace oracle {

// Joint log posterior written out term by term: normal mixture likelihood,
// exponential(mean sigma) prior per latent, IG prior on sigma, normal prior
// on beta. Used as the reference for the full conditionals.
inline double joint_oracle(const bhqr::QrState& s, const bhqr::QrData& d, const bhqr::QrPriors& pr, double tau) {
  const double theta = (1 - 2 * tau) / (tau * (1 - tau));
  const double psi_sq = 2 / (tau * (1 - tau));
  double total = 0.0;
  for (Eigen::Index i = 0; i < d.rows(); ++i) {
    const double var = psi_sq * s.sigma * s.v[i];
    const double r = d.y[i] - d.x.row(i).dot(s.beta) - theta * s.v[i];
    total += -0.5 * std::log(2 * std::numbers::pi * var) - r * r / (2 * var);
    total += -std::log(s.sigma) - s.v[i] / s.sigma;
  }
  total += -(pr.sigma_shape + 1) * std::log(s.sigma) - pr.sigma_scale / s.sigma;
  const Eigen::VectorXd db = s.beta - pr.b_mean;
  total += -0.5 * db.dot(pr.b_cov.inverse() * db);
  return total;
}

inline bhqr::QrData tiny_dataset(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> nd;
  bhqr::QrData d;
  d.x.resize(n, 2);
  d.y.resize(n);
  for (int i = 0; i < n; ++i) {
    d.x(i, 0) = 1.0;
    d.x(i, 1) = nd(rng);
    d.y[i] = 0.5 + 1.5 * d.x(i, 1) + nd(rng);
  }
  d.names = {"intercept", "x"};
  return d;
}

inline bhqr::QrState random_state(std::mt19937_64& rng, Eigen::Index n) {
  std::uniform_real_distribution<double> u(0.2, 3.0);
  std::normal_distribution<double> nd;
  bhqr::QrState s;
  s.beta = Eigen::Vector2d(nd(rng), nd(rng));
  s.sigma = u(rng);
  s.v.resize(n);
  for (auto& v : s.v) v = u(rng);
  return s;
}

// Posterior mean of sigma from the Gibbs sweep, with the sigma step either the
// conjugate draw or a random-walk Metropolis step on log sigma.
inline double sigma_posterior_mean(const bhqr::QrData& d, const bhqr::QrPriors& pr, double tau, bool conjugate,
                                   std::uint64_t seed, int iterations = 40000, int burn_in = 4000) {
  const auto k = bhqr::mixture_constants(bhqr::QuantileLevel(tau));
  bhqr::Rng rng(seed);
  bhqr::QrState s{bhqr::ordinary_least_squares(d), 1.0, Eigen::VectorXd::Ones(d.rows())};
  double sum = 0.0;
  for (int t = 1; t <= iterations; ++t) {
    s.v = bhqr::update_v(s, d, k, rng);
    s.beta = bhqr::update_beta(s, d, pr, k, rng);
    if (conjugate) {
      s.sigma = bhqr::update_sigma(s, d, pr, k, rng);
    } else {
      // the Jacobian of the log scale adds log sigma
      for (int rep = 0; rep < 5; ++rep) {
        const double log_target = joint_oracle(s, d, pr, tau) + std::log(s.sigma);
        bhqr::QrState prop = s;
        prop.sigma = s.sigma * std::exp(0.15 * bhqr::standard_normal(rng));
        const double log_prop = joint_oracle(prop, d, pr, tau) + std::log(prop.sigma);
        if (std::log(bhqr::uniform_open01(rng)) < log_prop - log_target) s = prop;
      }
    }
    if (t > burn_in) sum += s.sigma;
  }
  return sum / (iterations - burn_in);
}

inline bhqr::HurdleIndicators simulate_logistic(const Eigen::VectorXd& gamma, int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  bhqr::HurdleIndicators d;
  d.z.resize(n, gamma.size());
  for (int i = 0; i < n; ++i) {
    d.z(i, 0) = 1.0;
    for (Eigen::Index j = 1; j < gamma.size(); ++j) d.z(i, j) = nd(rng);
    const double p = 1.0 / (1.0 + std::exp(-d.z.row(i).dot(gamma)));
    d.indicator.push_back(u(rng) < p ? 1 : 0);
  }
  for (Eigen::Index j = 0; j < gamma.size(); ++j) d.names.push_back(j == 0 ? "intercept" : "z" + std::to_string(j));
  return d;
}

// Unpenalized maximum likelihood by iteratively reweighted least squares,
// with standard errors from the observed information.
struct MlFit {
  Eigen::VectorXd gamma;
  Eigen::VectorXd se;
};

inline MlFit maximum_likelihood(const bhqr::HurdleIndicators& d) {
  const Eigen::Index p = d.z.cols();
  Eigen::VectorXd g = Eigen::VectorXd::Zero(p);
  Eigen::MatrixXd info(p, p);
  for (int iter = 0; iter < 50; ++iter) {
    Eigen::VectorXd score = Eigen::VectorXd::Zero(p);
    info.setZero();
    for (Eigen::Index i = 0; i < d.z.rows(); ++i) {
      const double mu = 1.0 / (1.0 + std::exp(-d.z.row(i).dot(g)));
      score += (d.indicator[static_cast<std::size_t>(i)] - mu) * d.z.row(i).transpose();
      info += mu * (1 - mu) * d.z.row(i).transpose() * d.z.row(i);
    }
    g += info.ldlt().solve(score);
  }
  return {g, info.inverse().diagonal().cwiseSqrt()};
}

}  // namespace oracle

#endif  // BHQR_TESTS_MODEL_ORACLES_HPP_
