#ifndef BHQR_DISTRIBUTIONS_HPP_
#define BHQR_DISTRIBUTIONS_HPP_

#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <string>

#include "bhqr/error.hpp"
#include "bhqr/random.hpp"

namespace bhqr {

// A quantile level tau in the open interval (0, 1).
class QuantileLevel {
 public:
  explicit QuantileLevel(double tau) : tau_(tau) {
    if (!(tau > 0.0 && tau < 1.0)) {
      std::ostringstream msg;
      msg << "quantile level must lie in (0, 1), got " << tau;
      throw Error(msg.str());
    }
  }

  double value() const { return tau_; }

  friend bool operator==(QuantileLevel a, QuantileLevel b) { return a.tau_ == b.tau_; }

 private:
  double tau_;
};

// Location, scale and skewness of an asymmetric Laplace distribution.
class AldParams {
 public:
  AldParams(double mu, double sigma, QuantileLevel tau) : mu_(mu), sigma_(sigma), tau_(tau) {
    if (!std::isfinite(mu)) throw Error("ALD location must be finite");
    if (!(sigma > 0.0) || !std::isfinite(sigma)) throw Error("ALD scale must be positive");
  }

  double mu() const { return mu_; }
  double sigma() const { return sigma_; }
  QuantileLevel tau() const { return tau_; }

 private:
  double mu_;
  double sigma_;
  QuantileLevel tau_;
};

// Constants of the normal location-scale mixture representation of the ALD:
// W | v ~ N(mu + theta v, psi_sq sigma v), v ~ Exponential(mean sigma).
struct MixtureConstants {
  double theta;
  double psi_sq;
};

inline MixtureConstants mixture_constants(QuantileLevel tau) {
  const double t = tau.value();
  const double w = t * (1.0 - t);
  return {(1.0 - 2.0 * t) / w, 2.0 / w};
}

// rho_tau(r) = tau max(r, 0) + (1 - tau) max(-r, 0).
inline double check_loss(double r, QuantileLevel tau) {
  if (!std::isfinite(r)) throw Error("check_loss: residual must be finite");
  const double t = tau.value();
  return r >= 0.0 ? t * r : (t - 1.0) * r;
}

// Log density of ALD(mu, sigma, tau):
// log(tau (1 - tau) / sigma) - rho_tau((y - mu) / sigma).
inline double ald_logpdf(double y, const AldParams& p) {
  if (!std::isfinite(y)) throw Error("ald_logpdf: y must be finite");
  const double t = p.tau().value();
  return std::log(t * (1.0 - t) / p.sigma()) - check_loss((y - p.mu()) / p.sigma(), p.tau());
}

// Exponential draw parameterized by its mean.
template <class URBG>
double sample_exponential_mean(double mean, URBG& rng) {
  return -mean * std::log(uniform_open01(rng));
}

template <class URBG>
double sample_ald_mixture(const AldParams& p, URBG& rng) {
  const MixtureConstants k = mixture_constants(p.tau());
  const double v = sample_exponential_mean(p.sigma(), rng);
  const double u = standard_normal(rng);
  return p.mu() + k.theta * v + std::sqrt(k.psi_sq * p.sigma() * v) * u;
}

// Inverse Gaussian IG(mean, shape) via the transformation with multiple roots
// (Michael, Schucany and Haas). The smaller root is written in a form that
// does not cancel when mean * chi^2 >> shape.
template <class URBG>
double sample_inverse_gaussian(double mean, double shape, URBG& rng) {
  if (!(mean > 0.0) || !(shape > 0.0)) {
    throw Error("sample_inverse_gaussian: mean and shape must be positive");
  }
  const double nu = standard_normal(rng);
  const double phi = mean * nu * nu / (2.0 * shape);
  const double x = mean / (1.0 + phi + std::sqrt(phi * (phi + 2.0)));
  const double u = uniform_open01(rng);
  return u <= mean / (mean + x) ? x : mean * mean / x;
}

// Generalized inverse Gaussian with index 1/2:
// density proportional to x^{-1/2} exp(-(a / x + b x) / 2).
//
// 1/X follows GIG(-1/2, b, a), which is the inverse Gaussian with mean
// sqrt(b / a) and shape b.
template <class URBG>
double sample_gig_half(double a, double b, URBG& rng) {
  if (!(a > 0.0) || !(b > 0.0) || !std::isfinite(a) || !std::isfinite(b)) {
    throw Error("sample_gig_half: a and b must be positive and finite");
  }
  return 1.0 / sample_inverse_gaussian(std::sqrt(b / a), b, rng);
}

// Inverse gamma with density proportional to x^{-shape-1} exp(-scale / x).
template <class URBG>
double sample_inverse_gamma(double shape, double scale, URBG& rng) {
  if (!(shape > 0.0) || !(scale > 0.0)) {
    throw Error("sample_inverse_gamma: shape and scale must be positive");
  }
  std::gamma_distribution<double> gamma(shape, 1.0 / scale);
  return 1.0 / gamma(rng);
}

inline double inverse_gamma_logpdf(double x, double shape, double scale) {
  return shape * std::log(scale) - std::lgamma(shape) - (shape + 1.0) * std::log(x) - scale / x;
}

inline double normal_logpdf(double x, double mean, double variance) {
  constexpr double kLogTwoPi = 1.8378770664093454835606594728112;
  const double d = x - mean;
  return -0.5 * (kLogTwoPi + std::log(variance) + d * d / variance);
}

// Unnormalized log density of GIG(1/2, a, b).
inline double gig_half_log_kernel(double x, double a, double b) {
  return -0.5 * std::log(x) - 0.5 * (a / x + b * x);
}

}  // namespace bhqr

#endif  // BHQR_DISTRIBUTIONS_HPP_
