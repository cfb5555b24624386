#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "bhqr/simulation.hpp"
#include "bhqr/two_part.hpp"
#include "support.hpp"

using namespace bhqr;

namespace {

ChainConfig quick(std::uint64_t seed) { return ChainConfig{2, 1500, 300, 6, seed}; }

HurdleDataset small_study(int n, std::uint64_t seed) {
  SimConfig cfg;
  cfg.n = n;
  Rng rng(seed);
  return generate_dataset(cfg, rng).data;
}

// Counts with planted zeros and a positive part driven by one covariate.
HurdleDataset zero_heavy(int n, double zero_share, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  HurdleDataset d;
  d.x.resize(n, 2);
  for (int i = 0; i < n; ++i) {
    const double x = nd(rng);
    d.x.row(i) << 1.0, x;
    d.counts.push_back(u(rng) < zero_share ? 0.0 : std::ceil(std::exp(1.5 + 0.5 * x + 0.5 * nd(rng))));
  }
  d.z = d.x;
  d.x_names = {"intercept", "x"};
  d.z_names = d.x_names;
  return d;
}

QrPartFit constant_fit(const Eigen::VectorXd& beta, const HurdleSpec& hurdle) {
  PosteriorDraws draws;
  draws.parameter_names = {"intercept", "x", "sigma"};
  Eigen::MatrixXd m(20, 3);
  for (int r = 0; r < 20; ++r) m.row(r) << beta[0], beta[1], 1.0;
  draws.chains = {m, m};
  const QuantileLevel tau(0.5);
  return QrPartFit{hurdle, tau, tau, QrPosterior{draws, tau, mixture_constants(tau)}, {}, {}};
}

bool same_draws(const PosteriorDraws& a, const PosteriorDraws& b) {
  if (a.chains.size() != b.chains.size()) return false;
  for (std::size_t c = 0; c < a.chains.size(); ++c) {
    if (a.chains[c].rows() != b.chains[c].rows() || !(a.chains[c].array() == b.chains[c].array()).all()) {
      return false;
    }
  }
  return true;
}

}  // namespace

TEST(FitTwoPart, HurdleAtZeroEqualsDirectParts) {
  const HurdleDataset d = zero_heavy(300, 0.3, 1);
  const auto hurdle = HurdleSpec::at(0);
  const TwoPartFit fit =
      fit_two_part(d, hurdle, QuantileLevel(0.8), QrPriors::vague(2), LogisticPriors::vague(2), quick(2));
  const QrPartFit direct = fit_qr_part(d, hurdle, QuantileLevel(0.8), QrPriors::vague(2), quick(2));
  const LogisticPosterior logit = fit_logistic(hurdle_indicators(d, hurdle), LogisticPriors::vague(2), quick(2));
  EXPECT_TRUE(same_draws(fit.qr_part.qr.draws, direct.qr.draws));
  ASSERT_TRUE(fit.logistic.has_value());
  EXPECT_TRUE(same_draws(fit.logistic->draws, logit.draws));
}

TEST(FitTwoPart, EffectiveLevelAndRowsBeyondHurdle) {
  const HurdleDataset d = small_study(400, 3);
  for (int c : {0, 3}) {
    const QrPartFit fit = fit_qr_part(d, HurdleSpec::at(c), QuantileLevel(0.85), QrPriors::vague(3), quick(4));
    std::vector<double> beyond;
    for (double y : d.counts) {
      if (y > c) beyond.push_back(y);
    }
    EXPECT_EQ(fit.tau_effective.value(), remap_quantile(d.counts, beyond, QuantileLevel(0.85)).value());
    EXPECT_EQ(fit.rows_used.size(), beyond.size());
    for (std::size_t i : fit.rows_used) EXPECT_GT(d.counts[i], c);
    EXPECT_LT(fit.tau_effective.value(), 0.85);
    // the same count-scale value on both scales
    EXPECT_EQ(empirical_quantile(beyond, fit.tau_effective), empirical_quantile(d.counts, QuantileLevel(0.85)));
  }
  const QrPartFit plain = fit_qr_part(d, HurdleSpec::none(), QuantileLevel(0.85), QrPriors::vague(3), quick(4));
  EXPECT_EQ(plain.tau_effective.value(), 0.85);
  EXPECT_EQ(plain.rows_used.size(), d.size());
}

TEST(FitTwoPart, TauInsideHurdleRegion) {
  const HurdleDataset d = zero_heavy(400, 0.45, 5);
  try {
    fit_two_part(d, HurdleSpec::at(0), QuantileLevel(0.30), QrPriors::vague(2), LogisticPriors::vague(2), quick(1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("quantile falls inside the hurdle region"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("must exceed"), std::string::npos);
  }
}

TEST(FitTwoPart, EmptySideIsAnError) {
  HurdleDataset d = zero_heavy(200, 0.0, 6);
  EXPECT_THROW(
      fit_two_part(d, HurdleSpec::at(0), QuantileLevel(0.5), QrPriors::vague(2), LogisticPriors::vague(2), quick(1)),
      Error);
  for (auto& y : d.counts) y = std::min(y, 2.0);
  EXPECT_THROW(
      fit_two_part(d, HurdleSpec::at(5), QuantileLevel(0.5), QrPriors::vague(2), LogisticPriors::vague(2), quick(1)),
      Error);
}

TEST(FitTwoPart, NoZerosReducesToPlainQrOnJitteredData) {
  const HurdleDataset d = zero_heavy(250, 0.0, 7);
  const ChainConfig cfg = quick(8);
  const QrPartFit fit = fit_qr_part(d, HurdleSpec::at(0), QuantileLevel(0.6), QrPriors::vague(2), cfg);

  Rng jitter = make_rng(cfg.seed, streams::kJitter);
  QrData direct{d.x, Eigen::VectorXd(static_cast<Eigen::Index>(d.size())), d.x_names};
  for (std::size_t i = 0; i < d.size(); ++i) {
    double ys;
    do {
      ys = std::log(d.counts[i] - uniform_open01(jitter));
    } while (std::ceil(std::exp(ys)) != d.counts[i]);
    direct.y[static_cast<Eigen::Index>(i)] = ys;
  }
  // with every row kept the remapped level is F_n(q), which sits on a plateau here
  const QrPosterior plain = fit_bayesian_qr(direct, fit.tau_effective, QrPriors::vague(2), cfg);
  EXPECT_TRUE(same_draws(fit.qr.draws, plain.draws));
  EXPECT_THROW(fit_logistic(hurdle_indicators(d, HurdleSpec::at(0)), LogisticPriors::vague(2), cfg), Error);
}

TEST(FitTwoPart, DeterministicIncludingJitter) {
  const HurdleDataset d = small_study(300, 9);
  auto run = [&] {
    return fit_two_part(d, HurdleSpec::at(3), QuantileLevel(0.9), QrPriors::vague(3), LogisticPriors::vague(3),
                        quick(10));
  };
  const TwoPartFit a = run(), b = run();
  EXPECT_TRUE(same_draws(a.qr_part.qr.draws, b.qr_part.qr.draws));
  EXPECT_TRUE(same_draws(a.logistic->draws, b.logistic->draws));
  ASSERT_EQ(a.qr_part.jitter_audit.size(), b.qr_part.jitter_audit.size());
  for (std::size_t i = 0; i < a.qr_part.jitter_audit.size(); ++i) {
    EXPECT_EQ(a.qr_part.jitter_audit[i].y_star, b.qr_part.jitter_audit[i].y_star);
    EXPECT_EQ(a.qr_part.jitter_audit[i].u, b.qr_part.jitter_audit[i].u);
  }
}

TEST(EffectiveLevel, MonotoneInRequestedLevel) {
  const HurdleDataset d = small_study(1000, 11);
  double prev = 0.0;
  for (int i = 72; i < 99; ++i) {
    const double t = effective_level(d.counts, HurdleSpec::at(3), QuantileLevel(i / 100.0)).value();
    EXPECT_GE(t, prev);
    prev = t;
  }
}

TEST(TwoPartLogdensity, Branches) {
  const auto k = mixture_constants(QuantileLevel(0.3));
  EXPECT_DOUBLE_EQ(two_part_logdensity(0.0, 0.4, 1.0, k, 1.0, 1.0), std::log(0.4));
  EXPECT_EQ(two_part_logdensity(0.0, 0.0, 1.0, k, 1.0, 1.0), -std::numeric_limits<double>::infinity());
  EXPECT_THROW(two_part_logdensity(0.0, 1.5, 1.0, k, 1.0, 1.0), Error);
}

TEST(TwoPartLogdensity, ContinuousBranchCarriesOneMinusOmega) {
  for (double tau : {0.2, 0.5, 0.8}) {
    const auto k = mixture_constants(QuantileLevel(tau));
    const double omega = 0.35, mean = 0.7, sigma = 0.8, v = 0.6;
    const double centre = mean + k.theta * v, spread = std::sqrt(k.psi_sq * sigma * v);
    const double integral = oracle::trapezoid(
        [&](double y) { return std::exp(two_part_logdensity(y, omega, mean, k, sigma, v)); }, centre - 40 * spread,
        centre + 40 * spread, 400000);
    EXPECT_NEAR(integral, 1 - omega, 1e-6) << tau;
  }
}

TEST(TwoPartLogdensity, FactorizesIntoBothParts) {
  std::mt19937_64 rng(12);
  std::normal_distribution<double> nd;
  std::uniform_real_distribution<double> pos(0.2, 2.0);
  const auto k = mixture_constants(QuantileLevel(0.7));
  const int n = 40;
  HurdleIndicators ind;
  ind.z.resize(n, 2);
  Eigen::MatrixXd x(n, 2);
  std::vector<double> ystar(n), v(n);
  for (int i = 0; i < n; ++i) {
    ind.z.row(i) << 1.0, nd(rng);
    x.row(i) << 1.0, nd(rng);
    ystar[i] = i % 3 == 0 ? 0.0 : pos(rng);
    v[i] = pos(rng);
    ind.indicator.push_back(ystar[i] == 0.0 ? 1 : 0);
  }
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::Vector2d gamma(nd(rng), nd(rng)), beta(nd(rng), nd(rng));
    const double sigma = pos(rng);
    double joint = 0.0, qr_part = 0.0;
    for (int i = 0; i < n; ++i) {
      const double omega = 1.0 / (1.0 + std::exp(-ind.z.row(i).dot(gamma)));
      const double lp = x.row(i).dot(beta);
      joint += two_part_logdensity(ystar[i], omega, lp, k, sigma, v[i]);
      if (ystar[i] != 0.0) qr_part += normal_logpdf(ystar[i], lp + k.theta * v[i], k.psi_sq * sigma * v[i]);
    }
    EXPECT_NEAR(joint, logistic_loglik(gamma, ind) + qr_part, 1e-9);
  }
}

TEST(PredictCountQuantile, DegeneratePosterior) {
  const QrPartFit fit = constant_fit(Eigen::Vector2d(std::log(0.5), 0.0), HurdleSpec::at(3));
  const CountPrediction p = predict_count_quantile(fit, Eigen::Vector2d(1.0, 4.0));
  EXPECT_EQ(p.point, 4);
  EXPECT_EQ(p.lower, 4);
  EXPECT_EQ(p.upper, 4);
  EXPECT_THROW(predict_count_quantile(fit, Eigen::Vector3d(1, 2, 3)), Error);
}

TEST(PredictCountQuantile, MonotoneInLinearPredictor) {
  const QrPartFit fit = constant_fit(Eigen::Vector2d(0.3, 1.0), HurdleSpec::at(3));
  std::int64_t prev = -1;
  for (int step = 0; step < 12; ++step) {
    const CountPrediction p = predict_count_quantile(fit, Eigen::Vector2d(1.0, step * std::log(2.0)));
    EXPECT_GT(p.point, prev);
    prev = p.point;
  }
}

TEST(PredictionResiduals, UsesPosteriorMeanCoefficients) {
  HurdleDataset d;
  d.counts = {5, 9, 0};
  d.x = Eigen::MatrixXd{{1, 0}, {1, 1}, {1, 2}};
  d.z = d.x;
  const QrPartFit fit = constant_fit(Eigen::Vector2d(std::log(0.5), std::log(4.0)), HurdleSpec::at(3));
  const auto r = prediction_residuals(fit, d, {0, 1});
  // y_hat = ceil(exp(x'beta) + 3): 4 at x = 0, 5 at x = 1
  EXPECT_EQ(r[0], 1.0);
  EXPECT_EQ(r[1], 4.0);
}
