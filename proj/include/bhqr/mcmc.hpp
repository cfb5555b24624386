#ifndef BHQR_MCMC_HPP_
#define BHQR_MCMC_HPP_

#include <cstddef>
#include <cstdint>
#include <exception>
#include <functional>
#include <future>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "bhqr/error.hpp"

namespace bhqr {

// Chains, iterations, burn-in, thinning and seed of an MCMC run.
struct ChainConfig {
  int chains = 3;
  int iterations = 10000;
  int burn_in = 1000;
  int thinning = 90;
  std::uint64_t seed = 20210601;

  // Heavier setting used for the field data (slow-mixing covariates).
  static ChainConfig heavy() { return ChainConfig{3, 100000, 50000, 160, 20210601}; }

  int retained() const { return (iterations - burn_in) / thinning; }

  // Iteration t (1-based) is kept when it is past burn-in and
  // (t - burn_in) is a multiple of the thinning interval.
  bool keeps(int t) const { return t > burn_in && (t - burn_in) % thinning == 0; }

  void validate() const {
    std::ostringstream msg;
    if (chains < 1) msg << "chains must be positive; ";
    if (iterations < 1) msg << "iterations must be positive; ";
    if (burn_in < 0 || burn_in >= iterations) msg << "burn-in must lie in [0, iterations); ";
    if (thinning < 1) msg << "thinning must be positive; ";
    if (msg.str().empty() && retained() < 10) {
      msg << "configuration retains " << retained() << " draws per chain, at least 10 are required";
    }
    if (!msg.str().empty()) throw ConfigError("invalid chain configuration: " + msg.str());
  }
};

// Thinned post-burn-in draws of one model fit, one matrix per chain
// (rows = draws, columns = parameters).
struct PosteriorDraws {
  std::vector<std::string> parameter_names;
  std::vector<Eigen::MatrixXd> chains;
  ChainConfig config;

  std::size_t parameter_count() const { return parameter_names.size(); }
  std::size_t chain_count() const { return chains.size(); }
  std::size_t draws_per_chain() const { return chains.empty() ? 0 : static_cast<std::size_t>(chains.front().rows()); }

  // Draws of one parameter, split by chain.
  std::vector<std::vector<double>> parameter(std::size_t j) const {
    std::vector<std::vector<double>> out;
    out.reserve(chains.size());
    for (const auto& chain : chains) {
      const Eigen::VectorXd col = chain.col(static_cast<Eigen::Index>(j));
      out.emplace_back(col.data(), col.data() + col.size());
    }
    return out;
  }

  // Draws of one parameter with all chains concatenated.
  std::vector<double> pooled(std::size_t j) const {
    std::vector<double> out;
    for (const auto& chain : parameter(j)) out.insert(out.end(), chain.begin(), chain.end());
    return out;
  }

  Eigen::VectorXd posterior_mean() const {
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(parameter_count()));
    Eigen::Index rows = 0;
    for (const auto& chain : chains) {
      sum += chain.colwise().sum().transpose();
      rows += chain.rows();
    }
    return rows > 0 ? Eigen::VectorXd(sum / static_cast<double>(rows)) : sum;
  }
};

// Runs chain(k) for k = 0..count-1 concurrently and returns the results in
// chain order. The first exception raised by any chain is rethrown.
template <class Result>
std::vector<Result> run_chains(int count, const std::function<Result(int)>& chain) {
  std::vector<std::future<Result>> pending;
  pending.reserve(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k) pending.push_back(std::async(std::launch::async, chain, k));
  std::vector<Result> out;
  out.reserve(pending.size());
  std::exception_ptr failure;
  for (auto& f : pending) {
    try {
      out.push_back(f.get());
    } catch (...) {
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

}  // namespace bhqr

#endif  // BHQR_MCMC_HPP_
