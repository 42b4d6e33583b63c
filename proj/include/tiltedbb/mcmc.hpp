#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "tiltedbb/distributions.hpp"
#include "tiltedbb/regression.hpp"

namespace tiltedbb {

/// Independent N(0, 1/precision) priors on every coefficient of each structure
/// and U(lower, upper) on a free mu_t.
struct PriorSpec {
  double beta_precision = 0.1;
  double gamma_precision = 0.1;
  double delta_precision = 0.1;
  double mu_t_lower = TiltedParams::kLower;
  double mu_t_upper = TiltedParams::kUpper;

  void validate() const;
};

enum class InitStrategy { Zeros, Jittered };

struct SamplerConfig {
  std::size_t iterations = 100000;  // total sweeps, burn-in included
  std::size_t burn_in = 10000;
  std::size_t thin = 10;
  std::size_t chains = 3;
  std::uint64_t seed = 20240501;
  /// Sweeps between proposal-shape refreshes and scale-log snapshots.
  std::size_t adapt_window = 100;
  double target_acceptance = 0.234;         // blocks of size >= 2
  double target_acceptance_scalar = 0.44;   // scalar blocks
  InitStrategy init = InitStrategy::Jittered;
  bool parallel = true;

  /// Throws std::invalid_argument; rejects configs that retain no draws.
  void validate() const;
  std::size_t retained_per_chain() const { return (iterations - burn_in) / thin; }
};

/// A group of coordinates updated jointly by one random-walk proposal.
struct Block {
  std::string name;
  std::vector<std::size_t> indices;
  /// Bounded scalar blocks reflect proposals off [lower, upper].
  bool reflect = false;
  double lower = 0.0;
  double upper = 0.0;
};

struct ScaleSnapshot {
  std::size_t iteration = 0;
  std::size_t block = 0;
  double log_scale = 0.0;
};

struct ChainResult {
  std::vector<double> initial;
  std::vector<double> draws;     // retained x n_params, row-major
  std::vector<double> deviance;  // one per retained draw (empty if not requested)
  std::vector<double> acceptance_rate;          // per block, after burn-in
  std::vector<double> burn_in_acceptance_rate;  // per block, during burn-in
  std::vector<ScaleSnapshot> scale_log;
};

struct PosteriorSample {
  std::vector<std::string> names;
  std::vector<std::string> block_names;
  std::vector<ChainResult> chains;

  std::size_t n_params() const { return names.size(); }
  std::size_t n_chains() const { return chains.size(); }
  std::size_t retained_per_chain() const;
  double draw(std::size_t chain, std::size_t row, std::size_t param) const;
  std::vector<double> column(std::size_t chain, std::size_t param) const;
  std::vector<double> pooled_column(std::size_t param) const;
  std::vector<double> pooled_deviance() const;
  /// Coordinatewise mean over all chains.
  std::vector<double> posterior_mean() const;
  std::size_t index_of(std::string_view name) const;
};

using LogDensity = std::function<double(std::span<const double>)>;

/// One chain of random-walk Metropolis-within-Gibbs. Blocks are visited in the
/// given order every sweep. During burn-in each block adapts a log-scale by
/// Robbins-Monro toward its target acceptance and, for blocks of size >= 2, a
/// proposal covariance from the running sample covariance; both freeze at the
/// end of burn-in. `deviance`, if set, is evaluated at each retained draw.
ChainResult run_metropolis_within_gibbs(const LogDensity& log_density,
                                        const std::vector<Block>& blocks,
                                        std::vector<double> initial,
                                        const SamplerConfig& config, Rng& rng,
                                        const LogDensity& deviance = {});

double log_prior(const RegressionModel& model, const PriorSpec& prior,
                 std::span<const double> stacked);
double log_posterior(const RegressionModel& model, const PriorSpec& prior,
                     std::span<const double> stacked);
/// Log-likelihood plus log-prior kernels (normalising constants dropped);
/// -inf outside the support of the mu_t prior.
double log_posterior(const ModelSpec& spec, const Dataset& data, const PriorSpec& prior,
                     const ParameterVector& params);

/// Zeros: every coefficient 0 and mu_t = 0.5. Jittered: N(0, 0.5^2) noise on
/// the coefficients, mu_t ~ U(0.35, 0.65), reproducible from `seed`.
ParameterVector initial_values(const RegressionModel& model, InitStrategy strategy,
                               std::uint64_t seed = 0);
ParameterVector initial_values(const ModelSpec& spec, const Dataset& data, InitStrategy strategy,
                               std::uint64_t seed = 0);

/// Blocks beta | gamma | delta | mu_t for a bound model.
std::vector<Block> parameter_blocks(const RegressionModel& model, const PriorSpec& prior);

/// Independent chains, chain k drawing from a stream seeded with seed + k.
/// Deterministic for a fixed config regardless of `parallel`.
PosteriorSample run_chains(const RegressionModel& model, const PriorSpec& prior,
                           const SamplerConfig& config);
PosteriorSample run_chains(const ModelSpec& spec, const Dataset& data, const PriorSpec& prior,
                           const SamplerConfig& config);

}  // namespace tiltedbb
