#include "tiltedbb/mcmc.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <stdexcept>
#include <thread>

namespace tiltedbb {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kInitialStep = 0.1;
constexpr double kRobbinsMonroExponent = 0.6;

struct BlockState {
  std::size_t dim = 0;
  double target = 0.234;
  double log_scale = std::log(kInitialStep);
  Eigen::MatrixXd chol;  // proposal shape
  bool shape_active = false;
  // running moments of the block coordinates during burn-in
  std::size_t count = 0;
  Eigen::VectorXd mean;
  Eigen::MatrixXd m2;
  std::size_t accepted_burn_in = 0;
  std::size_t accepted_after = 0;
};

double reflect_into(double x, double lo, double hi) {
  const double width = hi - lo;
  // fold onto [lo, lo + 2*width) then mirror the upper half
  double r = std::fmod(x - lo, 2.0 * width);
  if (r < 0.0) r += 2.0 * width;
  return r <= width ? lo + r : hi - (r - width);
}

void update_moments(BlockState& s, const std::vector<double>& x, const Block& block) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(s.dim));
  for (std::size_t k = 0; k < s.dim; ++k) v[static_cast<Eigen::Index>(k)] = x[block.indices[k]];
  ++s.count;
  const Eigen::VectorXd delta = v - s.mean;
  s.mean += delta / static_cast<double>(s.count);
  s.m2 += delta * (v - s.mean).transpose();
}

void refresh_shape(BlockState& s) {
  if (s.dim < 2 || s.count < std::max<std::size_t>(10 * s.dim, 20)) return;
  Eigen::MatrixXd cov = s.m2 / static_cast<double>(s.count - 1);
  cov.diagonal().array() += 1e-10;
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) return;
  if (!s.shape_active) {
    s.log_scale = std::log(2.38 / std::sqrt(static_cast<double>(s.dim)));
    s.shape_active = true;
  }
  s.chol = llt.matrixL();
}

}  // namespace

void PriorSpec::validate() const {
  if (!(beta_precision > 0.0 && gamma_precision > 0.0 && delta_precision > 0.0)) {
    throw std::invalid_argument("prior precisions must be positive");
  }
  if (!(mu_t_lower >= TiltedParams::kLower && mu_t_upper <= TiltedParams::kUpper &&
        mu_t_lower < mu_t_upper)) {
    throw std::invalid_argument("mu_t prior bounds must satisfy 1/3 <= lower < upper <= 2/3");
  }
}

void SamplerConfig::validate() const {
  if (chains < 1) throw std::invalid_argument("sampler needs at least one chain");
  if (thin < 1) throw std::invalid_argument("thin must be >= 1");
  if (burn_in >= iterations) {
    throw std::invalid_argument("burn-in (" + std::to_string(burn_in) +
                                ") must be smaller than the iteration count (" +
                                std::to_string(iterations) + ")");
  }
  if (retained_per_chain() == 0) {
    throw std::invalid_argument("configuration retains no draws after burn-in and thinning");
  }
  if (adapt_window < 1) throw std::invalid_argument("adapt_window must be >= 1");
  for (double t : {target_acceptance, target_acceptance_scalar}) {
    if (!(t > 0.0 && t < 1.0)) throw std::invalid_argument("target acceptance must be in (0,1)");
  }
}

std::size_t PosteriorSample::retained_per_chain() const {
  if (chains.empty() || names.empty()) return 0;
  return chains.front().draws.size() / names.size();
}

double PosteriorSample::draw(std::size_t chain, std::size_t row, std::size_t param) const {
  return chains.at(chain).draws.at(row * n_params() + param);
}

std::vector<double> PosteriorSample::column(std::size_t chain, std::size_t param) const {
  const auto& c = chains.at(chain);
  const std::size_t p = n_params();
  std::vector<double> out(c.draws.size() / p);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = c.draws[i * p + param];
  return out;
}

std::vector<double> PosteriorSample::pooled_column(std::size_t param) const {
  std::vector<double> out;
  for (std::size_t k = 0; k < chains.size(); ++k) {
    const auto col = column(k, param);
    out.insert(out.end(), col.begin(), col.end());
  }
  return out;
}

std::vector<double> PosteriorSample::pooled_deviance() const {
  std::vector<double> out;
  for (const auto& c : chains) out.insert(out.end(), c.deviance.begin(), c.deviance.end());
  return out;
}

std::vector<double> PosteriorSample::posterior_mean() const {
  std::vector<double> mean(n_params(), 0.0);
  std::size_t rows = 0;
  for (const auto& c : chains) {
    const std::size_t r = c.draws.size() / n_params();
    for (std::size_t i = 0; i < r; ++i) {
      for (std::size_t j = 0; j < n_params(); ++j) mean[j] += c.draws[i * n_params() + j];
    }
    rows += r;
  }
  if (rows == 0) throw std::logic_error("posterior sample holds no draws");
  for (double& m : mean) m /= static_cast<double>(rows);
  return mean;
}

std::size_t PosteriorSample::index_of(std::string_view name) const {
  const auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) throw std::out_of_range("no parameter named '" + std::string(name) + "'");
  return static_cast<std::size_t>(it - names.begin());
}

ChainResult run_metropolis_within_gibbs(const LogDensity& log_density,
                                        const std::vector<Block>& blocks,
                                        std::vector<double> initial,
                                        const SamplerConfig& config, Rng& rng,
                                        const LogDensity& deviance) {
  config.validate();
  ChainResult out;
  out.initial = initial;
  std::vector<double> x = std::move(initial);
  double current = log_density(x);
  if (!std::isfinite(current)) {
    throw std::runtime_error("log posterior is not finite at the initial values");
  }

  std::vector<BlockState> states(blocks.size());
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    auto& s = states[b];
    s.dim = blocks[b].indices.size();
    if (s.dim == 0) throw std::invalid_argument("block '" + blocks[b].name + "' is empty");
    s.target = s.dim == 1 ? config.target_acceptance_scalar : config.target_acceptance;
    const auto d = static_cast<Eigen::Index>(s.dim);
    s.chol = Eigen::MatrixXd::Identity(d, d);
    s.mean = Eigen::VectorXd::Zero(d);
    s.m2 = Eigen::MatrixXd::Zero(d, d);
  }

  const std::size_t n_params = x.size();
  const std::size_t retained = config.retained_per_chain();
  out.draws.reserve(retained * n_params);
  if (deviance) out.deviance.reserve(retained);
  // Moments for the proposal shape skip the initial transient.
  const std::size_t moments_start = config.burn_in / 4;

  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<double> proposal(n_params);
  Eigen::VectorXd z;

  for (std::size_t t = 0; t < config.iterations; ++t) {
    const bool adapting = t < config.burn_in;
    if (t % config.adapt_window == 0) {
      for (std::size_t b = 0; b < blocks.size(); ++b) {
        out.scale_log.push_back({t, b, states[b].log_scale});
      }
    }
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      const Block& block = blocks[b];
      BlockState& s = states[b];
      z.resize(static_cast<Eigen::Index>(s.dim));
      for (Eigen::Index k = 0; k < z.size(); ++k) z[k] = normal(rng);
      const Eigen::VectorXd step = std::exp(s.log_scale) * (s.chol * z);
      proposal = x;
      for (std::size_t k = 0; k < s.dim; ++k) {
        double v = x[block.indices[k]] + step[static_cast<Eigen::Index>(k)];
        if (block.reflect) v = reflect_into(v, block.lower, block.upper);
        proposal[block.indices[k]] = v;
      }
      const double candidate = log_density(proposal);
      bool accepted = false;
      if (std::isfinite(candidate)) {
        const double log_ratio = candidate - current;
        accepted = log_ratio >= 0.0 || std::log(unif(rng)) < log_ratio;
      }
      if (accepted) {
        x.swap(proposal);
        current = candidate;
      }
      if (adapting) {
        s.accepted_burn_in += accepted ? 1 : 0;
        const double gain = std::pow(static_cast<double>(t + 1), -kRobbinsMonroExponent);
        s.log_scale += gain * ((accepted ? 1.0 : 0.0) - s.target);
      } else {
        s.accepted_after += accepted ? 1 : 0;
      }
    }

    if (adapting) {
      if (t >= moments_start) {
        for (std::size_t b = 0; b < blocks.size(); ++b) update_moments(states[b], x, blocks[b]);
      }
      if ((t + 1) % config.adapt_window == 0) {
        for (auto& s : states) refresh_shape(s);
      }
    } else if ((t - config.burn_in + 1) % config.thin == 0) {
      out.draws.insert(out.draws.end(), x.begin(), x.end());
      if (deviance) out.deviance.push_back(deviance(x));
    }
  }

  const double after = static_cast<double>(config.iterations - config.burn_in);
  const double during = static_cast<double>(std::max<std::size_t>(config.burn_in, 1));
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    out.acceptance_rate.push_back(static_cast<double>(states[b].accepted_after) / after);
    out.burn_in_acceptance_rate.push_back(static_cast<double>(states[b].accepted_burn_in) /
                                          during);
    if (states[b].accepted_after == 0) {
      throw std::runtime_error("block '" + blocks[b].name +
                               "' accepted no proposals after burn-in");
    }
  }
  return out;
}

double log_prior(const RegressionModel& model, const PriorSpec& prior,
                 std::span<const double> stacked) {
  double lp = 0.0;
  std::size_t k = 0;
  auto gaussian = [&](std::size_t count, double precision) {
    for (std::size_t j = 0; j < count; ++j, ++k) lp -= 0.5 * precision * stacked[k] * stacked[k];
  };
  gaussian(model.n_beta(), prior.beta_precision);
  gaussian(model.n_gamma(), prior.gamma_precision);
  gaussian(model.n_delta(), prior.delta_precision);
  if (model.spec().has_free_mu_t()) {
    const double mu_t = stacked[k];
    if (!(mu_t > prior.mu_t_lower && mu_t < prior.mu_t_upper)) return kNegInf;
  }
  return lp;
}

double log_posterior(const RegressionModel& model, const PriorSpec& prior,
                     std::span<const double> stacked) {
  const double lp = log_prior(model, prior, stacked);
  if (lp == kNegInf) return kNegInf;
  const double ll = model.log_likelihood(stacked);
  if (ll == kNegInf || std::isnan(ll)) return kNegInf;
  return ll + lp;
}

double log_posterior(const ModelSpec& spec, const Dataset& data, const PriorSpec& prior,
                     const ParameterVector& params) {
  const RegressionModel model(spec, data);
  model.check_dimensions(params);
  const auto stacked = params.stacked();
  return log_posterior(model, prior, stacked);
}

ParameterVector initial_values(const RegressionModel& model, InitStrategy strategy,
                               std::uint64_t seed) {
  ParameterVector p;
  p.beta.assign(model.n_beta(), 0.0);
  p.gamma.assign(model.n_gamma(), 0.0);
  p.delta.assign(model.n_delta(), 0.0);
  if (model.spec().has_free_mu_t()) p.mu_t = 0.5;
  if (strategy == InitStrategy::Zeros) return p;

  Rng rng(seed);
  std::normal_distribution<double> jitter(0.0, 0.5);
  for (auto* v : {&p.beta, &p.gamma, &p.delta}) {
    for (double& c : *v) c = jitter(rng);
  }
  if (p.mu_t) p.mu_t = std::uniform_real_distribution<double>(0.35, 0.65)(rng);
  return p;
}

ParameterVector initial_values(const ModelSpec& spec, const Dataset& data, InitStrategy strategy,
                               std::uint64_t seed) {
  return initial_values(RegressionModel(spec, data), strategy, seed);
}

std::vector<Block> parameter_blocks(const RegressionModel& model, const PriorSpec& prior) {
  std::vector<Block> blocks;
  std::size_t k = 0;
  auto add = [&](const char* name, std::size_t count) {
    if (count == 0) return;
    Block b;
    b.name = name;
    for (std::size_t j = 0; j < count; ++j) b.indices.push_back(k++);
    blocks.push_back(std::move(b));
  };
  add("beta", model.n_beta());
  add("gamma", model.n_gamma());
  add("delta", model.n_delta());
  if (model.spec().has_free_mu_t()) {
    Block b;
    b.name = "mu_t";
    b.indices.push_back(k++);
    b.reflect = true;
    b.lower = prior.mu_t_lower;
    b.upper = prior.mu_t_upper;
    blocks.push_back(std::move(b));
  }
  return blocks;
}

PosteriorSample run_chains(const RegressionModel& model, const PriorSpec& prior,
                           const SamplerConfig& config) {
  prior.validate();
  config.validate();
  PosteriorSample sample;
  sample.names = model.parameter_names();
  const auto blocks = parameter_blocks(model, prior);
  for (const auto& b : blocks) sample.block_names.push_back(b.name);
  sample.chains.resize(config.chains);

  const LogDensity target = [&](std::span<const double> x) {
    return log_posterior(model, prior, x);
  };
  const LogDensity deviance = [&](std::span<const double> x) {
    const double ll = model.log_likelihood(x);
    return ll == kNegInf ? std::numeric_limits<double>::infinity() : -2.0 * ll;
  };

  std::vector<std::exception_ptr> errors(config.chains);
  auto run_one = [&](std::size_t k) {
    try {
      const std::uint64_t chain_seed = config.seed + k;
      const auto init = initial_values(model, config.init, chain_seed * 0x9E3779B97F4A7C15ULL + 1);
      Rng rng(chain_seed);
      sample.chains[k] =
          run_metropolis_within_gibbs(target, blocks, init.stacked(), config, rng, deviance);
    } catch (...) {
      errors[k] = std::current_exception();
    }
  };

  if (config.parallel && config.chains > 1) {
    std::vector<std::jthread> workers;
    workers.reserve(config.chains);
    for (std::size_t k = 0; k < config.chains; ++k) workers.emplace_back(run_one, k);
  } else {
    for (std::size_t k = 0; k < config.chains; ++k) run_one(k);
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return sample;
}

PosteriorSample run_chains(const ModelSpec& spec, const Dataset& data, const PriorSpec& prior,
                           const SamplerConfig& config) {
  const RegressionModel model(spec, data);
  return run_chains(model, prior, config);
}

}  // namespace tiltedbb
