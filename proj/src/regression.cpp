#include "tiltedbb/regression.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "tiltedbb/distributions.hpp"

namespace tiltedbb {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string strip_spaces(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (!std::isspace(static_cast<unsigned char>(c))) out.push_back(c);
  }
  return out;
}

std::string format_shift(double shift) {
  std::string s = std::to_string(shift);
  s.erase(s.find_last_not_of('0') + 1);
  if (!s.empty() && s.back() == '.') s.pop_back();
  return s;
}

}  // namespace

std::string_view family_label(Family family) {
  switch (family) {
    case Family::Binomial: return "Bin";
    case Family::BetaBinomial: return "BB";
    case Family::BetaRectangularBinomial: return "BRB";
    case Family::TiltedBetaBinomial: return "TBB";
  }
  return "?";
}

Family parse_family(std::string_view text) {
  const std::string key = lower(strip_spaces(text));
  if (key == "bin" || key == "binomial") return Family::Binomial;
  if (key == "bb" || key == "betabinomial" || key == "beta-binomial" || key == "beta_binomial") {
    return Family::BetaBinomial;
  }
  if (key == "brb" || key == "betarectangularbinomial" || key == "beta-rectangular-binomial" ||
      key == "beta_rectangular_binomial") {
    return Family::BetaRectangularBinomial;
  }
  if (key == "tbb" || key == "tiltedbetabinomial" || key == "tilted-beta-binomial" ||
      key == "tilted_beta_binomial") {
    return Family::TiltedBetaBinomial;
  }
  throw std::invalid_argument("unknown model family '" + std::string(text) + "'");
}

bool family_has_phi(Family family) { return family != Family::Binomial; }

bool family_has_theta(Family family) {
  return family == Family::BetaRectangularBinomial || family == Family::TiltedBetaBinomial;
}

std::string Term::label() const {
  if (is_intercept()) return "1";
  if (shift == 0.0) return covariate;
  return covariate + (shift > 0 ? "+" : "-") + format_shift(std::abs(shift));
}

Term parse_term(std::string_view text) {
  const std::string s = strip_spaces(text);
  if (s.empty()) throw std::invalid_argument("empty model term");
  if (s == "1") return Term{};
  // The sign search starts at 1 so a leading character is always part of the name.
  std::size_t pos = std::string::npos;
  for (std::size_t i = 1; i < s.size(); ++i) {
    if ((s[i] == '+' || s[i] == '-') && s[i - 1] != 'e' && s[i - 1] != 'E') {
      pos = i;
      break;
    }
  }
  Term term;
  term.covariate = s.substr(0, pos);
  if (!(std::isalpha(static_cast<unsigned char>(term.covariate[0])) || term.covariate[0] == '_')) {
    throw std::invalid_argument("model term '" + std::string(text) +
                                "' must start with a covariate name");
  }
  if (pos != std::string::npos) {
    const std::string shift = s.substr(pos);
    std::size_t used = 0;
    try {
      term.shift = std::stod(shift, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != shift.size() || used == 0) {
      throw std::invalid_argument("model term '" + std::string(text) +
                                  "': expected <covariate>[+|-<number>]");
    }
  }
  return term;
}

double ModelSpec::pinned_mu_t() const {
  if (family == Family::BetaRectangularBinomial) return 0.5;
  return fixed_mu_t.value_or(0.5);
}

void ModelSpec::validate() const {
  const std::string name(family_label(family));
  if (mu_b_terms.empty()) {
    throw std::invalid_argument(name + ": the mean structure needs at least one term");
  }
  if (family_has_phi(family) && phi_terms.empty()) {
    throw std::invalid_argument(name + ": the dispersion structure needs at least one term");
  }
  if (!family_has_phi(family) && !phi_terms.empty()) {
    throw std::invalid_argument(name + " has no dispersion parameter; phi terms must be empty");
  }
  if (family_has_theta(family) && theta_terms.empty()) {
    throw std::invalid_argument(name + ": the mixture-weight structure needs at least one term");
  }
  if (!family_has_theta(family) && !theta_terms.empty()) {
    throw std::invalid_argument(name + " has no mixture weight; theta terms must be empty");
  }
  if (fixed_mu_t) {
    if (family == Family::Binomial || family == Family::BetaBinomial) {
      throw std::invalid_argument(name + " has no tilted component; mu_t cannot be set");
    }
    if (family == Family::BetaRectangularBinomial && *fixed_mu_t != 0.5) {
      throw std::invalid_argument("BRB fixes mu_t at 0.5");
    }
    if (!(*fixed_mu_t >= TiltedParams::kLower && *fixed_mu_t <= TiltedParams::kUpper)) {
      throw std::invalid_argument("fixed mu_t must lie in [1/3, 2/3]");
    }
  }
  for (const auto* terms : {&mu_b_terms, &phi_terms, &theta_terms}) {
    for (const auto& t : *terms) parse_term(t);
  }
}

Dataset::Dataset(std::vector<std::string> covariate_names)
    : names_(std::move(covariate_names)), columns_(names_.size()) {
  for (std::size_t i = 0; i < names_.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      if (names_[i] == names_[j]) {
        throw std::invalid_argument("duplicate covariate column '" + names_[i] + "'");
      }
    }
  }
}

void Dataset::add_row(std::int64_t y, std::int64_t trials, std::span<const double> covariates) {
  if (trials < 1) {
    throw std::invalid_argument("trial count must be >= 1, got " + std::to_string(trials));
  }
  if (y < 0 || y > trials) {
    throw std::invalid_argument("count y=" + std::to_string(y) + " outside [0, " +
                                std::to_string(trials) + "]");
  }
  if (covariates.size() != names_.size()) {
    throw std::invalid_argument("row has " + std::to_string(covariates.size()) +
                                " covariates, expected " + std::to_string(names_.size()));
  }
  successes_.push_back(y);
  trials_.push_back(trials);
  for (std::size_t j = 0; j < names_.size(); ++j) columns_[j].push_back(covariates[j]);
}

bool Dataset::has_covariate(std::string_view name) const {
  return std::find(names_.begin(), names_.end(), name) != names_.end();
}

std::span<const double> Dataset::covariate(std::string_view name) const {
  const auto it = std::find(names_.begin(), names_.end(), name);
  if (it == names_.end()) {
    throw std::invalid_argument("unknown covariate '" + std::string(name) + "'");
  }
  return columns_[static_cast<std::size_t>(it - names_.begin())];
}

std::int64_t Dataset::max_trials() const {
  return trials_.empty() ? 0 : *std::max_element(trials_.begin(), trials_.end());
}

Dataset Dataset::permuted(std::span<const std::size_t> order) const {
  if (order.size() != size()) throw std::invalid_argument("permutation size mismatch");
  Dataset out(names_);
  std::vector<double> row(names_.size());
  for (std::size_t i : order) {
    for (std::size_t j = 0; j < names_.size(); ++j) row[j] = columns_[j].at(i);
    out.add_row(successes_.at(i), trials_.at(i), row);
  }
  return out;
}

std::vector<double> ParameterVector::stacked() const {
  std::vector<double> out;
  out.reserve(beta.size() + gamma.size() + delta.size() + 1);
  out.insert(out.end(), beta.begin(), beta.end());
  out.insert(out.end(), gamma.begin(), gamma.end());
  out.insert(out.end(), delta.begin(), delta.end());
  if (mu_t) out.push_back(*mu_t);
  return out;
}

double inverse_logit(double eta) {
  if (eta >= 0.0) return 1.0 / (1.0 + std::exp(-eta));
  const double e = std::exp(eta);
  return e / (1.0 + e);
}

double RegressionModel::Design::dot(std::size_t row, std::span<const double> coef) const {
  const double* r = values.data() + row * cols;
  double s = 0.0;
  for (std::size_t j = 0; j < cols; ++j) s += r[j] * coef[j];
  return s;
}

RegressionModel::RegressionModel(ModelSpec spec, Dataset data)
    : spec_(std::move(spec)), data_(std::move(data)) {
  spec_.validate();
  x_ = build_design(spec_.mu_b_terms);
  z_ = build_design(spec_.phi_terms);
  w_ = build_design(spec_.theta_terms);
}

RegressionModel::Design RegressionModel::build_design(const std::vector<std::string>& terms) const {
  Design d;
  d.rows = data_.size();
  d.cols = terms.size();
  d.values.assign(d.rows * d.cols, 0.0);
  for (std::size_t j = 0; j < terms.size(); ++j) {
    const Term term = parse_term(terms[j]);
    if (term.is_intercept()) {
      for (std::size_t i = 0; i < d.rows; ++i) d.values[i * d.cols + j] = 1.0;
      continue;
    }
    if (!data_.has_covariate(term.covariate)) {
      throw std::invalid_argument("model term '" + terms[j] + "' references covariate '" +
                                  term.covariate + "' missing from the dataset");
    }
    const auto column = data_.covariate(term.covariate);
    for (std::size_t i = 0; i < d.rows; ++i) d.values[i * d.cols + j] = column[i] + term.shift;
  }
  return d;
}

std::size_t RegressionModel::n_params() const {
  return n_beta() + n_gamma() + n_delta() + (spec_.has_free_mu_t() ? 1 : 0);
}

std::vector<std::string> RegressionModel::parameter_names() const {
  std::vector<std::string> names;
  for (std::size_t j = 0; j < n_beta(); ++j) names.push_back("c" + std::to_string(j + 1));
  for (std::size_t j = 0; j < n_gamma(); ++j) names.push_back("a" + std::to_string(j + 1));
  for (std::size_t j = 0; j < n_delta(); ++j) names.push_back("b" + std::to_string(j + 1));
  if (spec_.has_free_mu_t()) names.emplace_back("mu_t");
  return names;
}

std::vector<std::string> RegressionModel::parameter_terms() const {
  std::vector<std::string> out;
  for (const auto* terms : {&spec_.mu_b_terms, &spec_.phi_terms, &spec_.theta_terms}) {
    for (const auto& t : *terms) out.push_back(parse_term(t).label());
  }
  if (spec_.has_free_mu_t()) out.emplace_back("mu_t");
  return out;
}

ParameterVector RegressionModel::unstack(std::span<const double> stacked) const {
  if (stacked.size() != n_params()) {
    throw std::invalid_argument("stacked parameter vector has length " +
                                std::to_string(stacked.size()) + ", model expects " +
                                std::to_string(n_params()));
  }
  ParameterVector p;
  auto it = stacked.begin();
  p.beta.assign(it, it + static_cast<std::ptrdiff_t>(n_beta()));
  it += static_cast<std::ptrdiff_t>(n_beta());
  p.gamma.assign(it, it + static_cast<std::ptrdiff_t>(n_gamma()));
  it += static_cast<std::ptrdiff_t>(n_gamma());
  p.delta.assign(it, it + static_cast<std::ptrdiff_t>(n_delta()));
  it += static_cast<std::ptrdiff_t>(n_delta());
  if (spec_.has_free_mu_t()) p.mu_t = *it;
  return p;
}

void RegressionModel::check_dimensions(const ParameterVector& params) const {
  auto mismatch = [](const char* what, std::size_t got, std::size_t want) {
    throw std::invalid_argument(std::string(what) + " has " + std::to_string(got) +
                                " coefficients, model expects " + std::to_string(want));
  };
  if (params.beta.size() != n_beta()) mismatch("beta", params.beta.size(), n_beta());
  if (params.gamma.size() != n_gamma()) mismatch("gamma", params.gamma.size(), n_gamma());
  if (params.delta.size() != n_delta()) mismatch("delta", params.delta.size(), n_delta());
  if (spec_.has_free_mu_t() != params.mu_t.has_value()) {
    throw std::invalid_argument(spec_.has_free_mu_t() ? "model expects a free mu_t"
                                                      : "model has no free mu_t");
  }
}

ObservationParams RegressionModel::observation_params(std::size_t i,
                                                      std::span<const double> stacked) const {
  ObservationParams op;
  const auto beta = stacked.subspan(0, n_beta());
  const auto gamma = stacked.subspan(n_beta(), n_gamma());
  const auto delta = stacked.subspan(n_beta() + n_gamma(), n_delta());
  op.mu_b = std::clamp(inverse_logit(x_.dot(i, beta)), kMuClamp, 1.0 - kMuClamp);
  if (family_has_phi(spec_.family)) {
    op.phi = std::exp(z_.dot(i, gamma));
  } else {
    op.phi = std::numeric_limits<double>::infinity();
  }
  op.theta = family_has_theta(spec_.family) ? inverse_logit(w_.dot(i, delta)) : 0.0;
  op.mu_t = spec_.has_free_mu_t() ? stacked[n_params() - 1] : spec_.pinned_mu_t();
  return op;
}

std::vector<ObservationParams> RegressionModel::linear_predictors(
    const ParameterVector& params) const {
  check_dimensions(params);
  const auto stacked = params.stacked();
  std::vector<ObservationParams> out(data_.size());
  for (std::size_t i = 0; i < data_.size(); ++i) out[i] = observation_params(i, stacked);
  return out;
}

double RegressionModel::observation_log_likelihood(std::size_t i,
                                                   const ObservationParams& op) const {
  const std::int64_t y = data_.y(i);
  const std::int64_t m = data_.trials(i);
  // NaN fails both comparisons
  if (!(op.mu_b > 0.0 && op.mu_b < 1.0)) return kNegInf;
  if (spec_.family == Family::Binomial) {
    return binomial_log_pmf(y, m, op.mu_b);
  }
  if (!(op.phi > 0.0) || !std::isfinite(op.phi)) return kNegInf;
  const BetaMeanDisp beta(op.mu_b, op.phi);
  if (spec_.family == Family::BetaBinomial) {
    return beta_binomial_log_pmf(y, m, beta);
  }
  if (!(op.theta >= 0.0 && op.theta <= 1.0)) return kNegInf;
  if (!(op.mu_t >= TiltedParams::kLower && op.mu_t <= TiltedParams::kUpper)) return kNegInf;
  const TiltedBetaBinomialParams p(TiltedBetaParams(TiltedParams(op.mu_t), beta, op.theta), m);
  return tbb_log_pmf(y, p);
}

double RegressionModel::log_likelihood(std::span<const double> stacked) const {
  if (stacked.size() != n_params()) {
    throw std::invalid_argument("stacked parameter vector has the wrong length");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < data_.size(); ++i) {
    const double term = observation_log_likelihood(i, observation_params(i, stacked));
    if (term == kNegInf || std::isnan(term)) return kNegInf;
    total += term;
  }
  return total;
}

double RegressionModel::log_likelihood(const ParameterVector& params) const {
  check_dimensions(params);
  const auto stacked = params.stacked();
  return log_likelihood(std::span<const double>(stacked));
}

std::pair<double, double> RegressionModel::observation_moments(std::size_t i,
                                                               const ObservationParams& op) const {
  const auto m = data_.trials(i);
  const double md = static_cast<double>(m);
  if (spec_.family == Family::Binomial) {
    return {md * op.mu_b, md * op.mu_b * (1.0 - op.mu_b)};
  }
  const double theta = family_has_theta(spec_.family) ? op.theta : 0.0;
  const TiltedBetaBinomialParams p(
      TiltedBetaParams(TiltedParams(op.mu_t), BetaMeanDisp(op.mu_b, op.phi), theta), m);
  return {tbb_mean(p), tbb_variance(p)};
}

std::vector<ObservationParams> linear_predictors(const ModelSpec& spec, const Dataset& data,
                                                 const ParameterVector& params) {
  return RegressionModel(spec, data).linear_predictors(params);
}

double log_likelihood(const ModelSpec& spec, const Dataset& data, const ParameterVector& params) {
  return RegressionModel(spec, data).log_likelihood(params);
}

double deviance(const ModelSpec& spec, const Dataset& data, const ParameterVector& params) {
  const double ll = log_likelihood(spec, data, params);
  if (ll == kNegInf) return std::numeric_limits<double>::infinity();
  return -2.0 * ll;
}

}  // namespace tiltedbb
