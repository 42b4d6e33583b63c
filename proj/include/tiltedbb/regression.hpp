#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace tiltedbb {

enum class Family { Binomial, BetaBinomial, BetaRectangularBinomial, TiltedBetaBinomial };

/// Short label used in tables and config files: Bin, BB, BRB, TBB.
std::string_view family_label(Family family);
/// Accepts the short labels (any case) and the long names.
Family parse_family(std::string_view text);

bool family_has_phi(Family family);
bool family_has_theta(Family family);

/// One column of a design matrix: the intercept ("1"), a covariate ("x1"), or a
/// covariate shifted by a constant ("x1+1"). The shift lets 0/1-coded data
/// enter a model written for 1/2 coding.
struct Term {
  std::string covariate;  // empty for the intercept
  double shift = 0.0;

  bool is_intercept() const { return covariate.empty(); }
  std::string label() const;
};

Term parse_term(std::string_view text);

struct ModelSpec {
  Family family = Family::TiltedBetaBinomial;
  std::vector<std::string> mu_b_terms;
  std::vector<std::string> phi_terms;
  std::vector<std::string> theta_terms;
  /// nullopt: mu_t is a free parameter (TBB only). BRB pins it at 0.5.
  std::optional<double> fixed_mu_t;

  bool has_free_mu_t() const {
    return family == Family::TiltedBetaBinomial && !fixed_mu_t.has_value();
  }
  /// mu_t used by the likelihood when it is not free.
  double pinned_mu_t() const;

  /// Structural checks that do not need data. Throws std::invalid_argument.
  void validate() const;
};

/// Observations y_i successes out of m_i trials with named real covariates,
/// stored column-wise.
class Dataset {
 public:
  Dataset() = default;
  explicit Dataset(std::vector<std::string> covariate_names);

  void add_row(std::int64_t y, std::int64_t trials, std::span<const double> covariates);

  std::size_t size() const { return successes_.size(); }
  bool empty() const { return successes_.empty(); }
  std::int64_t y(std::size_t i) const { return successes_[i]; }
  std::int64_t trials(std::size_t i) const { return trials_[i]; }
  const std::vector<std::string>& covariate_names() const { return names_; }
  bool has_covariate(std::string_view name) const;
  std::span<const double> covariate(std::string_view name) const;
  double covariate(std::size_t column, std::size_t row) const { return columns_[column][row]; }
  std::int64_t max_trials() const;

  /// Rows reordered by `order` (a permutation of 0..n-1).
  Dataset permuted(std::span<const std::size_t> order) const;

 private:
  std::vector<std::string> names_;
  std::vector<std::vector<double>> columns_;
  std::vector<std::int64_t> successes_;
  std::vector<std::int64_t> trials_;
};

/// Regression coefficients of the three structures plus mu_t (free TBB only).
struct ParameterVector {
  std::vector<double> beta;   // mu_b, logit link
  std::vector<double> gamma;  // phi, log link
  std::vector<double> delta;  // theta, logit link
  std::optional<double> mu_t;

  /// Layout used by the sampler: beta, gamma, delta, mu_t.
  std::vector<double> stacked() const;
};

struct ObservationParams {
  double mu_b = 0.5;
  double phi = 1.0;
  double theta = 0.0;
  double mu_t = 0.5;
};

constexpr double kMuClamp = 1e-6;

double inverse_logit(double eta);

/// A ModelSpec bound to a Dataset, with design matrices built once.
class RegressionModel {
 public:
  /// Throws std::invalid_argument when the spec references missing covariates.
  RegressionModel(ModelSpec spec, Dataset data);

  const ModelSpec& spec() const { return spec_; }
  const Dataset& data() const { return data_; }

  std::size_t n_beta() const { return x_.cols; }
  std::size_t n_gamma() const { return z_.cols; }
  std::size_t n_delta() const { return w_.cols; }
  std::size_t n_params() const;
  /// c1.. for mu_b, a1.. for phi, b1.. for theta, then mu_t.
  std::vector<std::string> parameter_names() const;
  /// Term label of each stacked coordinate ("1", "x1+1", "mu_t").
  std::vector<std::string> parameter_terms() const;

  ParameterVector unstack(std::span<const double> stacked) const;
  /// Throws std::invalid_argument on a dimension mismatch.
  void check_dimensions(const ParameterVector& params) const;

  std::vector<ObservationParams> linear_predictors(const ParameterVector& params) const;
  ObservationParams observation_params(std::size_t i, std::span<const double> stacked) const;

  /// Sum of per-observation log masses. -inf when a link output degenerates
  /// (non-finite predictor, phi overflowing to inf or underflowing to 0).
  double log_likelihood(std::span<const double> stacked) const;
  double log_likelihood(const ParameterVector& params) const;
  double observation_log_likelihood(std::size_t i, const ObservationParams& op) const;

  /// Mean and variance of Y_i under the family at the given parameters.
  std::pair<double, double> observation_moments(std::size_t i, const ObservationParams& op) const;

 private:
  struct Design {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> values;  // row-major
    double dot(std::size_t row, std::span<const double> coef) const;
  };

  Design build_design(const std::vector<std::string>& terms) const;

  ModelSpec spec_;
  Dataset data_;
  Design x_;
  Design z_;
  Design w_;
};

std::vector<ObservationParams> linear_predictors(const ModelSpec& spec, const Dataset& data,
                                                 const ParameterVector& params);
double log_likelihood(const ModelSpec& spec, const Dataset& data, const ParameterVector& params);
/// -2 * log_likelihood; +inf when the likelihood is -inf.
double deviance(const ModelSpec& spec, const Dataset& data, const ParameterVector& params);

}  // namespace tiltedbb
