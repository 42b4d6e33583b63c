#include "tiltedbb/model_selection.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace tiltedbb {

DicResult dic(const PosteriorSample& posterior, const RegressionModel& model) {
  const auto trace = posterior.pooled_deviance();
  if (trace.empty()) throw std::invalid_argument("posterior has no deviance trace");
  DicResult out;
  out.d_bar = std::accumulate(trace.begin(), trace.end(), 0.0) / static_cast<double>(trace.size());
  const auto mean = posterior.posterior_mean();
  const double ll = model.log_likelihood(mean);
  if (!std::isfinite(ll)) {
    throw std::runtime_error("deviance at the posterior mean is not finite");
  }
  out.d_hat = -2.0 * ll;
  out.p_d = out.d_bar - out.d_hat;
  out.dic = out.d_bar + out.p_d;
  return out;
}

double quantile(std::span<const double> values, double prob) {
  if (values.empty()) throw std::invalid_argument("quantile of an empty sample");
  if (!(prob >= 0.0 && prob <= 1.0)) throw std::invalid_argument("quantile prob outside [0,1]");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double h = (static_cast<double>(sorted.size()) - 1.0) * prob;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

DevianceSummary deviance_summary(std::span<const double> trace) {
  if (trace.size() < 2) throw std::invalid_argument("deviance summary needs at least two draws");
  DevianceSummary s;
  const double n = static_cast<double>(trace.size());
  s.mean = std::accumulate(trace.begin(), trace.end(), 0.0) / n;
  double ss = 0.0;
  for (double d : trace) ss += (d - s.mean) * (d - s.mean);
  s.sd = std::sqrt(ss / (n - 1.0));
  s.q025 = quantile(trace, 0.025);
  s.q975 = quantile(trace, 0.975);
  s.median = quantile(trace, 0.5);
  return s;
}

DevianceSummary deviance_summary(const PosteriorSample& posterior) {
  const auto trace = posterior.pooled_deviance();
  return deviance_summary(trace);
}

void sort_by_dic(std::vector<ComparisonRow>& rows) {
  std::stable_sort(rows.begin(), rows.end(), [](const ComparisonRow& a, const ComparisonRow& b) {
    if (a.failed != b.failed) return !a.failed;
    if (a.failed) return false;
    return a.dic.dic < b.dic.dic;
  });
}

void write_comparison_text(std::ostream& os, const std::vector<ComparisonRow>& rows) {
  os << std::left << std::setw(8) << "Model" << std::right << std::setw(9) << "DIC"
     << std::setw(8) << "pD" << std::setw(10) << "Dev.mean" << std::setw(8) << "S.D."
     << std::setw(20) << "95% interval" << std::setw(9) << "Median" << '\n';
  for (const auto& r : rows) {
    os << std::left << std::setw(8) << r.label << std::right;
    if (r.failed) {
      os << "  failed: " << r.error << '\n';
      continue;
    }
    std::ostringstream interval;
    interval << std::fixed << std::setprecision(1) << '(' << r.deviance.q025 << ','
             << r.deviance.q975 << ')';
    os << std::fixed << std::setprecision(1) << std::setw(9) << r.dic.dic << std::setw(8)
       << r.dic.p_d << std::setw(10) << r.deviance.mean << std::setprecision(3) << std::setw(8)
       << r.deviance.sd << std::setw(20) << interval.str() << std::setprecision(1)
       << std::setw(9) << r.deviance.median << '\n';
  }
  os.unsetf(std::ios::floatfield);
}

void write_comparison_csv(std::ostream& os, const std::vector<ComparisonRow>& rows) {
  os << "model,dic,p_d,d_bar,d_hat,deviance_mean,deviance_sd,deviance_q025,deviance_q975,"
        "deviance_median,status\n";
  os << std::setprecision(17);
  for (const auto& r : rows) {
    if (r.failed) {
      os << r.label << ",,,,,,,,,,\"failed: ";
      for (char c : r.error) os << (c == '"' ? '\'' : c);
      os << "\"\n";
      continue;
    }
    os << r.label << ',' << r.dic.dic << ',' << r.dic.p_d << ',' << r.dic.d_bar << ','
       << r.dic.d_hat << ',' << r.deviance.mean << ',' << r.deviance.sd << ','
       << r.deviance.q025 << ',' << r.deviance.q975 << ',' << r.deviance.median << ",ok\n";
  }
}

}  // namespace tiltedbb
