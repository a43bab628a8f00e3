#pragma once

// Elicited priors: posterior-predictive draws of the decision probability for
// one case, summarized by a fitted distribution on (0, 1).

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <boost/math/special_functions/beta.hpp>

#include "dmprior/csv.hpp"
#include "dmprior/error.hpp"
#include "dmprior/model.hpp"
#include "dmprior/sampler.hpp"

namespace dmprior {

struct PredictiveSamples {
  std::string case_id;
  std::vector<double> samples;            // P(y = 1 | case, theta_k) per thinned draw
  std::size_t pooled_draws = 0;           // size of the pool they were thinned from
  std::vector<std::uint64_t> chain_seeds; // provenance
};

inline PredictiveSamples predictive_samples(std::span<const PosteriorChain> chains,
                                            std::span<const double> case_row, std::size_t m,
                                            std::string case_id = {}) {
  if (chains.empty()) throw usage_error("predictive_samples: no chains");
  if (case_row.size() != chains.front().dimension())
    throw data_error("predictive_samples: case has dimension " + std::to_string(case_row.size()) +
                     " but the chains have " + std::to_string(chains.front().dimension()));
  PredictiveSamples out;
  out.case_id = std::move(case_id);
  for (const auto& c : chains) {
    out.pooled_draws += c.size();
    out.chain_seeds.push_back(c.seed);
  }
  for (const auto& theta : thin_draws(chains, m))
    out.samples.push_back(inverse_link(linear_predictor(theta, case_row)));
  return out;
}

struct SampleMoments {
  double mean = 0.0;
  double variance = 0.0;  // population (1/m) variance
};

/// Sums run over the sorted values so the result does not depend on sample
/// order. Compensated, so m copies of c average to exactly c.
inline SampleMoments sample_moments(std::span<const double> samples) {
  if (samples.empty()) throw usage_error("sample_moments: no samples");
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const auto m = static_cast<double>(sorted.size());
  const double mean = compensated_sum(sorted) / m;
  std::vector<double> sq(sorted.size());
  for (std::size_t i = 0; i < sorted.size(); ++i) sq[i] = (sorted[i] - mean) * (sorted[i] - mean);
  return {mean, compensated_sum(sq) / m};
}

// ---------------------------------------------------------------------------
// Families

enum class Family { beta, logit_normal };
enum class FitMethod { moments, mle };

inline std::string to_string(Family f) { return f == Family::beta ? "Beta" : "LogitNormal"; }
inline std::string to_string(FitMethod f) { return f == FitMethod::moments ? "moments" : "mle"; }

struct BetaParams {
  double alpha = 1.0;
  double beta = 1.0;

  double mean() const { return alpha / (alpha + beta); }
  double variance() const {
    const double s = alpha + beta;
    return alpha * beta / (s * s * (s + 1.0));
  }
  double cdf(double x) const {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    return boost::math::ibeta(alpha, beta, x);
  }
  double pdf(double x) const {
    if (x <= 0.0 || x >= 1.0) return 0.0;
    return std::exp((alpha - 1.0) * std::log(x) + (beta - 1.0) * std::log1p(-x) -
                    (std::lgamma(alpha) + std::lgamma(beta) - std::lgamma(alpha + beta)));
  }
};

struct LogitNormalParams {
  double mu = 0.0;
  double sigma = 1.0;

  double cdf(double x) const {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double z = (std::log(x / (1.0 - x)) - mu) / sigma;
    return 0.5 * std::erfc(-z / std::numbers::sqrt2);
  }
  double pdf(double x) const {
    if (x <= 0.0 || x >= 1.0) return 0.0;
    const double z = (std::log(x / (1.0 - x)) - mu) / sigma;
    return std::exp(-0.5 * z * z) /
           (sigma * std::sqrt(2.0 * std::numbers::pi) * x * (1.0 - x));
  }
};

/// Method of moments: with sample mean m and variance v,
/// common = m(1 - m)/v - 1, alpha = m * common, beta = (1 - m) * common.
inline BetaParams fit_beta_moments(double mean, double variance) {
  if (!(variance > 0.0) || !(variance < mean * (1.0 - mean)))
    throw DegenerateFitError("Beta moment fit needs 0 < variance < mean(1 - mean); mean " +
                                 format_double(mean) + ", variance " + format_double(variance),
                             mean, variance);
  const double common = mean * (1.0 - mean) / variance - 1.0;
  return {mean * common, (1.0 - mean) * common};
}

inline BetaParams fit_beta_moments(std::span<const double> samples) {
  const auto mom = sample_moments(samples);
  return fit_beta_moments(mom.mean, mom.variance);
}

/// Closed-form MLE: mean and population sd of logit(samples).
inline LogitNormalParams fit_logitnormal_mle(std::span<const double> samples) {
  if (samples.empty()) throw usage_error("fit_logitnormal_mle: no samples");
  std::vector<double> logits;
  logits.reserve(samples.size());
  for (double p : samples) {
    if (!(p > 0.0 && p < 1.0))
      throw data_error("fit_logitnormal_mle: sample " + format_double(p) + " outside (0, 1)");
    logits.push_back(std::log(p / (1.0 - p)));
  }
  const auto mom = sample_moments(logits);
  const double sigma = std::sqrt(mom.variance);
  if (!(sigma > 0.0))
    throw DegenerateFitError("LogitNormal fit needs non-constant samples", mom.mean, mom.variance);
  return {mom.mean, sigma};
}

/// One-sample Kolmogorov-Smirnov distance
/// D = max_i max(|i/m - F(x_(i))|, |(i-1)/m - F(x_(i))|).
inline double ks_statistic(std::span<const double> samples,
                           const std::function<double(double)>& cdf) {
  if (samples.empty()) throw usage_error("ks_statistic: no samples");
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const auto m = static_cast<double>(sorted.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double f = cdf(sorted[i]);
    const double hi = static_cast<double>(i + 1) / m;
    const double lo = static_cast<double>(i) / m;
    d = std::max({d, std::abs(hi - f), std::abs(lo - f)});
  }
  return std::min(d, 1.0);
}

/// Two-sample Kolmogorov-Smirnov distance sup_x |F_a(x) - F_b(x)| between
/// empirical distributions; ties are handled exactly.
inline double ks_two_sample(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw usage_error("ks_two_sample: no samples");
  std::vector<double> x(a.begin(), a.end()), y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const auto n = static_cast<double>(x.size()), m = static_cast<double>(y.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < x.size() && j < y.size()) {
    const double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] == v) ++i;
    while (j < y.size() && y[j] == v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / n - static_cast<double>(j) / m));
  }
  return d;
}

/// Right-continuous empirical distribution function of a sample.
class EmpiricalCdf {
 public:
  explicit EmpiricalCdf(std::vector<double> samples) : sorted_(std::move(samples)) {
    if (sorted_.empty()) throw usage_error("EmpiricalCdf: no samples");
    std::sort(sorted_.begin(), sorted_.end());
  }
  double operator()(double x) const {
    const auto it = std::upper_bound(sorted_.begin(), sorted_.end(), x);
    return static_cast<double>(it - sorted_.begin()) / static_cast<double>(sorted_.size());
  }
  double mean() const { return sample_moments(sorted_).mean; }
  std::span<const double> sorted() const { return sorted_; }

 private:
  std::vector<double> sorted_;
};

// ---------------------------------------------------------------------------
// Elicitation

struct ElicitedPrior {
  Family family = Family::beta;
  FitMethod fit_method = FitMethod::moments;
  std::vector<double> params;  // (alpha, beta) or (mu, sigma)
  double ks_statistic = 1.0;

  double cdf(double x) const {
    return family == Family::beta ? BetaParams{params[0], params[1]}.cdf(x)
                                  : LogitNormalParams{params[0], params[1]}.cdf(x);
  }
  double pdf(double x) const {
    return family == Family::beta ? BetaParams{params[0], params[1]}.pdf(x)
                                  : LogitNormalParams{params[0], params[1]}.pdf(x);
  }
};

struct FitReport {
  std::string case_id;
  std::size_t m = 0;
  SampleMoments moments;
  std::optional<ElicitedPrior> beta;          // reported whenever the fit succeeds
  std::optional<ElicitedPrior> logit_normal;
  Family selected = Family::beta;
  std::size_t nudged = 0;  // samples moved off 0 or 1 before logit fitting
  std::vector<std::string> failures;

  const ElicitedPrior& selected_prior() const {
    return selected == Family::beta ? *beta : *logit_normal;
  }
};

inline constexpr double kBoundaryNudge = 1e-12;

/// Fits every requested family (Beta by moments first), scores each by KS
/// distance to the samples and selects the smallest. Ties keep the earlier
/// family.
inline FitReport fit_families(const PredictiveSamples& predictive,
                              std::span<const Family> families) {
  if (families.empty()) throw usage_error("elicit: no distribution families requested");
  const auto& samples = predictive.samples;
  FitReport report;
  report.case_id = predictive.case_id;
  report.m = samples.size();
  report.moments = sample_moments(samples);

  const bool want_logit =
      std::find(families.begin(), families.end(), Family::logit_normal) != families.end();

  try {
    const BetaParams b = fit_beta_moments(report.moments.mean, report.moments.variance);
    ElicitedPrior prior{Family::beta, FitMethod::moments, {b.alpha, b.beta}, 1.0};
    prior.ks_statistic = ks_statistic(samples, [&](double x) { return b.cdf(x); });
    report.beta = prior;
  } catch (const DegenerateFitError& e) {
    report.failures.push_back(std::string("Beta: ") + e.what());
  }

  if (want_logit) {
    std::vector<double> clipped(samples.begin(), samples.end());
    for (double& p : clipped) {
      if (p <= 0.0) {
        p = kBoundaryNudge;
        ++report.nudged;
      } else if (p >= 1.0) {
        p = 1.0 - kBoundaryNudge;
        ++report.nudged;
      }
    }
    try {
      const LogitNormalParams ln = fit_logitnormal_mle(clipped);
      ElicitedPrior prior{Family::logit_normal, FitMethod::mle, {ln.mu, ln.sigma}, 1.0};
      prior.ks_statistic = ks_statistic(samples, [&](double x) { return ln.cdf(x); });
      report.logit_normal = prior;
    } catch (const DegenerateFitError& e) {
      report.failures.push_back(std::string("LogitNormal: ") + e.what());
    }
  }

  if (!report.beta && !report.logit_normal)
    throw DegenerateFitError("elicit: every distribution fit is degenerate for case '" +
                                 report.case_id + "' (mean " + format_double(report.moments.mean) +
                                 ", variance " + format_double(report.moments.variance) + ")",
                             report.moments.mean, report.moments.variance);

  report.selected = report.beta ? Family::beta : Family::logit_normal;
  if (report.beta && report.logit_normal &&
      report.logit_normal->ks_statistic < report.beta->ks_statistic)
    report.selected = Family::logit_normal;
  return report;
}

inline FitReport elicit_prior(std::span<const PosteriorChain> chains,
                              std::span<const double> case_row, std::size_t m,
                              std::span<const Family> families, std::string case_id = {}) {
  return fit_families(predictive_samples(chains, case_row, m, std::move(case_id)), families);
}

// ---------------------------------------------------------------------------
// Density curves

/// Gaussian kernel density estimate with Silverman's rule-of-thumb bandwidth.
inline double kde_bandwidth(std::span<const double> samples) {
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const auto n = static_cast<double>(sorted.size());
  const double sd = std::sqrt(sample_moments(sorted).variance * n / std::max(1.0, n - 1.0));
  auto quantile = [&](double q) {
    const double h = (n - 1.0) * q;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
  };
  const double iqr = quantile(0.75) - quantile(0.25);
  double spread = std::min(sd, iqr / 1.34);
  if (!(spread > 0.0)) spread = sd > 0.0 ? sd : 1e-3;
  return 0.9 * spread * std::pow(n, -0.2);
}

inline double kde(std::span<const double> samples, double bandwidth, double x) {
  double total = 0.0;
  for (double s : samples) {
    const double z = (x - s) / bandwidth;
    total += std::exp(-0.5 * z * z);
  }
  return total / (static_cast<double>(samples.size()) * bandwidth * std::sqrt(2.0 * std::numbers::pi));
}

/// (x, fitted pdf, kernel estimate) on the midpoints of `points` equal cells
/// of (0, 1).
inline void write_density_csv(std::ostream& out, const ElicitedPrior& prior,
                              std::span<const double> samples, std::size_t points = 500) {
  const double h = kde_bandwidth(samples);
  out << "x,pdf,kde\n";
  for (std::size_t i = 0; i < points; ++i) {
    const double x = (static_cast<double>(i) + 0.5) / static_cast<double>(points);
    out << format_double(x) << ',' << format_double(prior.pdf(x)) << ','
        << format_double(kde(samples, h, x)) << '\n';
  }
}

inline void write_samples_csv(std::ostream& out, const PredictiveSamples& p) {
  out << "index,p\n";
  for (std::size_t i = 0; i < p.samples.size(); ++i)
    out << i << ',' << format_double(p.samples[i]) << '\n';
}

}  // namespace dmprior
