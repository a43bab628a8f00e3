#pragma once

// Bayesian logistic regression: P(y = 1 | x, theta) = 1 / (1 + exp(-theta'x))
// with independent Normal priors on every coefficient.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "dmprior/error.hpp"
#include "dmprior/ingest.hpp"
#include "dmprior/matrix.hpp"

namespace dmprior {

enum class ScaleParameterization { variance, precision };

/// Normal prior shared by all coefficients. The default reads
/// "Normal(0, 0.001)" as precision 0.001, i.e. variance 1000.
struct PriorSpec {
  double mean = 0.0;
  ScaleParameterization parameterization = ScaleParameterization::precision;
  double scale_value = 0.001;

  double variance() const {
    return parameterization == ScaleParameterization::variance ? scale_value : 1.0 / scale_value;
  }

  void validate() const {
    if (!(scale_value > 0.0) || !std::isfinite(scale_value))
      throw usage_error("prior scale must be a positive finite number");
    if (!std::isfinite(mean)) throw usage_error("prior mean must be finite");
  }
};

inline double linear_predictor(std::span<const double> theta, std::span<const double> x) {
  if (theta.size() != x.size())
    throw data_error("linear_predictor: coefficient dimension " + std::to_string(theta.size()) +
                     " does not match row dimension " + std::to_string(x.size()));
  double eta = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) eta += theta[j] * x[j];
  return eta;
}

inline double inverse_link(double eta) {
  if (eta >= 0.0) return 1.0 / (1.0 + std::exp(-eta));
  const double e = std::exp(eta);
  return e / (1.0 + e);
}

/// log(1 + e^eta) without overflow.
inline double softplus(double eta) {
  return eta > 0.0 ? eta + std::log1p(std::exp(-eta)) : std::log1p(std::exp(eta));
}

/// y log p + (1 - y) log(1 - p) with p = inverse_link(eta), written as
/// y eta - log(1 + e^eta) so saturated predictors stay finite.
inline double bernoulli_log_mass(std::uint8_t y, double eta) {
  return (y != 0 ? eta : 0.0) - softplus(eta);
}

inline double log_likelihood(std::span<const double> theta, const Matrix& design,
                             std::span<const std::uint8_t> response) {
  if (design.rows() == 0) throw data_error("log_likelihood: empty dataset");
  double total = 0.0;
  for (std::size_t i = 0; i < design.rows(); ++i)
    total += bernoulli_log_mass(response[i], linear_predictor(theta, design.row(i)));
  return total;
}

inline double log_prior(std::span<const double> theta, const PriorSpec& prior) {
  const double v = prior.variance();
  const double norm = -0.5 * std::log(2.0 * std::numbers::pi * v);
  double total = 0.0;
  for (double t : theta) {
    const double dev = t - prior.mean;
    total += norm - dev * dev / (2.0 * v);
  }
  return total;
}

/// Target density for the sampler. Holds non-owning views of the design and
/// response, which must outlive the model.
class LogisticModel {
 public:
  /// Coordinate-update cache: the per-row linear predictor and its softplus,
  /// plus the values staged by the most recent proposal.
  struct State {
    std::vector<double> theta;
    std::vector<double> eta;
    std::vector<double> softplus_eta;
    std::vector<double> staged_eta;
    std::vector<double> staged_softplus;
  };

  LogisticModel(const Matrix& design, std::span<const std::uint8_t> response, PriorSpec prior)
      : design_(&design), response_(response), prior_(prior) {
    prior_.validate();
    if (design.rows() == 0) throw data_error("model: empty dataset");
    if (design.rows() != response.size())
      throw data_error("model: design has " + std::to_string(design.rows()) +
                       " rows but response has " + std::to_string(response.size()));
    columns_.resize(design.cols());
    for (std::size_t i = 0; i < design.rows(); ++i) {
      const auto row = design.row(i);
      for (std::size_t j = 0; j < row.size(); ++j) {
        if (row[j] != 0.0) {
          columns_[j].rows.push_back(i);
          columns_[j].values.push_back(row[j]);
        }
      }
    }
  }

  LogisticModel(const EncodedDataset& data, PriorSpec prior)
      : LogisticModel(data.design, data.response, prior) {}

  std::size_t dimension() const { return design_->cols(); }
  std::size_t size() const { return design_->rows(); }
  const PriorSpec& prior() const { return prior_; }
  const Matrix& design() const { return *design_; }
  std::span<const std::uint8_t> response() const { return response_; }

  double log_likelihood(std::span<const double> theta) const {
    check_dimension(theta);
    return dmprior::log_likelihood(theta, *design_, response_);
  }

  double log_prior(std::span<const double> theta) const { return dmprior::log_prior(theta, prior_); }

  double log_density(std::span<const double> theta) const {
    return log_likelihood(theta) + log_prior(theta);
  }

  /// d log_posterior / d theta.
  std::vector<double> gradient(std::span<const double> theta) const {
    check_dimension(theta);
    std::vector<double> grad(theta.size(), 0.0);
    for (std::size_t i = 0; i < design_->rows(); ++i) {
      const auto row = design_->row(i);
      const double resid = response_[i] - inverse_link(linear_predictor(theta, row));
      for (std::size_t j = 0; j < row.size(); ++j) grad[j] += resid * row[j];
    }
    const double v = prior_.variance();
    for (std::size_t j = 0; j < theta.size(); ++j) grad[j] -= (theta[j] - prior_.mean) / v;
    return grad;
  }

  State make_state(std::span<const double> theta) const {
    check_dimension(theta);
    State s;
    s.theta.assign(theta.begin(), theta.end());
    s.eta.resize(size());
    s.softplus_eta.resize(size());
    for (std::size_t i = 0; i < size(); ++i) {
      s.eta[i] = linear_predictor(theta, design_->row(i));
      s.softplus_eta[i] = softplus(s.eta[i]);
    }
    return s;
  }

  /// Change in log posterior if theta[j] were set to `value`. Only rows with
  /// a non-zero entry in column j are touched.
  double propose(State& s, std::size_t j, double value) const {
    const double delta = value - s.theta[j];
    const auto& col = columns_[j];
    s.staged_eta.resize(col.rows.size());
    s.staged_softplus.resize(col.rows.size());
    double change = 0.0;
    for (std::size_t k = 0; k < col.rows.size(); ++k) {
      const std::size_t i = col.rows[k];
      const double eta = s.eta[i] + delta * col.values[k];
      const double sp = softplus(eta);
      change += (response_[i] != 0 ? eta - s.eta[i] : 0.0) - (sp - s.softplus_eta[i]);
      s.staged_eta[k] = eta;
      s.staged_softplus[k] = sp;
    }
    const double v = prior_.variance();
    const double old_dev = s.theta[j] - prior_.mean;
    const double new_dev = value - prior_.mean;
    return change + (old_dev * old_dev - new_dev * new_dev) / (2.0 * v);
  }

  /// Commits the proposal staged by the last propose(s, j, value) call.
  void accept(State& s, std::size_t j, double value) const {
    const auto& col = columns_[j];
    for (std::size_t k = 0; k < col.rows.size(); ++k) {
      s.eta[col.rows[k]] = s.staged_eta[k];
      s.softplus_eta[col.rows[k]] = s.staged_softplus[k];
    }
    s.theta[j] = value;
  }

  /// Starting random-walk scales from the curvature at theta = 0:
  /// 2.4 / sqrt(0.25 * sum_i x_ij^2 + prior precision).
  std::vector<double> initial_scales() const {
    std::vector<double> scales(dimension());
    const double precision = 1.0 / prior_.variance();
    for (std::size_t j = 0; j < dimension(); ++j) {
      double ss = 0.0;
      for (double x : columns_[j].values) ss += x * x;
      scales[j] = 2.4 / std::sqrt(0.25 * ss + precision);
    }
    return scales;
  }

 private:
  struct SparseColumn {
    std::vector<std::size_t> rows;
    std::vector<double> values;
  };

  void check_dimension(std::span<const double> theta) const {
    if (theta.size() != dimension())
      throw data_error("model: coefficient dimension " + std::to_string(theta.size()) +
                       " does not match design width " + std::to_string(dimension()));
  }

  const Matrix* design_;
  std::span<const std::uint8_t> response_;
  PriorSpec prior_;
  std::vector<SparseColumn> columns_;
};

inline double log_posterior(std::span<const double> theta, const LogisticModel& model) {
  return model.log_density(theta);
}

}  // namespace dmprior
