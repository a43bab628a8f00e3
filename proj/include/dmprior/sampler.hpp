#pragma once

// Adaptive component-wise random-walk Metropolis.
//
// Each iteration sweeps every coordinate with a Gaussian proposal. During
// burn-in the per-coordinate log proposal scale follows a Robbins-Monro
// recursion toward the target acceptance rate, updated once per adaptation
// window; scales are frozen afterwards so kept draws come from a fixed,
// reversible kernel.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <istream>
#include <limits>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "dmprior/csv.hpp"
#include "dmprior/error.hpp"
#include "dmprior/matrix.hpp"
#include "dmprior/parallel.hpp"
#include "dmprior/rng.hpp"

namespace dmprior {

/// Neumaier-compensated sum.
inline double compensated_sum(std::span<const double> x) {
  double sum = 0.0, carry = 0.0;
  for (double v : x) {
    const double t = sum + v;
    carry += std::abs(sum) >= std::abs(v) ? (sum - t) + v : (v - t) + sum;
    sum = t;
  }
  return sum + carry;
}

template <class T>
concept LogDensity = requires(const T& t, std::span<const double> x) {
  { t.dimension() } -> std::convertible_to<std::size_t>;
  { t.log_density(x) } -> std::convertible_to<double>;
};

/// Targets that can evaluate a single-coordinate change incrementally.
template <class T>
concept CoordinateLogDensity =
    LogDensity<T> && requires(const T& t, typename T::State& s, std::span<const double> x,
                              std::size_t j, double v) {
      { t.make_state(x) } -> std::same_as<typename T::State>;
      { t.propose(s, j, v) } -> std::convertible_to<double>;
      t.accept(s, j, v);
    };

template <class T>
concept HasInitialScales = requires(const T& t) {
  { t.initial_scales() } -> std::convertible_to<std::vector<double>>;
};

struct SamplerConfig {
  std::size_t chains = 4;
  std::size_t iterations = 20000;  // total sweeps per chain, burn-in included
  std::size_t burn_in = 5000;
  std::size_t adapt_window = 50;
  double target_acceptance = 0.234;
  std::uint64_t seed = 0;

  std::size_t kept() const { return iterations - burn_in; }

  void validate() const {
    if (chains < 1) throw usage_error("sampler: chains must be >= 1");
    if (burn_in >= iterations) throw usage_error("sampler: burn_in must be < iterations");
    if (adapt_window < 1) throw usage_error("sampler: adapt_window must be >= 1");
    if (!(target_acceptance > 0.0 && target_acceptance < 1.0))
      throw usage_error("sampler: target_acceptance must lie in (0, 1)");
  }
};

struct PosteriorChain {
  std::size_t chain_index = 0;
  std::uint64_t seed = 0;             // derived per-chain engine seed
  std::size_t burn_in = 0;
  Matrix draws;                        // kept draws x dimension
  double acceptance_rate = 0.0;        // post-burn-in, over all coordinate moves
  std::vector<double> proposal_scales; // frozen scales after adaptation

  std::size_t size() const { return draws.rows(); }
  std::size_t dimension() const { return draws.cols(); }
};

template <LogDensity Target>
PosteriorChain run_chain(const Target& target, const SamplerConfig& config,
                         std::size_t chain_index, std::span<const double> initial = {}) {
  config.validate();
  const std::size_t d = target.dimension();
  std::vector<double> theta(d, 0.0);
  if (!initial.empty()) {
    if (initial.size() != d) throw usage_error("sampler: initial point has wrong dimension");
    theta.assign(initial.begin(), initial.end());
  }

  std::vector<double> log_scale(d, 0.0);
  if constexpr (HasInitialScales<Target>) {
    const std::vector<double> s = target.initial_scales();
    for (std::size_t j = 0; j < d; ++j) log_scale[j] = std::log(s[j]);
  }

  double current = target.log_density(theta);
  if (!std::isfinite(current))
    throw Error(ErrorKind::data, "sampler: log density is not finite at the initial point");

  PosteriorChain chain;
  chain.chain_index = chain_index;
  chain.seed = derive_seed(config.seed, "chain", chain_index);
  chain.burn_in = config.burn_in;
  chain.draws = Matrix(config.kept(), d);
  Rng rng(chain.seed);

  [[maybe_unused]] auto state = [&] {
    if constexpr (CoordinateLogDensity<Target>) return target.make_state(theta);
    else return 0;
  }();

  std::vector<std::size_t> window_accepts(d, 0);
  std::size_t windows = 0;
  std::size_t kept_accepts = 0;

  for (std::size_t it = 0; it < config.iterations; ++it) {
    for (std::size_t j = 0; j < d; ++j) {
      const double proposal = theta[j] + std::exp(log_scale[j]) * rng.normal();
      const double log_u = std::log(rng.uniform_open());
      bool accept = false;
      if constexpr (CoordinateLogDensity<Target>) {
        const double change = target.propose(state, j, proposal);
        accept = log_u < change;  // NaN rejects
        if (accept) {
          target.accept(state, j, proposal);
          theta[j] = proposal;
        }
      } else {
        const double previous = theta[j];
        theta[j] = proposal;
        const double candidate = target.log_density(theta);
        accept = log_u < candidate - current;
        if (accept) current = candidate;
        else theta[j] = previous;
      }
      if (accept) {
        ++window_accepts[j];
        if (it >= config.burn_in) ++kept_accepts;
      }
    }

    if (it < config.burn_in) {
      if ((it + 1) % config.adapt_window == 0) {
        ++windows;
        const double gain = std::min(1.0, 2.0 * std::pow(static_cast<double>(windows), -0.6));
        for (std::size_t j = 0; j < d; ++j) {
          const double rate =
              static_cast<double>(window_accepts[j]) / static_cast<double>(config.adapt_window);
          log_scale[j] += gain * (rate - config.target_acceptance);
        }
      }
      if ((it + 1) % config.adapt_window == 0 || it + 1 == config.burn_in)
        std::fill(window_accepts.begin(), window_accepts.end(), 0);
    } else {
      auto row = chain.draws.row(it - config.burn_in);
      std::copy(theta.begin(), theta.end(), row.begin());
    }
  }

  chain.acceptance_rate = static_cast<double>(kept_accepts) /
                          static_cast<double>(config.kept() * std::max<std::size_t>(d, 1));
  chain.proposal_scales.resize(d);
  for (std::size_t j = 0; j < d; ++j) chain.proposal_scales[j] = std::exp(log_scale[j]);
  return chain;
}

/// Runs config.chains independent chains, each on its own RNG stream.
template <LogDensity Target>
std::vector<PosteriorChain> run_chains(const Target& target, const SamplerConfig& config,
                                       std::size_t workers = 1) {
  config.validate();
  std::vector<PosteriorChain> chains(config.chains);
  parallel_for(config.chains, workers,
               [&](std::size_t c) { chains[c] = run_chain(target, config, c); });
  return chains;
}

// ---------------------------------------------------------------------------
// Convergence diagnostics

struct ConvergenceReport {
  std::vector<std::string> names;
  std::vector<double> ess;   // multi-chain effective sample size
  std::vector<double> rhat;  // split R-hat
  double rhat_threshold = 1.05;
  double ess_threshold = 400.0;
  std::vector<std::string> issues;

  bool flagged() const { return !issues.empty(); }
};

namespace detail {

struct SplitSeries {
  std::vector<std::vector<double>> halves;
  std::size_t length = 0;
};

inline SplitSeries split_halves(std::span<const PosteriorChain> chains, std::size_t j) {
  SplitSeries s;
  const std::size_t n = chains.front().size();
  s.length = n / 2;
  for (const auto& c : chains) {
    std::vector<double> first(s.length), second(s.length);
    for (std::size_t t = 0; t < s.length; ++t) {
      first[t] = c.draws(t, j);
      second[t] = c.draws(n - s.length + t, j);
    }
    s.halves.push_back(std::move(first));
    s.halves.push_back(std::move(second));
  }
  return s;
}

inline double mean_of(std::span<const double> x) {
  return compensated_sum(x) / static_cast<double>(x.size());
}

/// Biased (1/N) autocovariance at `lag`.
inline double autocovariance(std::span<const double> x, double mean, std::size_t lag) {
  double s = 0.0;
  for (std::size_t t = 0; t + lag < x.size(); ++t) s += (x[t] - mean) * (x[t + lag] - mean);
  return s / static_cast<double>(x.size());
}

}  // namespace detail

/// Split R-hat and ESS (Geyer initial-monotone-sequence estimator over split
/// chains) per coordinate. Flags R-hat above 1.05 or ESS below 400.
inline ConvergenceReport convergence(std::span<const PosteriorChain> chains,
                                     std::vector<std::string> names = {}) {
  if (chains.empty()) throw usage_error("convergence: no chains");
  const std::size_t d = chains.front().dimension();
  for (const auto& c : chains) {
    if (c.size() < 10) throw data_error("convergence: fewer than 10 kept draws in a chain");
    if (c.dimension() != d || c.size() != chains.front().size())
      throw data_error("convergence: chains differ in shape");
  }
  if (names.empty())
    for (std::size_t j = 0; j < d; ++j) names.push_back("theta_" + std::to_string(j));

  ConvergenceReport report;
  report.names = std::move(names);
  report.ess.resize(d);
  report.rhat.resize(d);

  for (std::size_t j = 0; j < d; ++j) {
    const auto s = detail::split_halves(chains, j);
    const std::size_t m = s.halves.size();
    const auto n = static_cast<double>(s.length);
    std::vector<double> means(m), vars(m);
    for (std::size_t k = 0; k < m; ++k) {
      means[k] = detail::mean_of(s.halves[k]);
      vars[k] = detail::autocovariance(s.halves[k], means[k], 0) * n / (n - 1.0);
    }
    const double w = detail::mean_of(vars);
    const double grand = detail::mean_of(means);
    double b_over_n = 0.0;
    for (double mu : means) b_over_n += (mu - grand) * (mu - grand);
    b_over_n /= static_cast<double>(m - 1);
    const double var_plus = w * (n - 1.0) / n + b_over_n;

    if (!(w > 0.0)) {
      const bool constant = !(b_over_n > 0.0);
      report.rhat[j] = constant ? 1.0 : std::numeric_limits<double>::infinity();
      report.ess[j] = constant ? static_cast<double>(m) * n : static_cast<double>(chains.size());
      continue;
    }
    report.rhat[j] = std::sqrt(var_plus / w);

    auto mean_acov = [&](std::size_t lag) {
      double total = 0.0;
      for (std::size_t k = 0; k < m; ++k)
        total += detail::autocovariance(s.halves[k], means[k], lag);
      return total / static_cast<double>(m);
    };
    const std::size_t len = s.length;
    std::vector<double> rho(len + 2, 0.0);
    double rho_even = 1.0;
    double rho_odd = 1.0 - (w - mean_acov(1)) / var_plus;
    rho[0] = rho_even;
    rho[1] = rho_odd;
    std::size_t t = 1;
    while (t + 4 < len && rho_even + rho_odd > 0.0) {
      rho_even = 1.0 - (w - mean_acov(t + 1)) / var_plus;
      rho_odd = 1.0 - (w - mean_acov(t + 2)) / var_plus;
      if (rho_even + rho_odd >= 0.0) {
        rho[t + 1] = rho_even;
        rho[t + 2] = rho_odd;
      }
      t += 2;
    }
    const std::size_t max_t = t;
    if (rho_even > 0.0) rho[max_t + 1] = rho_even;
    for (std::size_t k = 1; k + 3 <= max_t; k += 2) {
      if (rho[k + 1] + rho[k + 2] > rho[k - 1] + rho[k]) {
        rho[k + 1] = (rho[k - 1] + rho[k]) / 2.0;
        rho[k + 2] = rho[k + 1];
      }
    }
    const double total = static_cast<double>(m) * n;
    double tau = -1.0;
    for (std::size_t k = 0; k <= max_t; ++k) tau += 2.0 * rho[k];
    tau += rho[max_t + 1];
    tau = std::max(tau, 1.0 / std::log10(total));
    report.ess[j] = total / tau;
  }

  for (std::size_t j = 0; j < d; ++j) {
    if (!(report.rhat[j] <= report.rhat_threshold))
      report.issues.push_back(report.names[j] + ": R-hat " + format_double(report.rhat[j]) +
                              " exceeds " + format_double(report.rhat_threshold));
    if (report.ess[j] < report.ess_threshold)
      report.issues.push_back(report.names[j] + ": ESS " + format_double(report.ess[j]) +
                              " below " + format_double(report.ess_threshold));
  }
  return report;
}

// ---------------------------------------------------------------------------
// Thinning and trace I/O

/// `count` draws at evenly spaced positions floor(i * total / count) of the
/// pooled (chain-major) kept draws. With equal-length chains and count a
/// multiple of the chain count, each chain contributes count / chains draws.
inline std::vector<std::vector<double>> thin_draws(std::span<const PosteriorChain> chains,
                                                   std::size_t count) {
  if (count == 0) throw usage_error("thin_draws: count must be positive");
  std::size_t total = 0;
  for (const auto& c : chains) total += c.size();
  if (count > total)
    throw usage_error("thin_draws: requested " + std::to_string(count) + " draws but only " +
                      std::to_string(total) + " are available");
  std::vector<std::vector<double>> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::size_t pooled = static_cast<std::size_t>(
        (static_cast<unsigned __int128>(i) * total) / count);
    std::size_t c = 0;
    while (pooled >= chains[c].size()) pooled -= chains[c++].size();
    const auto row = chains[c].draws.row(pooled);
    out.emplace_back(row.begin(), row.end());
  }
  return out;
}

inline std::vector<double> pooled_column(std::span<const PosteriorChain> chains, std::size_t j) {
  std::vector<double> out;
  for (const auto& c : chains)
    for (std::size_t t = 0; t < c.size(); ++t) out.push_back(c.draws(t, j));
  return out;
}

/// CSV trace: chain, iteration (absolute, burn-in included), one column per
/// coefficient.
inline void write_trace_csv(std::ostream& out, std::span<const PosteriorChain> chains,
                            std::span<const std::string> names) {
  out << "chain,iteration";
  for (const auto& n : names) out << ',' << csv_escape(n);
  out << '\n';
  for (const auto& c : chains) {
    for (std::size_t t = 0; t < c.size(); ++t) {
      out << c.chain_index << ',' << c.burn_in + t;
      for (double v : c.draws.row(t)) out << ',' << format_double(v);
      out << '\n';
    }
  }
}

/// Reads a trace written by write_trace_csv back into per-chain draws.
/// Acceptance rates and scales are not part of the trace.
inline std::vector<PosteriorChain> read_trace_csv(const CsvTable& table) {
  if (table.header.size() < 3 || table.header[0] != "chain" || table.header[1] != "iteration")
    throw data_error("trace: unexpected header");
  const std::size_t d = table.header.size() - 2;
  std::vector<PosteriorChain> chains;
  for (const auto& row : table.rows) {
    if (row.size() != d + 2) throw data_error("trace: ragged row");
    const auto index = parse_double(row[0]);
    const auto iteration = parse_double(row[1]);
    if (!index || !iteration) throw data_error("trace: bad chain/iteration field");
    const auto c = static_cast<std::size_t>(*index);
    if (chains.empty() || chains.back().chain_index != c) {
      PosteriorChain chain;
      chain.chain_index = c;
      chain.burn_in = static_cast<std::size_t>(*iteration);
      chains.push_back(std::move(chain));
    }
    std::vector<double> values(d);
    for (std::size_t j = 0; j < d; ++j) {
      const auto v = parse_double(row[j + 2]);
      if (!v) throw data_error("trace: non-numeric draw");
      values[j] = *v;
    }
    chains.back().draws.push_row(values);
  }
  return chains;
}

}  // namespace dmprior
