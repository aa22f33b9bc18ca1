#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "moneygas/histogram.hpp"

namespace moneygas {

/// -sum P_k ln P_k over nonempty bins. Throws UsageError on an empty histogram.
double entropy_per_agent(const MoneyHistogram& hist);

/// ln(N! / prod N_k!) with exact log-gamma.
double log_multiplicity(std::span<const std::uint64_t> counts);

/// Mean money per agent. Throws UsageError on an empty input.
double money_temperature(std::span<const double> balances);

/// sum_k x(centre_k) P_k.
double expectation(const MoneyHistogram& hist,
                   const std::function<double(double)>& observable);

/// Probabilities of an exponential law with the given temperature integrated
/// over bins of width w starting at its support edge: (1 - q) q^k, q = e^{-w/T}.
std::vector<double> binned_exponential_pmf(double bin_width, double temperature,
                                           std::size_t bins);

/// Entropy of the infinite binned exponential above:
/// -ln(1 - q) - q ln q / (1 - q).
double binned_exponential_entropy(double bin_width, double temperature);

enum class FitFamily { Exponential, Gamma, PowerLawTail };

const char* to_string(FitFamily family);

struct FitResult {
  FitFamily family = FitFamily::Exponential;
  double temperature = 0.0;  // T (Exponential, Gamma)
  double beta = 0.0;         // power-law prefactor exponent (Gamma)
  double tail_exponent = 0.0;
  double ks = 1.0;
  double support_shift = 0.0;
  std::size_t samples = 0;
};

/// Maximum-likelihood shifted exponential: T = mean - support_shift, with the
/// KS distance to the fitted CDF. Needs 10 nonempty bins (at `bin_width`, or
/// the default width when 0) at or above the shift; throws FitError for
/// degenerate or insufficient data.
FitResult fit_exponential(std::span<const double> samples, double support_shift,
                          double bin_width = 0.0);

/// Binned maximum likelihood for histogram input. The bins are counted from
/// support_shift, which must sit on the histogram lattice.
FitResult fit_exponential(const MoneyHistogram& hist, double support_shift);

/// Method-of-moments Gamma: shape k = mean^2 / var, beta = k - 1, T = var / mean.
FitResult fit_gamma(std::span<const double> samples);
FitResult fit_gamma(const MoneyHistogram& hist);

struct HillEstimate {
  double alpha = 0.0;             // countercumulative exponent
  double density_exponent = 0.0;  // alpha + 1
  std::size_t tail_samples = 0;
  double threshold = 0.0;  // the (k+1)-th largest sample
  /// False when alpha > 5: no evidence of a power-law tail.
  bool power_tail = false;
};

/// Hill estimator over the top `tail_fraction` order statistics. Requires
/// tail_fraction in (0, 0.2] and at least 100 tail samples above a positive
/// threshold; throws FitError otherwise.
HillEstimate tail_exponent_hill(std::span<const double> samples,
                                double tail_fraction = 0.05);

/// Sup-norm distance between the empirical CDF of `samples` and a continuous
/// reference CDF.
double ks_distance(std::span<const double> samples,
                   const std::function<double(double)>& reference_cdf);

/// Two-sample KS statistic. The sorted variant expects ascending inputs.
double ks_two_sample(std::span<const double> a, std::span<const double> b);
double ks_two_sample_sorted(std::span<const double> a, std::span<const double> b);

/// Max |CDF_p - CDF_q| for two probability vectors on a shared lattice
/// (the shorter one is padded with zeros).
double ks_distance_pmf(std::span<const double> p, std::span<const double> q);

/// Weighted least-squares line through ln P_k against bin centre, over
/// nonempty bins whose centre lies in [lo, hi]; weights are the bin counts.
struct LogLinearFit {
  double slope = 0.0;  // d ln P / dm; the fitted temperature is -1 / slope
  double intercept = 0.0;
  std::size_t bins = 0;
};
LogLinearFit fit_log_linear(const MoneyHistogram& hist, double lo, double hi);

/// Separate exponential fits of the positive balances and of the magnitudes
/// of the negative balances, together with the per-agent totals of positive
/// and negative money.
struct TwoSidedFit {
  FitResult positive;
  FitResult negative;
  double positive_money_per_agent = 0.0;
  double negative_money_per_agent = 0.0;
  double positive_fraction = 0.0;
  double negative_fraction = 0.0;
};
TwoSidedFit fit_two_sided(std::span<const double> samples, double bin_width = 0.0);

}  // namespace moneygas
