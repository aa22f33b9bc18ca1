#include "moneygas/statistics.hpp"

#include <algorithm>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <numeric>

#include "moneygas/errors.hpp"

namespace moneygas {

namespace {

std::vector<double> sorted_copy(std::span<const double> samples) {
  std::vector<double> v(samples.begin(), samples.end());
  std::sort(v.begin(), v.end());
  return v;
}

struct Moments {
  double mean = 0.0;
  double variance = 0.0;
};

Moments moments(std::span<const double> samples) {
  Moments m;
  const auto n = static_cast<double>(samples.size());
  m.mean = std::accumulate(samples.begin(), samples.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : samples) ss += (x - m.mean) * (x - m.mean);
  m.variance = samples.size() > 1 ? ss / (n - 1.0) : 0.0;
  return m;
}

// KS of binned data: compare the empirical CDF with the reference at every
// right bin edge.
double ks_binned(const MoneyHistogram& hist, const std::function<double(double)>& cdf) {
  const auto counts = hist.counts();
  const double n = static_cast<double>(hist.total());
  double cum = 0.0;
  double d = std::abs(cdf(hist.bin_left(0)));
  for (std::size_t k = 0; k < counts.size(); ++k) {
    cum += static_cast<double>(counts[k]);
    d = std::max(d, std::abs(cum / n - cdf(hist.bin_left(k) + hist.bin_width())));
  }
  return d;
}

}  // namespace

double entropy_per_agent(const MoneyHistogram& hist) {
  if (hist.empty()) throw UsageError("entropy of an empty histogram");
  const double n = static_cast<double>(hist.total());
  double s = 0.0;
  for (std::uint64_t c : hist.counts()) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / n;
    s -= p * std::log(p);
  }
  return s;
}

double log_multiplicity(std::span<const std::uint64_t> counts) {
  std::uint64_t n = 0;
  double denom = 0.0;
  for (std::uint64_t c : counts) {
    n += c;
    denom += std::lgamma(static_cast<double>(c) + 1.0);
  }
  return std::lgamma(static_cast<double>(n) + 1.0) - denom;
}

double money_temperature(std::span<const double> balances) {
  if (balances.empty()) throw UsageError("money temperature of an empty population");
  return std::accumulate(balances.begin(), balances.end(), 0.0) /
         static_cast<double>(balances.size());
}

double expectation(const MoneyHistogram& hist,
                   const std::function<double(double)>& observable) {
  if (hist.empty()) throw UsageError("expectation over an empty histogram");
  const auto counts = hist.counts();
  const double n = static_cast<double>(hist.total());
  double acc = 0.0;
  for (std::size_t k = 0; k < counts.size(); ++k)
    if (counts[k] > 0) acc += observable(hist.bin_center(k)) * static_cast<double>(counts[k]) / n;
  return acc;
}

std::vector<double> binned_exponential_pmf(double bin_width, double temperature,
                                           std::size_t bins) {
  const double q = std::exp(-bin_width / temperature);
  std::vector<double> p(bins);
  double qk = 1.0;
  for (std::size_t k = 0; k < bins; ++k) {
    p[k] = (1.0 - q) * qk;
    qk *= q;
  }
  return p;
}

double binned_exponential_entropy(double bin_width, double temperature) {
  const double q = std::exp(-bin_width / temperature);
  return -std::log1p(-q) - q * std::log(q) / (1.0 - q);
}

const char* to_string(FitFamily family) {
  switch (family) {
    case FitFamily::Exponential: return "exponential";
    case FitFamily::Gamma: return "gamma";
    case FitFamily::PowerLawTail: return "power_law_tail";
  }
  return "unknown";
}

FitResult fit_exponential(std::span<const double> samples, double support_shift,
                          double bin_width) {
  if (samples.size() < 2) throw FitError("exponential fit: too few samples");
  const auto mom = moments(samples);
  if (!(mom.variance > 0.0)) throw FitError("exponential fit: zero variance");
  const auto sorted = sorted_copy(samples);
  if (sorted.front() < support_shift)
    throw FitError("exponential fit: samples below the support shift");

  const double width = bin_width > 0.0 ? bin_width : default_bin_width(samples);
  const auto hist = MoneyHistogram::from_balances(sorted, width, support_shift);
  if (hist.nonempty_bins() < 10) throw FitError("exponential fit: fewer than 10 nonempty bins");

  FitResult fit;
  fit.family = FitFamily::Exponential;
  fit.support_shift = support_shift;
  fit.samples = samples.size();
  fit.temperature = mom.mean - support_shift;
  if (!(fit.temperature > 0.0)) throw FitError("exponential fit: nonpositive temperature");
  const double t = fit.temperature;
  fit.ks = ks_distance(sorted, [&](double x) {
    return x <= support_shift ? 0.0 : -std::expm1(-(x - support_shift) / t);
  });
  return fit;
}

FitResult fit_exponential(const MoneyHistogram& hist, double support_shift) {
  if (hist.total() < 2) throw FitError("exponential fit: too few samples");
  if (hist.nonempty_bins() < 10) throw FitError("exponential fit: fewer than 10 nonempty bins");
  const double w = hist.bin_width();
  const double offset = (hist.origin() - support_shift) / w;
  if (std::abs(offset - std::round(offset)) > 1e-9 || std::round(offset) < 0.0)
    throw FitError("exponential fit: support shift must sit on or below the histogram lattice");

  const auto counts = hist.counts();
  double index_sum = 0.0;
  for (std::size_t k = 0; k < counts.size(); ++k)
    index_sum += (static_cast<double>(k) + std::round(offset)) * static_cast<double>(counts[k]);
  const double mean_index = index_sum / static_cast<double>(hist.total());
  if (!(mean_index > 0.0)) throw FitError("exponential fit: all mass in the first bin");

  // Geometric MLE on bin indices: q = kbar / (1 + kbar), T = -w / ln q.
  const double q = mean_index / (1.0 + mean_index);
  FitResult fit;
  fit.family = FitFamily::Exponential;
  fit.support_shift = support_shift;
  fit.samples = hist.total();
  fit.temperature = -w / std::log(q);
  const double t = fit.temperature;
  fit.ks = ks_binned(hist, [&](double x) {
    return x <= support_shift ? 0.0 : -std::expm1(-(x - support_shift) / t);
  });
  return fit;
}

FitResult fit_gamma(std::span<const double> samples) {
  if (samples.size() < 2) throw FitError("gamma fit: too few samples");
  const auto sorted = sorted_copy(samples);
  if (sorted.front() < 0.0) throw FitError("gamma fit: negative samples");
  const auto mom = moments(samples);
  if (!(mom.variance > 0.0) || !(mom.mean > 0.0)) throw FitError("gamma fit: degenerate data");

  FitResult fit;
  fit.family = FitFamily::Gamma;
  fit.samples = samples.size();
  const double shape = mom.mean * mom.mean / mom.variance;
  fit.beta = shape - 1.0;
  fit.temperature = mom.variance / mom.mean;
  const double t = fit.temperature;
  fit.ks = ks_distance(sorted, [&](double x) {
    return x <= 0.0 ? 0.0 : boost::math::gamma_p(shape, x / t);
  });
  return fit;
}

FitResult fit_gamma(const MoneyHistogram& hist) {
  if (hist.total() < 2) throw FitError("gamma fit: too few samples");
  if (hist.origin() < 0.0) throw FitError("gamma fit: negative support");
  const double mean = hist.sample_mean();
  const double var = hist.sample_variance();
  if (!(var > 0.0) || !(mean > 0.0)) throw FitError("gamma fit: degenerate data");
  FitResult fit;
  fit.family = FitFamily::Gamma;
  fit.samples = hist.total();
  const double shape = mean * mean / var;
  fit.beta = shape - 1.0;
  fit.temperature = var / mean;
  const double t = fit.temperature;
  fit.ks = ks_binned(hist, [&](double x) {
    return x <= 0.0 ? 0.0 : boost::math::gamma_p(shape, x / t);
  });
  return fit;
}

HillEstimate tail_exponent_hill(std::span<const double> samples, double tail_fraction) {
  if (!(tail_fraction > 0.0 && tail_fraction <= 0.2))
    throw FitError("hill: tail fraction must lie in (0, 0.2]");
  const auto k = static_cast<std::size_t>(std::floor(tail_fraction * static_cast<double>(samples.size())));
  if (k < 100 || k >= samples.size()) throw FitError("hill: fewer than 100 tail samples");

  std::vector<double> v(samples.begin(), samples.end());
  // Top k values end up in v[0..k), the threshold at v[k].
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(k), v.end(),
                   std::greater<>());
  const double threshold = v[k];
  if (!(threshold > 0.0)) throw FitError("hill: tail threshold must be positive");

  double log_sum = 0.0;
  for (std::size_t i = 0; i < k; ++i) log_sum += std::log(v[i] / threshold);
  if (!(log_sum > 0.0)) throw FitError("hill: degenerate tail");

  HillEstimate h;
  h.tail_samples = k;
  h.threshold = threshold;
  h.alpha = static_cast<double>(k) / log_sum;
  h.density_exponent = h.alpha + 1.0;
  h.power_tail = h.alpha <= 5.0;
  return h;
}

double ks_distance(std::span<const double> samples,
                   const std::function<double(double)>& reference_cdf) {
  if (samples.empty()) throw UsageError("ks: empty sample");
  std::vector<double> owned;
  std::span<const double> s = samples;
  if (!std::is_sorted(samples.begin(), samples.end())) {
    owned = sorted_copy(samples);
    s = owned;
  }
  const double n = static_cast<double>(s.size());
  double d = 0.0;
  std::size_t i = 0;
  while (i < s.size()) {
    std::size_t j = i;
    while (j < s.size() && s[j] == s[i]) ++j;  // tie block [i, j)
    const double f = reference_cdf(s[i]);
    d = std::max({d, std::abs(static_cast<double>(i) / n - f),
                  std::abs(static_cast<double>(j) / n - f)});
    i = j;
  }
  return d;
}

double ks_two_sample_sorted(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw UsageError("ks: empty sample");
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0;
  std::size_t j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == x) ++i;
    while (j < b.size() && b[j] == x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

double ks_two_sample(std::span<const double> a, std::span<const double> b) {
  const auto sa = sorted_copy(a);
  const auto sb = sorted_copy(b);
  return ks_two_sample_sorted(sa, sb);
}

double ks_distance_pmf(std::span<const double> p, std::span<const double> q) {
  const std::size_t n = std::max(p.size(), q.size());
  double cp = 0.0;
  double cq = 0.0;
  double d = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    if (k < p.size()) cp += p[k];
    if (k < q.size()) cq += q[k];
    d = std::max(d, std::abs(cp - cq));
  }
  return d;
}

LogLinearFit fit_log_linear(const MoneyHistogram& hist, double lo, double hi) {
  const auto counts = hist.counts();
  const double n = static_cast<double>(hist.total());
  double sw = 0.0, sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  LogLinearFit fit;
  for (std::size_t k = 0; k < counts.size(); ++k) {
    const double x = hist.bin_center(k);
    if (counts[k] == 0 || x < lo || x > hi) continue;
    const double w = static_cast<double>(counts[k]);
    const double y = std::log(w / n);
    sw += w;
    sx += w * x;
    sy += w * y;
    sxx += w * x * x;
    sxy += w * x * y;
    ++fit.bins;
  }
  if (fit.bins < 2) throw FitError("log-linear fit: fewer than two nonempty bins in range");
  const double det = sw * sxx - sx * sx;
  if (!(det > 0.0)) throw FitError("log-linear fit: degenerate abscissae");
  fit.slope = (sw * sxy - sx * sy) / det;
  fit.intercept = (sy - fit.slope * sx) / sw;
  return fit;
}

TwoSidedFit fit_two_sided(std::span<const double> samples, double bin_width) {
  if (samples.empty()) throw FitError("two-sided fit: empty sample");
  std::vector<double> pos;
  std::vector<double> neg;
  double pos_sum = 0.0;
  double neg_sum = 0.0;
  for (double m : samples) {
    if (m > 0.0) {
      pos.push_back(m);
      pos_sum += m;
    } else if (m < 0.0) {
      neg.push_back(-m);
      neg_sum -= m;
    }
  }
  const double n = static_cast<double>(samples.size());
  TwoSidedFit fit;
  fit.positive = fit_exponential(pos, 0.0, bin_width);
  fit.negative = fit_exponential(neg, 0.0, bin_width);
  fit.positive_money_per_agent = pos_sum / n;
  fit.negative_money_per_agent = neg_sum / n;
  fit.positive_fraction = static_cast<double>(pos.size()) / n;
  fit.negative_fraction = static_cast<double>(neg.size()) / n;
  return fit;
}

}  // namespace moneygas
