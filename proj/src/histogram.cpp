#include "moneygas/histogram.hpp"

#include <algorithm>
#include <cmath>

#include "moneygas/errors.hpp"

namespace moneygas {

MoneyHistogram::MoneyHistogram(double bin_width, double origin)
    : width_(bin_width), origin_(origin) {
  if (!(std::isfinite(bin_width) && bin_width > 0.0))
    throw UsageError("histogram bin width must be > 0");
  if (!std::isfinite(origin)) throw UsageError("histogram origin must be finite");
}

MoneyHistogram MoneyHistogram::from_balances(std::span<const double> balances,
                                             double bin_width,
                                             std::optional<double> origin) {
  double start = 0.0;
  if (origin) {
    start = *origin;
  } else if (!balances.empty()) {
    const double lo = *std::min_element(balances.begin(), balances.end());
    start = std::floor(lo / bin_width) * bin_width;
  }
  MoneyHistogram h(bin_width, start);
  h.add(balances);
  return h;
}

std::ptrdiff_t MoneyHistogram::bin_index(double balance) const {
  return static_cast<std::ptrdiff_t>(std::floor((balance - origin_) / width_));
}

void MoneyHistogram::ensure_bin(std::ptrdiff_t k) {
  if (k < 0) {
    const auto shift = static_cast<std::size_t>(-k);
    counts_.insert(counts_.begin(), shift, 0);
    origin_ -= static_cast<double>(shift) * width_;
  } else if (static_cast<std::size_t>(k) >= counts_.size()) {
    counts_.resize(static_cast<std::size_t>(k) + 1, 0);
  }
}

void MoneyHistogram::add(double balance) {
  if (!std::isfinite(balance)) throw UsageError("histogram sample must be finite");
  std::ptrdiff_t k = bin_index(balance);
  if (k < 0) {
    ensure_bin(k);
    k = 0;
  } else {
    ensure_bin(k);
  }
  ++counts_[static_cast<std::size_t>(k)];
  ++total_;
  if (total_ == 1) {
    min_ = max_ = balance;
  } else {
    min_ = std::min(min_, balance);
    max_ = std::max(max_, balance);
  }
  const double delta = balance - mean_;
  mean_ += delta / static_cast<double>(total_);
  m2_ += delta * (balance - mean_);
}

void MoneyHistogram::add(std::span<const double> balances) {
  for (double m : balances) add(m);
}

void MoneyHistogram::add_to_bin(std::ptrdiff_t k, std::uint64_t count) {
  if (count == 0) return;
  const double center = origin_ + (static_cast<double>(k) + 0.5) * width_;
  if (k < 0) {
    ensure_bin(k);
    k = 0;
  } else {
    ensure_bin(k);
  }
  counts_[static_cast<std::size_t>(k)] += count;
  // Moments of binned data use the bin centre.
  const double n_old = static_cast<double>(total_);
  const double n_add = static_cast<double>(count);
  const double n_new = n_old + n_add;
  const double delta = center - mean_;
  if (total_ == 0) {
    min_ = max_ = center;
  } else {
    min_ = std::min(min_, center);
    max_ = std::max(max_, center);
  }
  mean_ += delta * n_add / n_new;
  m2_ += delta * delta * n_old * n_add / n_new;
  total_ += count;
}

void MoneyHistogram::merge(const MoneyHistogram& other) {
  if (other.width_ != width_) throw UsageError("merge: bin widths differ");
  const double offset = (other.origin_ - origin_) / width_;
  const double rounded = std::round(offset);
  if (std::abs(offset - rounded) > 1e-9) throw UsageError("merge: grids are not aligned");
  if (other.total_ == 0) return;
  const auto shift = static_cast<std::ptrdiff_t>(rounded);
  if (total_ == 0) {
    *this = other;
    return;
  }
  const std::ptrdiff_t last = shift + static_cast<std::ptrdiff_t>(other.counts_.size()) - 1;
  if (shift < 0) ensure_bin(shift);  // moves origin_ down by -shift bins
  ensure_bin(last - std::min<std::ptrdiff_t>(shift, 0));
  const auto base = static_cast<std::ptrdiff_t>(std::round((other.origin_ - origin_) / width_));
  for (std::size_t k = 0; k < other.counts_.size(); ++k)
    counts_[static_cast<std::size_t>(base + static_cast<std::ptrdiff_t>(k))] += other.counts_[k];

  const double n_a = static_cast<double>(total_);
  const double n_b = static_cast<double>(other.total_);
  const double n = n_a + n_b;
  const double delta = other.mean_ - mean_;
  mean_ += delta * n_b / n;
  m2_ += other.m2_ + delta * delta * n_a * n_b / n;
  total_ += other.total_;
  min_ = std::min(min_, other.min_);
  max_ = std::max(max_, other.max_);
}

double MoneyHistogram::probability(std::size_t k) const {
  if (total_ == 0) throw UsageError("empty histogram");
  return static_cast<double>(counts_.at(k)) / static_cast<double>(total_);
}

std::vector<double> MoneyHistogram::probabilities() const {
  if (total_ == 0) throw UsageError("empty histogram");
  std::vector<double> p(counts_.size());
  for (std::size_t k = 0; k < counts_.size(); ++k)
    p[k] = static_cast<double>(counts_[k]) / static_cast<double>(total_);
  return p;
}

std::size_t MoneyHistogram::nonempty_bins() const {
  return static_cast<std::size_t>(
      std::count_if(counts_.begin(), counts_.end(), [](std::uint64_t c) { return c > 0; }));
}

double MoneyHistogram::sample_variance() const {
  return total_ > 1 ? m2_ / static_cast<double>(total_ - 1) : 0.0;
}

double default_bin_width(std::span<const double> balances) {
  if (balances.empty()) return 1.0;
  double mean = 0.0;
  for (double m : balances) mean += m;
  mean /= static_cast<double>(balances.size());
  if (mean > 0.0) return mean / 20.0;
  double var = 0.0;
  for (double m : balances) var += (m - mean) * (m - mean);
  var /= static_cast<double>(balances.size());
  return var > 0.0 ? std::sqrt(var) / 20.0 : 1.0;
}

}  // namespace moneygas
