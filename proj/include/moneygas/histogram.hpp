#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace moneygas {

/// Fixed-width binned distribution of balances with streaming moments.
///
/// Bin k covers [origin + k w, origin + (k + 1) w). The grid grows in whole
/// bins in either direction as samples arrive; origin stays on the lattice
/// origin + j w it was created with.
class MoneyHistogram {
 public:
  MoneyHistogram(double bin_width, double origin);

  /// Histogram of `balances`. Without an explicit origin the first bin
  /// starts at floor(min / w) * w.
  static MoneyHistogram from_balances(std::span<const double> balances, double bin_width,
                                      std::optional<double> origin = std::nullopt);

  void add(double balance);
  void add(std::span<const double> balances);
  /// Adds `count` samples located in bin k (used when reading binned data).
  void add_to_bin(std::ptrdiff_t k, std::uint64_t count);
  /// Merge another histogram on the same lattice (equal width, origins
  /// differing by a whole number of bins). Throws UsageError otherwise.
  void merge(const MoneyHistogram& other);

  double bin_width() const { return width_; }
  double origin() const { return origin_; }
  std::size_t num_bins() const { return counts_.size(); }
  std::span<const std::uint64_t> counts() const { return counts_; }
  std::uint64_t total() const { return total_; }
  bool empty() const { return total_ == 0; }

  double bin_left(std::size_t k) const { return origin_ + static_cast<double>(k) * width_; }
  double bin_center(std::size_t k) const { return bin_left(k) + 0.5 * width_; }
  double probability(std::size_t k) const;
  std::vector<double> probabilities() const;
  std::size_t nonempty_bins() const;

  /// Moments of the raw samples (not of bin centres).
  double sample_mean() const { return mean_; }
  double sample_variance() const;
  double min() const { return min_; }
  double max() const { return max_; }

 private:
  std::ptrdiff_t bin_index(double balance) const;
  void ensure_bin(std::ptrdiff_t k);

  double width_;
  double origin_;
  std::vector<std::uint64_t> counts_;
  std::uint64_t total_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
  double min_ = 0.0;
  double max_ = 0.0;
};

/// Default bin width: mean / 20, falling back to stddev / 20 and then 1 when
/// the mean is not positive.
double default_bin_width(std::span<const double> balances);

}  // namespace moneygas
