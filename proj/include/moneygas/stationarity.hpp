#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <vector>

#include "moneygas/simulation.hpp"

namespace moneygas {

struct StationarityVerdict {
  bool stationary = false;
  /// First sweep of the earliest window in the run that triggered the verdict.
  std::optional<std::uint64_t> first_stationary_sweep;
  std::size_t windows = 0;  // complete windows examined
  /// Largest pairwise KS distance within the most recent group of k windows.
  double last_max_ks = 1.0;
};

/// Streaming stationarity test.
///
/// Snapshots are pooled into consecutive windows of `window_sweeps` sweeps
/// (window j holds sweeps [j W, (j + 1) W)). The series is declared
/// stationary at the first window i for which windows i .. i + k - 1 all have
/// pairwise two-sample KS distance below epsilon.
class StationarityDetector {
 public:
  StationarityDetector(std::uint64_t window_sweeps, double epsilon, std::size_t k);

  void add(std::uint64_t sweep, std::span<const double> balances);
  /// Closes the window in progress if it holds as many snapshots as the
  /// first complete window did (trailing partial windows are dropped).
  StationarityVerdict finish();
  const StationarityVerdict& verdict() const { return verdict_; }

 private:
  struct Window {
    std::uint64_t index = 0;
    std::size_t snapshots = 0;
    std::vector<double> samples;  // sorted once closed
  };

  void close_current();

  std::uint64_t window_sweeps_;
  double epsilon_;
  std::size_t k_;
  std::optional<Window> current_;
  std::deque<Window> recent_;
  std::size_t full_window_snapshots_ = 0;
  StationarityVerdict verdict_;
};

StationarityVerdict detect_stationarity(std::span<const Snapshot> series,
                                        std::uint64_t window_sweeps, double epsilon,
                                        std::size_t k);

}  // namespace moneygas
