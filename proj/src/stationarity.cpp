#include "moneygas/stationarity.hpp"

#include <algorithm>

#include "moneygas/errors.hpp"
#include "moneygas/statistics.hpp"

namespace moneygas {

StationarityDetector::StationarityDetector(std::uint64_t window_sweeps, double epsilon,
                                           std::size_t k)
    : window_sweeps_(window_sweeps), epsilon_(epsilon), k_(k) {
  if (window_sweeps == 0) throw UsageError("stationarity: window must be >= 1 sweep");
  if (!(epsilon > 0.0 && epsilon <= 1.0)) throw UsageError("stationarity: epsilon must lie in (0, 1]");
  if (k < 2) throw UsageError("stationarity: k must be >= 2");
}

void StationarityDetector::add(std::uint64_t sweep, std::span<const double> balances) {
  if (verdict_.stationary) return;
  const std::uint64_t index = sweep / window_sweeps_;
  if (current_ && index < current_->index)
    throw UsageError("stationarity: snapshots must arrive in sweep order");
  if (current_ && index != current_->index) close_current();
  if (verdict_.stationary) return;
  if (!current_) current_ = Window{index, 0, {}};
  current_->samples.insert(current_->samples.end(), balances.begin(), balances.end());
  ++current_->snapshots;
}

void StationarityDetector::close_current() {
  Window w = std::move(*current_);
  current_.reset();
  if (full_window_snapshots_ == 0) full_window_snapshots_ = w.snapshots;
  std::sort(w.samples.begin(), w.samples.end());

  // Windows must be consecutive; a gap restarts the group.
  if (!recent_.empty() && recent_.back().index + 1 != w.index) recent_.clear();
  recent_.push_back(std::move(w));
  ++verdict_.windows;
  if (recent_.size() > k_) recent_.pop_front();
  if (recent_.size() < k_) return;

  double worst = 0.0;
  for (std::size_t a = 0; a < recent_.size(); ++a)
    for (std::size_t b = a + 1; b < recent_.size(); ++b)
      worst = std::max(worst, ks_two_sample_sorted(recent_[a].samples, recent_[b].samples));
  verdict_.last_max_ks = worst;
  if (worst < epsilon_) {
    verdict_.stationary = true;
    verdict_.first_stationary_sweep = recent_.front().index * window_sweeps_;
    recent_.clear();
  }
}

StationarityVerdict StationarityDetector::finish() {
  if (current_ && !verdict_.stationary &&
      (full_window_snapshots_ == 0 || current_->snapshots >= full_window_snapshots_))
    close_current();
  current_.reset();
  return verdict_;
}

StationarityVerdict detect_stationarity(std::span<const Snapshot> series,
                                        std::uint64_t window_sweeps, double epsilon,
                                        std::size_t k) {
  StationarityDetector detector(window_sweeps, epsilon, k);
  for (const auto& s : series) detector.add(s.sweep, s.balances);
  return detector.finish();
}

}  // namespace moneygas
