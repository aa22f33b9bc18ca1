#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "moneygas/ledger.hpp"
#include "moneygas/rng.hpp"

namespace moneygas {

struct Snapshot {
  std::uint64_t sweep = 0;
  std::vector<double> balances;
};

/// Running totals of the sweep-boundary hooks.
struct HookTotals {
  double interest_created = 0.0;
  std::uint64_t bankruptcies = 0;
  double debt_erased = 0.0;
};

/// One Monte Carlo replicate: ledger, bound rule and its own random stream.
///
/// A sweep is num_agents transaction attempts. Each attempt draws an ordered
/// (payer, receiver) pair uniformly among distinct agents, asks the rule for
/// the amount (or the joint post-balances for saving rules) and submits the
/// transfer to the ledger. Interest and then bankruptcy run after every sweep.
class Simulation {
 public:
  /// Stream seeded from config.seed.
  explicit Simulation(SimConfig config);
  /// Stream seeded from an explicit seed (replicates derive it from the master seed).
  Simulation(SimConfig config, std::uint64_t stream_seed);

  const SimConfig& config() const { return config_; }
  const ExchangeRule& rule() const { return config_.rule; }
  const AgentLedger& ledger() const { return ledger_; }
  AgentLedger& ledger() { return ledger_; }
  std::uint64_t sweeps_done() const { return sweeps_done_; }
  const HookTotals& hook_totals() const { return hooks_; }

  using SnapshotCallback =
      std::function<void(std::uint64_t sweep, std::span<const double> balances)>;

  /// Runs `sweeps` more sweeps, calling on_snapshot whenever the absolute
  /// sweep count reaches a multiple of snapshot_every.
  void run(std::uint64_t sweeps, const SnapshotCallback& on_snapshot = {});

  /// Snapshot of the current state, then one every snapshot_every sweeps.
  std::vector<Snapshot> run_sweeps(std::uint64_t sweeps);

  /// A single transaction attempt.
  TransferOutcome step();

 private:
  template <class Rule>
  void sweep_with(const Rule& rule);
  template <class Rule>
  TransferOutcome attempt_with(const Rule& rule);
  void end_of_sweep();

  SimConfig config_;
  AgentLedger ledger_;
  Rng rng_;
  std::uint64_t sweeps_done_ = 0;
  HookTotals hooks_;
};

}  // namespace moneygas
