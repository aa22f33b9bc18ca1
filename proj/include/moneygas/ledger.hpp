#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "moneygas/boundary.hpp"
#include "moneygas/rules.hpp"

namespace moneygas {

/// Real: amounts and balances are doubles. Integer: every amount is rounded
/// to the nearest whole unit so balances stay integral and sums are exact.
enum class MoneyMode { Real, Integer };

struct SimConfig {
  std::size_t num_agents = 2;
  double initial_balance = 0.0;
  /// Per-agent endowments; when non-empty they replace initial_balance and
  /// must have num_agents entries.
  std::vector<double> initial_balances;
  ExchangeRule rule = FixedAmount{};
  BoundaryPolicy boundary;
  std::uint64_t sweeps = 0;
  std::uint64_t seed = 0;
  std::uint64_t snapshot_every = 1;
  /// Histogram bin width; 0 selects mean money / 20 at analysis time.
  double bin_width = 0.0;
  MoneyMode mode = MoneyMode::Real;

  /// Throws ConfigError.
  void validate() const;
};

struct TransferOutcome {
  TransferStatus status = TransferStatus::Executed;
  double amount = 0.0;
  std::size_t payer = 0;
  std::size_t receiver = 0;

  bool executed() const { return status == TransferStatus::Executed; }
};

/// Agent balances plus the monetary base and bank bookkeeping.
///
/// Transfers conserve money pairwise. Interest is the only external source
/// of net worth and is accumulated in external_flux(); bankruptcy annihilates
/// debt against positive money and leaves net worth unchanged, so
/// sum(balances) == monetary_base() + external_flux() up to rounding.
class AgentLedger {
 public:
  AgentLedger(std::size_t num_agents, double initial_balance, BoundaryPolicy policy);
  /// Explicit endowments; the monetary base is their sum.
  AgentLedger(std::vector<double> balances, BoundaryPolicy policy);

  static AgentLedger init(const SimConfig& config);

  std::span<const double> balances() const { return balances_; }
  std::size_t num_agents() const { return balances_.size(); }
  double monetary_base() const { return monetary_base_; }
  const BankState& bank() const { return bank_; }
  const BoundaryPolicy& policy() const { return policy_; }
  std::uint64_t transaction_count() const { return transactions_; }
  double external_flux() const { return external_flux_; }

  /// Bookkeeping total, M_b + interest flux (O(1); used to price transfers).
  double total_money() const { return monetary_base_ + external_flux_; }
  double mean_money() const { return total_money() / static_cast<double>(num_agents()); }

  /// sum(balances) - total_money(), recomputed from the balances.
  double conservation_residual() const;

  /// Moves `amount` from payer to receiver if the boundary policy admits it.
  /// Counts as one transaction either way. Throws UsageError on bad indices
  /// or a negative amount.
  TransferOutcome attempt_transfer(std::size_t payer, std::size_t receiver, double amount);

  /// Sweep-boundary hooks; both are no-ops unless configured in the policy.
  double accrue_interest();
  BankruptcyReport bankruptcy_scan();

  /// Sets agent i's balance to balances[perm[i]]; perm must be a permutation.
  void relabel(std::span<const std::size_t> perm);

 private:
  std::vector<double> balances_;
  double monetary_base_ = 0.0;
  BoundaryPolicy policy_;
  BankState bank_;
  std::uint64_t transactions_ = 0;
  double external_flux_ = 0.0;
};

}  // namespace moneygas
