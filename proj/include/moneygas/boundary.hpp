#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace moneygas {

// Boundary regimes. Balances are net worth: cash counts positive, debt negative.

struct NoDebt {};

struct DebtCap {
  double max_debt = 0.0;  // m_d: balances stay >= -max_debt
};

/// Global lending limit: total outstanding debt <= M_b (1 - R) / R.
struct ReserveRatioBank {
  double reserve_ratio = 1.0;
};

struct Unlimited {};

/// Ceiling at max_balance with the usual floor at zero.
struct UpperBound {
  double max_balance = 0.0;
};

struct TwoSided {
  double max_balance = 0.0;
  double max_debt = 0.0;
};

using BoundaryKind =
    std::variant<NoDebt, DebtCap, ReserveRatioBank, Unlimited, UpperBound, TwoSided>;

/// Per-sweep multiplicative rates: positive balances grow by `deposit`,
/// negative balances by `loan`.
struct InterestRates {
  double deposit = 0.0;
  double loan = 0.0;
};

struct BoundaryPolicy {
  BoundaryKind kind = NoDebt{};
  std::optional<double> bankruptcy_threshold;
  std::optional<InterestRates> interest;

  /// Lowest admissible balance (-inf when there is no per-agent floor).
  double lower_bound() const;
  /// Highest admissible balance (+inf when unbounded).
  double upper_bound() const;
  /// True when every balance is guaranteed to stay >= 0.
  bool nonnegative() const;

  /// Throws ConfigError on out-of-range parameters.
  void validate() const;
  std::string name() const;
};

enum class TransferStatus {
  Executed,
  BlockedInsufficientFunds,
  BlockedDebtCap,
  BlockedBankCap,
  BlockedUpperBound,
};

const char* to_string(TransferStatus status);

/// Bank bookkeeping. Outstanding loans track the sum of negative balances;
/// under ReserveRatioBank they are capped at M_b (1 - R) / R, otherwise the
/// cap is infinite and the bank is passive accounting.
struct BankState {
  double reserve_ratio = 1.0;
  double loans_outstanding = 0.0;
  double loan_cap = std::numeric_limits<double>::infinity();
  double written_off = 0.0;  // cumulative debt erased by bankruptcy

  static BankState for_policy(const BoundaryPolicy& policy, double monetary_base);

  /// New borrowing implied by paying `amount` out of `payer_balance`.
  static double debt_increment(double payer_balance, double amount);
  /// Debt repaid when `amount` arrives at `receiver_balance`.
  static double repayment(double receiver_balance, double amount);
};

/// Admission decision for a proposed transfer. Pure: the bank is not mutated.
TransferStatus admit_transfer(const BoundaryPolicy& policy, const BankState& bank,
                              double payer_balance, double receiver_balance,
                              double amount);

/// Updates outstanding loans for an executed transfer (borrowing by the payer,
/// repayment by the receiver).
void record_transfer(BankState& bank, double payer_balance, double receiver_balance,
                     double amount);

/// Applies one sweep of interest in place and returns the net money created
/// (negative if loan interest dominates). Outstanding loans follow the debts.
double accrue_interest(std::span<double> balances, const InterestRates& rates,
                       BankState& bank);

struct Bankruptcy {
  std::size_t agent = 0;
  double erased_debt = 0.0;
};

struct BankruptcyReport {
  std::vector<Bankruptcy> cases;
  /// Factor applied to every positive balance to annihilate the lenders' claims.
  double haircut = 1.0;
  /// Erased debt that could not be matched by positive money (only possible
  /// once interest has destroyed net worth).
  double unmatched = 0.0;
};

/// Resets every balance below -threshold to zero, in ascending agent index.
/// The erased debt leaves the bank's loan book and the same amount of
/// positive money is removed pro rata from positive balances, so net worth
/// is unchanged.
BankruptcyReport bankruptcy_scan(std::span<double> balances, double threshold,
                                 BankState& bank);

}  // namespace moneygas
