#include "moneygas/boundary.hpp"

#include <algorithm>
#include <cmath>

#include "moneygas/errors.hpp"

namespace moneygas {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

constexpr double kInf = std::numeric_limits<double>::infinity();

bool positive_finite(double x) { return std::isfinite(x) && x > 0.0; }

}  // namespace

double BoundaryPolicy::lower_bound() const {
  return std::visit(overloaded{
                        [](const NoDebt&) { return 0.0; },
                        [](const DebtCap& p) { return -p.max_debt; },
                        [](const ReserveRatioBank&) { return -kInf; },
                        [](const Unlimited&) { return -kInf; },
                        [](const UpperBound&) { return 0.0; },
                        [](const TwoSided& p) { return -p.max_debt; },
                    },
                    kind);
}

double BoundaryPolicy::upper_bound() const {
  return std::visit(overloaded{
                        [](const UpperBound& p) { return p.max_balance; },
                        [](const TwoSided& p) { return p.max_balance; },
                        [](const auto&) { return kInf; },
                    },
                    kind);
}

bool BoundaryPolicy::nonnegative() const { return lower_bound() >= 0.0; }

void BoundaryPolicy::validate() const {
  std::visit(overloaded{
                 [](const NoDebt&) {},
                 [](const DebtCap& p) {
                   if (!positive_finite(p.max_debt))
                     throw ConfigError("debt_cap: max_debt must be > 0");
                 },
                 [](const ReserveRatioBank& p) {
                   if (!(p.reserve_ratio > 0.0 && p.reserve_ratio <= 1.0))
                     throw ConfigError("reserve_ratio: R must lie in (0, 1]");
                 },
                 [](const Unlimited&) {},
                 [](const UpperBound& p) {
                   if (!positive_finite(p.max_balance))
                     throw ConfigError("upper_bound: max_balance must be > 0");
                 },
                 [](const TwoSided& p) {
                   if (!positive_finite(p.max_balance))
                     throw ConfigError("two_sided: max_balance must be > 0");
                   if (!positive_finite(p.max_debt))
                     throw ConfigError("two_sided: max_debt must be > 0");
                 },
             },
             kind);
  if (bankruptcy_threshold && !positive_finite(*bankruptcy_threshold))
    throw ConfigError("bankruptcy_threshold must be > 0");
  if (interest) {
    if (!std::isfinite(interest->deposit) || !std::isfinite(interest->loan) ||
        interest->deposit <= -1.0 || interest->loan <= -1.0)
      throw ConfigError("interest rates must be finite and > -1");
  }
}

std::string BoundaryPolicy::name() const {
  return std::visit(overloaded{
                        [](const NoDebt&) { return std::string("no_debt"); },
                        [](const DebtCap&) { return std::string("debt_cap"); },
                        [](const ReserveRatioBank&) { return std::string("reserve_ratio"); },
                        [](const Unlimited&) { return std::string("unlimited"); },
                        [](const UpperBound&) { return std::string("upper_bound"); },
                        [](const TwoSided&) { return std::string("two_sided"); },
                    },
                    kind);
}

const char* to_string(TransferStatus status) {
  switch (status) {
    case TransferStatus::Executed: return "executed";
    case TransferStatus::BlockedInsufficientFunds: return "blocked_insufficient_funds";
    case TransferStatus::BlockedDebtCap: return "blocked_debt_cap";
    case TransferStatus::BlockedBankCap: return "blocked_bank_cap";
    case TransferStatus::BlockedUpperBound: return "blocked_upper_bound";
  }
  return "unknown";
}

BankState BankState::for_policy(const BoundaryPolicy& policy, double monetary_base) {
  BankState bank;
  if (const auto* rr = std::get_if<ReserveRatioBank>(&policy.kind)) {
    bank.reserve_ratio = rr->reserve_ratio;
    bank.loan_cap = monetary_base * (1.0 - rr->reserve_ratio) / rr->reserve_ratio;
  }
  return bank;
}

double BankState::debt_increment(double payer_balance, double amount) {
  return std::max(0.0, amount - std::max(payer_balance, 0.0));
}

double BankState::repayment(double receiver_balance, double amount) {
  return std::min(amount, std::max(-receiver_balance, 0.0));
}

TransferStatus admit_transfer(const BoundaryPolicy& policy, const BankState& bank,
                              double payer_balance, double receiver_balance,
                              double amount) {
  const double after = payer_balance - amount;
  const auto floor_status = std::visit(
      overloaded{
          [&](const NoDebt&) {
            return payer_balance >= amount ? TransferStatus::Executed
                                           : TransferStatus::BlockedInsufficientFunds;
          },
          [&](const UpperBound&) {
            return payer_balance >= amount ? TransferStatus::Executed
                                           : TransferStatus::BlockedInsufficientFunds;
          },
          [&](const DebtCap& p) {
            return after >= -p.max_debt ? TransferStatus::Executed
                                        : TransferStatus::BlockedDebtCap;
          },
          [&](const TwoSided& p) {
            return after >= -p.max_debt ? TransferStatus::Executed
                                        : TransferStatus::BlockedDebtCap;
          },
          [&](const ReserveRatioBank&) {
            const double increment = BankState::debt_increment(payer_balance, amount);
            // Relative slack absorbs round-off in M_b (1 - R) / R and in the
            // running loan total; R = 1 keeps a cap of exactly zero.
            return bank.loans_outstanding + increment <= bank.loan_cap * (1.0 + 1e-12)
                       ? TransferStatus::Executed
                       : TransferStatus::BlockedBankCap;
          },
          [&](const Unlimited&) { return TransferStatus::Executed; },
      },
      policy.kind);
  if (floor_status != TransferStatus::Executed) return floor_status;
  if (receiver_balance + amount > policy.upper_bound())
    return TransferStatus::BlockedUpperBound;
  return TransferStatus::Executed;
}

void record_transfer(BankState& bank, double payer_balance, double receiver_balance,
                     double amount) {
  bank.loans_outstanding += BankState::debt_increment(payer_balance, amount) -
                            BankState::repayment(receiver_balance, amount);
  if (bank.loans_outstanding < 0.0) bank.loans_outstanding = 0.0;
}

double accrue_interest(std::span<double> balances, const InterestRates& rates,
                       BankState& bank) {
  double created = 0.0;
  double debt_growth = 0.0;
  for (double& m : balances) {
    if (m > 0.0) {
      const double delta = m * rates.deposit;
      m += delta;
      created += delta;
    } else if (m < 0.0) {
      const double delta = m * rates.loan;
      m += delta;
      created += delta;
      debt_growth -= delta;
    }
  }
  bank.loans_outstanding = std::max(0.0, bank.loans_outstanding + debt_growth);
  return created;
}

BankruptcyReport bankruptcy_scan(std::span<double> balances, double threshold,
                                 BankState& bank) {
  BankruptcyReport report;
  double erased = 0.0;
  for (std::size_t i = 0; i < balances.size(); ++i) {
    if (balances[i] < -threshold) {
      report.cases.push_back({i, -balances[i]});
      erased += -balances[i];
      balances[i] = 0.0;
    }
  }
  if (report.cases.empty()) return report;

  bank.loans_outstanding = std::max(0.0, bank.loans_outstanding - erased);
  bank.written_off += erased;

  double positive = 0.0;
  for (double m : balances)
    if (m > 0.0) positive += m;
  if (positive <= 0.0) {
    report.haircut = 1.0;
    report.unmatched = erased;
    return report;
  }
  const double removed = std::min(erased, positive);
  report.haircut = 1.0 - removed / positive;
  report.unmatched = erased - removed;
  for (double& m : balances)
    if (m > 0.0) m *= report.haircut;
  return report;
}

}  // namespace moneygas
