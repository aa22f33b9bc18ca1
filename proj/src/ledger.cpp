#include "moneygas/ledger.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "moneygas/errors.hpp"

namespace moneygas {

namespace {

bool integral(double x) { return std::floor(x) == x; }

}  // namespace

void SimConfig::validate() const {
  if (num_agents < 2) throw ConfigError("num_agents must be >= 2");
  if (!(std::isfinite(initial_balance) && initial_balance >= 0.0))
    throw ConfigError("initial_balance must be finite and >= 0");
  if (snapshot_every == 0) throw ConfigError("snapshot_every must be >= 1");
  if (!(std::isfinite(bin_width) && bin_width >= 0.0))
    throw ConfigError("bin_width must be >= 0 (0 selects the default)");
  validate_rule(rule);
  boundary.validate();

  if (std::holds_alternative<Multiplicative>(rule) || is_pairwise_rule(rule)) {
    if (!boundary.nonnegative())
      throw ConfigError(rule_name(rule) + " rule requires a boundary with a floor at 0");
  }
  if (const auto* r = std::get_if<RandomSavingPropensity>(&rule);
      r && r->bound() && r->propensities.size() != num_agents)
    throw ConfigError("random_saving: propensity table size differs from num_agents");

  if (mode == MoneyMode::Integer) {
    if (is_pairwise_rule(rule))
      throw ConfigError("integer mode supports the one-way rules only");
    if (!integral(initial_balance))
      throw ConfigError("integer mode requires an integral initial_balance");
    if (const auto* f = std::get_if<FixedAmount>(&rule); f && !integral(f->amount))
      throw ConfigError("integer mode requires an integral fixed amount");
  }
  if (initial_balance > boundary.upper_bound())
    throw ConfigError("initial_balance exceeds the upper bound");
  if (!initial_balances.empty()) {
    if (initial_balances.size() != num_agents)
      throw ConfigError("initial_balances must have num_agents entries");
    for (double m : initial_balances) {
      if (!(std::isfinite(m) && m >= 0.0 && m <= boundary.upper_bound()))
        throw ConfigError("initial_balances entries must lie in [0, upper bound]");
      if (mode == MoneyMode::Integer && !integral(m))
        throw ConfigError("integer mode requires integral initial_balances");
    }
  }
}

AgentLedger::AgentLedger(std::size_t num_agents, double initial_balance,
                         BoundaryPolicy policy)
    : balances_(num_agents, initial_balance),
      monetary_base_(static_cast<double>(num_agents) * initial_balance),
      policy_(std::move(policy)) {
  if (num_agents < 2) throw ConfigError("num_agents must be >= 2");
  if (!(std::isfinite(initial_balance) && initial_balance >= 0.0))
    throw ConfigError("initial_balance must be finite and >= 0");
  policy_.validate();
  bank_ = BankState::for_policy(policy_, monetary_base_);
}

AgentLedger::AgentLedger(std::vector<double> balances, BoundaryPolicy policy)
    : balances_(std::move(balances)), policy_(std::move(policy)) {
  if (balances_.size() < 2) throw ConfigError("num_agents must be >= 2");
  for (double m : balances_)
    if (!(std::isfinite(m) && m >= 0.0)) throw ConfigError("balances must be finite and >= 0");
  monetary_base_ = std::accumulate(balances_.begin(), balances_.end(), 0.0);
  policy_.validate();
  bank_ = BankState::for_policy(policy_, monetary_base_);
}

AgentLedger AgentLedger::init(const SimConfig& config) {
  config.validate();
  if (!config.initial_balances.empty())
    return AgentLedger(config.initial_balances, config.boundary);
  return AgentLedger(config.num_agents, config.initial_balance, config.boundary);
}

double AgentLedger::conservation_residual() const {
  const double sum = std::accumulate(balances_.begin(), balances_.end(), 0.0);
  return sum - total_money();
}

TransferOutcome AgentLedger::attempt_transfer(std::size_t payer, std::size_t receiver,
                                              double amount) {
  const std::size_t n = balances_.size();
  if (payer >= n || receiver >= n) throw UsageError("agent index out of range");
  if (payer == receiver) throw UsageError("payer and receiver must differ");
  if (!(amount >= 0.0)) throw UsageError("transfer amount must be >= 0");

  ++transactions_;
  double& from = balances_[payer];
  double& to = balances_[receiver];
  const auto status = admit_transfer(policy_, bank_, from, to, amount);
  if (status == TransferStatus::Executed) {
    record_transfer(bank_, from, to, amount);
    from -= amount;
    to += amount;
  }
  return {status, amount, payer, receiver};
}

double AgentLedger::accrue_interest() {
  if (!policy_.interest) return 0.0;
  const double created = moneygas::accrue_interest(balances_, *policy_.interest, bank_);
  external_flux_ += created;
  return created;
}

BankruptcyReport AgentLedger::bankruptcy_scan() {
  if (!policy_.bankruptcy_threshold) return {};
  auto report = moneygas::bankruptcy_scan(balances_, *policy_.bankruptcy_threshold, bank_);
  // Unmatched erasures raise net worth; book them with the external flux.
  external_flux_ += report.unmatched;
  return report;
}

void AgentLedger::relabel(std::span<const std::size_t> perm) {
  const std::size_t n = balances_.size();
  if (perm.size() != n) throw UsageError("relabel: permutation size mismatch");
  std::vector<char> seen(n, 0);
  std::vector<double> next(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (perm[i] >= n || seen[perm[i]]) throw UsageError("relabel: not a permutation");
    seen[perm[i]] = 1;
    next[i] = balances_[perm[i]];
  }
  balances_ = std::move(next);
}

}  // namespace moneygas
