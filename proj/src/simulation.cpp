#include "moneygas/simulation.hpp"

#include <cmath>
#include <type_traits>
#include <utility>

namespace moneygas {

Simulation::Simulation(SimConfig config) : Simulation(config, config.seed) {}

Simulation::Simulation(SimConfig config, std::uint64_t stream_seed)
    : config_(std::move(config)), ledger_(AgentLedger::init(config_)), rng_(stream_seed) {
  if (auto* r = std::get_if<RandomSavingPropensity>(&config_.rule))
    r->bind(config_.num_agents, rng_);
}

template <class Rule>
TransferOutcome Simulation::attempt_with(const Rule& rule) {
  const std::uint64_t n = ledger_.num_agents();
  const std::uint64_t pick = uniform_index(rng_, n * (n - 1));
  const std::size_t payer = pick / (n - 1);
  std::size_t receiver = pick % (n - 1);
  if (receiver >= payer) ++receiver;

  const auto balances = ledger_.balances();
  if constexpr (std::is_same_v<Rule, SavingPropensity> ||
                std::is_same_v<Rule, RandomSavingPropensity>) {
    const double m_i = balances[payer];
    const double m_j = balances[receiver];
    std::pair<double, double> next;
    if constexpr (std::is_same_v<Rule, SavingPropensity>)
      next = saving_exchange(rule, m_i, m_j, rng_);
    else
      next = saving_exchange(rule, payer, receiver, m_i, m_j, rng_);
    // Express the exchange as a one-way payment from whoever loses money.
    if (next.first <= m_i)
      return ledger_.attempt_transfer(payer, receiver, m_i - next.first);
    return ledger_.attempt_transfer(receiver, payer, m_j - next.second);
  } else {
    double amount = 0.0;
    if constexpr (std::is_same_v<Rule, FixedAmount>)
      amount = amount_fixed(rule, balances[payer]);
    else if constexpr (std::is_same_v<Rule, UniformRandomFraction>)
      amount = amount_uniform_random(rule, ledger_.mean_money(), rng_);
    else
      amount = amount_multiplicative(rule, balances[payer]);
    if (config_.mode == MoneyMode::Integer) amount = std::round(amount);
    return ledger_.attempt_transfer(payer, receiver, amount);
  }
}

template <class Rule>
void Simulation::sweep_with(const Rule& rule) {
  const std::size_t n = ledger_.num_agents();
  for (std::size_t t = 0; t < n; ++t) attempt_with(rule);
}

void Simulation::end_of_sweep() {
  hooks_.interest_created += ledger_.accrue_interest();
  const auto report = ledger_.bankruptcy_scan();
  hooks_.bankruptcies += report.cases.size();
  for (const auto& b : report.cases) hooks_.debt_erased += b.erased_debt;
  ++sweeps_done_;
}

TransferOutcome Simulation::step() {
  return std::visit([this](const auto& rule) { return attempt_with(rule); },
                    config_.rule);
}

void Simulation::run(std::uint64_t sweeps, const SnapshotCallback& on_snapshot) {
  std::visit(
      [&](const auto& rule) {
        for (std::uint64_t s = 0; s < sweeps; ++s) {
          sweep_with(rule);
          end_of_sweep();
          if (on_snapshot && sweeps_done_ % config_.snapshot_every == 0)
            on_snapshot(sweeps_done_, ledger_.balances());
        }
      },
      config_.rule);
}

std::vector<Snapshot> Simulation::run_sweeps(std::uint64_t sweeps) {
  std::vector<Snapshot> out;
  const auto initial = ledger_.balances();
  out.push_back({sweeps_done_, {initial.begin(), initial.end()}});
  run(sweeps, [&](std::uint64_t sweep, std::span<const double> balances) {
    out.push_back({sweep, {balances.begin(), balances.end()}});
  });
  return out;
}

}  // namespace moneygas
