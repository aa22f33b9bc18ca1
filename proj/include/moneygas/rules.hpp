#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "moneygas/rng.hpp"

namespace moneygas {

/// Every transaction moves the same price.
struct FixedAmount {
  double amount = 1.0;
};

/// Price is nu * scale * (mean money per agent), nu ~ U[0, 1).
struct UniformRandomFraction {
  double scale = 1.0;
};

/// The payer hands over a fixed fraction of its own balance.
struct Multiplicative {
  double fraction = 0.0;
};

/// Both agents keep `propensity` of their balance; the rest is pooled and
/// split at a uniform random ratio.
struct SavingPropensity {
  double propensity = 0.0;
};

/// Saving propensity drawn per agent from U[0, max_propensity) when the
/// simulation is set up, then fixed for the whole run.
struct RandomSavingPropensity {
  double max_propensity = 1.0 - 1e-4;
  std::vector<double> propensities;

  bool bound() const { return !propensities.empty(); }
  /// Fills the per-agent table. Throws UsageError if already bound to a
  /// different population size.
  void bind(std::size_t num_agents, Rng& rng);
};

using ExchangeRule = std::variant<FixedAmount, UniformRandomFraction, Multiplicative,
                                  SavingPropensity, RandomSavingPropensity>;

std::string rule_name(const ExchangeRule& rule);

/// Throws ConfigError when parameters fall outside their domains.
void validate_rule(const ExchangeRule& rule);

/// True for the saving rules, which produce joint post-balances rather than
/// a one-way amount.
bool is_pairwise_rule(const ExchangeRule& rule);

double amount_fixed(const FixedAmount& rule, double payer_balance);

/// nu * scale * mean_money. Throws UsageError for negative mean_money.
double amount_uniform_random(const UniformRandomFraction& rule, double mean_money,
                             Rng& rng);

/// fraction * payer_balance. Throws UsageError for a negative payer balance.
double amount_multiplicative(const Multiplicative& rule, double payer_balance);

/// Post-balances for a saving exchange with per-agent propensities and a
/// given split ratio xi. The pool (1 - l_i) m_i + (1 - l_j) m_j is divided
/// xi : (1 - xi); the second balance is formed as the pair total minus the
/// first so the pair sum is preserved to rounding.
std::pair<double, double> saving_exchange(double m_i, double m_j, double lambda_i,
                                          double lambda_j, double xi);

/// Uniform-propensity exchange with xi drawn from `rng`.
std::pair<double, double> saving_exchange(const SavingPropensity& rule, double m_i,
                                          double m_j, Rng& rng);

/// Heterogeneous-propensity exchange between agents i and j.
std::pair<double, double> saving_exchange(const RandomSavingPropensity& rule,
                                          std::size_t i, std::size_t j, double m_i,
                                          double m_j, Rng& rng);

}  // namespace moneygas
