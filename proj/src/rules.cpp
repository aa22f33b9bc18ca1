#include "moneygas/rules.hpp"

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

}  // namespace

void RandomSavingPropensity::bind(std::size_t num_agents, Rng& rng) {
  if (bound()) {
    if (propensities.size() != num_agents)
      throw UsageError("random saving table bound to a different population size");
    return;
  }
  propensities.resize(num_agents);
  for (double& lambda : propensities) lambda = uniform01(rng) * max_propensity;
}

std::string rule_name(const ExchangeRule& rule) {
  return std::visit(overloaded{
                        [](const FixedAmount&) { return std::string("fixed"); },
                        [](const UniformRandomFraction&) {
                          return std::string("uniform_random_fraction");
                        },
                        [](const Multiplicative&) { return std::string("multiplicative"); },
                        [](const SavingPropensity&) { return std::string("saving"); },
                        [](const RandomSavingPropensity&) {
                          return std::string("random_saving");
                        },
                    },
                    rule);
}

void validate_rule(const ExchangeRule& rule) {
  std::visit(overloaded{
                 [](const FixedAmount& r) {
                   if (!(std::isfinite(r.amount) && r.amount > 0.0))
                     throw ConfigError("fixed: amount must be > 0");
                 },
                 [](const UniformRandomFraction& r) {
                   if (!(std::isfinite(r.scale) && r.scale > 0.0))
                     throw ConfigError("uniform_random_fraction: scale must be > 0");
                 },
                 [](const Multiplicative& r) {
                   if (!(r.fraction > 0.0 && r.fraction < 1.0))
                     throw ConfigError("multiplicative: fraction must lie in (0, 1)");
                 },
                 [](const SavingPropensity& r) {
                   if (!(r.propensity >= 0.0 && r.propensity < 1.0))
                     throw ConfigError("saving: propensity must lie in [0, 1)");
                 },
                 [](const RandomSavingPropensity& r) {
                   if (!(r.max_propensity > 0.0 && r.max_propensity < 1.0))
                     throw ConfigError("random_saving: max_propensity must lie in (0, 1)");
                   for (double lambda : r.propensities)
                     if (!(lambda >= 0.0 && lambda < 1.0))
                       throw ConfigError("random_saving: propensities must lie in [0, 1)");
                 },
             },
             rule);
}

bool is_pairwise_rule(const ExchangeRule& rule) {
  return std::holds_alternative<SavingPropensity>(rule) ||
         std::holds_alternative<RandomSavingPropensity>(rule);
}

double amount_fixed(const FixedAmount& rule, double /*payer_balance*/) {
  return rule.amount;
}

double amount_uniform_random(const UniformRandomFraction& rule, double mean_money,
                             Rng& rng) {
  if (mean_money < 0.0)
    throw UsageError("uniform_random_fraction: mean money must be >= 0");
  return uniform01(rng) * rule.scale * mean_money;
}

double amount_multiplicative(const Multiplicative& rule, double payer_balance) {
  if (payer_balance < 0.0)
    throw UsageError("multiplicative rule is defined only for nonnegative balances");
  return rule.fraction * payer_balance;
}

std::pair<double, double> saving_exchange(double m_i, double m_j, double lambda_i,
                                          double lambda_j, double xi) {
  if (m_i < 0.0 || m_j < 0.0)
    throw UsageError("saving exchange requires nonnegative balances");
  if (!(lambda_i >= 0.0 && lambda_i < 1.0 && lambda_j >= 0.0 && lambda_j < 1.0))
    throw UsageError("saving propensity must lie in [0, 1)");
  if (!(xi >= 0.0 && xi <= 1.0)) throw UsageError("split ratio must lie in [0, 1]");
  const double total = m_i + m_j;
  const double pool = (1.0 - lambda_i) * m_i + (1.0 - lambda_j) * m_j;
  double new_i = lambda_i * m_i + xi * pool;
  // Rounding can push new_i past the pair total by an ulp when xi is near 1.
  if (new_i > total) new_i = total;
  return {new_i, total - new_i};
}

std::pair<double, double> saving_exchange(const SavingPropensity& rule, double m_i,
                                          double m_j, Rng& rng) {
  return saving_exchange(m_i, m_j, rule.propensity, rule.propensity, uniform01(rng));
}

std::pair<double, double> saving_exchange(const RandomSavingPropensity& rule,
                                          std::size_t i, std::size_t j, double m_i,
                                          double m_j, Rng& rng) {
  if (i >= rule.propensities.size() || j >= rule.propensities.size())
    throw UsageError("random saving table not bound for these agents");
  return saving_exchange(m_i, m_j, rule.propensities[i], rule.propensities[j],
                         uniform01(rng));
}

}  // namespace moneygas
