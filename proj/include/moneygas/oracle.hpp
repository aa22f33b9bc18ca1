#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace moneygas {

/// Exact single-agent stationary marginal for the fixed unit-transfer,
/// no-debt chain on N agents holding M units in total.
struct OracleResult {
  std::size_t num_agents = 0;
  std::size_t total_money = 0;
  std::size_t states = 0;
  /// P(m), m = 0..M, from the solved transition matrix.
  std::vector<double> marginal;
  /// C(M - m + N - 2, N - 2) / C(M + N - 1, N - 1).
  std::vector<double> composition_formula;
  /// max_m |marginal - composition_formula|.
  double max_abs_difference = 0.0;
  /// max_s |(pi P)_s - pi_s| of the solved stationary vector.
  double balance_residual = 0.0;
};

inline constexpr std::size_t kOracleStateLimit = 100000;

/// Number of compositions of `total_money` into `num_agents` nonnegative parts.
double composition_count(std::size_t num_agents, std::size_t total_money);

/// Enumerates all compositions, builds the transition matrix of one
/// transaction attempt (ordered pair uniform among distinct agents, one unit
/// moves when the payer holds one, otherwise a self-loop) and solves
/// pi P = pi, sum pi = 1 by sparse LU. Throws UsageError if N < 2 or the
/// state space exceeds kOracleStateLimit.
OracleResult enumerate_oracle(std::size_t num_agents, std::size_t total_money);

/// The composition-count marginal alone.
std::vector<double> composition_marginal(std::size_t num_agents, std::size_t total_money);

}  // namespace moneygas
