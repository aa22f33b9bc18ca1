#include "moneygas/oracle.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "moneygas/errors.hpp"

namespace moneygas {

namespace {

double binomial(std::size_t n, std::size_t k) {
  if (k > n) return 0.0;
  k = std::min(k, n - k);
  double c = 1.0;
  for (std::size_t i = 1; i <= k; ++i)
    c = c * static_cast<double>(n - k + i) / static_cast<double>(i);
  return std::round(c);
}

void enumerate(std::size_t agent, std::uint32_t left, std::vector<std::uint32_t>& cur,
               std::vector<std::vector<std::uint32_t>>& out) {
  if (agent + 1 == cur.size()) {
    cur[agent] = left;
    out.push_back(cur);
    return;
  }
  for (std::uint32_t v = 0; v <= left; ++v) {
    cur[agent] = v;
    enumerate(agent + 1, left - v, cur, out);
  }
}

}  // namespace

double composition_count(std::size_t num_agents, std::size_t total_money) {
  if (num_agents == 0) return 0.0;
  return binomial(total_money + num_agents - 1, num_agents - 1);
}

std::vector<double> composition_marginal(std::size_t num_agents, std::size_t total_money) {
  if (num_agents < 2) throw UsageError("oracle: need at least two agents");
  std::vector<double> p(total_money + 1);
  const double all = composition_count(num_agents, total_money);
  for (std::size_t m = 0; m <= total_money; ++m)
    p[m] = binomial(total_money - m + num_agents - 2, num_agents - 2) / all;
  return p;
}

OracleResult enumerate_oracle(std::size_t num_agents, std::size_t total_money) {
  if (num_agents < 2) throw UsageError("oracle: need at least two agents");
  const double count = composition_count(num_agents, total_money);
  if (count > static_cast<double>(kOracleStateLimit))
    throw UsageError("oracle: state space exceeds " + std::to_string(kOracleStateLimit) +
                     " compositions");

  std::vector<std::vector<std::uint32_t>> states;
  states.reserve(static_cast<std::size_t>(count));
  std::vector<std::uint32_t> cur(num_agents);
  enumerate(0, static_cast<std::uint32_t>(total_money), cur, states);
  const std::size_t n_states = states.size();

  std::map<std::vector<std::uint32_t>, std::size_t> index;
  for (std::size_t s = 0; s < n_states; ++s) index.emplace(states[s], s);

  // Transition probabilities P[s][t]; stored transposed for pi P = pi.
  const double pair_prob =
      1.0 / (static_cast<double>(num_agents) * static_cast<double>(num_agents - 1));
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(n_states * num_agents * (num_agents - 1) + n_states);
  std::vector<double> self_loop(n_states, 0.0);
  for (std::size_t s = 0; s < n_states; ++s) {
    auto next = states[s];
    for (std::size_t i = 0; i < num_agents; ++i) {
      for (std::size_t j = 0; j < num_agents; ++j) {
        if (i == j) continue;
        if (states[s][i] == 0) {
          self_loop[s] += pair_prob;
          continue;
        }
        --next[i];
        ++next[j];
        const std::size_t t = index.at(next);
        triplets.emplace_back(static_cast<int>(t), static_cast<int>(s), pair_prob);
        ++next[i];
        --next[j];
      }
    }
  }

  OracleResult result;
  result.num_agents = num_agents;
  result.total_money = total_money;
  result.states = n_states;

  Eigen::VectorXd pi(static_cast<Eigen::Index>(n_states));
  if (n_states == 1) {
    pi[0] = 1.0;
  } else {
    // Solve (P^T - I) pi = 0 with the last equation replaced by sum(pi) = 1.
    std::vector<Eigen::Triplet<double>> system;
    system.reserve(triplets.size() + 2 * n_states);
    const auto last = static_cast<int>(n_states - 1);
    for (const auto& t : triplets)
      if (t.row() != last) system.push_back(t);
    for (std::size_t s = 0; s + 1 < n_states; ++s)
      system.emplace_back(static_cast<int>(s), static_cast<int>(s), self_loop[s] - 1.0);
    for (std::size_t s = 0; s < n_states; ++s) system.emplace_back(last, static_cast<int>(s), 1.0);

    Eigen::SparseMatrix<double> a(static_cast<Eigen::Index>(n_states),
                                  static_cast<Eigen::Index>(n_states));
    a.setFromTriplets(system.begin(), system.end());
    a.makeCompressed();
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(a);
    if (lu.info() != Eigen::Success) throw std::runtime_error("oracle: LU factorisation failed");
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n_states));
    rhs[last] = 1.0;
    pi = lu.solve(rhs);
    if (lu.info() != Eigen::Success) throw std::runtime_error("oracle: LU solve failed");
  }

  // Residual of the balance equations with the full matrix.
  Eigen::SparseMatrix<double> pt(static_cast<Eigen::Index>(n_states),
                                 static_cast<Eigen::Index>(n_states));
  pt.setFromTriplets(triplets.begin(), triplets.end());
  Eigen::VectorXd flow = pt * pi;
  for (std::size_t s = 0; s < n_states; ++s) {
    flow[static_cast<Eigen::Index>(s)] += self_loop[s] * pi[static_cast<Eigen::Index>(s)];
    result.balance_residual = std::max(
        result.balance_residual,
        std::abs(flow[static_cast<Eigen::Index>(s)] - pi[static_cast<Eigen::Index>(s)]));
  }

  result.marginal.assign(total_money + 1, 0.0);
  for (std::size_t s = 0; s < n_states; ++s)
    for (auto v : states[s])
      result.marginal[v] += pi[static_cast<Eigen::Index>(s)] / static_cast<double>(num_agents);

  result.composition_formula = composition_marginal(num_agents, total_money);
  for (std::size_t m = 0; m <= total_money; ++m)
    result.max_abs_difference = std::max(
        result.max_abs_difference, std::abs(result.marginal[m] - result.composition_formula[m]));
  return result;
}

}  // namespace moneygas
