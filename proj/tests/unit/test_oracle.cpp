#include <cmath>
#include <functional>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "moneygas/errors.hpp"
#include "moneygas/experiment.hpp"
#include "moneygas/oracle.hpp"

using namespace moneygas;

namespace {

// Equal-weight marginal by explicit enumeration of compositions.
std::vector<double> brute_marginal(std::size_t n, std::size_t m) {
  std::vector<double> counts(m + 1, 0.0);
  std::vector<std::size_t> parts(n, 0);
  double states = 0.0;
  std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t i, std::size_t left) {
    if (i + 1 == n) {
      parts[i] = left;
      states += 1.0;
      counts[parts[0]] += 1.0;
      return;
    }
    for (std::size_t k = 0; k <= left; ++k) {
      parts[i] = k;
      rec(i + 1, left - k);
    }
  };
  rec(0, m);
  for (double& c : counts) c /= states;
  return counts;
}

}  // namespace

TEST_CASE("oracle N=2 M=2") {
  const auto r = enumerate_oracle(2, 2);
  CHECK(r.states == 3);
  REQUIRE(r.marginal.size() == 3);
  for (double p : r.marginal) CHECK(p == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(r.max_abs_difference < 1e-12);
}

TEST_CASE("oracle N=3 M=0") {
  const auto r = enumerate_oracle(3, 0);
  CHECK(r.states == 1);
  REQUIRE(r.marginal.size() == 1);
  CHECK(r.marginal[0] == 1.0);
}

TEST_CASE("oracle N=5 M=20 matches the composition count") {
  const auto r = enumerate_oracle(5, 20);
  CHECK(r.states == 10626);
  CHECK(r.max_abs_difference < 1e-12);
  CHECK(r.balance_residual < 1e-12);
  const auto brute = brute_marginal(5, 20);
  for (std::size_t m = 0; m <= 20; ++m) CHECK(r.composition_formula[m] == doctest::Approx(brute[m]).epsilon(1e-12));
  CHECK(std::accumulate(r.marginal.begin(), r.marginal.end(), 0.0) == doctest::Approx(1.0));
}

TEST_CASE("composition helpers") {
  CHECK(composition_count(2, 2) == 3.0);
  CHECK(composition_count(5, 20) == 10626.0);
  CHECK(composition_count(3, 0) == 1.0);
  const auto m = composition_marginal(3, 6);
  const auto brute = brute_marginal(3, 6);
  for (std::size_t i = 0; i < m.size(); ++i) CHECK(m[i] == doctest::Approx(brute[i]));
}

TEST_CASE("oracle limits") {
  CHECK_THROWS_AS(enumerate_oracle(1, 5), UsageError);
  CHECK_THROWS_AS(enumerate_oracle(30, 30), UsageError);
}

TEST_CASE("oracle_check three-way agreement") {
  for (auto [n, m] : {std::pair<std::size_t, std::size_t>{2, 2}, {3, 0}, {3, 6}, {5, 20}, {3, 4}}) {
    CAPTURE(n);
    CAPTURE(m);
    const auto rep = oracle_check(OracleSpec{n, m, 100000, 5});
    CHECK(rep.exact_pass);
    CHECK(rep.monte_carlo_pass);
    CHECK(rep.pass());
  }
}
