#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "moneygas/errors.hpp"
#include "moneygas/histogram.hpp"
#include "moneygas/ledger.hpp"
#include "moneygas/simulation.hpp"
#include "moneygas/statistics.hpp"

using namespace moneygas;

namespace {

SimConfig base_config(std::size_t n, double m0, ExchangeRule rule, BoundaryPolicy policy = {}) {
  SimConfig c;
  c.num_agents = n;
  c.initial_balance = m0;
  c.rule = std::move(rule);
  c.boundary = std::move(policy);
  c.seed = 12345;
  return c;
}

double sum(std::span<const double> v) { return std::accumulate(v.begin(), v.end(), 0.0); }

}  // namespace

TEST_CASE("init_ledger endows every agent equally") {
  auto l = AgentLedger::init(base_config(500, 1000.0, FixedAmount{1.0}));
  CHECK(l.num_agents() == 500);
  CHECK(l.monetary_base() == 500000.0);
  CHECK(l.transaction_count() == 0);
  CHECK(std::all_of(l.balances().begin(), l.balances().end(), [](double m) { return m == 1000.0; }));

  auto zero = AgentLedger::init(base_config(2, 0.0, FixedAmount{1.0}));
  CHECK(zero.balances()[0] == 0.0);
  CHECK(zero.balances()[1] == 0.0);
  CHECK(zero.monetary_base() == 0.0);

  auto three = AgentLedger::init(base_config(3, 1.0, FixedAmount{1.0}));
  CHECK(three.monetary_base() == 3.0);
  CHECK(entropy_per_agent(MoneyHistogram::from_balances(three.balances(), 0.05)) == 0.0);
}

TEST_CASE("init_ledger rejects invalid configs") {
  CHECK_THROWS_AS(AgentLedger::init(base_config(1, 10.0, FixedAmount{1.0})), ConfigError);
  CHECK_THROWS_AS(AgentLedger::init(base_config(5, -1.0, FixedAmount{1.0})), ConfigError);
  CHECK_THROWS_AS(AgentLedger(std::vector<double>{1.0}, BoundaryPolicy{}), ConfigError);
  auto c = base_config(4, 1.0, FixedAmount{1.0});
  c.snapshot_every = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = base_config(4, 1.0, Multiplicative{0.3}, BoundaryPolicy{DebtCap{10.0}});
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = base_config(4, 1.5, FixedAmount{1.0});
  c.mode = MoneyMode::Integer;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = base_config(4, 1.0, SavingPropensity{0.5});
  c.mode = MoneyMode::Integer;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = base_config(4, 2000.0, FixedAmount{1.0}, BoundaryPolicy{UpperBound{1500.0}});
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = base_config(3, 0.0, FixedAmount{1.0});
  c.initial_balances = {1.0, 2.0};
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("explicit endowments set the monetary base") {
  auto c = base_config(3, 0.0, FixedAmount{1.0});
  c.initial_balances = {2.0, 1.0, 1.0};
  auto l = AgentLedger::init(c);
  CHECK(l.monetary_base() == 4.0);
  CHECK(l.balances()[0] == 2.0);
}

TEST_CASE("attempt_transfer examples") {
  SUBCASE("executed transfer conserves the pair sum") {
    AgentLedger l(2, 1000.0, BoundaryPolicy{});
    const auto out = l.attempt_transfer(0, 1, 200.0);
    CHECK(out.status == TransferStatus::Executed);
    CHECK(out.executed());
    CHECK(l.balances()[0] == 800.0);
    CHECK(l.balances()[1] == 1200.0);
    CHECK(l.transaction_count() == 1);
  }
  SUBCASE("no-debt blocks a broke payer") {
    AgentLedger l(std::vector<double>{0.0, 2000.0}, BoundaryPolicy{});
    const auto out = l.attempt_transfer(0, 1, 1.0);
    CHECK(out.status == TransferStatus::BlockedInsufficientFunds);
    CHECK(l.balances()[0] == 0.0);
    CHECK(l.balances()[1] == 2000.0);
    CHECK(l.transaction_count() == 1);
  }
  SUBCASE("debt cap lets the payer borrow") {
    AgentLedger l(std::vector<double>{0.0, 2000.0}, BoundaryPolicy{DebtCap{800.0}});
    const auto out = l.attempt_transfer(0, 1, 500.0);
    CHECK(out.status == TransferStatus::Executed);
    CHECK(l.balances()[0] == -500.0);
    CHECK(l.balances()[1] == 2500.0);
    CHECK(l.bank().loans_outstanding == doctest::Approx(500.0));
    CHECK(l.attempt_transfer(0, 1, 301.0).status == TransferStatus::BlockedDebtCap);
    CHECK(l.attempt_transfer(0, 1, 300.0).executed());
    CHECK(l.balances()[0] == -800.0);
  }
}

TEST_CASE("attempt_transfer usage errors") {
  AgentLedger l(3, 10.0, BoundaryPolicy{});
  CHECK_THROWS_AS(l.attempt_transfer(0, 3, 1.0), UsageError);
  CHECK_THROWS_AS(l.attempt_transfer(5, 0, 1.0), UsageError);
  CHECK_THROWS_AS(l.attempt_transfer(1, 1, 1.0), UsageError);
  CHECK_THROWS_AS(l.attempt_transfer(0, 1, -1.0), UsageError);
  CHECK_THROWS_AS(l.attempt_transfer(0, 1, std::nan("")), UsageError);
  CHECK(l.transaction_count() == 0);
}

TEST_CASE("relabel permutes balances") {
  AgentLedger l(std::vector<double>{1.0, 2.0, 3.0}, BoundaryPolicy{});
  const std::vector<std::size_t> perm{2, 0, 1};
  l.relabel(perm);
  CHECK(l.balances()[0] == 3.0);
  CHECK(l.balances()[1] == 1.0);
  CHECK(l.balances()[2] == 2.0);
  const std::vector<std::size_t> bad{0, 0, 1};
  CHECK_THROWS_AS(l.relabel(bad), UsageError);
}

TEST_CASE("run_sweeps: zero sweeps returns the initial delta") {
  Simulation sim(base_config(50, 100.0, UniformRandomFraction{}));
  const auto snaps = sim.run_sweeps(0);
  REQUIRE(snaps.size() == 1);
  CHECK(snaps[0].sweep == 0);
  CHECK(std::all_of(snaps[0].balances.begin(), snaps[0].balances.end(),
                    [](double m) { return m == 100.0; }));
}

TEST_CASE("one sweep is N attempts and snapshots follow snapshot_every") {
  auto c = base_config(37, 10.0, FixedAmount{1.0});
  c.snapshot_every = 3;
  Simulation sim(c);
  const auto snaps = sim.run_sweeps(10);
  CHECK(sim.ledger().transaction_count() == 370);
  REQUIRE(snaps.size() == 4);  // 0, 3, 6, 9
  CHECK(snaps[3].sweep == 9);
  CHECK(sim.sweeps_done() == 10);
}

TEST_CASE("property: conservation under every one-way and pairwise rule") {
  const std::vector<std::pair<ExchangeRule, BoundaryPolicy>> cases{
      {FixedAmount{7.0}, BoundaryPolicy{}},
      {UniformRandomFraction{}, BoundaryPolicy{DebtCap{500.0}}},
      {UniformRandomFraction{}, BoundaryPolicy{ReserveRatioBank{0.8}}},
      {UniformRandomFraction{}, BoundaryPolicy{Unlimited{}}},
      {UniformRandomFraction{}, BoundaryPolicy{UpperBound{1500.0}}},
      {UniformRandomFraction{}, BoundaryPolicy{TwoSided{1500.0, 200.0}}},
      {Multiplicative{1.0 / 3.0}, BoundaryPolicy{}},
      {SavingPropensity{0.5}, BoundaryPolicy{}},
      {RandomSavingPropensity{}, BoundaryPolicy{}},
  };
  for (const auto& [rule, policy] : cases) {
    CAPTURE(rule_name(rule));
    CAPTURE(policy.name());
    Simulation sim(base_config(200, 1000.0, rule, policy));
    sim.run(200);
    const double m = sum(sim.ledger().balances());
    CHECK(std::abs(m - 200000.0) <= 1e-6 * 200000.0);
    CHECK(std::abs(sim.ledger().conservation_residual()) <= 1e-6 * 200000.0);
    const double lo = policy.lower_bound();
    const double hi = policy.upper_bound();
    for (double b : sim.ledger().balances()) {
      CHECK(b >= lo);
      CHECK(b <= hi);
    }
  }
}

TEST_CASE("property: integer mode is exact") {
  auto c = base_config(100, 20.0, UniformRandomFraction{});
  c.mode = MoneyMode::Integer;
  Simulation sim(c);
  sim.run(500);
  for (double b : sim.ledger().balances()) CHECK(b == std::floor(b));
  CHECK(sum(sim.ledger().balances()) == 2000.0);
}

TEST_CASE("property: blocked transfers leave balances bitwise unchanged") {
  AgentLedger l(std::vector<double>{0.1, 0.2, 99.99}, BoundaryPolicy{UpperBound{100.0}});
  const std::vector<double> before(l.balances().begin(), l.balances().end());
  CHECK(l.attempt_transfer(0, 1, 0.3).status == TransferStatus::BlockedInsufficientFunds);
  CHECK(l.attempt_transfer(0, 2, 0.05).status == TransferStatus::BlockedUpperBound);
  const std::vector<double> after(l.balances().begin(), l.balances().end());
  CHECK(std::memcmp(before.data(), after.data(), sizeof(double) * 3) == 0);
}

TEST_CASE("property: determinism for identical configs") {
  auto c = base_config(100, 50.0, UniformRandomFraction{}, BoundaryPolicy{DebtCap{30.0}});
  c.snapshot_every = 5;
  Simulation a(c);
  Simulation b(c);
  const auto sa = a.run_sweeps(50);
  const auto sb = b.run_sweeps(50);
  REQUIRE(sa.size() == sb.size());
  for (std::size_t i = 0; i < sa.size(); ++i) CHECK(sa[i].balances == sb[i].balances);
  c.seed += 1;
  Simulation d(c);
  CHECK(d.run_sweeps(50).back().balances != sa.back().balances);
}

TEST_CASE("property: relabeling agents at initialization leaves histograms statistically identical") {
  // Uniform endowment makes every relabeling identical; check with distinct
  // endowments that the sorted balance multiset is invariant after relabel
  // and that long-run histograms agree in distribution.
  auto c = base_config(200, 0.0, UniformRandomFraction{});
  c.initial_balances.resize(200);
  for (std::size_t i = 0; i < 200; ++i) c.initial_balances[i] = static_cast<double>(i % 20) * 100.0;
  auto reversed = c;
  std::reverse(reversed.initial_balances.begin(), reversed.initial_balances.end());
  reversed.seed = 999;
  Simulation a(c);
  Simulation b(reversed);
  std::vector<double> pa;
  std::vector<double> pb;
  a.run(300);
  b.run(300);
  for (int k = 0; k < 200; ++k) {
    a.run(5);
    b.run(5);
    pa.insert(pa.end(), a.ledger().balances().begin(), a.ledger().balances().end());
    pb.insert(pb.end(), b.ledger().balances().begin(), b.ledger().balances().end());
  }
  CHECK(ks_two_sample(pa, pb) < 0.03);
}

TEST_CASE("two agents with two units visit each split equally often") {
  auto c = base_config(2, 1.0, FixedAmount{1.0});
  c.mode = MoneyMode::Integer;
  Simulation sim(c);
  std::vector<double> counts(3, 0.0);
  sim.run(200000, [&](std::uint64_t, std::span<const double> b) { counts[static_cast<int>(b[0])] += 1.0; });
  for (double x : counts) CHECK(x / 200000.0 == doctest::Approx(1.0 / 3.0).epsilon(0.02));
}
