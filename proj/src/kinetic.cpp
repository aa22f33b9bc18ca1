#include "moneygas/kinetic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "moneygas/errors.hpp"

namespace moneygas {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

constexpr double kSymmetryTolerance = 1e-12;
constexpr double kLeakageLimit = 1e-6;
constexpr std::size_t kMaxDoublings = 4;

}  // namespace

std::string kernel_name(const KernelSpec& spec) {
  return std::visit(overloaded{
                        [](const FixedTransferKernel&) { return std::string("fixed"); },
                        [](const UniformTransferKernel&) { return std::string("uniform"); },
                        [](const ProportionalTransferKernel&) {
                          return std::string("proportional");
                        },
                        [](const ZeroKernel&) { return std::string("zero"); },
                    },
                    spec);
}

TransitionKernel::TransitionKernel(std::size_t grid_points,
                                   std::vector<std::vector<KernelEntry>> by_payer)
    : by_payer_(std::move(by_payer)) {
  if (by_payer_.size() != grid_points) throw UsageError("kernel: one entry list per grid point");
  for (std::size_t a = 0; a < by_payer_.size(); ++a) {
    for (const auto& e : by_payer_[a]) {
      if (e.delta == 0 || e.delta > a) throw UsageError("kernel: transfer would leave the grid");
      if (!(e.rate >= 0.0) || !std::isfinite(e.rate)) throw UsageError("kernel: rates must be finite and >= 0");
      max_delta_ = std::max(max_delta_, e.delta);
    }
  }
}

TransitionKernel TransitionKernel::build(const KernelSpec& spec, std::size_t grid_points) {
  std::vector<std::vector<KernelEntry>> by_payer(grid_points);
  std::visit(overloaded{
                 [&](const FixedTransferKernel& k) {
                   if (k.steps == 0) throw ConfigError("fixed kernel: steps must be >= 1");
                   for (std::size_t a = k.steps; a < grid_points; ++a)
                     by_payer[a].push_back({k.steps, 1.0});
                 },
                 [&](const UniformTransferKernel& k) {
                   if (k.max_steps == 0) throw ConfigError("uniform kernel: max_steps must be >= 1");
                   const double w = 1.0 / static_cast<double>(k.max_steps);
                   for (std::size_t a = 0; a < grid_points; ++a)
                     for (std::size_t d = 1; d < k.max_steps && d <= a; ++d)
                       by_payer[a].push_back({d, w});
                 },
                 [&](const ProportionalTransferKernel& k) {
                   if (!(k.fraction > 0.0 && k.fraction < 1.0))
                     throw ConfigError("proportional kernel: fraction must lie in (0, 1)");
                   for (std::size_t a = 0; a < grid_points; ++a) {
                     const auto d = static_cast<std::size_t>(
                         std::round(k.fraction * static_cast<double>(a)));
                     if (d >= 1) by_payer[a].push_back({d, 1.0});
                   }
                 },
                 [](const ZeroKernel&) {},
             },
             spec);
  return TransitionKernel(grid_points, std::move(by_payer));
}

double TransitionKernel::rate(std::size_t payer, std::size_t receiver, std::size_t delta) const {
  const std::size_t g = grid_points();
  if (payer >= g || receiver >= g || delta == 0 || receiver + delta >= g) return 0.0;
  for (const auto& e : by_payer_[payer])
    if (e.delta == delta) return e.rate;
  return 0.0;
}

bool TransitionKernel::empty() const {
  return std::all_of(by_payer_.begin(), by_payer_.end(),
                     [](const auto& v) { return v.empty(); });
}

KineticGrid::KineticGrid(double floor, double step, std::vector<double> probabilities,
                         KernelSpec spec)
    : floor_(floor), step_(step), p_(std::move(probabilities)), spec_(std::move(spec)) {
  if (!(step > 0.0) || !std::isfinite(step)) throw ConfigError("kinetic grid: step must be > 0");
  if (p_.size() < 2) throw ConfigError("kinetic grid: need at least two points");
  for (double x : p_)
    if (!(x >= 0.0)) throw ConfigError("kinetic grid: probabilities must be >= 0");
  const double s = total();
  if (std::abs(s - 1.0) > 1e-9) throw ConfigError("kinetic grid: probabilities must sum to 1");
  kernel_ = TransitionKernel::build(spec_, p_.size());
}

KineticGrid KineticGrid::point_mass(double floor, double step, std::size_t points,
                                    std::size_t at, KernelSpec spec) {
  if (at >= points) throw ConfigError("kinetic grid: point mass outside the grid");
  std::vector<double> p(points, 0.0);
  p[at] = 1.0;
  return KineticGrid(floor, step, std::move(p), std::move(spec));
}

double KineticGrid::total() const { return std::accumulate(p_.begin(), p_.end(), 0.0); }

double KineticGrid::mean() const {
  double acc = 0.0;
  for (std::size_t i = 0; i < p_.size(); ++i) acc += money(i) * p_[i];
  return acc / total();
}

void KineticGrid::set_probabilities(std::vector<double> p) {
  if (p.size() != p_.size()) throw UsageError("kinetic grid: size mismatch");
  for (double x : p)
    if (!(x >= 0.0)) throw UsageError("kinetic grid: probabilities must be >= 0");
  p_ = std::move(p);
}

void KineticGrid::extend(std::size_t new_points) {
  if (new_points <= p_.size()) return;
  p_.resize(new_points, 0.0);
  kernel_ = TransitionKernel::build(spec_, new_points);
}

namespace {

// Shared pieces of the rate evaluation: receivable[d] is the mass of agents
// that can accept d steps, paid[d] the mass-weighted rate of paying d steps.
struct RateTables {
  std::vector<double> receivable;
  std::vector<double> paid;
};

RateTables rate_tables(const KineticGrid& grid) {
  const auto p = grid.probabilities();
  const std::size_t g = p.size();
  const auto& kernel = grid.kernel();
  RateTables t;
  std::vector<double> prefix(g + 1, 0.0);
  for (std::size_t i = 0; i < g; ++i) prefix[i + 1] = prefix[i] + p[i];
  const std::size_t dmax = kernel.max_delta();
  t.receivable.assign(dmax + 1, 0.0);
  for (std::size_t d = 1; d <= dmax && d < g; ++d) t.receivable[d] = prefix[g - d];
  t.paid.assign(dmax + 1, 0.0);
  for (std::size_t a = 0; a < g; ++a)
    for (const auto& e : kernel.entries(a)) t.paid[e.delta] += e.rate * p[a];
  return t;
}

}  // namespace

std::vector<double> master_equation_rhs(const KineticGrid& grid) {
  const auto p = grid.probabilities();
  const std::size_t g = p.size();
  const auto& kernel = grid.kernel();
  const auto t = rate_tables(grid);
  std::vector<double> rhs(g, 0.0);

  // Payer side: a -> a - d with rate f * P(a) * P(receivers able to accept d).
  for (std::size_t a = 0; a < g; ++a) {
    for (const auto& e : kernel.entries(a)) {
      const double flux = e.rate * p[a] * t.receivable[e.delta];
      rhs[a] -= flux;
      rhs[a - e.delta] += flux;
    }
  }
  // Receiver side: b -> b + d with rate paid[d] * P(b).
  for (std::size_t d = 1; d < t.paid.size(); ++d) {
    if (t.paid[d] == 0.0) continue;
    for (std::size_t b = 0; b + d < g; ++b) {
      const double flux = t.paid[d] * p[b];
      rhs[b] -= flux;
      rhs[b + d] += flux;
    }
  }
  return rhs;
}

double max_outflow_rate(const KineticGrid& grid) {
  const std::size_t g = grid.size();
  const auto& kernel = grid.kernel();
  const auto t = rate_tables(grid);
  // Receiving rate for an agent at b: sum of paid[d] over d with b + d < g.
  std::vector<double> cum(t.paid.size() + 1, 0.0);
  for (std::size_t d = 0; d < t.paid.size(); ++d) cum[d + 1] = cum[d] + t.paid[d];
  double worst = 0.0;
  for (std::size_t a = 0; a < g; ++a) {
    double r = 0.0;
    for (const auto& e : kernel.entries(a)) r += e.rate * t.receivable[e.delta];
    const std::size_t reach = std::min(t.paid.size() - 1, g - 1 - a);
    r += cum[reach + 1];
    worst = std::max(worst, r);
  }
  return worst;
}

StepReport step_master_equation(KineticGrid& grid, double dt) {
  if (!(dt > 0.0)) throw StepError("master equation: dt must be > 0");
  if (dt * max_outflow_rate(grid) >= 1.0)
    throw StepError("master equation: dt exceeds the stability limit");
  const auto rhs = master_equation_rhs(grid);
  StepReport report;
  double sum = 0.0;
  for (std::size_t i = 0; i < rhs.size(); ++i) {
    const double change = dt * rhs[i];
    report.max_change = std::max(report.max_change, std::abs(change));
    grid.p_[i] = std::max(0.0, grid.p_[i] + change);
    sum += grid.p_[i];
  }
  report.mass_error = std::abs(sum - 1.0);
  if (report.mass_error <= 1e-12)
    for (double& x : grid.p_) x /= sum;
  return report;
}

DetailedBalanceReport detailed_balance_residual(const KineticGrid& grid) {
  const auto p = grid.probabilities();
  const std::size_t g = p.size();
  const auto& kernel = grid.kernel();
  DetailedBalanceReport report;
  for (std::size_t a = 0; a < g; ++a) {
    for (const auto& e : kernel.entries(a)) {
      const std::size_t d = e.delta;
      for (std::size_t b = 0; b + d < g; ++b) {
        const double forward = e.rate * p[a] * p[b];
        const double reverse = kernel.rate(b + d, a - d, d) * p[a - d] * p[b + d];
        if (forward == 0.0 && reverse == 0.0) continue;
        if (p[a] == 0.0 || p[b] == 0.0 || p[a - d] == 0.0 || p[b + d] == 0.0) {
          ++report.excluded;
          continue;
        }
        ++report.transitions;
        const double scale = std::max(forward, reverse);
        report.residual = std::max(report.residual, std::abs(forward - reverse) / scale);
      }
    }
  }
  return report;
}

SymmetryReport kernel_symmetry_check(const TransitionKernel& kernel) {
  const std::size_t g = kernel.grid_points();
  SymmetryReport report;
  // Any nonzero rate shows up as the forward term of some (a, b, d), so
  // scanning forward entries covers every pair with a nonzero side.
  for (std::size_t a = 0; a < g; ++a) {
    for (const auto& e : kernel.entries(a)) {
      const std::size_t d = e.delta;
      for (std::size_t b = 0; b + d < g; ++b) {
        const double forward = e.rate;
        const double reverse = kernel.rate(b + d, a - d, d);
        if (std::abs(forward - reverse) > kSymmetryTolerance) {
          report.symmetric = false;
          report.witness = SymmetryWitness{a, b, d, forward, reverse};
          return report;
        }
      }
    }
  }
  return report;
}

namespace {

double top_mass(const KineticGrid& grid) {
  const auto p = grid.probabilities();
  const std::size_t n = std::max<std::size_t>(1, p.size() / 100);
  return std::accumulate(p.end() - static_cast<std::ptrdiff_t>(n), p.end(), 0.0);
}

double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace

StationaryReport stationary_solve(KineticGrid& grid, double tolerance, std::size_t max_steps,
                                  double dt) {
  if (!(tolerance > 0.0)) throw UsageError("stationary_solve: tolerance must be > 0");
  StationaryReport report;
  const double limit = max_outflow_rate(grid);
  report.dt = dt > 0.0 ? dt : (limit > 0.0 ? 0.5 / limit : 1.0);

  while (true) {
    while (report.steps < max_steps) {
      const auto rhs = master_equation_rhs(grid);
      report.residual = max_abs(rhs);
      if (report.residual < tolerance) {
        report.converged = true;
        break;
      }
      try {
        step_master_equation(grid, report.dt);
      } catch (const StepError&) {
        report.dt *= 0.5;
        if (report.dt < 1e-12) throw;
        continue;
      }
      ++report.steps;
    }
    report.leakage = top_mass(grid);
    if (report.leakage <= kLeakageLimit || report.range_doublings >= kMaxDoublings ||
        report.steps >= max_steps)
      break;
    grid.extend(grid.size() * 2);
    ++report.range_doublings;
    report.converged = false;
  }
  return report;
}

std::vector<double> geometric_distribution(std::size_t points, double q) {
  std::vector<double> p(points);
  double qk = 1.0;
  for (auto& x : p) {
    x = qk;
    qk *= q;
  }
  const double s = std::accumulate(p.begin(), p.end(), 0.0);
  for (auto& x : p) x /= s;
  return p;
}

double geometric_ratio_for_mean(std::size_t points, double mean_index) {
  auto mean_of = [&](double q) {
    const auto p = geometric_distribution(points, q);
    double m = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) m += static_cast<double>(i) * p[i];
    return m;
  };
  double lo = 1e-12;
  double hi = 1.0 - 1e-15;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (mean_of(mid) < mean_index ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace moneygas
