#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace moneygas {

// Kernels on a uniform money grid m_i = floor + i h. Transfers are whole
// numbers of grid steps. Rates are per payer per unit time (one sweep) and
// sum to at most 1 over the transfer sizes, matching one payment attempt
// per agent per sweep in the Monte Carlo engine.

/// Every payment moves `steps` grid steps.
struct FixedTransferKernel {
  std::size_t steps = 1;
};

/// Payment uniform on {0, .., max_steps - 1} grid steps.
struct UniformTransferKernel {
  std::size_t max_steps = 1;
};

/// Payment of round(fraction * i) grid steps from a payer at index i.
struct ProportionalTransferKernel {
  double fraction = 0.0;
};

struct ZeroKernel {};

using KernelSpec = std::variant<FixedTransferKernel, UniformTransferKernel,
                                ProportionalTransferKernel, ZeroKernel>;

std::string kernel_name(const KernelSpec& spec);

struct KernelEntry {
  std::size_t delta = 0;  // grid steps, >= 1
  double rate = 0.0;
};

/// Transition rates f(payer, receiver, delta). A payer at index i lists the
/// transfers it can make (delta <= i keeps it on the grid); the rate is
/// independent of the receiver except that the receiver must stay on the
/// grid (receiver + delta < G).
class TransitionKernel {
 public:
  TransitionKernel() = default;
  TransitionKernel(std::size_t grid_points, std::vector<std::vector<KernelEntry>> by_payer);

  static TransitionKernel build(const KernelSpec& spec, std::size_t grid_points);

  std::size_t grid_points() const { return by_payer_.size(); }
  std::span<const KernelEntry> entries(std::size_t payer) const { return by_payer_.at(payer); }
  double rate(std::size_t payer, std::size_t receiver, std::size_t delta) const;
  std::size_t max_delta() const { return max_delta_; }
  bool empty() const;

 private:
  std::vector<std::vector<KernelEntry>> by_payer_;
  std::size_t max_delta_ = 0;
};

class KineticGrid;

struct StepReport {
  double max_change = 0.0;  // ||dP||_inf over the step
  double mass_error = 0.0;  // |sum P - 1| before round-off absorption
};

/// Forward-Euler step. Throws StepError when dt * max_outflow_rate >= 1.
StepReport step_master_equation(KineticGrid& grid, double dt);

/// Discretised money distribution P(m_i) with its kernel.
class KineticGrid {
 public:
  KineticGrid(double floor, double step, std::vector<double> probabilities, KernelSpec spec);

  /// All mass on grid point `at`.
  static KineticGrid point_mass(double floor, double step, std::size_t points, std::size_t at,
                                KernelSpec spec);

  double floor() const { return floor_; }
  double step() const { return step_; }
  std::size_t size() const { return p_.size(); }
  double money(std::size_t i) const { return floor_ + static_cast<double>(i) * step_; }
  std::span<const double> probabilities() const { return p_; }
  const TransitionKernel& kernel() const { return kernel_; }
  const KernelSpec& spec() const { return spec_; }

  double total() const;
  double mean() const;

  /// Replaces P; sizes must match and entries be nonnegative.
  void set_probabilities(std::vector<double> p);
  /// Appends zero-probability points and rebuilds the kernel.
  void extend(std::size_t new_points);

  friend StepReport step_master_equation(KineticGrid& grid, double dt);

 private:
  double floor_;
  double step_;
  std::vector<double> p_;
  KernelSpec spec_;
  TransitionKernel kernel_;
};

/// dP/dt of the pairwise kinetic equation at the current P: each agent loses
/// mass at the rate it pays or receives and gains the mirrored inflow.
std::vector<double> master_equation_rhs(const KineticGrid& grid);

/// Largest total outflow rate (paying plus receiving) over the grid.
double max_outflow_rate(const KineticGrid& grid);

struct DetailedBalanceReport {
  double residual = 0.0;
  std::size_t transitions = 0;  // (forward, reverse) pairs compared
  std::size_t excluded = 0;     // pairs touching a zero-probability state
};

/// max |f_fwd P(m) P(m') - f_rev P(m - D) P(m' + D)| / max(both terms).
DetailedBalanceReport detailed_balance_residual(const KineticGrid& grid);

struct SymmetryWitness {
  std::size_t payer = 0;
  std::size_t receiver = 0;
  std::size_t delta = 0;
  double forward = 0.0;
  double reverse = 0.0;
};

struct SymmetryReport {
  bool symmetric = true;
  std::optional<SymmetryWitness> witness;
};

/// Checks f(m, m', D) == f(m' + D, m - D, D) within 1e-12 for every pair of
/// on-grid states.
SymmetryReport kernel_symmetry_check(const TransitionKernel& kernel);

struct StationaryReport {
  bool converged = false;
  std::size_t steps = 0;
  double residual = 0.0;  // ||dP/dt||_inf at exit
  double dt = 0.0;
  std::size_t range_doublings = 0;
  double leakage = 0.0;  // mass on the top 1% of the grid at exit
};

/// Iterates Euler steps until ||dP/dt||_inf < tolerance or max_steps. dt <= 0
/// picks half the stability limit; dt is halved whenever the guard trips.
/// If mass on the top 1% of the grid exceeds 1e-6 the grid is doubled
/// (up to four times) and iteration continues.
StationaryReport stationary_solve(KineticGrid& grid, double tolerance, std::size_t max_steps,
                                  double dt = 0.0);

/// Geometric P_i proportional to q^i on `points` grid points, normalised.
std::vector<double> geometric_distribution(std::size_t points, double q);

/// Ratio q of the geometric distribution on {0, .., points - 1} with the
/// given mean index (bisection).
double geometric_ratio_for_mean(std::size_t points, double mean_index);

}  // namespace moneygas
