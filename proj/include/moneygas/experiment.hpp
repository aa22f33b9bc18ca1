#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "moneygas/config.hpp"
#include "moneygas/histogram.hpp"
#include "moneygas/oracle.hpp"
#include "moneygas/stationarity.hpp"

namespace moneygas {

enum ExitCode : int {
  kExitOk = 0,
  kExitConfig = 1,
  kExitAssert = 2,
  kExitOutput = 3,
};

struct SeriesRow {
  std::uint64_t sweep = 0;
  double entropy = 0.0;
  double temperature = 0.0;
  double ks_to_exponential = 0.0;  // NaN when the policy has no finite floor
};

struct ReplicateResult {
  std::size_t index = 0;
  std::uint64_t seed = 0;
  /// Balances of the last `average_last` snapshots, concatenated.
  std::vector<double> pooled;
  std::vector<std::uint64_t> pooled_sweeps;
  std::vector<SeriesRow> series;
  std::vector<MoneyHistogram> series_histograms;  // one per series row
  StationarityVerdict stationarity;
  HookTotals hooks;
  double conservation_residual = 0.0;
  std::uint64_t sweeps = 0;
};

/// Aggregated outcome of one parameter point (all its replicates).
struct PointResult {
  std::size_t index = 0;
  Json config;  // canonical config of this point
  Json overrides = Json::object();
  std::string config_hash;
  std::uint64_t master_seed = 0;
  std::vector<ReplicateResult> replicates;
  MoneyHistogram histogram{1.0, 0.0};
  std::vector<SeriesRow> series;
  std::map<std::string, double> metrics;
  Json fits = Json::object();
};

struct AssertionOutcome {
  Assertion assertion;
  std::size_t point = 0;
  std::optional<double> value;
  bool pass = false;
};

/// Histogram lattice for a config: the configured width (or mean / 20) with
/// the origin on the policy floor when it is finite, else at 0.
double analysis_bin_width(const SimConfig& config);
double analysis_origin(const SimConfig& config);

/// Runs one replicate with the given stream seed.
ReplicateResult run_replicate(const ExperimentSpec& spec, std::size_t index,
                              std::uint64_t seed);

/// Runs every replicate of a point on up to `threads` threads and pools the
/// results. Replicate r uses mix_seed(master_seed, r).
PointResult run_point(const ExperimentSpec& spec, std::uint64_t master_seed,
                      std::size_t threads);

/// Fits and summary metrics from pooled samples.
void analyze_point(const ExperimentSpec& spec, PointResult& point);

std::vector<AssertionOutcome> check_assertions(const std::vector<Assertion>& assertions,
                                               const std::vector<PointResult>& points);

struct OracleCheckReport {
  OracleResult exact;
  std::vector<double> monte_carlo;  // P(m), m = 0..M
  double formula_difference = 0.0;
  double monte_carlo_ks = 0.0;
  bool exact_pass = false;
  bool monte_carlo_pass = false;
  bool pass() const { return exact_pass && monte_carlo_pass; }
};

inline constexpr double kOracleExactTolerance = 1e-12;
inline constexpr double kOracleMonteCarloTolerance = 0.02;

/// Exact chain, composition formula and a Monte Carlo run of the fixed
/// unit-transfer model, compared pairwise. Throws UsageError when the state
/// space is too large.
OracleCheckReport oracle_check(const OracleSpec& spec);

struct RunOptions {
  std::string out_dir;
  bool assert_mode = false;
  std::size_t threads = 1;
  std::ostream* log = nullptr;
};

/// `run` and `sweep` entry points. Return an ExitCode.
int run_experiment(const ExperimentSpec& spec, const RunOptions& options);
int run_kinetic(const ExperimentSpec& spec, const RunOptions& options);
int run_oracle(const ExperimentSpec& spec, const RunOptions& options);

/// Offline fit of a histogram CSV (bin_left, count, probability). A shift of
/// nullopt fits from the first bin edge.
int run_fit(const std::string& csv_path, std::optional<double> shift,
            const RunOptions& options);

/// Reads a histogram CSV; throws ConfigError with the line on malformed input.
MoneyHistogram read_histogram_csv(const std::string& path);

}  // namespace moneygas
