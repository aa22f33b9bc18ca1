#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "moneygas/kinetic.hpp"
#include "moneygas/ledger.hpp"

namespace moneygas {

using Json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

enum class OutputKind {
  Snapshots,
  EntropySeries,
  TemperatureSeries,
  Fits,
  Tail,
  Stationarity,
  OracleCheck,
};

const char* to_string(OutputKind kind);

struct StationaritySpec {
  std::uint64_t window_sweeps = 1000;
  double epsilon = 0.01;
  std::size_t k = 5;
};

/// One grid-sweep axis: a JSON pointer into the config and the values it takes.
struct SweepAxis {
  std::string path;
  std::vector<Json> values;
};

/// Threshold on a named metric of the results document.
struct Assertion {
  std::string metric;
  std::optional<double> min;
  std::optional<double> max;
};

struct KineticSpec {
  KernelSpec kernel = FixedTransferKernel{};
  double floor = 0.0;
  double step = 1.0;
  std::size_t points = 400;
  /// Initial mass sits on this grid index.
  std::size_t initial_index = 0;
  double tolerance = 1e-10;
  std::size_t max_steps = 1000000;
  double dt = 0.0;
};

struct OracleSpec {
  std::size_t num_agents = 2;
  std::size_t total_money = 2;
  std::uint64_t mc_sweeps = 200000;
  std::uint64_t seed = 1;
};

struct ExperimentSpec {
  int schema_version = kSchemaVersion;
  std::optional<SimConfig> sim;
  std::size_t replicates = 1;
  std::set<OutputKind> outputs{OutputKind::Fits};
  std::string output_dir;
  /// Snapshots per replicate pooled for fitting (the most recent ones).
  std::size_t average_last = 1;
  /// Rows in series.csv are thinned to at most this many.
  std::size_t series_rows = 1000;
  double tail_fraction = 0.05;
  StationaritySpec stationarity;
  std::vector<SweepAxis> sweep_axes;
  std::vector<Assertion> assertions;
  std::optional<KineticSpec> kinetic;
  std::optional<OracleSpec> oracle;
};

/// Parses and validates a config document. Throws ConfigError carrying the
/// offending field as a JSON pointer and its line in `text`.
ExperimentSpec parse_experiment(const std::string& text);
ExperimentSpec parse_experiment(const Json& doc, const std::string& text = {});
inline ExperimentSpec parse_experiment(const char* text) { return parse_experiment(std::string(text)); }

/// Canonical document with every default filled in.
Json to_json(const ExperimentSpec& spec);

/// FNV-1a 64 of the canonical dump, as 16 hex digits.
std::string config_hash(const Json& canonical);

/// Cartesian product of the sweep axes applied to the canonical document,
/// in row-major order (last axis fastest). Throws ConfigError when a path
/// does not name an existing field.
std::vector<Json> expand_sweep(const Json& canonical, const std::vector<SweepAxis>& axes);

/// 1-based line of the field named by `pointer` in `text` (or of its deepest
/// ancestor present), 0 if none of it appears.
std::size_t locate_field(const std::string& text, const std::string& pointer);

}  // namespace moneygas
