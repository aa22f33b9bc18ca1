#include "moneygas/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <deque>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include "moneygas/errors.hpp"
#include "moneygas/kinetic.hpp"
#include "moneygas/rng.hpp"
#include "moneygas/simulation.hpp"
#include "moneygas/statistics.hpp"

namespace fs = std::filesystem;

namespace moneygas {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct OutputFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

const char* kSeedDerivation =
    "replicate seed = mix_seed(point master seed, replicate index); sweep point master seed = "
    "mix_seed(~seed, point index), or seed itself for a single run; mix_seed(a, i) = "
    "splitmix64 finalizer of a + 0x9e3779b97f4a7c15 * (i + 1)";

void prepare_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw OutputFailure("cannot create output directory " + dir.string() + ": " + ec.message());
  const fs::path probe = dir / ".moneygas_write_probe";
  {
    std::ofstream f(probe);
    if (!f) throw OutputFailure("output directory is not writable: " + dir.string());
  }
  fs::remove(probe, ec);
}

std::ofstream open_out(const fs::path& file) {
  std::ofstream f(file);
  if (!f) throw OutputFailure("cannot write " + file.string());
  f << std::setprecision(17);
  return f;
}

void write_header(std::ostream& os, const std::string& hash, const std::string& units) {
  os << "# moneygas config_hash=" << hash << " units=" << units << "\n";
}

void write_histogram(const fs::path& file, const MoneyHistogram& hist, const std::string& hash) {
  auto f = open_out(file);
  write_header(f, hash, "bin_left:money count:agents probability:per_bin");
  f << "bin_left,count,probability\n";
  const auto counts = hist.counts();
  for (std::size_t k = 0; k < counts.size(); ++k)
    f << hist.bin_left(k) << "," << counts[k] << "," << hist.probability(k) << "\n";
}

void write_series(const fs::path& file, const std::vector<SeriesRow>& rows, const std::string& hash) {
  auto f = open_out(file);
  write_header(f, hash, "sweep:sweeps entropy:nats temperature:money ks_to_exponential:1");
  f << "sweep,entropy,temperature,ks_to_exponential\n";
  for (const auto& r : rows)
    f << r.sweep << "," << r.entropy << "," << r.temperature << "," << r.ks_to_exponential << "\n";
}

void write_json(const fs::path& file, const Json& doc) {
  auto f = open_out(file);
  f << doc.dump(2) << "\n";
}

Json finite_or_null(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

Json fit_json(const FitResult& fit) {
  return {{"family", to_string(fit.family)},
          {"temperature", finite_or_null(fit.temperature)},
          {"beta", finite_or_null(fit.beta)},
          {"tail_exponent", finite_or_null(fit.tail_exponent)},
          {"ks", finite_or_null(fit.ks)},
          {"support_shift", finite_or_null(fit.support_shift)},
          {"samples", fit.samples}};
}

double exponential_ks(std::span<const double> balances, double floor) {
  if (!std::isfinite(floor) || balances.empty()) return kNaN;
  double mean = 0.0;
  for (double m : balances) mean += m;
  mean /= static_cast<double>(balances.size());
  const double t = mean - floor;
  if (!(t > 0.0)) return kNaN;
  return ks_distance(balances, [&](double x) { return x <= floor ? 0.0 : 1.0 - std::exp(-(x - floor) / t); });
}

std::uint64_t series_every(const SimConfig& c, std::size_t rows) {
  const std::uint64_t base = c.snapshot_every;
  const std::uint64_t want = (c.sweeps + rows - 1) / std::max<std::size_t>(rows, 1);
  const std::uint64_t every = std::max(base, want);
  return (every + base - 1) / base * base;
}

// Run `count` tasks on up to `threads` workers; the first exception is rethrown.
template <class Fn>
void parallel_for(std::size_t count, std::size_t threads, Fn&& fn) {
  const std::size_t workers = std::max<std::size_t>(1, std::min(threads, count));
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto work = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        next = count;
      }
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);
}

void record(PointResult& p, const std::string& name, double value) {
  if (std::isfinite(value)) p.metrics[name] = value;
}

}  // namespace

namespace {

double mean_endowment(const SimConfig& c) {
  if (c.initial_balances.empty()) return c.initial_balance;
  double mean = 0.0;
  for (double m : c.initial_balances) mean += m;
  return mean / static_cast<double>(c.initial_balances.size());
}

}  // namespace

double analysis_bin_width(const SimConfig& c) {
  if (c.bin_width > 0.0) return c.bin_width;
  const double mean = mean_endowment(c);
  return mean > 0.0 ? mean / 20.0 : 1.0;
}

double analysis_origin(const SimConfig& c) {
  const double lo = c.boundary.lower_bound();
  return std::isfinite(lo) ? lo : 0.0;
}

ReplicateResult run_replicate(const ExperimentSpec& spec, std::size_t index, std::uint64_t seed) {
  if (!spec.sim) throw ConfigError("/simulation: missing");
  const SimConfig& cfg = *spec.sim;
  ReplicateResult out;
  out.index = index;
  out.seed = seed;
  out.sweeps = cfg.sweeps;

  const double width = analysis_bin_width(cfg);
  const double origin = analysis_origin(cfg);
  const double floor = cfg.boundary.lower_bound();
  const std::uint64_t every = series_every(cfg, spec.series_rows);
  const bool want_stationarity = spec.outputs.count(OutputKind::Stationarity) > 0;
  std::optional<StationarityDetector> detector;
  if (want_stationarity)
    detector.emplace(spec.stationarity.window_sweeps, spec.stationarity.epsilon, spec.stationarity.k);
  std::deque<std::pair<std::uint64_t, std::vector<double>>> recent;

  auto on_snapshot = [&](std::uint64_t sweep, std::span<const double> balances) {
    recent.emplace_back(sweep, std::vector<double>(balances.begin(), balances.end()));
    if (recent.size() > spec.average_last) recent.pop_front();
    if (detector) detector->add(sweep, balances);
    if (sweep % every == 0) {
      auto hist = MoneyHistogram::from_balances(balances, width, origin);
      SeriesRow row;
      row.sweep = sweep;
      row.entropy = entropy_per_agent(hist);
      row.temperature = money_temperature(balances);
      row.ks_to_exponential = exponential_ks(balances, floor);
      out.series.push_back(row);
      out.series_histograms.push_back(std::move(hist));
    }
  };

  Simulation sim(cfg, seed);
  on_snapshot(0, sim.ledger().balances());
  sim.run(cfg.sweeps, on_snapshot);

  for (const auto& [sweep, snap] : recent) {
    out.pooled_sweeps.push_back(sweep);
    out.pooled.insert(out.pooled.end(), snap.begin(), snap.end());
  }
  if (detector) out.stationarity = detector->finish();
  out.hooks = sim.hook_totals();
  out.conservation_residual = sim.ledger().conservation_residual();
  return out;
}

PointResult run_point(const ExperimentSpec& spec, std::uint64_t master_seed, std::size_t threads) {
  if (!spec.sim) throw ConfigError("/simulation: missing");
  PointResult point;
  point.master_seed = master_seed;
  point.config = to_json(spec);
  point.config_hash = config_hash(point.config);
  point.replicates.resize(spec.replicates);
  parallel_for(spec.replicates, threads, [&](std::size_t r) {
    point.replicates[r] = run_replicate(spec, r, mix_seed(master_seed, r));
  });
  analyze_point(spec, point);
  return point;
}

void analyze_point(const ExperimentSpec& spec, PointResult& point) {
  const SimConfig& cfg = *spec.sim;
  const double width = analysis_bin_width(cfg);
  const double origin = analysis_origin(cfg);
  const double floor = cfg.boundary.lower_bound();

  std::vector<double> pooled;
  for (const auto& r : point.replicates) pooled.insert(pooled.end(), r.pooled.begin(), r.pooled.end());
  point.histogram = MoneyHistogram(width, origin);
  point.histogram.add(pooled);

  // Pooled series: entropy of the merged histogram, mean of all balances,
  // replicate-averaged KS.
  point.series.clear();
  if (!point.replicates.empty()) {
    const std::size_t rows = point.replicates.front().series.size();
    for (std::size_t i = 0; i < rows; ++i) {
      MoneyHistogram merged(width, origin);
      double temp = 0.0;
      double ks = 0.0;
      for (const auto& r : point.replicates) {
        merged.merge(r.series_histograms[i]);
        temp += r.series[i].temperature;
        ks += r.series[i].ks_to_exponential;
      }
      const auto n = static_cast<double>(point.replicates.size());
      point.series.push_back({point.replicates.front().series[i].sweep, entropy_per_agent(merged),
                              temp / n, ks / n});
    }
  }

  Json fits = Json::object();
  record(point, "samples", static_cast<double>(pooled.size()));
  if (!pooled.empty()) {
    record(point, "mean", point.histogram.sample_mean());
    record(point, "variance", point.histogram.sample_variance());
    record(point, "min_balance", point.histogram.min());
    record(point, "max_balance", point.histogram.max());
  }
  double worst_residual = 0.0;
  for (const auto& r : point.replicates)
    worst_residual = std::max(worst_residual, std::abs(r.conservation_residual));
  record(point, "conservation_residual", worst_residual);

  auto attempt = [&](const char* name, auto&& fn) {
    try {
      fn();
    } catch (const FitError& e) {
      fits[name] = {{"error", e.what()}};
    }
  };

  if (spec.outputs.count(OutputKind::Fits)) {
    if (std::isfinite(floor)) {
      attempt("exponential", [&] {
        const auto fit = fit_exponential(pooled, floor, width);
        fits["exponential"] = fit_json(fit);
        record(point, "temperature", fit.temperature);
        record(point, "ks_exponential", fit.ks);
        record(point, "exponential_first_bin", 1.0 - std::exp(-width / fit.temperature));
      });
      if (!point.histogram.empty()) record(point, "first_bin_probability", point.histogram.probability(0));
    } else {
      attempt("two_sided", [&] {
        const auto fit = fit_two_sided(pooled, width);
        fits["two_sided"] = {{"positive", fit_json(fit.positive)},
                             {"negative", fit_json(fit.negative)},
                             {"positive_money_per_agent", fit.positive_money_per_agent},
                             {"negative_money_per_agent", fit.negative_money_per_agent},
                             {"positive_fraction", fit.positive_fraction},
                             {"negative_fraction", fit.negative_fraction}};
        record(point, "positive_temperature", fit.positive.temperature);
        record(point, "negative_temperature", fit.negative.temperature);
        record(point, "positive_money_per_agent", fit.positive_money_per_agent);
        record(point, "negative_money_per_agent", fit.negative_money_per_agent);
      });
    }
    if (const auto* bank = std::get_if<ReserveRatioBank>(&cfg.boundary.kind)) {
      const double base = mean_endowment(cfg);
      const double r = bank->reserve_ratio;
      record(point, "predicted_positive_temperature", base / r);
      record(point, "predicted_negative_temperature", base * (1.0 - r) / r);
    }
    if (cfg.boundary.nonnegative()) {
      attempt("gamma", [&] {
        const auto fit = fit_gamma(pooled);
        fits["gamma"] = fit_json(fit);
        record(point, "gamma_temperature", fit.temperature);
        record(point, "gamma_beta", fit.beta);
        record(point, "ks_gamma", fit.ks);
      });
    }
    if (const double hi = cfg.boundary.upper_bound(); std::isfinite(hi)) {
      const double lo = std::isfinite(floor) ? floor : point.histogram.min();
      const double mid = 0.5 * (lo + hi);
      const auto fit = fit_log_linear(point.histogram, mid, hi);
      fits["log_linear_upper_half"] = {
          {"slope", fit.slope}, {"intercept", fit.intercept}, {"bins", fit.bins}, {"from", mid}, {"to", hi}};
      if (fit.bins >= 2) record(point, "log_linear_slope_upper", fit.slope);
    }
  }

  if (spec.outputs.count(OutputKind::Tail)) {
    attempt("tail", [&] {
      const auto hill = tail_exponent_hill(pooled, spec.tail_fraction);
      fits["tail"] = {{"alpha", hill.alpha},
                      {"density_exponent", hill.density_exponent},
                      {"tail_samples", hill.tail_samples},
                      {"threshold", hill.threshold},
                      {"power_tail", hill.power_tail}};
      record(point, "hill_alpha", hill.alpha);
      record(point, "hill_density_exponent", hill.density_exponent);
    });
  }

  if (spec.outputs.count(OutputKind::Stationarity)) {
    Json list = Json::array();
    std::size_t fired = 0;
    for (const auto& r : point.replicates) {
      const auto& v = r.stationarity;
      fired += v.stationary ? 1 : 0;
      list.push_back({{"replicate", r.index},
                      {"stationary", v.stationary},
                      {"first_stationary_sweep",
                       v.first_stationary_sweep ? Json(*v.first_stationary_sweep) : Json(nullptr)},
                      {"windows", v.windows},
                      {"last_max_ks", v.last_max_ks}});
    }
    fits["stationarity"] = {{"window", spec.stationarity.window_sweeps},
                            {"epsilon", spec.stationarity.epsilon},
                            {"k", spec.stationarity.k},
                            {"replicates", list}};
    record(point, "stationary_replicates", static_cast<double>(fired));
    record(point, "stationary", fired == point.replicates.size() && fired > 0 ? 1.0 : 0.0);
  }

  if (spec.outputs.count(OutputKind::EntropySeries) && !point.series.empty()) {
    const double s_final = point.series.back().entropy;
    record(point, "final_entropy", s_final);
    double worst_drop = 0.0;
    for (std::size_t i = 1; i < point.series.size(); ++i)
      worst_drop = std::max(worst_drop, point.series[i - 1].entropy - point.series[i].entropy);
    record(point, "entropy_max_drop", worst_drop);
    if (std::isfinite(floor) && !std::isfinite(cfg.boundary.upper_bound())) {
      const double t = point.series.back().temperature - floor;
      if (t > 0.0) {
        const double ref = binned_exponential_entropy(width, t);
        record(point, "reference_entropy", ref);
        record(point, "entropy_gap", std::abs(s_final - ref));
      }
    }
  }
  if (spec.outputs.count(OutputKind::TemperatureSeries) && !point.series.empty())
    record(point, "final_temperature", point.series.back().temperature);

  double interest = 0.0;
  double bankrupt = 0.0;
  for (const auto& r : point.replicates) {
    interest += r.hooks.interest_created;
    bankrupt += static_cast<double>(r.hooks.bankruptcies);
  }
  if (cfg.boundary.interest) record(point, "interest_created", interest);
  if (cfg.boundary.bankruptcy_threshold) record(point, "bankruptcies", bankrupt);
  point.fits = std::move(fits);
}

std::vector<AssertionOutcome> check_assertions(const std::vector<Assertion>& assertions,
                                               const std::vector<PointResult>& points) {
  std::vector<AssertionOutcome> out;
  for (const auto& p : points) {
    for (const auto& a : assertions) {
      AssertionOutcome o;
      o.assertion = a;
      o.point = p.index;
      if (const auto it = p.metrics.find(a.metric); it != p.metrics.end()) {
        o.value = it->second;
        o.pass = (!a.min || it->second >= *a.min) && (!a.max || it->second <= *a.max);
      }
      out.push_back(o);
    }
  }
  return out;
}

namespace {

Json assertions_json(const std::vector<AssertionOutcome>& outcomes) {
  Json list = Json::array();
  for (const auto& o : outcomes)
    list.push_back({{"point", o.point},
                    {"metric", o.assertion.metric},
                    {"min", o.assertion.min ? Json(*o.assertion.min) : Json(nullptr)},
                    {"max", o.assertion.max ? Json(*o.assertion.max) : Json(nullptr)},
                    {"value", o.value ? Json(*o.value) : Json(nullptr)},
                    {"pass", o.pass}});
  return list;
}

bool all_pass(const std::vector<AssertionOutcome>& outcomes) {
  return std::all_of(outcomes.begin(), outcomes.end(), [](const auto& o) { return o.pass; });
}

std::ostream& log_of(const RunOptions& o) { return o.log ? *o.log : std::clog; }

Json point_json(const PointResult& p) {
  Json seeds = Json::array();
  for (const auto& r : p.replicates) seeds.push_back(r.seed);
  Json metrics = Json::object();
  for (const auto& [k, v] : p.metrics) metrics[k] = v;
  return {{"point", p.index},
          {"overrides", p.overrides},
          {"config_hash", p.config_hash},
          {"master_seed", p.master_seed},
          {"replicate_seeds", seeds},
          {"metrics", metrics},
          {"fits", p.fits}};
}

void write_point(const ExperimentSpec& spec, const PointResult& p, const fs::path& dir,
                 const std::string& hash) {
  prepare_dir(dir);
  write_histogram(dir / "histogram.csv", p.histogram, hash);
  const bool series = spec.outputs.count(OutputKind::EntropySeries) ||
                      spec.outputs.count(OutputKind::TemperatureSeries);
  if (series) write_series(dir / "series.csv", p.series, hash);
  const bool per_replicate = p.replicates.size() > 1 || spec.outputs.count(OutputKind::Snapshots);
  if (!per_replicate) return;
  const double width = analysis_bin_width(*spec.sim);
  const double origin = analysis_origin(*spec.sim);
  for (const auto& r : p.replicates) {
    std::ostringstream name;
    name << "r" << std::setw(3) << std::setfill('0') << r.index;
    const fs::path rdir = dir / "replicates" / name.str();
    prepare_dir(rdir);
    MoneyHistogram h(width, origin);
    h.add(r.pooled);
    write_histogram(rdir / "histogram.csv", h, hash);
    if (series) write_series(rdir / "series.csv", r.series, hash);
    if (spec.outputs.count(OutputKind::Snapshots)) {
      auto f = open_out(rdir / "snapshots.csv");
      write_header(f, hash, "sweep:sweeps agent:index balance:money");
      f << "sweep,agent,balance\n";
      const std::size_t n = spec.sim->num_agents;
      for (std::size_t s = 0; s < r.pooled_sweeps.size(); ++s)
        for (std::size_t a = 0; a < n; ++a)
          f << r.pooled_sweeps[s] << "," << a << "," << r.pooled[s * n + a] << "\n";
    }
  }
}

fs::path resolve_out(const ExperimentSpec& spec, const RunOptions& options) {
  if (!options.out_dir.empty()) return options.out_dir;
  if (!spec.output_dir.empty()) return spec.output_dir;
  return "moneygas_out";
}

}  // namespace

int run_experiment(const ExperimentSpec& spec, const RunOptions& options) {
  auto& log = log_of(options);
  if (!spec.sim) {
    log << "config error: /simulation: required for run and sweep\n";
    return kExitConfig;
  }
  const fs::path out = resolve_out(spec, options);
  const Json canonical = to_json(spec);
  const std::string hash = config_hash(canonical);

  std::vector<ExperimentSpec> specs;
  std::vector<Json> overrides;
  try {
    if (spec.sweep_axes.empty()) {
      specs.push_back(spec);
      overrides.push_back(Json::object());
    } else {
      const auto docs = expand_sweep(canonical, spec.sweep_axes);
      for (const auto& d : docs) {
        specs.push_back(parse_experiment(d));
        Json o = Json::object();
        for (const auto& axis : spec.sweep_axes) o[axis.path] = d.at(Json::json_pointer(axis.path));
        overrides.push_back(o);
      }
    }
  } catch (const ConfigError& e) {
    log << "config error: " << e.what() << "\n";
    return kExitConfig;
  }

  try {
    prepare_dir(out);
  } catch (const OutputFailure& e) {
    log << "output error: " << e.what() << "\n";
    return kExitOutput;
  }

  const bool sweep = !spec.sweep_axes.empty();
  std::vector<PointResult> points(specs.size());
  // Several points: one point per worker, replicates sequential inside it.
  // A single point spreads its replicates instead. Seeds do not depend on
  // the split, so results are identical for any thread count.
  try {
    const bool by_point = specs.size() > 1;
    parallel_for(specs.size(), by_point ? options.threads : 1, [&](std::size_t p) {
      const std::uint64_t master = sweep ? mix_seed(~spec.sim->seed, p) : spec.sim->seed;
      points[p] = run_point(specs[p], master, by_point ? 1 : options.threads);
      points[p].index = p;
      points[p].overrides = overrides[p];
    });
  } catch (const ConfigError& e) {
    log << "config error: " << e.what() << "\n";
    return kExitConfig;
  }

  const auto outcomes = check_assertions(spec.assertions, points);
  Json doc;
  doc["schema_version"] = kSchemaVersion;
  doc["config_hash"] = hash;
  doc["seed_derivation"] = kSeedDerivation;
  doc["points"] = Json::array();
  for (const auto& p : points) doc["points"].push_back(point_json(p));
  doc["assertions"] = assertions_json(outcomes);
  doc["assertions_pass"] = all_pass(outcomes);

  try {
    write_json(out / "fits.json", doc);
    if (!sweep) {
      write_point(specs[0], points[0], out, hash);
    } else {
      for (const auto& p : points) {
        std::ostringstream name;
        name << "point_" << std::setw(3) << std::setfill('0') << p.index;
        write_point(specs[p.index], p, out / name.str(), hash);
      }
      std::set<std::string> metric_names;
      for (const auto& p : points)
        for (const auto& [k, v] : p.metrics) metric_names.insert(k);
      auto f = open_out(out / "sweep.csv");
      write_header(f, hash, "per-point metrics");
      f << "point,master_seed";
      for (const auto& axis : spec.sweep_axes) f << "," << axis.path;
      for (const auto& m : metric_names) f << "," << m;
      f << "\n";
      for (const auto& p : points) {
        f << p.index << "," << p.master_seed;
        for (const auto& axis : spec.sweep_axes) f << "," << p.overrides.at(axis.path).dump();
        for (const auto& m : metric_names) {
          f << ",";
          if (const auto it = p.metrics.find(m); it != p.metrics.end()) f << it->second;
        }
        f << "\n";
      }
    }
  } catch (const OutputFailure& e) {
    log << "output error: " << e.what() << "\n";
    return kExitOutput;
  }

  for (const auto& o : outcomes) {
    if (!o.pass) {
      log << (options.assert_mode ? "assertion failed: " : "assertion (not enforced) failed: ")
          << "point " << o.point << " " << o.assertion.metric << " = "
          << (o.value ? std::to_string(*o.value) : std::string("missing")) << "\n";
    }
  }
  return options.assert_mode && !all_pass(outcomes) ? kExitAssert : kExitOk;
}

OracleCheckReport oracle_check(const OracleSpec& spec) {
  OracleCheckReport report;
  report.exact = enumerate_oracle(spec.num_agents, spec.total_money);
  report.formula_difference = report.exact.max_abs_difference;
  report.exact_pass = report.formula_difference <= kOracleExactTolerance;

  const std::size_t n = spec.num_agents;
  const std::size_t m = spec.total_money;
  SimConfig cfg;
  cfg.num_agents = n;
  cfg.initial_balances.assign(n, static_cast<double>(m / n));
  for (std::size_t i = 0; i < m % n; ++i) cfg.initial_balances[i] += 1.0;
  cfg.rule = FixedAmount{1.0};
  cfg.boundary = BoundaryPolicy{};
  cfg.mode = MoneyMode::Integer;
  cfg.sweeps = spec.mc_sweeps;
  cfg.seed = spec.seed;

  std::vector<double> counts(m + 1, 0.0);
  const std::uint64_t burn_in = spec.mc_sweeps / 10;
  Simulation sim(cfg);
  sim.run(spec.mc_sweeps, [&](std::uint64_t sweep, std::span<const double> balances) {
    if (sweep <= burn_in) return;
    for (double b : balances) counts[static_cast<std::size_t>(b)] += 1.0;
  });
  double total = 0.0;
  for (double c : counts) total += c;
  if (total == 0.0) {
    // No sampled sweeps: the initial state stands in.
    for (double b : sim.ledger().balances()) counts[static_cast<std::size_t>(b)] += 1.0;
    total = static_cast<double>(n);
  }
  for (double& c : counts) c /= total;
  report.monte_carlo = counts;
  report.monte_carlo_ks = ks_distance_pmf(report.monte_carlo, report.exact.marginal);
  report.monte_carlo_pass = report.monte_carlo_ks < kOracleMonteCarloTolerance;
  return report;
}

int run_oracle(const ExperimentSpec& spec, const RunOptions& options) {
  auto& log = log_of(options);
  if (!spec.oracle) {
    log << "config error: /oracle: required for the oracle command\n";
    return kExitConfig;
  }
  OracleCheckReport report;
  try {
    report = oracle_check(*spec.oracle);
  } catch (const UsageError& e) {
    log << "config error: /oracle: " << e.what() << "\n";
    return kExitConfig;
  }
  const fs::path out = resolve_out(spec, options);
  const std::string hash = config_hash(to_json(spec));
  Json doc{{"schema_version", kSchemaVersion},
           {"config_hash", hash},
           {"agents", spec.oracle->num_agents},
           {"money", spec.oracle->total_money},
           {"states", report.exact.states},
           {"exact", report.exact.marginal},
           {"formula", report.exact.composition_formula},
           {"monte_carlo", report.monte_carlo},
           {"exact_vs_formula", report.formula_difference},
           {"balance_residual", report.exact.balance_residual},
           {"monte_carlo_ks", report.monte_carlo_ks},
           {"exact_pass", report.exact_pass},
           {"monte_carlo_pass", report.monte_carlo_pass},
           {"pass", report.pass()}};
  try {
    prepare_dir(out);
    write_json(out / "oracle.json", doc);
  } catch (const OutputFailure& e) {
    log << "output error: " << e.what() << "\n";
    return kExitOutput;
  }
  log << "oracle N=" << spec.oracle->num_agents << " M=" << spec.oracle->total_money
      << " exact-vs-formula=" << report.formula_difference
      << " mc-ks=" << report.monte_carlo_ks << (report.pass() ? " pass" : " FAIL") << "\n";
  return options.assert_mode && !report.pass() ? kExitAssert : kExitOk;
}

int run_kinetic(const ExperimentSpec& spec, const RunOptions& options) {
  auto& log = log_of(options);
  if (!spec.kinetic) {
    log << "config error: /kinetic: required for the kinetic command\n";
    return kExitConfig;
  }
  const KineticSpec& k = *spec.kinetic;
  auto grid = KineticGrid::point_mass(k.floor, k.step, k.points, k.initial_index, k.kernel);
  const auto report = stationary_solve(grid, k.tolerance, k.max_steps, k.dt);
  const auto balance = detailed_balance_residual(grid);
  const auto symmetry = kernel_symmetry_check(grid.kernel());

  PointResult metrics_holder;
  auto& m = metrics_holder.metrics;
  m["converged"] = report.converged ? 1.0 : 0.0;
  m["kinetic_residual"] = report.residual;
  m["kinetic_mean"] = grid.mean();
  m["leakage"] = report.leakage;
  m["detailed_balance_residual"] = balance.residual;
  m["kernel_symmetric"] = symmetry.symmetric ? 1.0 : 0.0;
  const auto outcomes = check_assertions(spec.assertions, {metrics_holder});

  const fs::path out = resolve_out(spec, options);
  const std::string hash = config_hash(to_json(spec));
  Json witness = nullptr;
  if (symmetry.witness)
    witness = {{"payer", symmetry.witness->payer},
               {"receiver", symmetry.witness->receiver},
               {"delta", symmetry.witness->delta},
               {"forward", symmetry.witness->forward},
               {"reverse", symmetry.witness->reverse}};
  Json doc{{"schema_version", kSchemaVersion},
           {"config_hash", hash},
           {"kernel", kernel_name(k.kernel)},
           {"converged", report.converged},
           {"steps", report.steps},
           {"residual", report.residual},
           {"dt", report.dt},
           {"range_doublings", report.range_doublings},
           {"leakage", report.leakage},
           {"grid_points", grid.size()},
           {"mean", grid.mean()},
           {"detailed_balance",
            {{"residual", balance.residual},
             {"transitions", balance.transitions},
             {"excluded", balance.excluded}}},
           {"symmetric", symmetry.symmetric},
           {"witness", witness},
           {"assertions", assertions_json(outcomes)},
           {"assertions_pass", all_pass(outcomes)}};
  try {
    prepare_dir(out);
    write_json(out / "kinetic.json", doc);
    auto f = open_out(out / "kinetic.csv");
    write_header(f, hash, "m:money P:per_grid_point");
    f << "m,P\n";
    const auto p = grid.probabilities();
    for (std::size_t i = 0; i < p.size(); ++i) f << grid.money(i) << "," << p[i] << "\n";
  } catch (const OutputFailure& e) {
    log << "output error: " << e.what() << "\n";
    return kExitOutput;
  }
  log << "kinetic " << kernel_name(k.kernel) << " converged=" << report.converged
      << " steps=" << report.steps << " residual=" << report.residual << "\n";
  return options.assert_mode && !all_pass(outcomes) ? kExitAssert : kExitOk;
}

MoneyHistogram read_histogram_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open");
  std::string line;
  std::size_t lineno = 0;
  bool header = false;
  std::vector<std::pair<double, std::uint64_t>> rows;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      if (line.rfind("bin_left,count", 0) != 0)
        throw ConfigError(path + ": line " + std::to_string(lineno) +
                          ": expected header bin_left,count,probability");
      header = true;
      continue;
    }
    std::istringstream ss(line);
    std::string a;
    std::string b;
    if (!std::getline(ss, a, ',') || !std::getline(ss, b, ','))
      throw ConfigError(path + ": line " + std::to_string(lineno) + ": expected bin_left,count");
    try {
      std::size_t used = 0;
      const double left = std::stod(a, &used);
      const long long count = std::stoll(b);
      if (count < 0) throw std::invalid_argument("negative");
      rows.emplace_back(left, static_cast<std::uint64_t>(count));
    } catch (const std::exception&) {
      throw ConfigError(path + ": line " + std::to_string(lineno) + ": malformed row");
    }
  }
  if (rows.size() < 2) throw ConfigError(path + ": need at least two bins");
  const double width = rows[1].first - rows[0].first;
  if (!(width > 0.0)) throw ConfigError(path + ": bins must increase");
  MoneyHistogram hist(width, rows[0].first);
  for (const auto& [left, count] : rows) {
    const double k = (left - rows[0].first) / width;
    if (std::abs(k - std::round(k)) > 1e-6)
      throw ConfigError(path + ": bins are not on a uniform lattice");
    if (count > 0) hist.add_to_bin(static_cast<std::ptrdiff_t>(std::llround(k)), count);
  }
  return hist;
}

int run_fit(const std::string& csv_path, std::optional<double> shift, const RunOptions& options) {
  auto& log = log_of(options);
  MoneyHistogram hist(1.0, 0.0);
  try {
    hist = read_histogram_csv(csv_path);
  } catch (const ConfigError& e) {
    log << "input error: " << e.what() << "\n";
    return kExitConfig;
  }
  Json doc{{"schema_version", kSchemaVersion}, {"input", csv_path}, {"samples", hist.total()}};
  const double s = shift.value_or(hist.origin());
  try {
    doc["exponential"] = fit_json(fit_exponential(hist, s));
  } catch (const FitError& e) {
    doc["exponential"] = {{"error", e.what()}};
  }
  if (hist.origin() >= 0.0) {
    try {
      doc["gamma"] = fit_json(fit_gamma(hist));
    } catch (const FitError& e) {
      doc["gamma"] = {{"error", e.what()}};
    }
  }
  const auto line = fit_log_linear(hist, hist.origin(), hist.bin_left(hist.num_bins()));
  doc["log_linear"] = {{"slope", line.slope}, {"intercept", line.intercept}, {"bins", line.bins}};
  if (options.out_dir.empty()) {
    std::cout << doc.dump(2) << "\n";
    return kExitOk;
  }
  try {
    prepare_dir(options.out_dir);
    write_json(fs::path(options.out_dir) / "fits.json", doc);
  } catch (const OutputFailure& e) {
    log << "output error: " << e.what() << "\n";
    return kExitOutput;
  }
  return kExitOk;
}

}  // namespace moneygas
