#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>

#include <unistd.h>

#include "doctest.h"
#include "moneygas/errors.hpp"
#include "moneygas/experiment.hpp"
#include "moneygas/rng.hpp"

using namespace moneygas;
namespace fs = std::filesystem;

namespace {

ExperimentSpec small_spec(std::uint64_t sweeps) {
  return parse_experiment(R"({
    "schema_version": 1,
    "simulation": {"agents": 200, "initial_balance": 100, "rule": {"type": "uniform_random"},
                   "boundary": {"type": "no_debt"}, "sweeps": )" + std::to_string(sweeps) + R"(,
                   "seed": 11, "snapshot_every": 10, "bin_width": 10},
    "experiment": {"replicates": 2, "average_last": 5,
                   "outputs": ["fits", "entropy_series", "temperature_series", "stationarity"],
                   "stationarity": {"window": 50, "epsilon": 0.2, "k": 2}}
  })");
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() / ("moneygas_test_" + tag + "_" + std::to_string(::getpid()));
    fs::remove_all(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

Json read_json(const fs::path& p) {
  std::ifstream in(p);
  return Json::parse(in);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("zero sweeps leaves the initial delta") {
  const auto spec = small_spec(0);
  const auto point = run_point(spec, 5, 1);
  CHECK(point.histogram.total() == 2 * 200);  // only the sweep-0 snapshot per replicate
  CHECK(point.histogram.nonempty_bins() == 1);
  CHECK(point.histogram.min() == 100.0);
  CHECK(point.histogram.max() == 100.0);
  REQUIRE(point.series.size() == 1);
  CHECK(point.series[0].sweep == 0);
  CHECK(point.series[0].entropy == 0.0);
  CHECK(point.metrics.at("mean") == 100.0);
}

TEST_CASE("run_point is deterministic and independent of the thread count") {
  const auto spec = small_spec(200);
  const auto a = run_point(spec, 99, 1);
  const auto b = run_point(spec, 99, 2);
  CHECK(a.metrics == b.metrics);
  CHECK(a.fits == b.fits);
  REQUIRE(a.replicates.size() == 2);
  for (std::size_t r = 0; r < 2; ++r) CHECK(a.replicates[r].pooled == b.replicates[r].pooled);
  CHECK(a.replicates[0].seed == mix_seed(99, 0));
  CHECK(a.replicates[0].pooled != a.replicates[1].pooled);
  const auto c = run_point(spec, 100, 1);
  CHECK(c.replicates[0].pooled != a.replicates[0].pooled);
}

TEST_CASE("point metrics") {
  const auto point = run_point(small_spec(300), 7, 1);
  CHECK(point.metrics.at("samples") == 2 * 5 * 200);
  CHECK(point.metrics.at("mean") == doctest::Approx(100.0).epsilon(1e-9));
  CHECK(point.metrics.at("conservation_residual") < 1e-9);
  CHECK(point.metrics.count("temperature") == 1);
  CHECK(point.metrics.count("gamma_beta") == 1);
  CHECK(point.metrics.count("stationary") == 1);
  CHECK(point.metrics.count("predicted_positive_temperature") == 0);
  // Series rows start at sweep 0 and end at the last sweep.
  CHECK(point.series.front().sweep == 0);
  CHECK(point.series.back().sweep == 300);
  CHECK(point.series.back().entropy > point.series.front().entropy);
}

TEST_CASE("assertions") {
  PointResult p;
  p.metrics["temperature"] = 10.0;
  const std::vector<Assertion> checks{{"temperature", 9.0, 11.0}, {"temperature", std::nullopt, 5.0},
                                      {"missing", std::nullopt, std::nullopt}};
  const auto out = check_assertions(checks, {p});
  REQUIRE(out.size() == 3);
  CHECK(out[0].pass);
  CHECK_FALSE(out[1].pass);
  CHECK_FALSE(out[2].pass);  // an absent metric never passes
  CHECK_FALSE(out[2].value.has_value());
}

TEST_CASE("run_experiment writes outputs with the config hash and honours exit codes") {
  TempDir tmp("run");
  auto spec = small_spec(100);
  spec.assertions = {{"mean", 99.0, 101.0}};
  std::ostringstream log;
  RunOptions opts{tmp.path.string(), true, 1, &log};
  REQUIRE(run_experiment(spec, opts) == kExitOk);
  const std::string hash = config_hash(to_json(spec));
  const auto doc = read_json(tmp.path / "fits.json");
  CHECK(doc["config_hash"] == hash);
  CHECK(doc["assertions_pass"] == true);
  CHECK(doc["points"].size() == 1);
  for (const char* f : {"histogram.csv", "series.csv", "replicates/r000/histogram.csv",
                        "replicates/r001/series.csv"}) {
    CAPTURE(f);
    const auto text = slurp(tmp.path / f);
    CHECK(text.rfind("# moneygas config_hash=" + hash, 0) == 0);
  }
  CHECK(slurp(tmp.path / "series.csv").find("sweep,entropy,temperature,ks_to_exponential\n") !=
        std::string::npos);

  // Round trip of the histogram file.
  const auto back = read_histogram_csv((tmp.path / "histogram.csv").string());
  const auto fresh = run_point(spec, spec.sim->seed, 1);
  REQUIRE(back.num_bins() == fresh.histogram.num_bins());
  CHECK(back.origin() == doctest::Approx(fresh.histogram.origin()));
  CHECK(back.bin_width() == doctest::Approx(fresh.histogram.bin_width()));
  for (std::size_t k = 0; k < back.num_bins(); ++k) CHECK(back.counts()[k] == fresh.histogram.counts()[k]);

  // The same config run again produces the same document.
  TempDir again("run_again");
  REQUIRE(run_experiment(spec, {again.path.string(), true, 1, &log}) == kExitOk);
  CHECK(read_json(again.path / "fits.json") == doc);

  spec.assertions = {{"mean", 200.0, std::nullopt}};
  TempDir failing("assert");
  CHECK(run_experiment(spec, {failing.path.string(), true, 1, &log}) == kExitAssert);
  CHECK(run_experiment(spec, {failing.path.string(), false, 1, &log}) == kExitOk);
  CHECK(read_json(failing.path / "fits.json")["assertions_pass"] == false);
}

TEST_CASE("unwritable output directory") {
  TempDir tmp("blocked");
  fs::create_directories(tmp.path);
  std::ofstream(tmp.path / "file") << "x";
  std::ostringstream log;
  CHECK(run_experiment(small_spec(1), {(tmp.path / "file" / "sub").string(), false, 1, &log}) ==
        kExitOutput);
  CHECK(log.str().find("output error") != std::string::npos);
}

TEST_CASE("reserve-ratio sweep predicts T+ = M/(R N)") {
  TempDir tmp("sweep");
  auto spec = parse_experiment(R"({
    "schema_version": 1,
    "simulation": {"agents": 200, "initial_balance": 5, "rule": {"type": "fixed", "amount": 1},
                   "boundary": {"type": "reserve_ratio", "reserve_ratio": 0.8}, "sweeps": 50,
                   "seed": 4, "snapshot_every": 10, "bin_width": 1},
    "experiment": {"sweep_axes": [{"path": "/simulation/boundary/reserve_ratio", "values": [0.5, 0.8, 1.0]}]}
  })");
  std::ostringstream log;
  REQUIRE(run_experiment(spec, {tmp.path.string(), false, 1, &log}) == kExitOk);
  const auto doc = read_json(tmp.path / "fits.json");
  REQUIRE(doc["points"].size() == 3);
  const double ratios[] = {0.5, 0.8, 1.0};
  for (std::size_t p = 0; p < 3; ++p) {
    const auto& m = doc["points"][p]["metrics"];
    CHECK(m["predicted_positive_temperature"].get<double>() == doctest::Approx(5.0 / ratios[p]));
    CHECK(m["predicted_negative_temperature"].get<double>() ==
          doctest::Approx(5.0 * (1.0 - ratios[p]) / ratios[p]));
    CHECK(doc["points"][p]["overrides"]["/simulation/boundary/reserve_ratio"] == ratios[p]);
  }
  // Distinct master seeds per point.
  CHECK(doc["points"][0]["master_seed"] != doc["points"][1]["master_seed"]);
  // R = 1 forbids debt altogether.
  CHECK(doc["points"][2]["metrics"]["min_balance"].get<double>() >= 0.0);
  CHECK(doc["points"][0]["metrics"]["min_balance"].get<double>() < 0.0);
  for (const char* f : {"point_000/histogram.csv", "point_002/histogram.csv", "sweep.csv"})
    CHECK(fs::exists(tmp.path / f));

  // Points spread over threads give the same document.
  TempDir threaded("sweep_threads");
  REQUIRE(run_experiment(spec, {threaded.path.string(), false, 3, &log}) == kExitOk);
  CHECK(read_json(threaded.path / "fits.json") == doc);
}

TEST_CASE("histogram CSV reader rejects malformed files") {
  TempDir tmp("csv");
  fs::create_directories(tmp.path);
  auto write = [&](const std::string& body) {
    std::ofstream(tmp.path / "h.csv") << body;
    return (tmp.path / "h.csv").string();
  };
  CHECK_THROWS_AS(read_histogram_csv(write("bin_left,count,probability\n0,1,0.5\n1,x,0.5\n")), ConfigError);
  CHECK_THROWS_AS(read_histogram_csv(write("left,count\n0,1\n1,1\n")), ConfigError);
  CHECK_THROWS_AS(read_histogram_csv(write("bin_left,count,probability\n0,1,1\n")), ConfigError);
  CHECK_THROWS_AS(read_histogram_csv(write("bin_left,count,probability\n0,1,0.5\n1,1,0.5\n2.5,1,0\n")),
                  ConfigError);
  CHECK_THROWS_AS(read_histogram_csv((tmp.path / "missing.csv").string()), ConfigError);
  const auto h = read_histogram_csv(write("# c\nbin_left,count,probability\n-2,3,0.6\n0,2,0.4\n"));
  CHECK(h.origin() == -2.0);
  CHECK(h.bin_width() == 2.0);
  CHECK(h.total() == 5);
}

TEST_CASE("oracle_check through the experiment layer") {
  const auto rep = oracle_check({3, 4, 20000, 9});
  CHECK(rep.exact_pass);
  CHECK(rep.monte_carlo.size() == 5);
  CHECK(rep.monte_carlo_ks < kOracleMonteCarloTolerance);
}
