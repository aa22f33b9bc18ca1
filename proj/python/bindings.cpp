#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "moneygas/errors.hpp"
#include "moneygas/experiment.hpp"
#include "moneygas/kinetic.hpp"
#include "moneygas/oracle.hpp"
#include "moneygas/simulation.hpp"
#include "moneygas/statistics.hpp"

namespace py = pybind11;
using namespace moneygas;

namespace {

ExperimentSpec spec_from(const std::string& text) { return parse_experiment(text); }

py::dict fit_dict(const FitResult& f) {
  py::dict d;
  d["family"] = to_string(f.family);
  d["temperature"] = f.temperature;
  d["beta"] = f.beta;
  d["ks"] = f.ks;
  d["support_shift"] = f.support_shift;
  d["samples"] = f.samples;
  return d;
}

py::dict point_dict(const PointResult& p) {
  py::dict d;
  d["config_hash"] = p.config_hash;
  d["master_seed"] = p.master_seed;
  d["metrics"] = p.metrics;
  d["fits_json"] = p.fits.dump();
  std::vector<double> left;
  std::vector<std::uint64_t> counts(p.histogram.counts().begin(), p.histogram.counts().end());
  for (std::size_t k = 0; k < counts.size(); ++k) left.push_back(p.histogram.bin_left(k));
  d["bin_left"] = left;
  d["counts"] = counts;
  py::list series;
  for (const auto& r : p.series)
    series.append(py::make_tuple(r.sweep, r.entropy, r.temperature, r.ks_to_exponential));
  d["series"] = series;
  std::vector<double> pooled;
  for (const auto& r : p.replicates) pooled.insert(pooled.end(), r.pooled.begin(), r.pooled.end());
  d["pooled"] = pooled;
  return d;
}

KernelSpec kernel_from(const std::string& type, double parameter) {
  if (type == "fixed") return FixedTransferKernel{static_cast<std::size_t>(parameter)};
  if (type == "uniform") return UniformTransferKernel{static_cast<std::size_t>(parameter)};
  if (type == "proportional") return ProportionalTransferKernel{parameter};
  if (type == "zero") return ZeroKernel{};
  throw ConfigError("unknown kernel '" + type + "'");
}

}  // namespace

PYBIND11_MODULE(_moneygas, m) {
  m.doc() = "Kinetic money-exchange simulations";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<UsageError>(m, "UsageError", PyExc_ValueError);
  py::register_exception<FitError>(m, "FitError", PyExc_RuntimeError);
  py::register_exception<StepError>(m, "StepError", PyExc_RuntimeError);

  m.def("canonical_config", [](const std::string& text) { return to_json(spec_from(text)).dump(); },
        "Validate a JSON config and return its canonical form");
  m.def("config_hash", [](const std::string& text) { return config_hash(to_json(spec_from(text))); });

  py::class_<Simulation>(m, "Simulation")
      .def(py::init([](const std::string& text) {
             auto spec = spec_from(text);
             if (!spec.sim) throw ConfigError("/simulation: missing");
             return Simulation(*spec.sim);
           }),
           py::arg("config_json"))
      .def("run", [](Simulation& s, std::uint64_t sweeps) {
             py::gil_scoped_release release;
             s.run(sweeps);
           })
      .def("step", [](Simulation& s) { return s.step().executed(); })
      .def_property_readonly("balances", [](const Simulation& s) {
        const auto b = s.ledger().balances();
        return std::vector<double>(b.begin(), b.end());
      })
      .def_property_readonly("sweeps_done", &Simulation::sweeps_done)
      .def_property_readonly("total_money", [](const Simulation& s) { return s.ledger().total_money(); })
      .def_property_readonly("conservation_residual",
                             [](const Simulation& s) { return s.ledger().conservation_residual(); })
      .def_property_readonly("loans_outstanding",
                             [](const Simulation& s) { return s.ledger().bank().loans_outstanding; });

  m.def("run_point", [](const std::string& text, std::size_t threads) {
          auto spec = spec_from(text);
          if (!spec.sim) throw ConfigError("/simulation: missing");
          PointResult p;
          {
            py::gil_scoped_release release;
            p = run_point(spec, spec.sim->seed, threads);
          }
          return point_dict(p);
        },
        py::arg("config_json"), py::arg("threads") = 1);

  m.def("fit_exponential",
        [](const std::vector<double>& x, double shift, double width) {
          return fit_dict(fit_exponential(x, shift, width));
        },
        py::arg("samples"), py::arg("shift") = 0.0, py::arg("bin_width") = 0.0);
  m.def("fit_gamma", [](const std::vector<double>& x) { return fit_dict(fit_gamma(x)); });
  m.def("tail_exponent_hill",
        [](const std::vector<double>& x, double frac) {
          const auto h = tail_exponent_hill(x, frac);
          py::dict d;
          d["alpha"] = h.alpha;
          d["density_exponent"] = h.density_exponent;
          d["tail_samples"] = h.tail_samples;
          d["threshold"] = h.threshold;
          d["power_tail"] = h.power_tail;
          return d;
        },
        py::arg("samples"), py::arg("tail_fraction") = 0.05);
  m.def("ks_two_sample", [](const std::vector<double>& a, const std::vector<double>& b) {
    return ks_two_sample(a, b);
  });
  m.def("entropy_per_agent", [](const std::vector<double>& x, double width) {
    return entropy_per_agent(MoneyHistogram::from_balances(x, width));
  });

  m.def("enumerate_oracle", [](std::size_t n, std::size_t money) {
    const auto r = enumerate_oracle(n, money);
    py::dict d;
    d["states"] = r.states;
    d["marginal"] = r.marginal;
    d["formula"] = r.composition_formula;
    d["max_abs_difference"] = r.max_abs_difference;
    return d;
  });
  m.def("oracle_check",
        [](std::size_t n, std::size_t money, std::uint64_t sweeps, std::uint64_t seed) {
          OracleCheckReport r;
          {
            py::gil_scoped_release release;
            r = oracle_check(OracleSpec{n, money, sweeps, seed});
          }
          py::dict d;
          d["exact_vs_formula"] = r.formula_difference;
          d["monte_carlo_ks"] = r.monte_carlo_ks;
          d["pass"] = r.pass();
          return d;
        },
        py::arg("agents"), py::arg("money"), py::arg("mc_sweeps") = 200000, py::arg("seed") = 1);

  m.def("kinetic_stationary",
        [](const std::string& kernel, double parameter, double floor, double step,
           std::size_t points, std::size_t initial_index, double tolerance,
           std::size_t max_steps) {
          auto grid = KineticGrid::point_mass(floor, step, points, initial_index,
                                              kernel_from(kernel, parameter));
          StationaryReport rep;
          {
            py::gil_scoped_release release;
            rep = stationary_solve(grid, tolerance, max_steps);
          }
          std::vector<double> money;
          for (std::size_t i = 0; i < grid.size(); ++i) money.push_back(grid.money(i));
          const auto p = grid.probabilities();
          py::dict d;
          d["m"] = money;
          d["P"] = std::vector<double>(p.begin(), p.end());
          d["converged"] = rep.converged;
          d["steps"] = rep.steps;
          d["residual"] = rep.residual;
          d["detailed_balance_residual"] = detailed_balance_residual(grid).residual;
          d["symmetric"] = kernel_symmetry_check(grid.kernel()).symmetric;
          return d;
        },
        py::arg("kernel"), py::arg("parameter"), py::arg("floor") = 0.0, py::arg("step") = 1.0,
        py::arg("points") = 400, py::arg("initial_index") = 0, py::arg("tolerance") = 1e-10,
        py::arg("max_steps") = 1000000);
}
