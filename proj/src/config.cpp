#include "moneygas/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>

#include "moneygas/errors.hpp"

namespace moneygas {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

const std::map<std::string, OutputKind>& output_names() {
  static const std::map<std::string, OutputKind> names{
      {"snapshots", OutputKind::Snapshots},
      {"entropy_series", OutputKind::EntropySeries},
      {"temperature_series", OutputKind::TemperatureSeries},
      {"fits", OutputKind::Fits},
      {"tail", OutputKind::Tail},
      {"stationarity", OutputKind::Stationarity},
      {"oracle_check", OutputKind::OracleCheck},
  };
  return names;
}

[[noreturn]] void fail(const std::string& text, const std::string& pointer,
                       const std::string& what) {
  std::string msg;
  if (const auto line = locate_field(text, pointer); line > 0)
    msg = "line " + std::to_string(line) + ": ";
  msg += (pointer.empty() ? "/" : pointer) + ": " + what;
  throw ConfigError(msg);
}

// Typed access to one JSON object; remembers which keys were read so unknown
// keys can be reported.
class Section {
 public:
  Section(const Json& j, std::string path, const std::string& text)
      : j_(j), path_(std::move(path)), text_(text) {
    if (!j_.is_object()) fail(text_, path_, "expected an object");
  }

  std::string at(const std::string& key) const { return path_ + "/" + key; }
  bool has(const std::string& key) const { return j_.contains(key) && !j_.at(key).is_null(); }

  const Json& raw(const std::string& key) {
    seen_.insert(key);
    if (!j_.contains(key)) fail(text_, path_, "missing required field '" + key + "'");
    return j_.at(key);
  }

  double number(const std::string& key) {
    const Json& v = raw(key);
    if (!v.is_number()) fail(text_, at(key), "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) fail(text_, at(key), "expected a finite number");
    return x;
  }
  double number(const std::string& key, double fallback) {
    seen_.insert(key);
    return has(key) ? number(key) : fallback;
  }

  std::uint64_t count(const std::string& key) {
    const Json& v = raw(key);
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer()) {
      if (v.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(v.get<std::int64_t>());
      fail(text_, at(key), "expected a nonnegative integer");
    }
    if (v.is_number_float()) {
      const double x = v.get<double>();
      if (x >= 0.0 && x < 1.8e19 && std::floor(x) == x) return static_cast<std::uint64_t>(x);
    }
    fail(text_, at(key), "expected a nonnegative integer");
  }
  std::uint64_t count(const std::string& key, std::uint64_t fallback) {
    seen_.insert(key);
    return has(key) ? count(key) : fallback;
  }

  std::string string(const std::string& key) {
    const Json& v = raw(key);
    if (!v.is_string()) fail(text_, at(key), "expected a string");
    return v.get<std::string>();
  }
  std::string string(const std::string& key, const std::string& fallback) {
    seen_.insert(key);
    return has(key) ? string(key) : fallback;
  }

  Section object(const std::string& key) { return Section(raw(key), at(key), text_); }

  const Json& array(const std::string& key) {
    const Json& v = raw(key);
    if (!v.is_array()) fail(text_, at(key), "expected an array");
    return v;
  }

  void mark(const std::string& key) { seen_.insert(key); }
  const std::string& text() const { return text_; }

  /// Rejects keys outside `keys` before anything is read, so a misspelt key
  /// is reported as unknown rather than as a missing required field.
  void allow(std::initializer_list<const char*> keys) const {
    for (const auto& item : j_.items()) {
      const bool known = std::any_of(keys.begin(), keys.end(),
                                     [&](const char* k) { return item.key() == k; });
      if (!known) fail(text_, at(item.key()), "unknown field");
    }
  }

  /// Rejects keys that were never read.
  void finish() const {
    for (const auto& item : j_.items())
      if (!seen_.count(item.key())) fail(text_, at(item.key()), "unknown field");
  }

  [[noreturn]] void error(const std::string& key, const std::string& what) const {
    fail(text_, key.empty() ? path_ : at(key), what);
  }

 private:
  const Json& j_;
  std::string path_;
  const std::string& text_;
  std::set<std::string> seen_;
};

ExchangeRule parse_rule(Section s) {
  const std::string type = s.string("type");
  ExchangeRule rule;
  if (type == "fixed") {
    rule = FixedAmount{s.number("amount", 1.0)};
  } else if (type == "uniform_random") {
    rule = UniformRandomFraction{s.number("scale", 1.0)};
  } else if (type == "multiplicative") {
    rule = Multiplicative{s.number("fraction")};
  } else if (type == "saving") {
    rule = SavingPropensity{s.number("propensity")};
  } else if (type == "random_saving") {
    RandomSavingPropensity r;
    r.max_propensity = s.number("max_propensity", r.max_propensity);
    rule = r;
  } else {
    s.error("type", "unknown rule '" + type +
                        "' (fixed, uniform_random, multiplicative, saving, random_saving)");
  }
  s.finish();
  try {
    validate_rule(rule);
  } catch (const ConfigError& e) {
    s.error("", e.what());
  }
  return rule;
}

BoundaryPolicy parse_boundary(Section s) {
  const std::string type = s.string("type");
  BoundaryPolicy policy;
  if (type == "no_debt") {
    policy.kind = NoDebt{};
  } else if (type == "debt_cap") {
    policy.kind = DebtCap{s.number("max_debt")};
  } else if (type == "reserve_ratio") {
    policy.kind = ReserveRatioBank{s.number("reserve_ratio")};
  } else if (type == "unlimited") {
    policy.kind = Unlimited{};
  } else if (type == "upper_bound") {
    policy.kind = UpperBound{s.number("max_balance")};
  } else if (type == "two_sided") {
    const double hi = s.number("max_balance");
    policy.kind = TwoSided{hi, s.number("max_debt")};
  } else {
    s.error("type", "unknown boundary '" + type +
                        "' (no_debt, debt_cap, reserve_ratio, unlimited, upper_bound, two_sided)");
  }
  if (s.has("bankruptcy_threshold")) policy.bankruptcy_threshold = s.number("bankruptcy_threshold");
  s.mark("bankruptcy_threshold");
  if (s.has("interest")) {
    Section r = s.object("interest");
    InterestRates rates;
    rates.deposit = r.number("deposit", 0.0);
    rates.loan = r.number("loan", 0.0);
    r.finish();
    policy.interest = rates;
  }
  s.mark("interest");
  s.finish();
  try {
    policy.validate();
  } catch (const ConfigError& e) {
    s.error("", e.what());
  }
  return policy;
}

SimConfig parse_simulation(Section s) {
  s.allow({"agents", "initial_balance", "initial_balances", "rule", "boundary", "sweeps", "seed",
           "snapshot_every", "bin_width", "money"});
  SimConfig c;
  const auto agents = s.count("agents");
  c.num_agents = static_cast<std::size_t>(agents);
  if (s.has("initial_balances")) {
    const Json& list = s.array("initial_balances");
    for (std::size_t i = 0; i < list.size(); ++i) {
      if (!list[i].is_number()) s.error("initial_balances", "entry " + std::to_string(i) + " must be a number");
      c.initial_balances.push_back(list[i].get<double>());
    }
  }
  s.mark("initial_balances");
  if (c.initial_balances.empty()) {
    c.initial_balance = s.number("initial_balance");
  } else {
    // Informational only; the explicit endowments win.
    double sum = 0.0;
    for (double m : c.initial_balances) sum += m;
    c.initial_balance = s.number("initial_balance", sum / static_cast<double>(c.initial_balances.size()));
  }
  c.rule = parse_rule(s.object("rule"));
  if (s.has("boundary")) c.boundary = parse_boundary(s.object("boundary"));
  s.mark("boundary");
  c.sweeps = s.count("sweeps");
  c.seed = s.count("seed", 0);
  c.snapshot_every = s.count("snapshot_every", 1);
  c.bin_width = s.number("bin_width", 0.0);
  const std::string mode = s.string("money", "real");
  if (mode == "real") {
    c.mode = MoneyMode::Real;
  } else if (mode == "integer") {
    c.mode = MoneyMode::Integer;
  } else {
    s.error("money", "expected 'real' or 'integer'");
  }
  s.finish();
  try {
    c.validate();
  } catch (const ConfigError& e) {
    s.error("", e.what());
  }
  return c;
}

KernelSpec parse_kernel(Section s) {
  const std::string type = s.string("type");
  KernelSpec k;
  if (type == "fixed") {
    k = FixedTransferKernel{static_cast<std::size_t>(s.count("steps", 1))};
  } else if (type == "uniform") {
    k = UniformTransferKernel{static_cast<std::size_t>(s.count("max_steps"))};
  } else if (type == "proportional") {
    k = ProportionalTransferKernel{s.number("fraction")};
  } else if (type == "zero") {
    k = ZeroKernel{};
  } else {
    s.error("type", "unknown kernel '" + type + "' (fixed, uniform, proportional, zero)");
  }
  s.finish();
  try {
    TransitionKernel::build(k, 2);
  } catch (const ConfigError& e) {
    s.error("", e.what());
  }
  return k;
}

KineticSpec parse_kinetic(Section s) {
  s.allow({"kernel", "floor", "step", "points", "initial_index", "tolerance", "max_steps", "dt"});
  KineticSpec k;
  k.kernel = parse_kernel(s.object("kernel"));
  k.floor = s.number("floor", k.floor);
  k.step = s.number("step", k.step);
  k.points = static_cast<std::size_t>(s.count("points", k.points));
  k.initial_index = static_cast<std::size_t>(s.count("initial_index"));
  k.tolerance = s.number("tolerance", k.tolerance);
  k.max_steps = static_cast<std::size_t>(s.count("max_steps", k.max_steps));
  k.dt = s.number("dt", k.dt);
  if (!(k.step > 0.0)) s.error("step", "must be > 0");
  if (k.points < 2) s.error("points", "must be >= 2");
  if (k.initial_index >= k.points) s.error("initial_index", "must be < points");
  if (!(k.tolerance > 0.0)) s.error("tolerance", "must be > 0");
  if (k.dt < 0.0) s.error("dt", "must be >= 0 (0 picks half the stability limit)");
  s.finish();
  return k;
}

OracleSpec parse_oracle(Section s) {
  s.allow({"agents", "money", "mc_sweeps", "seed"});
  OracleSpec o;
  o.num_agents = static_cast<std::size_t>(s.count("agents"));
  o.total_money = static_cast<std::size_t>(s.count("money"));
  o.mc_sweeps = s.count("mc_sweeps", o.mc_sweeps);
  o.seed = s.count("seed", o.seed);
  if (o.num_agents < 2) s.error("agents", "must be >= 2");
  s.finish();
  return o;
}

void parse_experiment_block(Section s, ExperimentSpec& spec) {
  s.allow({"replicates", "outputs", "output_dir", "average_last", "series_rows", "tail_fraction",
           "stationarity", "sweep_axes", "assertions"});
  spec.replicates = static_cast<std::size_t>(s.count("replicates", 1));
  if (spec.replicates < 1) s.error("replicates", "must be >= 1");
  if (s.has("outputs")) {
    spec.outputs.clear();
    const Json& list = s.array("outputs");
    for (std::size_t i = 0; i < list.size(); ++i) {
      if (!list[i].is_string()) s.error("outputs", "entry " + std::to_string(i) + " must be a string");
      const auto it = output_names().find(list[i].get<std::string>());
      if (it == output_names().end())
        s.error("outputs", "unknown output '" + list[i].get<std::string>() + "'");
      spec.outputs.insert(it->second);
    }
  }
  s.mark("outputs");
  spec.output_dir = s.string("output_dir", "");
  spec.average_last = static_cast<std::size_t>(s.count("average_last", 1));
  if (spec.average_last < 1) s.error("average_last", "must be >= 1");
  spec.series_rows = static_cast<std::size_t>(s.count("series_rows", spec.series_rows));
  if (spec.series_rows < 1) s.error("series_rows", "must be >= 1");
  spec.tail_fraction = s.number("tail_fraction", spec.tail_fraction);
  if (!(spec.tail_fraction > 0.0 && spec.tail_fraction <= 0.2))
    s.error("tail_fraction", "must lie in (0, 0.2]");
  if (s.has("stationarity")) {
    Section st = s.object("stationarity");
    spec.stationarity.window_sweeps = st.count("window", spec.stationarity.window_sweeps);
    spec.stationarity.epsilon = st.number("epsilon", spec.stationarity.epsilon);
    spec.stationarity.k = static_cast<std::size_t>(st.count("k", spec.stationarity.k));
    if (spec.stationarity.window_sweeps < 1) st.error("window", "must be >= 1");
    if (!(spec.stationarity.epsilon > 0.0 && spec.stationarity.epsilon <= 1.0))
      st.error("epsilon", "must lie in (0, 1]");
    if (spec.stationarity.k < 2) st.error("k", "must be >= 2");
    st.finish();
  }
  s.mark("stationarity");
  if (s.has("sweep_axes")) {
    const Json& axes = s.array("sweep_axes");
    for (std::size_t i = 0; i < axes.size(); ++i) {
      Section a(axes[i], s.at("sweep_axes") + "/" + std::to_string(i), s.text());
      SweepAxis axis;
      axis.path = a.string("path");
      const Json& values = a.array("values");
      if (values.empty()) a.error("values", "must not be empty");
      axis.values.assign(values.begin(), values.end());
      a.finish();
      spec.sweep_axes.push_back(std::move(axis));
    }
  }
  s.mark("sweep_axes");
  if (s.has("assertions")) {
    const Json& list = s.array("assertions");
    for (std::size_t i = 0; i < list.size(); ++i) {
      Section a(list[i], s.at("assertions") + "/" + std::to_string(i), s.text());
      Assertion check;
      check.metric = a.string("metric");
      if (a.has("min")) check.min = a.number("min");
      if (a.has("max")) check.max = a.number("max");
      a.mark("min");
      a.mark("max");
      if (!check.min && !check.max) a.error("", "needs 'min' or 'max'");
      a.finish();
      spec.assertions.push_back(std::move(check));
    }
  }
  s.mark("assertions");
  s.finish();
}

Json rule_json(const ExchangeRule& rule) {
  return std::visit(
      overloaded{
          [](const FixedAmount& r) { return Json{{"type", "fixed"}, {"amount", r.amount}}; },
          [](const UniformRandomFraction& r) {
            return Json{{"type", "uniform_random"}, {"scale", r.scale}};
          },
          [](const Multiplicative& r) {
            return Json{{"type", "multiplicative"}, {"fraction", r.fraction}};
          },
          [](const SavingPropensity& r) {
            return Json{{"type", "saving"}, {"propensity", r.propensity}};
          },
          [](const RandomSavingPropensity& r) {
            return Json{{"type", "random_saving"}, {"max_propensity", r.max_propensity}};
          },
      },
      rule);
}

Json boundary_json(const BoundaryPolicy& p) {
  Json j = std::visit(
      overloaded{
          [](const NoDebt&) { return Json{{"type", "no_debt"}}; },
          [](const DebtCap& b) { return Json{{"type", "debt_cap"}, {"max_debt", b.max_debt}}; },
          [](const ReserveRatioBank& b) {
            return Json{{"type", "reserve_ratio"}, {"reserve_ratio", b.reserve_ratio}};
          },
          [](const Unlimited&) { return Json{{"type", "unlimited"}}; },
          [](const UpperBound& b) {
            return Json{{"type", "upper_bound"}, {"max_balance", b.max_balance}};
          },
          [](const TwoSided& b) {
            return Json{{"type", "two_sided"},
                        {"max_balance", b.max_balance},
                        {"max_debt", b.max_debt}};
          },
      },
      p.kind);
  j["bankruptcy_threshold"] =
      p.bankruptcy_threshold ? Json(*p.bankruptcy_threshold) : Json(nullptr);
  j["interest"] = p.interest ? Json{{"deposit", p.interest->deposit}, {"loan", p.interest->loan}}
                             : Json(nullptr);
  return j;
}

Json kernel_json(const KernelSpec& k) {
  return std::visit(
      overloaded{
          [](const FixedTransferKernel& f) { return Json{{"type", "fixed"}, {"steps", f.steps}}; },
          [](const UniformTransferKernel& u) {
            return Json{{"type", "uniform"}, {"max_steps", u.max_steps}};
          },
          [](const ProportionalTransferKernel& p) {
            return Json{{"type", "proportional"}, {"fraction", p.fraction}};
          },
          [](const ZeroKernel&) { return Json{{"type", "zero"}}; },
      },
      k);
}

}  // namespace

const char* to_string(OutputKind kind) {
  for (const auto& [name, k] : output_names())
    if (k == kind) return name.c_str();
  return "?";
}

std::size_t locate_field(const std::string& text, const std::string& pointer) {
  if (text.empty() || pointer.empty()) return 0;
  std::size_t pos = 0;
  bool found = false;
  std::size_t start = 1;
  while (start <= pointer.size()) {
    std::size_t end = pointer.find('/', start);
    if (end == std::string::npos) end = pointer.size();
    const std::string token = pointer.substr(start, end - start);
    start = end + 1;
    if (token.empty() || token.find_first_not_of("0123456789") == std::string::npos) continue;
    const std::string quoted = "\"" + token + "\"";
    std::size_t hit = pos;
    while (true) {
      hit = text.find(quoted, hit);
      if (hit == std::string::npos) break;
      std::size_t after = hit + quoted.size();
      while (after < text.size() && std::isspace(static_cast<unsigned char>(text[after]))) ++after;
      if (after < text.size() && text[after] == ':') break;
      hit += quoted.size();
    }
    if (hit == std::string::npos) break;
    pos = hit;
    found = true;
  }
  if (!found) return 0;
  std::size_t line = 1;
  for (std::size_t i = 0; i < pos && i < text.size(); ++i)
    if (text[i] == '\n') ++line;
  return line;
}

ExperimentSpec parse_experiment(const std::string& text) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const Json::parse_error& e) {
    std::size_t line = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i)
      if (text[i] == '\n') ++line;
    throw ConfigError("line " + std::to_string(line) + ": invalid JSON: " + e.what());
  }
  return parse_experiment(doc, text);
}

ExperimentSpec parse_experiment(const Json& doc, const std::string& text) {
  Section root(doc, "", text);
  root.allow({"schema_version", "simulation", "experiment", "kinetic", "oracle"});
  ExperimentSpec spec;
  const auto version = root.count("schema_version");
  if (version != static_cast<std::uint64_t>(kSchemaVersion))
    root.error("schema_version", "unsupported version " + std::to_string(version) +
                                     " (expected " + std::to_string(kSchemaVersion) + ")");
  spec.schema_version = kSchemaVersion;
  if (root.has("simulation")) spec.sim = parse_simulation(root.object("simulation"));
  root.mark("simulation");
  if (root.has("experiment")) parse_experiment_block(root.object("experiment"), spec);
  root.mark("experiment");
  if (root.has("kinetic")) spec.kinetic = parse_kinetic(root.object("kinetic"));
  root.mark("kinetic");
  if (root.has("oracle")) spec.oracle = parse_oracle(root.object("oracle"));
  root.mark("oracle");
  root.finish();
  if (!spec.sim && !spec.kinetic && !spec.oracle)
    root.error("", "needs at least one of 'simulation', 'kinetic', 'oracle'");
  return spec;
}

Json to_json(const ExperimentSpec& spec) {
  Json j;
  j["schema_version"] = spec.schema_version;
  if (spec.sim) {
    const SimConfig& c = *spec.sim;
    j["simulation"] = {
        {"agents", c.num_agents},
        {"initial_balance", c.initial_balance},
        {"initial_balances", c.initial_balances},
        {"rule", rule_json(c.rule)},
        {"boundary", boundary_json(c.boundary)},
        {"sweeps", c.sweeps},
        {"seed", c.seed},
        {"snapshot_every", c.snapshot_every},
        {"bin_width", c.bin_width},
        {"money", c.mode == MoneyMode::Integer ? "integer" : "real"},
    };
  }
  Json outputs = Json::array();
  for (auto kind : spec.outputs) outputs.push_back(to_string(kind));
  Json axes = Json::array();
  for (const auto& a : spec.sweep_axes) axes.push_back({{"path", a.path}, {"values", a.values}});
  Json checks = Json::array();
  for (const auto& a : spec.assertions) {
    Json c{{"metric", a.metric}};
    c["min"] = a.min ? Json(*a.min) : Json(nullptr);
    c["max"] = a.max ? Json(*a.max) : Json(nullptr);
    checks.push_back(c);
  }
  j["experiment"] = {
      {"replicates", spec.replicates},
      {"outputs", outputs},
      {"output_dir", spec.output_dir},
      {"average_last", spec.average_last},
      {"series_rows", spec.series_rows},
      {"tail_fraction", spec.tail_fraction},
      {"stationarity",
       {{"window", spec.stationarity.window_sweeps},
        {"epsilon", spec.stationarity.epsilon},
        {"k", spec.stationarity.k}}},
      {"sweep_axes", axes},
      {"assertions", checks},
  };
  if (spec.kinetic) {
    const KineticSpec& k = *spec.kinetic;
    j["kinetic"] = {
        {"kernel", kernel_json(k.kernel)}, {"floor", k.floor},
        {"step", k.step},                  {"points", k.points},
        {"initial_index", k.initial_index}, {"tolerance", k.tolerance},
        {"max_steps", k.max_steps},        {"dt", k.dt},
    };
  }
  if (spec.oracle) {
    const OracleSpec& o = *spec.oracle;
    j["oracle"] = {{"agents", o.num_agents},
                   {"money", o.total_money},
                   {"mc_sweeps", o.mc_sweeps},
                   {"seed", o.seed}};
  }
  return j;
}

std::string config_hash(const Json& canonical) {
  const std::string dump = canonical.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : dump) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::vector<Json> expand_sweep(const Json& canonical, const std::vector<SweepAxis>& axes) {
  std::vector<Json::json_pointer> pointers;
  for (const auto& axis : axes) {
    try {
      Json::json_pointer ptr(axis.path);
      if (!canonical.contains(ptr)) throw ConfigError("");
      if (axis.path.rfind("/experiment", 0) == 0)
        throw ConfigError(axis.path + ": sweep axes may not change the experiment block");
      pointers.push_back(ptr);
    } catch (const Json::exception&) {
      throw ConfigError(axis.path + ": sweep axis path is not a valid JSON pointer");
    } catch (const ConfigError& e) {
      if (std::string(e.what()).empty())
        throw ConfigError(axis.path + ": sweep axis does not name an existing field");
      throw;
    }
  }
  std::vector<Json> points{canonical};
  for (std::size_t a = 0; a < axes.size(); ++a) {
    std::vector<Json> next;
    for (const auto& base : points) {
      for (const auto& value : axes[a].values) {
        Json p = base;
        p[pointers[a]] = value;
        next.push_back(std::move(p));
      }
    }
    points = std::move(next);
  }
  for (auto& p : points) p["experiment"]["sweep_axes"] = Json::array();
  return points;
}

}  // namespace moneygas
