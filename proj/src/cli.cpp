#include "statcal/cli.hpp"

#include "statcal/oracle.hpp"

#include <CLI11.hpp>
#include <json.hpp>
#include <toml.hpp>

#include <atomic>
#include <charconv>
#include <cstdlib>
#include <iostream>
#include <limits>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

namespace statcal {

namespace {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Config file

const std::set<std::string, std::less<>> kRunKeys{
    "experiment", "seed",         "batch",      "dt",     "horizon", "theta0",
    "record_stride", "threads",   "warmup_steps", "lag_policy", "format"};
const std::set<std::string, std::less<>> kModelKeys{"dim", "interaction", "lambda"};
const std::set<std::string, std::less<>> kObjectiveKeys{"targets"};
const std::set<std::string, std::less<>> kScheduleKeys{"a", "b", "gamma"};

[[noreturn]] void bad_value(std::string_view source, std::string_view key, std::string_view want) {
  throw ConfigError(std::string(source) + ": '" + std::string(key) + "' must be " +
                    std::string(want));
}

double as_double(const toml::node& n, std::string_view source, std::string_view key) {
  if (auto v = n.value_exact<double>()) return *v;
  if (auto v = n.value_exact<std::int64_t>()) return static_cast<double>(*v);
  bad_value(source, key, "a number");
}

std::int64_t as_int(const toml::node& n, std::string_view source, std::string_view key,
                    std::int64_t lo) {
  auto v = n.value_exact<std::int64_t>();
  if (!v || *v < lo) bad_value(source, key, "an integer >= " + std::to_string(lo));
  return *v;
}

std::string as_string(const toml::node& n, std::string_view source, std::string_view key) {
  auto v = n.value_exact<std::string>();
  if (!v) bad_value(source, key, "a string");
  return *v;
}

std::vector<double> as_doubles(const toml::node& n, std::string_view source, std::string_view key) {
  const toml::array* arr = n.as_array();
  if (arr == nullptr) bad_value(source, key, "an array of numbers");
  std::vector<double> out;
  for (const auto& e : *arr) out.push_back(as_double(e, source, key));
  return out;
}

Vector to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Index>(v.size()));
}

LagWarmupPolicy parse_lag_policy(std::string_view s) {
  if (s == "zero_contribution") return LagWarmupPolicy::zero_contribution;
  if (s == "hold_updates") return LagWarmupPolicy::hold_updates;
  throw ConfigError("lag_policy must be 'zero_contribution' or 'hold_updates', got '" +
                    std::string(s) + "'");
}

RecordFormat parse_format(std::string_view s) {
  if (s == "csv") return RecordFormat::csv;
  if (s == "jsonl") return RecordFormat::jsonl;
  throw ConfigError("format must be 'csv' or 'jsonl', got '" + std::string(s) + "'");
}

void check_keys(const toml::table& t, const std::set<std::string, std::less<>>& allowed,
                std::string_view section, std::string_view source) {
  for (const auto& [k, v] : t) {
    if (!allowed.contains(k.str())) {
      throw ConfigError(std::string(source) + ": unknown key '" + std::string(k.str()) +
                        "' in [" + std::string(section) + "]");
    }
  }
}

std::string toml_double(double v) {
  std::string s = format_shortest(v);
  if (s.find_first_of(".eni") == std::string::npos) s += ".0";
  return s;
}

std::string toml_array(ConstVectorRef v) {
  std::string s = "[";
  for (Index i = 0; i < v.size(); ++i) s += (i ? ", " : "") + toml_double(v[i]);
  return s + "]";
}

// ---------------------------------------------------------------------------
// Value parsing for flags and grid cells

template <class T>
T parse_number(std::string_view key, std::string_view text) {
  T v{};
  const auto* end = text.data() + text.size();
  const auto res = std::from_chars(text.data(), end, v);
  if (res.ec != std::errc() || res.ptr != end) {
    throw ConfigError("cannot parse '" + std::string(text) + "' for " + std::string(key));
  }
  return v;
}

std::vector<std::string> split(std::string_view text, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = text.find(sep, start);
    out.emplace_back(text.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::vector<double> parse_list(std::string_view key, std::string_view text) {
  std::vector<double> out;
  for (const auto& item : split(text, ',')) out.push_back(parse_number<double>(key, item));
  return out;
}

nlohmann::json json_number(double v) {
  if (std::isfinite(v)) return v;
  return format_double(v);
}

nlohmann::json json_vector(ConstVectorRef v) {
  nlohmann::json a = nlohmann::json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(json_number(v[i]));
  return a;
}

nlohmann::json json_matrix(ConstMatrixRef m) {
  nlohmann::json a = nlohmann::json::array();
  for (Index r = 0; r < m.rows(); ++r) a.push_back(json_vector(m.row(r).transpose()));
  return a;
}

nlohmann::json json_gaussian(const Gaussian& g) {
  return {{"mean", json_vector(g.mean)}, {"cov", json_matrix(g.cov)}};
}

fs::path default_output_dir() {
  if (const char* dir = std::getenv("STATCAL_OUTPUT_DIR"); dir != nullptr && *dir != '\0') {
    return dir;
  }
  return ".";
}

fs::path with_suffix(const fs::path& p, std::string_view suffix) {
  fs::path out = p;
  out += suffix;
  return out;
}

std::string extension(RecordFormat f) { return f == RecordFormat::csv ? ".csv" : ".jsonl"; }

// ---------------------------------------------------------------------------
// Running one configured experiment

struct RunOutcome {
  int code = exit_ok;
  std::string summary;
};

RunOutcome execute_run(const RunSettings& settings, const fs::path& out_path) {
  const ExperimentEntry& entry = find_experiment(settings.experiment);
  BuiltinSetup setup = configure_experiment(settings.experiment, settings.overrides);
  const RunRecord record = run(setup.config, setup.model, setup.objective);

  AcceptanceReport report;
  if (record.completed()) {
    report = evaluate_acceptance(entry, setup, settings.overrides.model, record.final_theta);
  } else {
    report.experiment = entry.name;
    report.completed = false;
    report.divergence = record.diagnostics.divergence->message;
    report.final_theta = record.final_theta;
  }

  if (out_path.has_parent_path()) fs::create_directories(out_path.parent_path());
  write_atomic(out_path, format_record(record, settings.format));
  write_atomic(with_suffix(out_path, ".report.json"), report.to_json());
  write_atomic(with_suffix(out_path, ".config.toml"), config_echo(settings, setup));

  std::ostringstream os;
  os << entry.name << ": " << (report.passed ? "PASS" : "FAIL") << "\n";
  if (!report.completed) os << "  diverged: " << report.divergence << "\n";
  for (const auto& c : report.checks) {
    os << "  " << (c.passed ? "ok   " : "fail ") << c.name << " = " << format_shortest(c.measured)
       << " (threshold " << format_shortest(c.threshold) << ")\n";
  }
  os << "  theta_T = " << toml_array(record.final_theta) << "\n";
  os << "  wrote " << out_path.string() << "\n";

  RunOutcome r;
  r.code = !report.completed ? exit_divergence : report.passed ? exit_ok : exit_acceptance_failed;
  r.summary = os.str();
  return r;
}

// Flags shared by run and sweep.
struct RunFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<Index> batch;
  std::optional<double> dt, horizon, a, b, gamma, interaction, lambda;
  std::optional<Index> dim, stride, warmup;
  std::optional<unsigned> threads;
  std::vector<double> theta0, targets;
  std::string lag_policy, format;

  void attach(CLI::App* app) {
    app->add_option("--config", config, "TOML config file")->check(CLI::ExistingFile);
    app->add_option("--seed", seed, "random seed");
    app->add_option("-N,--batch", batch, "mini-batch size")->check(CLI::PositiveNumber);
    app->add_option("--dt", dt, "time step");
    app->add_option("-T,--horizon", horizon, "time horizon");
    app->add_option("--a", a, "learning-rate scale a");
    app->add_option("--b", b, "learning-rate time scale b");
    app->add_option("--gamma", gamma, "learning-rate decay exponent");
    app->add_option("--theta0", theta0, "initial parameter, comma separated")->delimiter(',');
    app->add_option("--targets", targets, "target values, one per statistic")->delimiter(',');
    app->add_option("--dim", dim, "dimension m of the multi-dimensional models");
    app->add_option("--interaction", interaction, "coupling weight of interacting models");
    app->add_option("--lambda", lambda, "mean reversion of multi-ou-correlated");
    app->add_option("--stride", stride, "record every k-th step");
    app->add_option("--warmup", warmup, "steps before the first parameter update");
    app->add_option("--lag-policy", lag_policy, "zero_contribution or hold_updates");
    app->add_option("--threads", threads, "worker cap, 0 = one per hardware thread");
    app->add_option("--format", format, "csv or jsonl");
  }

  void apply(RunSettings& s) const {
    ExperimentOverrides& o = s.overrides;
    if (seed) o.seed = *seed;
    if (batch) o.batch = *batch;
    if (dt) o.dt = *dt;
    if (horizon) o.horizon = *horizon;
    if (a) o.rate_a = *a;
    if (b) o.rate_b = *b;
    if (gamma) o.rate_gamma = *gamma;
    if (!theta0.empty()) o.theta0 = to_vector(theta0);
    if (!targets.empty()) o.targets = targets;
    if (dim) o.model.dim = *dim;
    if (interaction) o.model.interaction = *interaction;
    if (lambda) o.model.lambda = *lambda;
    if (stride) o.record_stride = *stride;
    if (warmup) o.warmup_steps = *warmup;
    if (threads) o.threads = *threads;
    if (!lag_policy.empty()) o.lag_policy = parse_lag_policy(lag_policy);
    if (!format.empty()) s.format = parse_format(format);
  }

  RunSettings settings(const std::string& positional) const {
    RunSettings s;
    if (!config.empty()) s = load_config(config);
    if (!positional.empty()) s.experiment = positional;
    if (s.experiment.empty()) throw ConfigError("no experiment given; pass a name or --config");
    apply(s);
    return s;
  }
};

// ---------------------------------------------------------------------------
// Oracle subcommand

struct OracleFlags {
  std::string kind;
  std::vector<double> g, h, x;
  double sigma = 1.0;
  double t = 1.0;
  std::string experiment;
  std::vector<double> theta;
  double horizon = 2000.0;
  double burn_in = 100.0;
  double dt = 0.01;
  double eps = 1e-4;
  Index paths = 1;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  std::string out;
};

LinearModelParams linear_params(const OracleFlags& f) {
  if (f.g.empty()) throw ConfigError("--g is required");
  const auto d = static_cast<Index>(f.g.size());
  if (static_cast<Index>(f.h.size()) != d * d) {
    throw ConfigError("--h needs d*d = " + std::to_string(d * d) + " entries in row-major order");
  }
  LinearModelParams p;
  p.g = to_vector(f.g);
  p.h = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      f.h.data(), d, d);
  p.sigma = f.sigma;
  check_linear_params(p);
  return p;
}

Vector initial_point(const OracleFlags& f, Index d) {
  if (f.x.empty()) return Vector::Zero(d);
  if (static_cast<Index>(f.x.size()) != d) throw ConfigError("--x must have d entries");
  return to_vector(f.x);
}

nlohmann::json run_oracle(const OracleFlags& f) {
  if (f.kind == "ou-stationary") return json_gaussian(ou_stationary(linear_params(f)));
  if (f.kind == "ou-transition") {
    const LinearModelParams p = linear_params(f);
    nlohmann::json j = json_gaussian(ou_transition(p, initial_point(f, p.g.size()), f.t));
    j["t"] = f.t;
    return j;
  }
  if (f.kind == "empirical") {
    const LinearModelParams p = linear_params(f);
    const ModelSpec model = linear_ou_model(p.h, p.sigma);
    const DistributionCheckReport r = empirical_distribution_check(
        model, p.g, initial_point(f, p.g.size()), f.t, f.paths, f.seed, f.dt, f.threads);
    return {{"t", r.t},
            {"paths", r.paths},
            {"predicted", json_gaussian(r.predicted)},
            {"sample", json_gaussian(r.sample)},
            {"z_mean", json_vector(r.z_mean)},
            {"z_cov", json_matrix(r.z_cov)},
            {"max_abs_z", json_number(r.max_abs_z)}};
  }
  if (f.kind == "ergodic" || f.kind == "fd-gradient") {
    if (f.experiment.empty()) throw ConfigError("--experiment is required");
    ExperimentOverrides o;
    o.dt = f.dt;
    BuiltinSetup s = configure_experiment(f.experiment, o);
    const Vector theta = f.theta.empty() ? s.config.theta0 : to_vector(f.theta);
    ErgodicOptions opt;
    opt.horizon = f.horizon;
    opt.burn_in = f.burn_in;
    opt.dt = f.dt;
    opt.seed = f.seed;
    opt.paths = f.paths;
    opt.threads = f.threads;
    nlohmann::json j{{"experiment", f.experiment}, {"theta", json_vector(theta)}};
    if (f.kind == "ergodic") {
      const ErgodicObjective e = ergodic_objective(s.model, theta, s.objective, opt);
      j["J"] = json_number(e.j);
      j["statistics"] = nlohmann::json::array();
      for (std::size_t i = 0; i < e.statistics.size(); ++i) {
        j["statistics"].push_back({{"label", s.objective.statistics[i].label},
                                   {"beta", s.objective.statistics[i].beta},
                                   {"mean", json_number(e.statistics[i].mean)},
                                   {"std_error", json_number(e.statistics[i].std_error)},
                                   {"samples", e.statistics[i].samples}});
      }
    } else {
      j["eps"] = f.eps;
      j["gradient"] =
          json_vector(finite_difference_gradient(s.model, theta, s.objective, f.eps, opt));
    }
    return j;
  }
  throw ConfigError("unknown oracle '" + f.kind +
                    "'; valid: ou-stationary, ou-transition, empirical, ergodic, fd-gradient");
}

// ---------------------------------------------------------------------------
// Sweep

struct GridAxis {
  std::string key;
  std::vector<std::string> values;
};

GridAxis parse_axis(const std::string& spec) {
  const auto eq = spec.find('=');
  if (eq == std::string::npos || eq == 0 || eq + 1 == spec.size()) {
    throw ConfigError("grid axis must look like key=v1,v2,...; got '" + spec + "'");
  }
  return {spec.substr(0, eq), split(std::string_view(spec).substr(eq + 1), ',')};
}

int run_sweep(const RunSettings& base, const std::vector<std::string>& grid_specs,
              const fs::path& out_dir, unsigned parallel, std::ostream& out) {
  std::vector<GridAxis> axes;
  for (const auto& g : grid_specs) axes.push_back(parse_axis(g));
  std::size_t cells = 1;
  for (const auto& a : axes) cells *= a.values.size();

  // Build and validate every cell before running any.
  std::vector<RunSettings> settings(cells, base);
  std::vector<std::vector<std::string>> labels(cells);
  for (std::size_t c = 0; c < cells; ++c) {
    std::size_t rest = c;
    for (auto a = axes.rbegin(); a != axes.rend(); ++a) {
      const std::string& v = a->values[rest % a->values.size()];
      rest /= a->values.size();
      apply_setting(settings[c], a->key, v);
      labels[c].insert(labels[c].begin(), v);
    }
    configure_experiment(settings[c].experiment, settings[c].overrides);
  }

  fs::create_directories(out_dir);
  std::vector<int> codes(cells, exit_ok);
  std::vector<fs::path> paths(cells);
  std::atomic<std::size_t> next{0};
  std::mutex console;
  auto worker = [&] {
    for (std::size_t c = next++; c < cells; c = next++) {
      paths[c] = out_dir / ("cell_" + std::to_string(c) + extension(settings[c].format));
      RunOutcome r;
      try {
        r = execute_run(settings[c], paths[c]);
      } catch (const std::exception& e) {
        r.code = exit_usage;
        r.summary = "cell " + std::to_string(c) + ": error: " + e.what() + "\n";
      }
      codes[c] = r.code;
      std::lock_guard lock(console);
      out << "[cell " << c << "] " << r.summary << std::flush;
    }
  };
  const unsigned workers = std::max(1u, std::min<unsigned>(parallel, static_cast<unsigned>(cells)));
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  std::string index = "cell";
  for (const auto& a : axes) index += "," + a.key;
  index += ",status,output\n";
  int overall = exit_ok;
  for (std::size_t c = 0; c < cells; ++c) {
    index += std::to_string(c);
    for (const auto& v : labels[c]) index += "," + v;
    const char* status = codes[c] == exit_ok                   ? "pass"
                         : codes[c] == exit_acceptance_failed ? "fail"
                         : codes[c] == exit_divergence        ? "diverged"
                                                              : "error";
    index += std::string(",") + status + "," + paths[c].filename().string() + "\n";
    overall = std::max(overall, codes[c] == exit_usage ? exit_usage : codes[c]);
  }
  write_atomic(out_dir / "index.csv", index);
  out << "wrote " << (out_dir / "index.csv").string() << "\n";
  return overall;
}

}  // namespace

RunSettings parse_config(std::string_view text, std::string_view source) {
  toml::table root;
  try {
    root = toml::parse(text, source);
  } catch (const toml::parse_error& e) {
    std::ostringstream os;
    os << source << ": " << e.description() << " at line " << e.source().begin.line;
    throw ConfigError(os.str());
  }
  for (const auto& [k, v] : root) {
    const std::string_view name = k.str();
    if (name != "run" && name != "model" && name != "objective" && name != "schedule") {
      throw ConfigError(std::string(source) + ": unknown table [" + std::string(name) + "]");
    }
    if (!v.is_table()) throw ConfigError(std::string(source) + ": '" + std::string(name) + "' must be a table");
  }

  RunSettings s;
  ExperimentOverrides& o = s.overrides;
  if (const toml::table* t = root["run"].as_table()) {
    check_keys(*t, kRunKeys, "run", source);
    for (const auto& [key, node] : *t) {
      const std::string_view k = key.str();
      if (k == "experiment") s.experiment = as_string(node, source, k);
      else if (k == "seed") o.seed = static_cast<std::uint64_t>(as_int(node, source, k, 0));
      else if (k == "batch") o.batch = as_int(node, source, k, 1);
      else if (k == "dt") o.dt = as_double(node, source, k);
      else if (k == "horizon") o.horizon = as_double(node, source, k);
      else if (k == "theta0") o.theta0 = to_vector(as_doubles(node, source, k));
      else if (k == "record_stride") o.record_stride = as_int(node, source, k, 1);
      else if (k == "threads") o.threads = static_cast<unsigned>(as_int(node, source, k, 0));
      else if (k == "warmup_steps") o.warmup_steps = as_int(node, source, k, 0);
      else if (k == "lag_policy") o.lag_policy = parse_lag_policy(as_string(node, source, k));
      else if (k == "format") s.format = parse_format(as_string(node, source, k));
    }
  }
  if (const toml::table* t = root["model"].as_table()) {
    check_keys(*t, kModelKeys, "model", source);
    for (const auto& [key, node] : *t) {
      const std::string_view k = key.str();
      if (k == "dim") o.model.dim = as_int(node, source, k, 1);
      else if (k == "interaction") o.model.interaction = as_double(node, source, k);
      else if (k == "lambda") o.model.lambda = as_double(node, source, k);
    }
  }
  if (const toml::table* t = root["objective"].as_table()) {
    check_keys(*t, kObjectiveKeys, "objective", source);
    if (const toml::node* n = t->get("targets")) o.targets = as_doubles(*n, source, "targets");
  }
  if (const toml::table* t = root["schedule"].as_table()) {
    check_keys(*t, kScheduleKeys, "schedule", source);
    for (const auto& [key, node] : *t) {
      const std::string_view k = key.str();
      const double v = as_double(node, source, k);
      if (k == "a") o.rate_a = v;
      else if (k == "b") o.rate_b = v;
      else o.rate_gamma = v;
    }
  }
  return s;
}

RunSettings load_config(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot read config file " + path.string());
  std::stringstream buf;
  buf << f.rdbuf();
  return parse_config(buf.str(), path.string());
}

std::string config_echo(const RunSettings& settings, const BuiltinSetup& setup) {
  const RunConfig& c = setup.config;
  const BuiltinOptions& m = settings.overrides.model;
  if (c.seed > static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max())) {
    throw ConfigError("seed does not fit a TOML integer");
  }
  std::ostringstream os;
  os << "[run]\n"
     << "experiment = \"" << settings.experiment << "\"\n"
     << "seed = " << c.seed << "\n"
     << "batch = " << c.batch << "\n"
     << "dt = " << toml_double(c.dt) << "\n"
     << "horizon = " << toml_double(c.horizon) << "\n"
     << "theta0 = " << toml_array(c.theta0) << "\n"
     << "record_stride = " << c.record_stride << "\n"
     << "threads = " << c.threads << "\n"
     << "warmup_steps = " << c.warmup_steps << "\n"
     << "lag_policy = \""
     << (c.lag_policy == LagWarmupPolicy::zero_contribution ? "zero_contribution" : "hold_updates")
     << "\"\n"
     << "format = \"" << (settings.format == RecordFormat::csv ? "csv" : "jsonl") << "\"\n\n"
     << "[model]\n"
     << "dim = " << m.dim << "\n"
     << "interaction = " << toml_double(m.interaction) << "\n"
     << "lambda = " << toml_double(m.lambda) << "\n\n"
     << "[objective]\n"
     << "targets = [";
  for (std::size_t i = 0; i < setup.objective.statistics.size(); ++i) {
    os << (i ? ", " : "") << toml_double(setup.objective.statistics[i].beta);
  }
  os << "]\n\n"
     << "[schedule]\n"
     << "a = " << toml_double(c.schedule.a) << "\n"
     << "b = " << toml_double(c.schedule.b) << "\n"
     << "gamma = " << toml_double(c.schedule.gamma) << "\n";
  return os.str();
}

void apply_setting(RunSettings& s, std::string_view key, std::string_view value) {
  ExperimentOverrides& o = s.overrides;
  if (key == "seed") o.seed = parse_number<std::uint64_t>(key, value);
  else if (key == "batch") o.batch = parse_number<Index>(key, value);
  else if (key == "dt") o.dt = parse_number<double>(key, value);
  else if (key == "horizon") o.horizon = parse_number<double>(key, value);
  else if (key == "a") o.rate_a = parse_number<double>(key, value);
  else if (key == "b") o.rate_b = parse_number<double>(key, value);
  else if (key == "gamma") o.rate_gamma = parse_number<double>(key, value);
  else if (key == "dim") o.model.dim = parse_number<Index>(key, value);
  else if (key == "interaction") o.model.interaction = parse_number<double>(key, value);
  else if (key == "lambda") o.model.lambda = parse_number<double>(key, value);
  else if (key == "record_stride") o.record_stride = parse_number<Index>(key, value);
  else if (key == "warmup_steps") o.warmup_steps = parse_number<Index>(key, value);
  else if (key == "threads") o.threads = parse_number<unsigned>(key, value);
  else if (key == "theta0") o.theta0 = to_vector(parse_list(key, value));
  else if (key == "targets") o.targets = parse_list(key, value);
  else {
    throw ConfigError("unknown setting '" + std::string(key) +
                      "'; valid: seed, batch, dt, horizon, a, b, gamma, dim, interaction, "
                      "lambda, record_stride, warmup_steps, threads, theta0, targets");
  }
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Online calibration of SDE parameters to stationary statistics", "statcal"};
  app.require_subcommand(1);

  auto* list_cmd = app.add_subcommand("list", "List built-in experiments");

  std::string run_name;
  std::string run_out;
  RunFlags run_flags;
  auto* run_cmd = app.add_subcommand("run", "Run an experiment and check its acceptance criterion");
  run_cmd->add_option("experiment", run_name, "experiment name");
  run_cmd->add_option("-o,--out", run_out, "output file");
  run_flags.attach(run_cmd);

  OracleFlags of;
  auto* oracle_cmd = app.add_subcommand("oracle", "Closed-form and Monte Carlo reference values");
  oracle_cmd->set_help_flag("--help", "Print this help message and exit");
  oracle_cmd->add_option("kind", of.kind,
                         "ou-stationary, ou-transition, empirical, ergodic or fd-gradient")
      ->required();
  oracle_cmd->add_option("--g", of.g, "drift offset g")->delimiter(',');
  oracle_cmd->add_option("--h", of.h, "mean reversion h, row-major")->delimiter(',');
  oracle_cmd->add_option("--sigma", of.sigma, "volatility");
  oracle_cmd->add_option("--x", of.x, "initial state")->delimiter(',');
  oracle_cmd->add_option("--t", of.t, "transition time");
  oracle_cmd->add_option("--experiment", of.experiment, "experiment for ergodic / fd-gradient");
  oracle_cmd->add_option("--theta", of.theta, "frozen parameter")->delimiter(',');
  oracle_cmd->add_option("-T,--horizon", of.horizon, "averaging horizon");
  oracle_cmd->add_option("--burn-in", of.burn_in, "discarded initial time");
  oracle_cmd->add_option("--dt", of.dt, "time step");
  oracle_cmd->add_option("--eps", of.eps, "finite-difference step");
  oracle_cmd->add_option("--paths", of.paths, "number of paths");
  oracle_cmd->add_option("--seed", of.seed, "random seed");
  oracle_cmd->add_option("--threads", of.threads, "worker cap, 0 = auto");
  oracle_cmd->add_option("-o,--out", of.out, "also write the JSON report here");

  std::string validate_name;
  RunFlags validate_flags;
  auto* validate_cmd = app.add_subcommand("validate", "Check a learning-rate schedule");
  validate_cmd->add_option("experiment", validate_name, "take the schedule of this experiment");
  validate_flags.attach(validate_cmd);

  std::string sweep_name;
  std::vector<std::string> grid;
  std::string sweep_dir;
  unsigned sweep_parallel = 1;
  RunFlags sweep_flags;
  auto* sweep_cmd = app.add_subcommand("sweep", "Run an experiment over a grid of overrides");
  sweep_cmd->add_option("experiment", sweep_name, "experiment name");
  sweep_cmd->add_option("--grid", grid, "key=v1,v2,... (repeatable)")->required();
  sweep_cmd->add_option("--out-dir", sweep_dir, "directory for cell outputs and index.csv");
  sweep_cmd->add_option("--parallel", sweep_parallel, "cells run at once")
      ->check(CLI::PositiveNumber);
  sweep_flags.attach(sweep_cmd);

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return exit_ok;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return exit_ok;
  } catch (const CLI::ParseError& e) {
    err << "statcal: " << e.what() << "\n";
    return exit_usage;
  }

  try {
    if (*list_cmd) {
      for (const auto& e : list_experiments()) out << e.name << "\t" << e.description << "\n";
      return exit_ok;
    }

    if (*run_cmd) {
      const RunSettings s = run_flags.settings(run_name);
      fs::path path = run_out.empty() ? default_output_dir() / (s.experiment + extension(s.format))
                                      : fs::path(run_out);
      const RunOutcome r = execute_run(s, path);
      out << r.summary;
      return r.code;
    }

    if (*oracle_cmd) {
      const std::string text = run_oracle(of).dump(2) + "\n";
      if (!of.out.empty()) write_atomic(of.out, text);
      out << text;
      return exit_ok;
    }

    if (*validate_cmd) {
      LearningRateSchedule sched;
      if (!validate_name.empty() || !validate_flags.config.empty()) {
        sched = configure_experiment(validate_flags.settings(validate_name).experiment,
                                     validate_flags.settings(validate_name).overrides)
                    .config.schedule;
      }
      if (validate_flags.a) sched.a = *validate_flags.a;
      if (validate_flags.b) sched.b = *validate_flags.b;
      if (validate_flags.gamma) sched.gamma = *validate_flags.gamma;
      const ScheduleValidation v = validate(sched);
      out << "alpha_t = " << format_shortest(sched.a) << " / (1 + t / " << format_shortest(sched.b)
          << ")^" << format_shortest(sched.gamma) << "\n";
      for (const auto& violation : v.violations) {
        out << "violated: " << to_string(violation.condition) << ": " << violation.message << "\n";
      }
      out << (v.admissible() ? "admissible\n" : "not admissible\n");
      return exit_ok;
    }

    if (*sweep_cmd) {
      const RunSettings s = sweep_flags.settings(sweep_name);
      const fs::path dir = sweep_dir.empty() ? default_output_dir() / (s.experiment + "-sweep")
                                             : fs::path(sweep_dir);
      return run_sweep(s, grid, dir, sweep_parallel, out);
    }
  } catch (const DivergenceError& e) {
    err << "statcal: diverged: " << e.what() << "\n";
    return exit_divergence;
  } catch (const Error& e) {
    err << "statcal: " << e.what() << "\n";
    return exit_usage;
  } catch (const std::exception& e) {
    err << "statcal: " << e.what() << "\n";
    return exit_usage;
  }
  return exit_usage;
}

}  // namespace statcal
