#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "bouncy/bouncy.hpp"

#ifndef BOUNCY_VERSION
#define BOUNCY_VERSION "unknown"
#endif

namespace bouncy::harness {

using json = nlohmann::json;

/// Bad or unknown configuration entry; `key` is the dotted path to it.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key, const std::string& what)
      : std::runtime_error("config key '" + key + "': " + what), key_(std::move(key)) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

/// Reads the members of one JSON object, remembering which were consumed so
/// leftovers can be reported as unknown keys.
class ObjectReader {
 public:
  ObjectReader(const json& object, std::string path) : object_(object), path_(std::move(path)) {
    if (!object_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
  }

  std::string key_path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  bool has(const std::string& key) const { return object_.contains(key); }

  const json& raw(const std::string& key) {
    used_.insert(key);
    if (!object_.contains(key)) throw ConfigError(key_path(key), "missing required key");
    return object_.at(key);
  }

  template <class T>
  T get(const std::string& key) {
    try {
      return raw(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(key_path(key), "wrong type");
    }
  }

  template <class T>
  T get(const std::string& key, T fallback) {
    used_.insert(key);
    return has(key) ? get<T>(key) : fallback;
  }

  void allow(std::initializer_list<const char*> keys) {
    for (const char* k : keys) allowed_.insert(k);
  }

  /// Throws on the first member that was neither read nor allowed.
  void finish() const {
    for (const auto& item : object_.items()) {
      if (!used_.count(item.key()) && !allowed_.count(item.key())) {
        throw ConfigError(key_path(item.key()), "unknown key");
      }
    }
  }

 private:
  const json& object_;
  std::string path_;
  std::set<std::string> used_;
  std::set<std::string> allowed_;
};

enum class SamplerKind { Hbps, HbpsNuts, HbpsSplit, HbpsLocal, Bps };

inline const std::map<std::string, SamplerKind>& sampler_names() {
  static const std::map<std::string, SamplerKind> names{{"hbps", SamplerKind::Hbps},
                                                        {"hbps-nuts", SamplerKind::HbpsNuts},
                                                        {"hbps-split", SamplerKind::HbpsSplit},
                                                        {"hbps-local", SamplerKind::HbpsLocal},
                                                        {"bps", SamplerKind::Bps}};
  return names;
}

inline std::string sampler_name(SamplerKind kind) {
  for (const auto& [name, k] : sampler_names())
    if (k == kind) return name;
  return "unknown";
}

using Surrogate = std::variant<LinearFlow, HarmonicFlow>;

struct RunConfig {
  SamplerKind sampler = SamplerKind::Hbps;
  json target;
  std::size_t iterations = 1000;
  std::uint64_t seed = 0;
  std::string output_dir = ".";
  std::size_t thin = 1;
  std::size_t chains = 1;
  std::optional<Vec> x0;
  double travel_time = 1.0;
  Surrogate surrogate = LinearFlow{};
  HbpsSolverConfig solver{};
  BpsConfig bps{};
  NutsConfig nuts{};
  bool nuts_auto_step = false;
  SplitConfig split{};
  std::vector<std::vector<Index>> blocks;  // empty means one block per coordinate
  std::filesystem::path base_dir;          // relative paths in the target resolve here
  json echo;
};

inline Vec to_vec(const std::vector<double>& xs) {
  return Eigen::Map<const Vec>(xs.data(), static_cast<Index>(xs.size()));
}

inline std::vector<double> to_std(const Vec& x) { return std::vector<double>(x.data(), x.data() + x.size()); }

inline HbpsSolverConfig parse_solver(const json& j, const std::string& path) {
  ObjectReader r(j, path);
  HbpsSolverConfig cfg;
  cfg.newton_tol = r.get<double>("newton_tol", cfg.newton_tol);
  cfg.max_newton_iters = r.get<int>("max_newton_iters", cfg.max_newton_iters);
  if (r.has("scan_step")) cfg.scan_step = r.get<double>("scan_step");
  cfg.max_events = r.get<std::size_t>("max_events", cfg.max_events);
  cfg.concavity_tol = r.get<double>("concavity_tol", cfg.concavity_tol);
  r.finish();
  return cfg;
}

inline Surrogate parse_surrogate(const json& j, const std::string& path) {
  if (j.is_string()) {
    if (j == "linear") return LinearFlow{};
    if (j == "harmonic") return HarmonicFlow{};
    throw ConfigError(path, "unknown surrogate '" + j.get<std::string>() + "'");
  }
  ObjectReader r(j, path);
  const auto type = r.get<std::string>("type");
  Surrogate out = LinearFlow{};
  if (type == "harmonic") {
    const double omega = r.get<double>("omega", 1.0);
    if (!(omega > 0.0)) throw ConfigError(r.key_path("omega"), "must be positive");
    Vec center;
    if (r.has("center")) center = to_vec(r.get<std::vector<double>>("center"));
    out = HarmonicFlow(omega, center);
  } else if (type != "linear") {
    throw ConfigError(r.key_path("type"), "unknown surrogate '" + type + "'");
  }
  r.finish();
  return out;
}

template <class T>
T positive(ObjectReader& r, const std::string& key, T fallback) {
  const T value = r.get<T>(key, fallback);
  if (!(value > T{0})) throw ConfigError(r.key_path(key), "must be positive");
  return value;
}

inline RunConfig parse_run_config(const json& j, const std::filesystem::path& base_dir = {}) {
  ObjectReader r(j, "");
  RunConfig cfg;
  cfg.echo = j;
  cfg.base_dir = base_dir;
  const auto name = r.get<std::string>("sampler");
  const auto it = sampler_names().find(name);
  if (it == sampler_names().end()) throw ConfigError("sampler", "unknown sampler '" + name + "'");
  cfg.sampler = it->second;
  cfg.target = r.raw("target");
  cfg.iterations = positive<std::size_t>(r, "iterations", cfg.iterations);
  cfg.seed = r.get<std::uint64_t>("seed", 0);
  cfg.output_dir = r.get<std::string>("output_dir", ".");
  cfg.thin = positive<std::size_t>(r, "thin", 1);
  cfg.chains = positive<std::size_t>(r, "chains", 1);
  if (r.has("x0")) cfg.x0 = to_vec(r.get<std::vector<double>>("x0"));
  if (r.has("solver")) cfg.solver = parse_solver(r.raw("solver"), "solver");

  switch (cfg.sampler) {
    case SamplerKind::Hbps:
      cfg.travel_time = positive<double>(r, "travel_time", 1.0);
      if (r.has("surrogate")) cfg.surrogate = parse_surrogate(r.raw("surrogate"), "surrogate");
      break;
    case SamplerKind::HbpsLocal:
      cfg.travel_time = positive<double>(r, "travel_time", 1.0);
      if (r.has("blocks")) {
        cfg.blocks = r.get<std::vector<std::vector<Index>>>("blocks");
        if (cfg.blocks.empty()) throw ConfigError("blocks", "must not be empty");
      }
      break;
    case SamplerKind::Bps:
      cfg.bps.total_time = positive<double>(r, "travel_time", 1.0);
      cfg.bps.refresh_rate = r.get<double>("refresh_rate", cfg.bps.refresh_rate);
      if (cfg.bps.refresh_rate < 0.0) throw ConfigError("refresh_rate", "must be nonnegative");
      cfg.bps.thinning_refresh = r.get<bool>("thinning_refresh", false);
      break;
    case SamplerKind::HbpsNuts:
      if (r.has("base_step") && r.raw("base_step").is_string()) {
        if (r.raw("base_step") != "auto") throw ConfigError("base_step", "expected a number or \"auto\"");
        cfg.nuts_auto_step = true;
      } else {
        cfg.nuts.base_step = positive<double>(r, "base_step", cfg.nuts.base_step);
      }
      cfg.nuts.max_depth = positive<int>(r, "max_depth", cfg.nuts.max_depth);
      cfg.nuts.uturn_tol = r.get<double>("uturn_tol", 0.0);
      break;
    case SamplerKind::HbpsSplit: {
      cfg.split.step = positive<double>(r, "step", cfg.split.step);
      cfg.split.steps_per_proposal = positive<int>(r, "steps_per_proposal", cfg.split.steps_per_proposal);
      const auto inner = r.get<std::string>("inner_flow", "exact");
      if (inner == "leapfrog") cfg.split.inner_flow = InnerFlow::Leapfrog;
      else if (inner != "exact") throw ConfigError("inner_flow", "expected \"exact\" or \"leapfrog\"");
      cfg.split.leapfrog_substeps = positive<int>(r, "leapfrog_substeps", 1);
      if (r.has("surrogate")) cfg.surrogate = parse_surrogate(r.raw("surrogate"), "surrogate");
      break;
    }
  }
  r.finish();
  return cfg;
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("<file>", "cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("<file>", std::string("invalid JSON: ") + e.what());
  }
}

inline RunConfig load_run_config(const std::string& path) {
  return parse_run_config(read_json_file(path), std::filesystem::path(path).parent_path());
}

// ---------------------------------------------------------------------------
// Targets

inline GaussianTarget parse_gaussian(ObjectReader& r) {
  if (r.has("rho")) {
    const double rho = r.get<double>("rho");
    if (!(std::abs(rho) < 1.0)) throw ConfigError(r.key_path("rho"), "must lie in (-1, 1)");
    return GaussianTarget::correlated_pair(rho);
  }
  if (r.has("covariance")) {
    const auto rows = r.get<std::vector<std::vector<double>>>("covariance");
    const Index d = static_cast<Index>(rows.size());
    Mat cov(d, d);
    for (Index i = 0; i < d; ++i) {
      if (static_cast<Index>(rows[static_cast<std::size_t>(i)].size()) != d) {
        throw ConfigError(r.key_path("covariance"), "must be square");
      }
      for (Index k = 0; k < d; ++k) cov(i, k) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
    }
    Vec mean = r.has("mean") ? to_vec(r.get<std::vector<double>>("mean")) : Vec::Zero(d);
    if (mean.size() != d) throw ConfigError(r.key_path("mean"), "dimension mismatch");
    return GaussianTarget::from_covariance(cov, mean);
  }
  const Index d = positive<Index>(r, "dimension", 1);
  const double variance = positive<double>(r, "variance", 1.0);
  GaussianTarget g = GaussianTarget::isotropic(d, variance);
  if (r.has("mean")) {
    Vec mean = to_vec(r.get<std::vector<double>>("mean"));
    if (mean.size() != d) throw ConfigError(r.key_path("mean"), "dimension mismatch");
    return GaussianTarget(g.precision_factor(), mean);
  }
  return g;
}

/// Builds the runtime target described by a `target` object.
inline AnyTarget build_target(const json& j, const std::filesystem::path& base_dir = {},
                              const std::string& path = "target") {
  ObjectReader r(j, path);
  const auto type = r.get<std::string>("type");
  std::optional<AnyTarget> out;
  if (type == "gaussian") {
    out = AnyTarget(parse_gaussian(r), "gaussian");
  } else if (type == "truncated-gaussian") {
    const Vec signs = to_vec(r.get<std::vector<double>>("signs"));
    GaussianTarget base = parse_gaussian(r);
    if (signs.size() != base.dimension()) throw ConfigError(r.key_path("signs"), "dimension mismatch");
    for (double s : signs)
      if (s != 1.0 && s != -1.0) throw ConfigError(r.key_path("signs"), "entries must be +1 or -1");
    out = AnyTarget(TruncatedGaussianTarget(std::move(base), signs), "truncated-gaussian");
  } else if (type == "logistic") {
    std::filesystem::path file = r.get<std::string>("design_csv");
    if (file.is_relative()) file = base_dir / file;
    Design design = load_design_csv(file.string());
    const double scale = positive<double>(r, "prior_scale", 1.0);
    out = AnyTarget(LogisticRegressionTarget(std::move(design.x), std::move(design.y), scale), "logistic");
  } else if (type == "synthetic-logistic") {
    const Index rows = positive<Index>(r, "rows", 500);
    const Index dim = positive<Index>(r, "dimension", 50);
    const Index nonzero = r.get<Index>("nonzero", 5);
    const double signal = r.get<double>("signal", 1.0);
    const auto data_seed = r.get<std::uint64_t>("seed", 1);
    const double scale = positive<double>(r, "prior_scale", 1.0);
    out = AnyTarget(synthetic_sparse_logistic(rows, dim, nonzero, signal, data_seed, scale), "synthetic-logistic");
  } else if (type == "mixture") {
    std::vector<MixtureComponent> components;
    const json& list = r.raw("components");
    if (!list.is_array() || list.empty()) throw ConfigError(r.key_path("components"), "expected a nonempty list");
    for (std::size_t k = 0; k < list.size(); ++k) {
      ObjectReader c(list[k], r.key_path("components") + "[" + std::to_string(k) + "]");
      components.push_back({positive<double>(c, "weight", 1.0), c.get<double>("mean"),
                            positive<double>(c, "variance", 1.0)});
      c.finish();
    }
    const Index d = positive<Index>(r, "dimension", 1);
    out = AnyTarget(MixtureTarget(std::move(components), d), "mixture");
  } else {
    throw ConfigError(r.key_path("type"), "unknown target type '" + type + "'");
  }
  r.finish();
  return *out;
}

// ---------------------------------------------------------------------------
// Running

inline Vec initial_position(const RunConfig& cfg, const AnyTarget& target) {
  if (cfg.x0) {
    if (cfg.x0->size() != target.dimension()) throw ConfigError("x0", "dimension mismatch with the target");
    return *cfg.x0;
  }
  // Zero, moved one unit along each constraint normal (inside an orthant).
  Vec x = Vec::Zero(target.dimension());
  for (const auto& c : target.constraints()) x += c.normal / c.normal.norm();
  return x;
}

/// One chain; independent RNG stream per chain index.
inline Chain run_chain(const RunConfig& cfg, const AnyTarget& target, const Vec& x0, std::size_t index,
                       double nuts_base_step = 0.0) {
  SampleSettings settings;
  settings.iterations = cfg.iterations;
  settings.travel_time = cfg.travel_time;
  settings.thin = cfg.thin;
  settings.seed = cfg.seed;
  settings.stream = index;
  switch (cfg.sampler) {
    case SamplerKind::Hbps:
      return std::visit(
          [&](const auto& flow) {
            using F = std::decay_t<decltype(flow)>;
            if constexpr (LinearSurrogate<F>) return hbps_sample(settings, x0, target, cfg.solver);
            else return sample(settings, x0, flow, target);
          },
          cfg.surrogate);
    case SamplerKind::HbpsLocal: {
      if (cfg.blocks.empty()) return zigzag_sample(settings, x0, target, cfg.solver);
      return local_sample(settings, x0, block_factors(target, cfg.blocks, cfg.solver), cfg.solver);
    }
    case SamplerKind::Bps: {
      BpsConfig bps = cfg.bps;
      bps.solver = cfg.solver;
      return bps_sample(cfg.iterations, bps, x0, target, cfg.seed, index, cfg.thin);
    }
    case SamplerKind::HbpsNuts: {
      NutsConfig nuts = cfg.nuts;
      nuts.solver = cfg.solver;
      if (cfg.nuts_auto_step) nuts.base_step = nuts_base_step;
      return nuts_sample(cfg.iterations, nuts, x0, target, cfg.seed, index, cfg.thin);
    }
    case SamplerKind::HbpsSplit:
      return std::visit(
          [&](const auto& flow) {
            return metropolis_sample(cfg.iterations, cfg.split, x0, flow, target, cfg.seed, index, cfg.thin);
          },
          cfg.surrogate);
  }
  throw Error(ErrorKind::Unsupported, "sampler not handled");
}

inline double nuts_auto_base_step(const RunConfig& cfg, const AnyTarget& target, const Vec& x0) {
  if (const auto* g = target.as<GaussianTarget>()) return heuristic_base_step(g->covariance());
  return pilot_base_step(target, x0, 1000, 1.0, cfg.seed);
}

inline json chain_summary(const Chain& chain, std::size_t index, const std::string& file) {
  json s;
  s["index"] = index;
  s["file"] = file;
  s["stored_samples"] = chain.size();
  s["wall_seconds"] = chain.wall_seconds;
  s["events"] = {{"bounce", chain.count(EventKind::Bounce)},
                 {"boundary", chain.count(EventKind::Boundary)},
                 {"refresh", chain.count(EventKind::Refresh)},
                 {"total", chain.total_events()}};
  s["mean_travel_time"] = mean_travel_time(chain);
  s["acceptance_rate"] = chain.acceptance_rate ? json(*chain.acceptance_rate) : json(nullptr);
  if (chain.size() >= 100) {
    try {
      const EssReport ess = min_ess_report(chain);
      s["ess"] = ess.per_dimension;
      s["min_ess"] = ess.min_ess;
      s["argmin_dimension"] = ess.argmin + 1;
      s["ess_per_second"] = std::isfinite(ess.ess_per_second) ? json(ess.ess_per_second) : json(nullptr);
    } catch (const Error& e) {
      s["ess_error"] = e.what();
    }
  }
  if (!s.contains("min_ess")) s["min_ess"] = nullptr;
  for (const auto& [k, v] : chain.meta) s["meta"][k] = v;
  return s;
}

struct RunResult {
  std::vector<Chain> chains;
  json summary;
};

/// Runs every chain (concurrently up to `workers`), writes chain_<k>.csv
/// and summary.json into the output directory.
inline RunResult run(const RunConfig& cfg, std::size_t workers = worker_count()) {
  const AnyTarget target = build_target(cfg.target, cfg.base_dir);
  const Vec x0 = initial_position(cfg, target);
  const double nuts_step = cfg.nuts_auto_step ? nuts_auto_base_step(cfg, target, x0) : 0.0;

  std::filesystem::create_directories(cfg.output_dir);
  RunResult result;
  result.chains.resize(cfg.chains);
  parallel_for(cfg.chains, workers, [&](std::size_t k) {
    result.chains[k] = run_chain(cfg, target, x0, k, nuts_step);
    write_chain_csv((std::filesystem::path(cfg.output_dir) / ("chain_" + std::to_string(k) + ".csv")).string(),
                    result.chains[k].samples);
  });

  json summary;
  summary["version"] = BOUNCY_VERSION;
  summary["sampler"] = sampler_name(cfg.sampler);
  summary["seed"] = cfg.seed;
  summary["config"] = cfg.echo;
  if (cfg.nuts_auto_step) summary["nuts_base_step"] = nuts_step;
  double min_ess = std::numeric_limits<double>::infinity();
  double ess_per_second = 0.0;
  bool have_ess = true;
  for (std::size_t k = 0; k < cfg.chains; ++k) {
    json c = chain_summary(result.chains[k], k, "chain_" + std::to_string(k) + ".csv");
    if (c["min_ess"].is_null()) {
      have_ess = false;
    } else {
      min_ess = std::min(min_ess, c["min_ess"].get<double>());
      if (c["ess_per_second"].is_number()) ess_per_second += c["ess_per_second"].get<double>();
    }
    summary["chains"].push_back(std::move(c));
  }
  summary["min_ess"] = have_ess ? json(min_ess) : json(nullptr);
  summary["mean_ess_per_second"] =
      have_ess ? json(ess_per_second / static_cast<double>(cfg.chains)) : json(nullptr);
  std::ofstream out(std::filesystem::path(cfg.output_dir) / "summary.json", std::ios::binary);
  out << summary.dump(2) << '\n';
  if (!out) throw Error(ErrorKind::InvalidArgument, "failed writing summary.json");
  result.summary = std::move(summary);
  return result;
}

// ---------------------------------------------------------------------------
// Convergence study

struct ConvergeConfig {
  json target;
  std::vector<double> delta_t{0.4, 0.2, 0.1, 0.05, 0.025};
  std::size_t replications = 2000;
  double horizon = 1.0;
  std::uint64_t seed = 0;
  double match_tol = 1e-9;
  std::optional<std::string> output;
};

inline ConvergeConfig parse_converge_config(const json& j) {
  ObjectReader r(j, "");
  ConvergeConfig cfg;
  cfg.target = r.raw("target");
  cfg.delta_t = r.get<std::vector<double>>("delta_t", cfg.delta_t);
  if (cfg.delta_t.empty()) throw ConfigError("delta_t", "must not be empty");
  for (double dt : cfg.delta_t)
    if (!(dt > 0.0)) throw ConfigError("delta_t", "entries must be positive");
  cfg.replications = r.get<std::size_t>("replications", cfg.replications);
  if (cfg.replications < 100) throw ConfigError("replications", "must be at least 100");
  cfg.horizon = positive<double>(r, "horizon", 1.0);
  cfg.seed = r.get<std::uint64_t>("seed", 0);
  cfg.match_tol = positive<double>(r, "match_tol", 1e-9);
  if (r.has("output")) cfg.output = r.get<std::string>("output");
  r.finish();
  return cfg;
}

inline void write_divergence_csv(std::ostream& out, const std::vector<DivergencePoint>& curve) {
  out << "delta_t,frequency,std_error,replications\n";
  for (const auto& p : curve) {
    out << format_double(p.delta_t) << ',' << format_double(p.frequency) << ',' << format_double(p.std_error) << ','
        << p.replications << '\n';
  }
}

// ---------------------------------------------------------------------------
// Benchmark grid

struct BenchmarkConfig {
  json target;
  std::vector<std::string> samplers{"hbps", "bps"};
  std::vector<double> travel_times{0.5, 1.0, 2.0};
  std::vector<double> refresh_rates{0.01, 0.1, 1.0};
  std::size_t iterations = 5000;
  std::vector<std::uint64_t> seeds{1};
  std::string output_dir = ".";
  std::filesystem::path base_dir;
};

inline BenchmarkConfig parse_benchmark_config(const json& j, const std::filesystem::path& base_dir = {}) {
  ObjectReader r(j, "");
  BenchmarkConfig cfg;
  cfg.base_dir = base_dir;
  cfg.target = r.raw("target");
  cfg.samplers = r.get<std::vector<std::string>>("samplers", cfg.samplers);
  for (const auto& s : cfg.samplers)
    if (!sampler_names().count(s)) throw ConfigError("samplers", "unknown sampler '" + s + "'");
  cfg.travel_times = r.get<std::vector<double>>("travel_times", cfg.travel_times);
  cfg.refresh_rates = r.get<std::vector<double>>("refresh_rates", cfg.refresh_rates);
  cfg.iterations = positive<std::size_t>(r, "iterations", cfg.iterations);
  if (cfg.iterations < 100) throw ConfigError("iterations", "at least 100 are needed for ESS");
  cfg.seeds = r.get<std::vector<std::uint64_t>>("seeds", cfg.seeds);
  if (cfg.seeds.empty()) throw ConfigError("seeds", "must not be empty");
  cfg.output_dir = r.get<std::string>("output_dir", ".");
  r.finish();
  return cfg;
}

/// Mean min-ESS and min-ESS per second of one setting over seeds.
struct BenchmarkRow {
  std::string sampler;
  double travel_time;
  std::optional<double> refresh_rate;
  double min_ess;
  double ess_per_second;
};

inline std::vector<BenchmarkRow> run_benchmark(const BenchmarkConfig& cfg, std::size_t workers = worker_count()) {
  const AnyTarget target = build_target(cfg.target, cfg.base_dir);
  std::vector<RunConfig> settings;
  for (const auto& name : cfg.samplers) {
    for (double t : cfg.travel_times) {
      RunConfig run;
      run.sampler = sampler_names().at(name);
      run.iterations = cfg.iterations;
      run.travel_time = t;
      run.bps.total_time = t;
      if (run.sampler == SamplerKind::Bps) {
        for (double rate : cfg.refresh_rates) {
          run.bps.refresh_rate = rate;
          settings.push_back(run);
        }
      } else {
        settings.push_back(run);
      }
    }
  }
  const Vec x0 = Vec::Zero(target.dimension());
  const std::size_t n_seeds = cfg.seeds.size();
  std::vector<EssReport> reports(settings.size() * n_seeds);
  parallel_for(reports.size(), workers, [&](std::size_t task) {
    RunConfig run = settings[task / n_seeds];
    run.seed = cfg.seeds[task % n_seeds];
    run.nuts_auto_step = run.sampler == SamplerKind::HbpsNuts;
    const double step = run.nuts_auto_step ? nuts_auto_base_step(run, target, x0) : 0.0;
    reports[task] = min_ess_report(run_chain(run, target, x0, 0, step));
  });
  std::vector<BenchmarkRow> rows;
  for (std::size_t s = 0; s < settings.size(); ++s) {
    BenchmarkRow row{sampler_name(settings[s].sampler), settings[s].travel_time, std::nullopt, 0.0, 0.0};
    if (settings[s].sampler == SamplerKind::Bps) row.refresh_rate = settings[s].bps.refresh_rate;
    for (std::size_t k = 0; k < n_seeds; ++k) {
      row.min_ess += reports[s * n_seeds + k].min_ess / static_cast<double>(n_seeds);
      row.ess_per_second += reports[s * n_seeds + k].ess_per_second / static_cast<double>(n_seeds);
    }
    rows.push_back(row);
  }
  return rows;
}

/// Grid table plus, per sampler, the best setting relative to the best BPS.
inline void write_benchmark(std::ostream& grid, std::ostream& table, const std::vector<BenchmarkRow>& rows) {
  grid << "sampler,travel_time,refresh_rate,min_ess,ess_per_second\n";
  for (const auto& r : rows) {
    grid << r.sampler << ',' << format_double(r.travel_time) << ','
         << (r.refresh_rate ? format_double(*r.refresh_rate) : "") << ',' << format_double(r.min_ess) << ','
         << format_double(r.ess_per_second) << '\n';
  }
  std::map<std::string, const BenchmarkRow*> best;
  for (const auto& r : rows) {
    auto& b = best[r.sampler];
    if (b == nullptr || r.ess_per_second > b->ess_per_second) b = &r;
  }
  const BenchmarkRow* reference = best.count("bps") ? best["bps"] : nullptr;
  table << "sampler,travel_time,refresh_rate,min_ess,ess_per_second,relative_ess,relative_ess_per_second\n";
  for (const auto& [name, r] : best) {
    table << name << ',' << format_double(r->travel_time) << ','
          << (r->refresh_rate ? format_double(*r->refresh_rate) : "") << ',' << format_double(r->min_ess) << ','
          << format_double(r->ess_per_second) << ',';
    if (reference) {
      table << format_double(r->min_ess / reference->min_ess) << ','
            << format_double(r->ess_per_second / reference->ess_per_second);
    } else {
      table << ',';
    }
    table << '\n';
  }
}

}  // namespace bouncy::harness
