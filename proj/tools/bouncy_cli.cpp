#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include "harness.hpp"

namespace h = bouncy::harness;

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 2;
constexpr int kSamplerError = 3;

template <class Body>
int guarded(Body&& body) {
  try {
    return body();
  } catch (const h::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const bouncy::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kSamplerError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}

int cmd_sample(const std::string& path) {
  return guarded([&] {
    const h::RunConfig cfg = h::load_run_config(path);
    const auto result = h::run(cfg);
    std::cout << "wrote " << cfg.chains << " chain(s) and summary.json to " << cfg.output_dir << '\n';
    if (result.summary["min_ess"].is_number()) std::cout << "min ESS " << result.summary["min_ess"] << '\n';
    return kOk;
  });
}

int cmd_converge(const std::string& path) {
  return guarded([&] {
    const auto cfg = h::parse_converge_config(h::read_json_file(path));
    const bouncy::AnyTarget target = h::build_target(cfg.target, std::filesystem::path(path).parent_path());
    bouncy::CouplingOptions options;
    options.match_tol = cfg.match_tol;
    const auto curve =
        bouncy::divergence_curve(cfg.delta_t, cfg.replications, cfg.horizon, target, cfg.seed, options);
    h::write_divergence_csv(std::cout, curve);
    if (cfg.output) {
      std::ofstream out(*cfg.output, std::ios::binary);
      h::write_divergence_csv(out, curve);
    }
    return kOk;
  });
}

int cmd_ess(const std::string& path) {
  return guarded([&] {
    bouncy::Chain chain;
    chain.samples = bouncy::read_chain_csv(path);
    const auto report = bouncy::min_ess_report(chain);
    std::cout << "dimension,ess\n";
    for (std::size_t j = 0; j < report.per_dimension.size(); ++j) {
      std::cout << "x" << j + 1 << ',' << bouncy::format_double(report.per_dimension[j]) << '\n';
    }
    std::cout << "min,x" << report.argmin + 1 << ',' << bouncy::format_double(report.min_ess) << '\n';
    return kOk;
  });
}

int cmd_benchmark(const std::string& path) {
  return guarded([&] {
    const auto cfg = h::parse_benchmark_config(h::read_json_file(path), std::filesystem::path(path).parent_path());
    const auto rows = h::run_benchmark(cfg);
    std::filesystem::create_directories(cfg.output_dir);
    std::ofstream grid(std::filesystem::path(cfg.output_dir) / "benchmark_grid.csv", std::ios::binary);
    std::ostringstream table;
    h::write_benchmark(grid, table, rows);
    std::ofstream(std::filesystem::path(cfg.output_dir) / "benchmark_table.csv", std::ios::binary) << table.str();
    std::cout << table.str();
    return kOk;
  });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bouncy Hamiltonian samplers"};
  app.require_subcommand(1);
  std::string path;
  auto* sample = app.add_subcommand("sample", "run chains from a JSON config");
  sample->add_option("config", path, "config file")->required();
  auto* converge = app.add_subcommand("converge", "divergence curve of the coupled refreshed dynamics");
  converge->add_option("config", path, "config file")->required();
  auto* ess = app.add_subcommand("ess", "effective sample size of a chain CSV");
  ess->add_option("chain", path, "chain CSV")->required();
  auto* bench = app.add_subcommand("benchmark", "relative ESS over a tuning grid");
  bench->add_option("config", path, "config file")->required();
  app.footer("Worker threads: BOUNCY_WORKERS (default: hardware concurrency).");
  CLI11_PARSE(app, argc, argv);

  if (*sample) return cmd_sample(path);
  if (*converge) return cmd_converge(path);
  if (*ess) return cmd_ess(path);
  return cmd_benchmark(path);
}
