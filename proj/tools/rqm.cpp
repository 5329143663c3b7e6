// rqm: covariant reduction simulator for a Klein-Gordon particle.
// Subcommands: validate, layers, run, boost-compare, commutator-scan, density.
// Exit codes: 0 success, 2 usage, 3 parse/schema, 4 physics validation,
// 5 numerical guard.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rqm/cli_io.hpp"
#include "rqm/errors.hpp"
#include "rqm/experiments.hpp"
#include "rqm/version.hpp"

namespace {

int exit_code(rqm::ExitCode c) { return static_cast<int>(c); }

rqm::Experiment load_or_exit(const std::string& path) {
  auto parsed = rqm::parse(path);
  if (std::holds_alternative<rqm::ValidationReport>(parsed)) {
    std::cout << rqm::to_json(std::get<rqm::ValidationReport>(parsed)).dump(2)
              << "\n";
    std::exit(exit_code(rqm::ExitCode::Validation));
  }
  return std::get<rqm::Experiment>(std::move(parsed));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"covariant Klein-Gordon reduction simulator"};
  app.set_version_flag("--version", std::string(rqm::kToolVersion));
  app.require_subcommand(1);

  std::string file;
  auto* cmd_validate = app.add_subcommand("validate", "check an experiment file");
  cmd_validate->add_option("file", file, "experiment JSON file")->required();

  auto* cmd_layers = app.add_subcommand("layers", "print the causal layer decomposition");
  cmd_layers->add_option("file", file)->required();

  std::string mode = "enumerate";
  std::optional<std::uint64_t> seed;
  auto* cmd_run = app.add_subcommand("run", "enumerate or sample the collapse process");
  cmd_run->add_option("file", file)->required();
  cmd_run->add_option("--mode", mode, "enumerate|sample")
      ->check(CLI::IsMember({"enumerate", "sample"}));
  cmd_run->add_option("--seed", seed, "seed (required in sample mode)");

  double rapidity = 0.0;
  auto* cmd_boost = app.add_subcommand("boost-compare",
                                       "compare outcome probabilities across frames");
  cmd_boost->add_option("file", file)->required();
  cmd_boost->add_option("--rapidity", rapidity, "boost rapidity")->required();

  double width = 1.0;
  std::vector<double> separations;
  int scan_n = 1024;
  double scan_pmax = 16.0;
  double scan_T = 0.0;
  auto* cmd_scan = app.add_subcommand("commutator-scan",
                                      "commutator norm vs region separation (CSV)");
  cmd_scan->add_option("--width", width, "region width in Compton units")->required();
  cmd_scan->add_option("--separations", separations,
                       "separations in Compton units")->required()->expected(-1);
  cmd_scan->add_option("--grid-n", scan_n, "grid points (default 1024)");
  cmd_scan->add_option("--p-max", scan_pmax, "momentum cutoff over m (default 16)");
  cmd_scan->add_option("--proper-time", scan_T, "common proper time (default 0)");

  double density_time = 0.0;
  auto* cmd_density = app.add_subcommand("density",
                                         "initial-state position density on a slice (CSV)");
  cmd_density->add_option("file", file)->required();
  cmd_density->add_option("--rapidity", rapidity, "frame rapidity")->required();
  cmd_density->add_option("--time", density_time, "slice coordinate time")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help/--version
    app.exit(e);
    return exit_code(rqm::ExitCode::Usage);
  }

  try {
    if (*cmd_validate) {
      auto parsed = rqm::parse(file);
      if (std::holds_alternative<rqm::ValidationReport>(parsed)) {
        const auto& report = std::get<rqm::ValidationReport>(parsed);
        std::cout << rqm::to_json(report).dump(2) << "\n";
        return report.ok() ? exit_code(rqm::ExitCode::Ok)
                           : exit_code(rqm::ExitCode::Validation);
      }
      rqm::ValidationReport empty;
      const auto& e = std::get<rqm::Experiment>(parsed);
      auto report = rqm::validate(e.all_devices());
      std::cout << rqm::to_json(report).dump(2) << "\n";
      return exit_code(rqm::ExitCode::Ok);
    }

    if (*cmd_layers) {
      const auto e = load_or_exit(file);
      std::cout << rqm::to_json(e.layers).dump(2) << "\n";
      return exit_code(rqm::ExitCode::Ok);
    }

    if (*cmd_run) {
      if (mode == "sample" && !seed) {
        std::cerr << "error: --seed is required in sample mode\n";
        return exit_code(rqm::ExitCode::Usage);
      }
      const auto input = rqm::parse_experiment_file(file);
      const auto e = load_or_exit(file);
      const auto layers = rqm::measurement_layers(e);
      const rqm::RunResult result =
          mode == "enumerate" ? rqm::run_enumerate(e.initial, layers)
                              : rqm::run_sample(e.initial, layers, *seed);
      std::cout << rqm::run_report(input, e, result).dump(2) << "\n";
      return exit_code(rqm::ExitCode::Ok);
    }

    if (*cmd_boost) {
      const auto e = load_or_exit(file);
      const auto report = rqm::covariance_report(e, rqm::Rapidity{rapidity});
      std::cout << rqm::to_json(report).dump(2) << "\n";
      return exit_code(rqm::ExitCode::Ok);
    }

    if (*cmd_scan) {
      const rqm::MomentumGrid grid{scan_n, scan_pmax, 1.0};
      const auto curve = rqm::commutator_scan(grid, width, scan_T, separations);
      std::cout << rqm::to_csv(curve);
      return exit_code(rqm::ExitCode::Ok);
    }

    if (*cmd_density) {
      const auto e = load_or_exit(file);
      const auto samples =
          rqm::density_on_slice(e.initial, rqm::Rapidity{rapidity}, density_time);
      std::cout << rqm::to_csv(samples);
      return exit_code(rqm::ExitCode::Ok);
    }
  } catch (const rqm::ParseError& err) {
    std::cerr << "parse error: " << err.what();
    if (!err.detail().empty()) std::cerr << " [" << err.detail() << "]";
    std::cerr << "\n";
    return exit_code(rqm::ExitCode::Parse);
  } catch (const rqm::ValidationError& err) {
    std::cerr << "validation error: " << err.what() << "\n";
    return exit_code(rqm::ExitCode::Validation);
  } catch (const rqm::GuardError& err) {
    std::cerr << "numerical guard: " << err.what() << "\n";
    return exit_code(rqm::ExitCode::NumericalGuard);
  } catch (const rqm::Error& err) {
    std::cerr << "error: " << err.what() << "\n";
    return exit_code(rqm::ExitCode::NumericalGuard);
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return exit_code(rqm::ExitCode::Usage);
  }
  return exit_code(rqm::ExitCode::Usage);
}
