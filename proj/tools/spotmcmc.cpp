// spotmcmc: command-line front end.
//
//   spotmcmc <deseasonalize|simulate|fit|diagnose|select> [--config FILE] [--seed N] [--out DIR]
//
// On failure a JSON error record is printed to stderr (and written to
// <out>/error.json when possible) and the exit status is non-zero.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "spotmcmc/commands.hpp"

namespace {

int report_error(const std::string& command, const std::string& kind, const std::string& message,
                 const std::optional<std::string>& out) {
  const spotmcmc::json err = {{"error", {{"command", command}, {"type", kind}, {"message", message}}}};
  std::cerr << err.dump() << '\n';
  if (out) {
    std::error_code ec;
    std::filesystem::create_directories(*out, ec);
    if (!ec) {
      try {
        spotmcmc::write_json_file((std::filesystem::path(*out) / "error.json").string(), err);
      } catch (const std::exception&) {
      }
    }
  }
  return kind == "usage" ? 2 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian calibration of mean-reverting jump models for deseasonalised spot prices"};
  app.require_subcommand(1);

  std::optional<std::string> config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  bool full = false;
  bool quick = false;

  const char* names[] = {"deseasonalize", "simulate", "fit", "diagnose", "select"};
  const char* help[] = {"fit the seasonal trend to a date,price CSV and write the deseasonalised series",
                        "simulate a series from the model", "run the MCMC sampler on a series",
                        "posterior predictive check of saved samples", "stepwise model selection"};
  for (int k = 0; k < 5; ++k) {
    auto* sub = app.add_subcommand(names[k], help[k]);
    sub->add_option("--config", config, "JSON run configuration");
    sub->add_option("--seed", seed, "master seed (overrides SPOTMCMC_SEED and the config)");
    sub->add_option("--out", out, "output directory");
    if (k >= 2) {
      auto* f = sub->add_flag("--full", full, "long chains (5e5 burn-in, 1.5e6 iterations, thin 100)");
      sub->add_flag("--quick", quick, "desk-scale chains (5e4 burn-in, 1.5e5 iterations, thin 10)")->excludes(f);
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report_error("", "usage", e.what(), std::nullopt);
  }

  const std::string command = app.get_subcommands().front()->get_name();
  std::optional<std::string> error_dir = out;
  try {
    auto cfg = spotmcmc::resolve_config(config, seed, out);
    error_dir = cfg.out;
    if (full || quick) {
      const auto keep = cfg.sampler;
      cfg.sampler = full ? spotmcmc::SamplerConfig::full() : spotmcmc::SamplerConfig::quick();
      cfg.sampler.scales = keep.scales;
      cfg.sampler.phi_updates = keep.phi_updates;
    }
    spotmcmc::json summary;
    if (command == "deseasonalize") {
      summary = spotmcmc::cmd_deseasonalize(cfg);
    } else if (command == "simulate") {
      summary = spotmcmc::cmd_simulate(cfg);
    } else if (command == "fit") {
      summary = spotmcmc::cmd_fit(cfg);
    } else if (command == "diagnose") {
      summary = spotmcmc::cmd_diagnose(cfg);
    } else {
      summary = spotmcmc::cmd_select(cfg);
    }
    std::cout << summary.dump(2) << '\n';
    return 0;
  } catch (const spotmcmc::InputError& e) {
    return report_error(command, "input", e.what(), error_dir);
  } catch (const std::invalid_argument& e) {
    return report_error(command, "config", e.what(), error_dir);
  } catch (const std::exception& e) {
    return report_error(command, "runtime", e.what(), error_dir);
  }
}
