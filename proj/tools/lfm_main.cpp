#include <CLI11.hpp>

#include <cstdio>
#include <exception>

#include "lfm/cli.hpp"
#include "lfm/errors.hpp"
#include "lfm/simulate.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Latent factor models for incomplete panels: imputation with "
               "confidence intervals, treatment-effect tests, and a Monte Carlo "
               "verification harness."};
  app.require_subcommand(1);

  lfm::cli::RunConfig config;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--out", config.out, "output directory")->capture_default_str();
    cmd->add_option("--seed", config.seed, "random seed")->capture_default_str();
    cmd->add_option("--workers", config.workers, "worker threads")->capture_default_str();
    cmd->add_option("--level", config.level, "confidence level")->capture_default_str();
  };
  auto add_panel_opts = [&](CLI::App* cmd) {
    cmd->add_option("--input", config.input, "panel CSV path")->required();
    cmd->add_option("--format", config.format, "wide | long")->capture_default_str();
    cmd->add_option("--rank", config.rank, "number of factors or 'auto'")
        ->capture_default_str();
    cmd->add_option("--min-overlap", config.min_overlap,
                    "pairwise overlap floor (default max(2, ceil(0.05 T)))");
  };

  CLI::App* impute = app.add_subcommand("impute", "fit the factor model and impute missing entries");
  add_panel_opts(impute);
  add_common(impute);
  impute->add_option("--estimator", config.estimator, "plain | weighted")
      ->capture_default_str();
  impute->add_option("--propensity", config.propensity,
                     "discrete | logit-pooled | logit-per-t | file")
      ->capture_default_str();
  impute->add_option("--propensity-file", config.propensity_file,
                     "N x T probability matrix CSV (with --propensity file)");
  impute->add_option("--covariates", config.covariates, "unit covariates CSV");
  impute->add_option("--covariate-kinds", config.covariate_kinds,
                     "comma list of d/c, one per covariate column");

  CLI::App* test = app.add_subcommand("test-treatment", "treatment-effect tests");
  add_panel_opts(test);
  add_common(test);
  test->add_option("--schedule", config.schedule, "adoption schedule CSV")->required();
  test->add_option("--unit", config.unit, "0-based unit row to test (default: all treated)");
  test->add_option("--time", config.time_id, "time id for an individual effect test");
  test->add_option("--z", config.z_file, "Z weight matrix CSV for the weighted test");
  test->add_flag("--no-null-imposed", [&](std::int64_t) { config.null_imposed = false; },
                 "estimate the variance without imposing the null");

  CLI::App* simulate = app.add_subcommand("simulate", "Monte Carlo verification runs");
  add_common(simulate);
  simulate->add_option("--scenario", config.scenario_file, "scenario JSON path");
  std::string preset_help = "bundled scenario, one of:";
  for (const auto& name : lfm::sim::preset_names()) preset_help += " " + name;
  simulate->add_option("--preset", config.preset, preset_help);
  simulate->add_option("--reps", config.reps, "override scenario rep count");

  CLI11_PARSE(app, argc, argv);

  try {
    if (impute->parsed()) {
      config.command = "impute";
      lfm::cli::run_impute(config);
    } else if (test->parsed()) {
      config.command = "test-treatment";
      lfm::cli::run_test_treatment(config);
    } else {
      config.command = "simulate";
      lfm::cli::run_simulate(config);
    }
  } catch (const lfm::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return 1;
  }
  return 0;
}
