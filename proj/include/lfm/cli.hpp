#pragma once

#include <cstdint>
#include <string>

namespace lfm::cli {

inline constexpr const char* kVersion = "0.1.0";

/// Everything a batch run needs; populated by the command-line front end and
/// consumed by the run_* entry points (which are plain library functions so
/// tests can drive them without a process boundary).
struct RunConfig {
  std::string command;            // impute | test-treatment | simulate
  std::string input;
  std::string format = "wide";    // wide | long
  std::string rank = "auto";      // positive integer or "auto"
  std::string estimator = "plain"; // plain | weighted
  std::string propensity = "discrete"; // discrete | logit-pooled | logit-per-t | file
  std::string propensity_file;
  std::string covariates;          // covariate CSV path
  std::string covariate_kinds;     // comma list of d/c per column
  std::string schedule;            // adoption schedule CSV path
  std::string z_file;              // Z matrix CSV for the weighted test
  long unit = -1;                  // unit row (0-based) for targeted tests
  std::string time_id;             // time label for an individual test
  double level = 0.95;
  std::uint64_t seed = 1;
  int workers = 1;
  std::string out = ".";
  std::string scenario_file;
  std::string preset;
  long reps = -1;                  // simulate: override scenario reps
  bool null_imposed = true;
  int min_overlap = -1;
};

/// FNV-1a hash of the canonical config serialization; stamped into every
/// output file header.
std::string config_hash(const RunConfig& config);

void run_impute(const RunConfig& config);
void run_test_treatment(const RunConfig& config);
void run_simulate(const RunConfig& config);

}  // namespace lfm::cli
