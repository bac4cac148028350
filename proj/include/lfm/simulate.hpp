#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lfm/treatment.hpp"

namespace lfm::sim {

/// One-shot factor-model DGP: Y = Lambda F' + e with iid normal factors,
/// loadings and noise. The binary trait S_i = 1{Lambda_{i,s_column} >= s_threshold}
/// drives the conditional observation patterns. A treatment, when enabled,
/// shifts the loadings of adopting units: Lambda1 = Lambda0 + shift.
struct DgpSpec {
  Index n_units = 100;
  Index n_periods = 100;
  int rank = 1;
  Vector factor_mean;     // length rank; empty means zero
  double factor_sd = 1.0;
  double noise_sd = 1.0;
  int s_column = 0;
  double s_threshold = 0.0;
  // treatment shift: constant when shift_sd == 0, else N(shift_mean, shift_sd^2)
  double shift_mean = 0.0;
  double shift_sd = 0.0;
};

struct SimulatedPanel {
  Matrix control_outcomes; // Lambda0 F' + e
  Matrix treated_outcomes; // Lambda1 F' + e (same noise draw)
  Matrix loadings;         // Lambda0
  Matrix treated_loadings; // Lambda1
  Matrix factors;          // T x r
  Vector s;                // N, 0/1
};

SimulatedPanel gen_panel(const DgpSpec& spec, std::uint64_t seed);

/// Observation patterns. `Random` draws iid Bernoulli cells; the treatment
/// patterns are absorbing: a unit adopts at its drawn time and stays treated.
/// With condition_on_s the per-group parameter sets apply (group1 for S=1).
struct GroupPattern {
  double obs_prob = 0.75;  // Random: per-cell observation probability
  double adopt_frac = 0.5; // Simultaneous: fraction of units adopting
  double start_frac = 0.5; // Simultaneous/Staggered: adoption start as a fraction of T
  double rate = 1.0;       // Staggered: treated share at t is (t - start*T)/(rate*T)
};

struct PatternSpec {
  enum class Kind { Random, Simultaneous, Staggered };
  Kind kind = Kind::Random;
  bool condition_on_s = false;
  GroupPattern base;   // used when condition_on_s is false
  GroupPattern group1; // S = 1
  GroupPattern group0; // S = 0
};

struct GeneratedMask {
  MaskMatrix mask;                // 1 = observed (control)
  std::vector<Index> adopt_time;  // first treated period; T for never treated
};

GeneratedMask gen_mask(Index n, Index T, const PatternSpec& pattern, const Vector& s,
                       std::uint64_t seed);

/// Population P(W_it = 1 | S_i) implied by a pattern (the "true" propensity
/// for weighted-estimator experiments).
Matrix true_propensity(Index n, Index T, const PatternSpec& pattern, const Vector& s);

/// Ready-made pattern parameterizations used by the simulation studies.
namespace patterns {
PatternSpec random_iid(double p);
PatternSpec random_by_group(double p1, double p0); // observed w.p. p1 if S=1, p0 if S=0
PatternSpec simultaneous(double adopt_frac, double start_frac);
PatternSpec simultaneous_by_group(GroupPattern g1, GroupPattern g0);
PatternSpec staggered(double start_frac, double rate);
PatternSpec staggered_by_group(GroupPattern g1, GroupPattern g0);
/// Benchmark conditional patterns: observed w.p. 0.75/0.5 by group, and the
/// simultaneous adoption with (25% at 0.75T | 62.5% at 0.375T).
PatternSpec benchmark_random_conditional();
PatternSpec benchmark_simultaneous_conditional();
}  // namespace patterns

enum class PropensitySource { TrueP, DiscreteFreq, LogitPooled, LogitPerT };
enum class McKind { RelMse, Coverage, Normality, SizePower };
enum class McTest { Average, Individual };

struct McScenario {
  std::string name = "scenario";
  McKind kind = McKind::RelMse;
  DgpSpec dgp;
  PatternSpec pattern;
  int fit_rank = 1;
  bool run_weighted = false; // also run the propensity-weighted estimator
  PropensitySource propensity = PropensitySource::TrueP;
  double level = 0.95;
  McTest test = McTest::Average;
  bool null_imposed = true;
  long reps = 100;
  std::uint64_t seed = 1;
  int histogram_bins = 0; // >0: also emit standardized-error histogram bins
};

struct McReport {
  std::string metric;
  double value = 0.0;
  double mc_se = 0.0;
  long reps = 0;
  std::string scenario;
};

struct McOutput {
  std::vector<McReport> reports;
  // optional histogram of standardized errors (Normality kind)
  std::vector<double> hist_edges;
  std::vector<long> hist_counts;
  long failures = 0; // reps that threw; tallied, not fatal
};

/// Deterministic given (scenario.seed, reps); worker count never changes the
/// result, only the wall time.
McOutput run_monte_carlo(const McScenario& scenario, int workers);

/// Named scenarios for the CLI (includes "smoke" and the benchmark tables).
McScenario preset(const std::string& name);
std::vector<std::string> preset_names();

/// Counter-derived per-rep seed (splitmix64 of master ^ rep).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t rep);

}  // namespace lfm::sim
