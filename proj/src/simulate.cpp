#include "lfm/simulate.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <random>
#include <thread>

#include "lfm/stats.hpp"

namespace lfm::sim {

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t rep) {
  std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (rep + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

SimulatedPanel gen_panel(const DgpSpec& spec, std::uint64_t seed) {
  if (spec.n_units < 2 || spec.n_periods < 2 || spec.rank < 1)
    throw ConfigError("DGP needs N, T >= 2 and rank >= 1");
  if (spec.noise_sd < 0.0 || spec.factor_sd <= 0.0)
    throw ConfigError("DGP needs noise_sd >= 0 and factor_sd > 0");

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const Index n = spec.n_units, T = spec.n_periods;
  const int r = spec.rank;

  Vector mean = spec.factor_mean;
  if (mean.size() == 0) mean = Vector::Zero(r);
  if (mean.size() != r) throw ConfigError("factor_mean length must equal rank");

  SimulatedPanel out;
  out.loadings.resize(n, r);
  for (Index i = 0; i < n; ++i)
    for (int k = 0; k < r; ++k) out.loadings(i, k) = normal(rng);
  out.factors.resize(T, r);
  for (Index t = 0; t < T; ++t)
    for (int k = 0; k < r; ++k) out.factors(t, k) = mean(k) + spec.factor_sd * normal(rng);

  out.control_outcomes = out.loadings * out.factors.transpose();
  if (spec.noise_sd > 0.0) {
    for (Index t = 0; t < T; ++t)
      for (Index i = 0; i < n; ++i) out.control_outcomes(i, t) += spec.noise_sd * normal(rng);
  }

  out.treated_loadings = out.loadings;
  for (Index i = 0; i < n; ++i) {
    double shift = spec.shift_mean;
    if (spec.shift_sd > 0.0) shift += spec.shift_sd * normal(rng);
    out.treated_loadings.row(i).array() += shift;
  }
  out.treated_outcomes = out.control_outcomes +
                         (out.treated_loadings - out.loadings) * out.factors.transpose();

  const int sc = std::min(spec.s_column, r - 1);
  out.s.resize(n);
  for (Index i = 0; i < n; ++i)
    out.s(i) = out.loadings(i, sc) >= spec.s_threshold ? 1.0 : 0.0;
  return out;
}

namespace {

const GroupPattern& group_for(const PatternSpec& pattern, double s) {
  if (!pattern.condition_on_s) return pattern.base;
  return s >= 0.5 ? pattern.group1 : pattern.group0;
}

Index clamp_adopt(double t, Index T) {
  if (t < 1.0) return 1;
  if (t >= static_cast<double>(T)) return T;
  return static_cast<Index>(t);
}

}  // namespace

GeneratedMask gen_mask(Index n, Index T, const PatternSpec& pattern, const Vector& s,
                       std::uint64_t seed) {
  if (pattern.condition_on_s && s.size() != n)
    throw ConfigError("conditional pattern needs one S value per unit");

  std::mt19937_64 rng(seed);
  GeneratedMask out;
  out.mask = MaskMatrix::Ones(n, T);
  out.adopt_time.assign(static_cast<std::size_t>(n), T);

  if (pattern.kind == PatternSpec::Kind::Random) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (Index i = 0; i < n; ++i) {
      const double p = group_for(pattern, s.size() ? s(i) : 1.0).obs_prob;
      if (!(p > 0.0 && p <= 1.0)) throw ConfigError("observation probability must be in (0,1]");
      for (Index t = 0; t < T; ++t) out.mask(i, t) = unif(rng) < p ? 1 : 0;
    }
    return out;
  }

  // Absorbing adoption: group units, shuffle, and assign adoption times.
  std::vector<Index> group1, group0;
  for (Index i = 0; i < n; ++i)
    (pattern.condition_on_s && s(i) < 0.5 ? group0 : group1).push_back(i);

  auto assign = [&](std::vector<Index>& members, const GroupPattern& g) {
    std::shuffle(members.begin(), members.end(), rng);
    const auto n_g = static_cast<double>(members.size());
    if (pattern.kind == PatternSpec::Kind::Simultaneous) {
      const auto n_adopt =
          static_cast<std::size_t>(std::lround(g.adopt_frac * n_g));
      const Index start = clamp_adopt(std::floor(g.start_frac * static_cast<double>(T)), T);
      for (std::size_t k = 0; k < members.size(); ++k)
        if (k < n_adopt) out.adopt_time[static_cast<std::size_t>(members[k])] = start;
    } else { // Staggered: treated share at t is (t - start*T) / (rate*T)
      for (std::size_t k = 0; k < members.size(); ++k) {
        const double quantile = static_cast<double>(k) / n_g;
        const double t0 = g.start_frac * static_cast<double>(T) +
                          g.rate * static_cast<double>(T) * quantile;
        const Index adopt = clamp_adopt(std::ceil(t0), T);
        if (adopt < T) out.adopt_time[static_cast<std::size_t>(members[k])] = adopt;
      }
    }
  };
  if (pattern.condition_on_s) {
    assign(group1, pattern.group1);
    assign(group0, pattern.group0);
  } else {
    assign(group1, pattern.base);
  }

  for (Index i = 0; i < n; ++i)
    for (Index t = out.adopt_time[static_cast<std::size_t>(i)]; t < T; ++t)
      out.mask(i, t) = 0;
  return out;
}

Matrix true_propensity(Index n, Index T, const PatternSpec& pattern, const Vector& s) {
  Matrix p(n, T);
  for (Index i = 0; i < n; ++i) {
    const GroupPattern& g = group_for(pattern, s.size() ? s(i) : 1.0);
    for (Index t = 0; t < T; ++t) {
      double prob = 1.0;
      const double dt = static_cast<double>(t), dT = static_cast<double>(T);
      switch (pattern.kind) {
        case PatternSpec::Kind::Random: prob = g.obs_prob; break;
        case PatternSpec::Kind::Simultaneous:
          prob = dt < std::floor(g.start_frac * dT) ? 1.0 : 1.0 - g.adopt_frac;
          break;
        case PatternSpec::Kind::Staggered: {
          // P(adopt time <= t) for the quantile-assigned staggered design
          const double share = (std::floor(dt) + 1.0 - 1e-9 - g.start_frac * dT) / (g.rate * dT);
          prob = 1.0 - std::min(1.0, std::max(0.0, share));
          break;
        }
      }
      p(i, t) = std::max(prob, 1e-3);
    }
  }
  return p;
}

namespace patterns {

PatternSpec random_iid(double p) {
  PatternSpec spec;
  spec.kind = PatternSpec::Kind::Random;
  spec.base.obs_prob = p;
  return spec;
}

PatternSpec random_by_group(double p1, double p0) {
  PatternSpec spec;
  spec.kind = PatternSpec::Kind::Random;
  spec.condition_on_s = true;
  spec.group1.obs_prob = p1;
  spec.group0.obs_prob = p0;
  return spec;
}

PatternSpec simultaneous(double adopt_frac, double start_frac) {
  PatternSpec spec;
  spec.kind = PatternSpec::Kind::Simultaneous;
  spec.base.adopt_frac = adopt_frac;
  spec.base.start_frac = start_frac;
  return spec;
}

PatternSpec simultaneous_by_group(GroupPattern g1, GroupPattern g0) {
  PatternSpec spec;
  spec.kind = PatternSpec::Kind::Simultaneous;
  spec.condition_on_s = true;
  spec.group1 = g1;
  spec.group0 = g0;
  return spec;
}

PatternSpec staggered(double start_frac, double rate) {
  PatternSpec spec;
  spec.kind = PatternSpec::Kind::Staggered;
  spec.base.start_frac = start_frac;
  spec.base.rate = rate;
  return spec;
}

PatternSpec staggered_by_group(GroupPattern g1, GroupPattern g0) {
  PatternSpec spec;
  spec.kind = PatternSpec::Kind::Staggered;
  spec.condition_on_s = true;
  spec.group1 = g1;
  spec.group0 = g0;
  return spec;
}

PatternSpec benchmark_random_conditional() { return random_by_group(0.75, 0.5); }

PatternSpec benchmark_simultaneous_conditional() {
  GroupPattern g1, g0;
  g1.adopt_frac = 0.25;
  g1.start_frac = 0.75;
  g0.adopt_frac = 0.625;
  g0.start_frac = 0.375;
  return simultaneous_by_group(g1, g0);
}

}  // namespace patterns

namespace {

struct RepResult {
  bool failed = false;
  // RelMse
  double mse_obs = 0, mse_miss = 0, mse_all = 0;
  double mse_obs_w = 0, mse_miss_w = 0, mse_all_w = 0;
  // Coverage
  bool covered_miss = false, covered_obs = false;
  // Normality: standardized errors
  double z_loading = 0, z_factor = 0, z_common_obs = 0, z_common_miss = 0;
  // SizePower
  bool rejected = false;
};

double rel_mse(const Matrix& fitted, const Matrix& truth, const MaskMatrix& mask,
               int want /* 1 = obs, 0 = miss, -1 = all */) {
  double num = 0, den = 0;
  for (Index t = 0; t < truth.cols(); ++t)
    for (Index i = 0; i < truth.rows(); ++i) {
      if (want >= 0 && static_cast<int>(mask(i, t)) != want) continue;
      const double d = fitted(i, t) - truth(i, t);
      num += d * d;
      den += truth(i, t) * truth(i, t);
    }
  return den > 0 ? num / den : 0.0;
}

Matrix propensity_for(const McScenario& sc, const MaskedPanel& panel, const Vector& s) {
  switch (sc.propensity) {
    case PropensitySource::TrueP:
      return true_propensity(panel.units(), panel.periods(), sc.pattern, s);
    case PropensitySource::DiscreteFreq: {
      Matrix sv = s;
      auto cov = CovariateVector::make(sv, {ColumnKind::Discrete}, {"s"});
      return estimate_discrete_freq(panel, cov).probs;
    }
    case PropensitySource::LogitPooled: {
      Matrix sv = s;
      auto cov = CovariateVector::make(sv, {ColumnKind::Continuous}, {"s"});
      return estimate_logit_pooled(panel, cov).probs;
    }
    case PropensitySource::LogitPerT: {
      Matrix sv = s;
      auto cov = CovariateVector::make(sv, {ColumnKind::Discrete}, {"s"});
      return estimate_logit_per_t(panel, cov).probs;
    }
  }
  throw ConfigError("unknown propensity source");
}

/// Rotation the distribution theory is stated in:
/// H = (1/(NT)) V^-1 Lhat' Lambda F'F with V the leading eigenvalues of
/// Sigma/N. Loadings compare as H^-1 Lhat_j vs Lambda_j, factors as
/// H' Fhat_t vs F_t; common components need no alignment.
struct Alignment {
  Matrix h;
  Matrix h_inv;
};

Alignment align(const Matrix& truth_loadings, const Matrix& truth_factors,
                const FactorModel& model) {
  const double nt = static_cast<double>(truth_loadings.rows()) *
                    static_cast<double>(truth_factors.rows());
  Alignment a;
  a.h = model.eigenvalues.cwiseInverse().asDiagonal() * model.loadings.transpose() *
        truth_loadings * truth_factors.transpose() * truth_factors / nt;
  a.h_inv = a.h.inverse();
  return a;
}

RepResult run_rep(const McScenario& sc, std::uint64_t rep) {
  RepResult res;
  const std::uint64_t seed = derive_seed(sc.seed, rep);
  std::mt19937_64 pick_rng(derive_seed(seed, 0x5eedULL));

  const SimulatedPanel dgp = gen_panel(sc.dgp, seed);
  const GeneratedMask gm =
      gen_mask(sc.dgp.n_units, sc.dgp.n_periods, sc.pattern, dgp.s, derive_seed(seed, 1));
  const Matrix truth = dgp.loadings * dgp.factors.transpose();

  if (sc.kind == McKind::SizePower) {
    // observed outcome: treated value on treated cells, control elsewhere
    Matrix outcomes = dgp.control_outcomes;
    for (Index i = 0; i < outcomes.rows(); ++i)
      for (Index t = gm.adopt_time[static_cast<std::size_t>(i)]; t < outcomes.cols(); ++t)
        outcomes(i, t) = dgp.treated_outcomes(i, t);
    auto tp = TreatmentPanel::make(outcomes, gm.adopt_time);
    const FactorModel model = fit_control(tp, sc.fit_rank);
    const TreatmentContext ctx = make_treatment_context(tp, model);

    std::vector<Index> treated_units;
    for (Index i = 0; i < tp.units(); ++i)
      if (tp.ever_treated(i)) treated_units.push_back(i);
    if (treated_units.empty()) throw ConfigError("no treated unit in size/power scenario");
    const Index unit = treated_units[std::uniform_int_distribution<std::size_t>(
        0, treated_units.size() - 1)(pick_rng)];

    TestOptions topt;
    topt.null_imposed = sc.null_imposed;
    EffectTestResult result;
    if (sc.test == McTest::Average) {
      result = test_average(tp, model, ctx, unit, topt);
    } else {
      std::vector<Index> periods;
      for (Index t = tp.adopt_time[static_cast<std::size_t>(unit)]; t < tp.periods(); ++t)
        if (model.factor_ok[static_cast<std::size_t>(t)]) periods.push_back(t);
      const Index t = periods[std::uniform_int_distribution<std::size_t>(
          0, periods.size() - 1)(pick_rng)];
      result = test_individual(tp, model, ctx, unit, t, topt);
    }
    res.rejected = result.p_value(0) < 1.0 - sc.level;
    return res;
  }

  auto panel = MaskedPanel::make(dgp.control_outcomes, gm.mask);
  FitOptions options;
  const FactorModel model = fit(panel, sc.fit_rank, options);
  const Matrix common = model.common_matrix();

  if (sc.kind == McKind::RelMse) {
    res.mse_obs = rel_mse(common, truth, gm.mask, 1);
    res.mse_miss = rel_mse(common, truth, gm.mask, 0);
    res.mse_all = rel_mse(common, truth, gm.mask, -1);
    if (sc.run_weighted) {
      FitOptions wopt;
      wopt.weighted = true;
      const Matrix probs = propensity_for(sc, panel, dgp.s);
      wopt.propensity = &probs;
      const Matrix wcommon = fit(panel, sc.fit_rank, wopt).common_matrix();
      res.mse_obs_w = rel_mse(wcommon, truth, gm.mask, 1);
      res.mse_miss_w = rel_mse(wcommon, truth, gm.mask, 0);
      res.mse_all_w = rel_mse(wcommon, truth, gm.mask, -1);
    }
    return res;
  }

  const MomentEstimates moments = estimate_moments(panel, model);
  const OmegaWeights omega = compute_omega_weights(panel, compute_overlap(panel));

  // entry picks shared by coverage and normality
  std::vector<std::pair<Index, Index>> observed, missing;
  for (Index t = 0; t < panel.periods(); ++t) {
    if (!model.factor_ok[static_cast<std::size_t>(t)]) continue;
    for (Index i = 0; i < panel.units(); ++i)
      (panel.observed(i, t) ? observed : missing).push_back({i, t});
  }
  if (missing.empty() || observed.empty())
    throw ConfigError("scenario produced no usable observed/missing entries");
  auto pick = [&](std::vector<std::pair<Index, Index>>& v) {
    return v[std::uniform_int_distribution<std::size_t>(0, v.size() - 1)(pick_rng)];
  };
  const auto [mi, mt] = pick(missing);
  const auto [oi, ot] = pick(observed);

  if (sc.kind == McKind::Coverage) {
    const auto rep_miss = var_common(mi, mt, moments, omega);
    const auto ci = confidence_interval(common(mi, mt), rep_miss.se(0), sc.level);
    res.covered_miss = truth(mi, mt) >= ci.lower && truth(mi, mt) <= ci.upper;
    const auto rep_obs = var_common(oi, ot, moments, omega);
    const auto ci_obs = confidence_interval(common(oi, ot), rep_obs.se(0), sc.level);
    res.covered_obs = truth(oi, ot) >= ci_obs.lower && truth(oi, ot) <= ci_obs.upper;
    return res;
  }

  // Normality: standardized errors in the frame of the delivered estimates,
  // i.e. Lhat - Lambda H and Fhat - F H^-T, which is what the plug-in
  // variances describe.
  const Alignment al = align(dgp.loadings, dgp.factors, model);
  const Matrix aligned_loadings = dgp.loadings * al.h;                  // Lambda H
  const Matrix aligned_factors = dgp.factors * al.h_inv.transpose();    // F H^-T

  const Index lj = std::uniform_int_distribution<Index>(0, panel.units() - 1)(pick_rng);
  const auto rep_l = var_loading(lj, moments, omega);
  res.z_loading = (model.loadings(lj, 0) - aligned_loadings(lj, 0)) / rep_l.se(0);

  std::vector<Index> ok_times = moments.ok_times;
  const Index ft = ok_times[std::uniform_int_distribution<std::size_t>(
      0, ok_times.size() - 1)(pick_rng)];
  const auto rep_f = var_factor(ft, moments, omega);
  res.z_factor = (model.factors(ft, 0) - aligned_factors(ft, 0)) / rep_f.se(0);

  const auto rep_cm = var_common(mi, mt, moments, omega);
  res.z_common_miss = (common(mi, mt) - truth(mi, mt)) / rep_cm.se(0);
  const auto rep_co = var_common(oi, ot, moments, omega);
  res.z_common_obs = (common(oi, ot) - truth(oi, ot)) / rep_co.se(0);
  return res;
}

void append_mean_report(std::vector<McReport>& out, const std::string& scenario,
                        const std::string& metric, const std::vector<double>& values) {
  const long n = static_cast<long>(values.size());
  if (n == 0) return;
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double var = 0;
  for (double v : values) var += (v - mean) * (v - mean);
  var = n > 1 ? var / (n - 1) : 0.0;
  out.push_back({metric, mean, std::sqrt(var / n), n, scenario});
}

void append_proportion_report(std::vector<McReport>& out, const std::string& scenario,
                              const std::string& metric, long hits, long n) {
  if (n == 0) return;
  const double v = static_cast<double>(hits) / n;
  out.push_back({metric, v, stats::proportion_se(v, n), n, scenario});
}

void append_ks_reports(std::vector<McReport>& out, const std::string& scenario,
                       const std::string& which, std::vector<double> sample) {
  const long n = static_cast<long>(sample.size());
  const auto ks = stats::ks_test_standard_normal(std::move(sample));
  out.push_back({"ks_stat_" + which, ks.statistic, 0.0, n, scenario});
  out.push_back({"ks_p_" + which, ks.p_value, 0.0, n, scenario});
}

}  // namespace

McOutput run_monte_carlo(const McScenario& scenario, int workers) {
  if (scenario.reps < 1) throw ConfigError("need at least one rep");
  if (workers < 1) workers = 1;

  std::vector<RepResult> results(static_cast<std::size_t>(scenario.reps));
  std::atomic<long> next{0};
  auto worker = [&]() {
    for (;;) {
      const long rep = next.fetch_add(1);
      if (rep >= scenario.reps) return;
      try {
        results[static_cast<std::size_t>(rep)] =
            run_rep(scenario, static_cast<std::uint64_t>(rep));
      } catch (const std::exception&) {
        results[static_cast<std::size_t>(rep)].failed = true;
      }
    }
  };
  std::vector<std::thread> pool;
  for (int w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();

  McOutput out;
  std::vector<RepResult> good;
  for (auto& r : results) {
    if (r.failed)
      ++out.failures;
    else
      good.push_back(r);
  }
  const long n = static_cast<long>(good.size());
  const std::string& sc = scenario.name;

  auto collect = [&](auto member) {
    std::vector<double> v;
    v.reserve(static_cast<std::size_t>(n));
    for (const auto& r : good) v.push_back(r.*member);
    return v;
  };

  switch (scenario.kind) {
    case McKind::RelMse:
      append_mean_report(out.reports, sc, "rel_mse_obs", collect(&RepResult::mse_obs));
      append_mean_report(out.reports, sc, "rel_mse_miss", collect(&RepResult::mse_miss));
      append_mean_report(out.reports, sc, "rel_mse_all", collect(&RepResult::mse_all));
      if (scenario.run_weighted) {
        append_mean_report(out.reports, sc, "rel_mse_obs_weighted",
                           collect(&RepResult::mse_obs_w));
        append_mean_report(out.reports, sc, "rel_mse_miss_weighted",
                           collect(&RepResult::mse_miss_w));
        append_mean_report(out.reports, sc, "rel_mse_all_weighted",
                           collect(&RepResult::mse_all_w));
      }
      break;
    case McKind::Coverage: {
      long miss = 0, obs = 0;
      for (const auto& r : good) {
        miss += r.covered_miss ? 1 : 0;
        obs += r.covered_obs ? 1 : 0;
      }
      append_proportion_report(out.reports, sc, "coverage_miss", miss, n);
      append_proportion_report(out.reports, sc, "coverage_obs", obs, n);
      break;
    }
    case McKind::Normality: {
      append_ks_reports(out.reports, sc, "loading", collect(&RepResult::z_loading));
      append_ks_reports(out.reports, sc, "factor", collect(&RepResult::z_factor));
      append_ks_reports(out.reports, sc, "common_obs", collect(&RepResult::z_common_obs));
      append_ks_reports(out.reports, sc, "common_miss", collect(&RepResult::z_common_miss));
      if (scenario.histogram_bins > 0) {
        const auto z = collect(&RepResult::z_common_miss);
        const int bins = scenario.histogram_bins;
        out.hist_edges.resize(static_cast<std::size_t>(bins) + 1);
        out.hist_counts.assign(static_cast<std::size_t>(bins), 0);
        const double lo = -4.0, hi = 4.0;
        for (int b = 0; b <= bins; ++b)
          out.hist_edges[static_cast<std::size_t>(b)] = lo + (hi - lo) * b / bins;
        for (double v : z) {
          if (v < lo || v >= hi) continue;
          const int b = static_cast<int>((v - lo) / (hi - lo) * bins);
          out.hist_counts[static_cast<std::size_t>(std::min(b, bins - 1))]++;
        }
      }
      break;
    }
    case McKind::SizePower: {
      long rej = 0;
      for (const auto& r : good) rej += r.rejected ? 1 : 0;
      append_proportion_report(out.reports, sc, "rejection_rate", rej, n);
      append_proportion_report(out.reports, sc, "non_rejection_rate", n - rej, n);
      break;
    }
  }
  return out;
}

McScenario preset(const std::string& name) {
  McScenario sc;
  sc.name = name;
  if (name == "smoke") {
    sc.kind = McKind::RelMse;
    sc.dgp.n_units = 100;
    sc.dgp.n_periods = 100;
    sc.dgp.rank = 2;
    sc.fit_rank = 2;
    sc.pattern = patterns::random_iid(0.75);
    sc.reps = 100;
  } else if (name == "table_comparison_random") {
    sc.kind = McKind::RelMse;
    sc.dgp.n_units = 250;
    sc.dgp.n_periods = 250;
    sc.dgp.rank = 2;
    sc.fit_rank = 2;
    sc.pattern = patterns::random_iid(0.75);
    sc.run_weighted = true;
    sc.reps = 100;
  } else if (name == "table_comparison_simultaneous") {
    sc.kind = McKind::RelMse;
    sc.dgp.n_units = 250;
    sc.dgp.n_periods = 250;
    sc.dgp.rank = 2;
    sc.fit_rank = 2;
    sc.pattern = patterns::simultaneous(0.5, 0.5);
    sc.run_weighted = true;
    sc.reps = 100;
  } else if (name == "table_comparison_staggered") {
    sc.kind = McKind::RelMse;
    sc.dgp.n_units = 250;
    sc.dgp.n_periods = 250;
    sc.dgp.rank = 2;
    sc.fit_rank = 2;
    sc.pattern = patterns::staggered(0.1, 1.0);
    sc.run_weighted = true;
    sc.reps = 100;
  } else if (name == "table_power_100_100") {
    sc.kind = McKind::SizePower;
    sc.dgp.n_units = 100;
    sc.dgp.n_periods = 100;
    sc.dgp.rank = 1;
    sc.dgp.factor_mean = Vector::Constant(1, 0.10);
    sc.dgp.shift_mean = 0.25;
    sc.fit_rank = 1;
    sc.pattern = patterns::benchmark_simultaneous_conditional();
    sc.test = McTest::Average;
    sc.null_imposed = true;
    sc.reps = 500;
  } else if (name == "size_250") {
    sc.kind = McKind::SizePower;
    sc.dgp.n_units = 250;
    sc.dgp.n_periods = 250;
    sc.dgp.rank = 1;
    sc.dgp.shift_mean = 0.0;
    sc.fit_rank = 1;
    sc.pattern = patterns::benchmark_simultaneous_conditional();
    sc.test = McTest::Average;
    sc.reps = 500;
  } else if (name == "coverage_simultaneous_250") {
    sc.kind = McKind::Coverage;
    sc.dgp.n_units = 250;
    sc.dgp.n_periods = 250;
    sc.dgp.rank = 1;
    sc.fit_rank = 1;
    sc.pattern = patterns::benchmark_simultaneous_conditional();
    sc.reps = 1000;
  } else if (name == "normality_random_250") {
    sc.kind = McKind::Normality;
    sc.dgp.n_units = 250;
    sc.dgp.n_periods = 250;
    sc.dgp.rank = 1;
    sc.fit_rank = 1;
    sc.pattern = patterns::benchmark_random_conditional();
    sc.reps = 1000;
    sc.histogram_bins = 40;
  } else {
    throw ConfigError("unknown preset '" + name + "'");
  }
  return sc;
}

std::vector<std::string> preset_names() {
  return {"smoke",
          "table_comparison_random",
          "table_comparison_simultaneous",
          "table_comparison_staggered",
          "table_power_100_100",
          "size_250",
          "coverage_simultaneous_250",
          "normality_random_250"};
}

}  // namespace lfm::sim
