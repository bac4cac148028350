#include "lfm/cli.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>

#include "lfm/csv.hpp"
#include "lfm/inference.hpp"
#include "lfm/simulate.hpp"
#include "lfm/stats.hpp"
#include "lfm/treatment.hpp"

namespace lfm::cli {

namespace {

using nlohmann::json;

std::string header_comment(const RunConfig& config) {
  return std::string("lfm ") + kVersion + " config=" + config_hash(config);
}

std::vector<bool> parse_kind_flags(const std::string& kinds) {
  if (kinds.empty()) return {};
  std::vector<bool> flags;
  for (const auto& cell : csv::split_line(kinds)) {
    if (cell == "d" || cell == "discrete")
      flags.push_back(true);
    else if (cell == "c" || cell == "continuous")
      flags.push_back(false);
    else
      throw ConfigError("covariate kind must be d or c, got '" + cell + "'");
  }
  return flags;
}

MaskedPanel load_panel(const RunConfig& config) {
  if (config.input.empty()) throw ConfigError("--input is required");
  if (config.format == "wide") return csv::read_panel_wide(config.input);
  if (config.format == "long") return csv::read_panel_long(config.input);
  throw ConfigError("--format must be wide or long");
}

int resolve_rank(const RunConfig& config, const ReweightedCovariance& cov) {
  if (config.rank != "auto") {
    const int r = std::stoi(config.rank);
    if (r < 1) throw ConfigError("--rank must be positive or auto");
    return r;
  }
  const Index limit = std::min(cov.units(), cov.stats.n_periods);
  const int r_max = std::max(1, static_cast<int>(std::min<Index>(8, limit / 2 - 1)));
  return select_rank(cov, r_max).rank;
}

Matrix resolve_propensity(const RunConfig& config, const MaskedPanel& panel) {
  if (config.propensity == "file") {
    if (config.propensity_file.empty())
      throw ConfigError("--propensity file needs --propensity-file");
    Matrix probs = csv::read_matrix(config.propensity_file);
    if (probs.rows() != panel.units() || probs.cols() != panel.periods())
      throw DimensionMismatch("propensity file does not match panel shape");
    return probs;
  }
  if (config.covariates.empty())
    throw ConfigError("weighted estimation needs --covariates (or --propensity file)");
  CovariateVector S = csv::read_covariates(config.covariates, panel.unit_ids,
                                           parse_kind_flags(config.covariate_kinds));
  if (config.propensity == "discrete") return estimate_discrete_freq(panel, S).probs;
  if (config.propensity == "logit-pooled") return estimate_logit_pooled(panel, S).probs;
  if (config.propensity == "logit-per-t") return estimate_logit_per_t(panel, S).probs;
  throw ConfigError("--propensity must be discrete, logit-pooled, logit-per-t or file");
}

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Index j = 0; j < m.cols(); ++j)
      row.push_back(std::isfinite(m(i, j)) ? json(m(i, j)) : json());
    rows.push_back(std::move(row));
  }
  return rows;
}

std::filesystem::path out_path(const RunConfig& config, const std::string& name) {
  std::filesystem::create_directories(config.out);
  return std::filesystem::path(config.out) / name;
}

}  // namespace

std::string config_hash(const RunConfig& c) {
  std::string canon = c.command + '|' + c.input + '|' + c.format + '|' + c.rank + '|' +
                      c.estimator + '|' + c.propensity + '|' + c.propensity_file + '|' +
                      c.covariates + '|' + c.covariate_kinds + '|' + c.schedule + '|' +
                      c.z_file + '|' + std::to_string(c.unit) + '|' + c.time_id + '|' +
                      std::to_string(c.level) + '|' + std::to_string(c.seed) + '|' +
                      c.scenario_file + '|' + c.preset + '|' + std::to_string(c.reps) + '|' +
                      std::to_string(c.null_imposed) + '|' + std::to_string(c.min_overlap);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : canon) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void run_impute(const RunConfig& config) {
  const MaskedPanel panel = load_panel(config);
  const OverlapStats stats = compute_overlap(panel, config.min_overlap);
  const ReweightedCovariance cov = pairwise_covariance(panel, stats);
  const int rank = resolve_rank(config, cov);

  FitOptions options;
  options.min_overlap = config.min_overlap;
  Matrix probs;
  if (config.estimator == "weighted") {
    probs = resolve_propensity(config, panel);
    options.weighted = true;
    options.propensity = &probs;
  } else if (config.estimator != "plain") {
    throw ConfigError("--estimator must be plain or weighted");
  }

  const FactorModel model = fit(panel, rank, options);
  const ImputedPanel imputed = impute(panel, model);
  const MomentEstimates moments =
      estimate_moments(panel, model, options.weighted ? &probs : nullptr);
  const OmegaWeights omega = compute_omega_weights(panel, stats);
  const EstimatorMode mode =
      options.weighted ? EstimatorMode::Weighted : EstimatorMode::Plain;

  // entrywise standard errors for the imputed (missing) cells
  Matrix se = Matrix::Constant(panel.units(), panel.periods(),
                               std::numeric_limits<double>::quiet_NaN());
  MaskMatrix missing_mask(panel.units(), panel.periods());
  for (Index t = 0; t < panel.periods(); ++t) {
    const bool ok = model.factor_ok[static_cast<std::size_t>(t)] != 0;
    for (Index i = 0; i < panel.units(); ++i) {
      missing_mask(i, t) = panel.observed(i, t) ? 0 : 1;
      if (panel.observed(i, t) || !ok) continue;
      se(i, t) = var_common(i, t, moments, omega, mode).se(0);
    }
  }

  const std::string comment = header_comment(config);
  MaskMatrix all = MaskMatrix::Ones(panel.units(), panel.periods());
  csv::write_panel_wide(out_path(config, "completed.csv").string(), imputed.completed, all,
                        panel.unit_ids, panel.time_ids, comment);
  csv::write_panel_wide(out_path(config, "se.csv").string(), se, missing_mask,
                        panel.unit_ids, panel.time_ids, comment);

  json model_json;
  model_json["artifact"] = std::string("lfm ") + kVersion;
  model_json["config_hash"] = config_hash(config);
  model_json["rank"] = model.rank;
  model_json["weighted"] = model.weighted;
  model_json["eigenvalues"] = std::vector<double>(
      model.eigenvalues.data(), model.eigenvalues.data() + model.eigenvalues.size());
  model_json["loadings"] = matrix_to_json(model.loadings);
  model_json["factors"] = matrix_to_json(model.factors);
  model_json["factor_ok"] = std::vector<bool>(model.factor_ok.begin(), model.factor_ok.end());
  model_json["omega"] = omega.omega;
  model_json["omega_jj"] = std::vector<double>(omega.omega_jj.data(),
                                               omega.omega_jj.data() + omega.omega_jj.size());
  model_json["omega_j"] = std::vector<double>(omega.omega_j.data(),
                                              omega.omega_j.data() + omega.omega_j.size());
  model_json["sigma_e2"] = moments.sigma_e2;
  std::ofstream(out_path(config, "model.json")) << model_json.dump(2) << '\n';
}

void run_test_treatment(const RunConfig& config) {
  const MaskedPanel panel = load_panel(config);
  if (!panel.fully_observed())
    throw CsvError("treatment testing needs a complete outcome panel (every cell present)");
  if (config.schedule.empty()) throw ConfigError("--schedule is required");
  const std::vector<Index> adopt =
      csv::read_schedule(config.schedule, panel.unit_ids, panel.time_ids);

  const TreatmentPanel tp = TreatmentPanel::make(panel.values, adopt);
  const MaskedPanel control = control_panel(tp);
  const OverlapStats stats = compute_overlap(control, config.min_overlap);
  const ReweightedCovariance cov = pairwise_covariance(control, stats);
  const int rank = resolve_rank(config, cov);

  FitOptions options;
  options.min_overlap = config.min_overlap;
  const FactorModel model = fit(control, rank, options);
  const TreatmentContext ctx = make_treatment_context(tp, model);

  TestOptions topt;
  topt.null_imposed = config.null_imposed;

  std::ofstream out(out_path(config, "effects.csv"));
  out << "# " << header_comment(config) << '\n';
  out << "unit,target,estimate,se,z,p,null_imposed\n";
  auto emit = [&](Index i, const std::string& target, const EffectTestResult& res,
                  Index component) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%s,%s,%.17g,%.17g,%.17g,%.17g,%d",
                  panel.unit_ids[static_cast<std::size_t>(i)].c_str(), target.c_str(),
                  res.estimate(component), res.se(component), res.z_stat(component),
                  res.p_value(component), res.null_imposed ? 1 : 0);
    out << buf << '\n';
  };

  if (config.unit >= 0) {
    const Index i = config.unit;
    if (i >= tp.units()) throw ConfigError("--unit out of range");
    if (!config.time_id.empty()) {
      Index t = -1;
      for (std::size_t k = 0; k < panel.time_ids.size(); ++k)
        if (panel.time_ids[k] == config.time_id) t = static_cast<Index>(k);
      if (t < 0) throw ConfigError("--time is not a panel time id");
      emit(i, config.time_id, test_individual(tp, model, ctx, i, t, topt), 0);
    } else if (!config.z_file.empty()) {
      const Matrix Z = csv::read_matrix(config.z_file);
      const EffectTestResult res = test_weighted(tp, model, ctx, i, Z, topt);
      for (Index l = 0; l < res.estimate.size(); ++l)
        emit(i, "Z" + std::to_string(l + 1), res, l);
    } else {
      emit(i, "avg", test_average(tp, model, ctx, i, topt), 0);
    }
  } else {
    for (Index i = 0; i < tp.units(); ++i) {
      if (!tp.ever_treated(i)) continue;
      emit(i, "avg", test_average(tp, model, ctx, i, topt), 0);
    }
  }
}

namespace {

sim::PatternSpec pattern_from_json(const json& j) {
  sim::PatternSpec p;
  const std::string kind = j.value("kind", "random");
  if (kind == "random")
    p.kind = sim::PatternSpec::Kind::Random;
  else if (kind == "simultaneous")
    p.kind = sim::PatternSpec::Kind::Simultaneous;
  else if (kind == "staggered")
    p.kind = sim::PatternSpec::Kind::Staggered;
  else
    throw ConfigError("pattern kind must be random, simultaneous or staggered");
  p.condition_on_s = j.value("condition_on_s", false);
  auto group = [](const json& g, sim::GroupPattern base) {
    base.obs_prob = g.value("p", base.obs_prob);
    base.adopt_frac = g.value("adopt_frac", base.adopt_frac);
    base.start_frac = g.value("start_frac", base.start_frac);
    base.rate = g.value("rate", base.rate);
    return base;
  };
  p.base = group(j, p.base);
  if (j.contains("group1")) p.group1 = group(j["group1"], p.group1);
  if (j.contains("group0")) p.group0 = group(j["group0"], p.group0);
  return p;
}

sim::McScenario scenario_from_json(const json& j) {
  sim::McScenario sc;
  sc.name = j.value("name", "scenario");
  const std::string kind = j.value("kind", "rel_mse");
  if (kind == "rel_mse")
    sc.kind = sim::McKind::RelMse;
  else if (kind == "coverage")
    sc.kind = sim::McKind::Coverage;
  else if (kind == "normality")
    sc.kind = sim::McKind::Normality;
  else if (kind == "size_power")
    sc.kind = sim::McKind::SizePower;
  else
    throw ConfigError("scenario kind must be rel_mse, coverage, normality or size_power");

  sc.dgp.n_units = j.value("n", 100);
  sc.dgp.n_periods = j.value("T", 100);
  sc.dgp.rank = j.value("rank", 1);
  sc.dgp.factor_sd = j.value("factor_sd", 1.0);
  sc.dgp.noise_sd = j.value("noise_sd", 1.0);
  sc.dgp.shift_mean = j.value("shift_mean", 0.0);
  sc.dgp.shift_sd = j.value("shift_sd", 0.0);
  if (j.contains("factor_mean")) {
    const auto& fm = j["factor_mean"];
    sc.dgp.factor_mean = Vector::Zero(static_cast<Index>(fm.size()));
    for (std::size_t k = 0; k < fm.size(); ++k)
      sc.dgp.factor_mean(static_cast<Index>(k)) = fm[k].get<double>();
  }
  if (j.contains("pattern")) sc.pattern = pattern_from_json(j["pattern"]);
  sc.fit_rank = j.value("fit_rank", sc.dgp.rank);
  sc.run_weighted = j.value("weighted", false);
  const std::string prop = j.value("propensity", "true");
  if (prop == "true")
    sc.propensity = sim::PropensitySource::TrueP;
  else if (prop == "discrete")
    sc.propensity = sim::PropensitySource::DiscreteFreq;
  else if (prop == "logit_pooled")
    sc.propensity = sim::PropensitySource::LogitPooled;
  else if (prop == "logit_per_t")
    sc.propensity = sim::PropensitySource::LogitPerT;
  else
    throw ConfigError("propensity must be true, discrete, logit_pooled or logit_per_t");
  sc.level = j.value("level", 0.95);
  sc.test = j.value("test", std::string("average")) == "individual" ? sim::McTest::Individual
                                                                    : sim::McTest::Average;
  sc.null_imposed = j.value("null_imposed", true);
  sc.reps = j.value("reps", 100L);
  sc.seed = j.value("seed", 1UL);
  sc.histogram_bins = j.value("histogram_bins", 0);
  return sc;
}

}  // namespace

void run_simulate(const RunConfig& config) {
  sim::McScenario scenario;
  if (!config.preset.empty()) {
    scenario = sim::preset(config.preset);
  } else if (!config.scenario_file.empty()) {
    std::ifstream in(config.scenario_file);
    if (!in) throw ConfigError("cannot open scenario file: " + config.scenario_file);
    json j;
    try {
      in >> j;
    } catch (const json::exception& e) {
      throw ConfigError(std::string("scenario file is not valid JSON: ") + e.what());
    }
    scenario = scenario_from_json(j);
  } else {
    throw ConfigError("simulate needs --preset or --scenario");
  }
  if (config.reps > 0) scenario.reps = config.reps;
  scenario.seed = config.seed;

  const sim::McOutput result = sim::run_monte_carlo(scenario, config.workers);

  const std::string comment = header_comment(config);
  std::ofstream csv_out(out_path(config, "reports.csv"));
  csv_out << "# " << comment << '\n';
  csv_out << "metric,value,mc_se,reps,scenario\n";
  for (const auto& r : result.reports) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%s,%.17g,%.17g,%ld,%s", r.metric.c_str(), r.value,
                  r.mc_se, r.reps, r.scenario.c_str());
    csv_out << buf << '\n';
  }

  json j;
  j["artifact"] = std::string("lfm ") + kVersion;
  j["config_hash"] = config_hash(config);
  j["scenario"] = scenario.name;
  j["failures"] = result.failures;
  j["reports"] = json::array();
  for (const auto& r : result.reports)
    j["reports"].push_back({{"metric", r.metric},
                            {"value", r.value},
                            {"mc_se", r.mc_se},
                            {"reps", r.reps},
                            {"scenario", r.scenario}});
  std::ofstream(out_path(config, "reports.json")) << j.dump(2) << '\n';

  if (!result.hist_counts.empty()) {
    std::ofstream hist(out_path(config, "histogram.csv"));
    hist << "# " << comment << '\n';
    hist << "bin_left,bin_right,count\n";
    for (std::size_t b = 0; b < result.hist_counts.size(); ++b)
      hist << result.hist_edges[b] << ',' << result.hist_edges[b + 1] << ','
           << result.hist_counts[b] << '\n';
  }
}

}  // namespace lfm::cli
