#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "helpers.hpp"
#include "lfm/cli.hpp"

using namespace lfm;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("lfm_test_" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

void write_file(const std::string& path, const std::string& content) {
  std::ofstream(path) << content;
}

}  // namespace

TEST_CASE("wide panel round trip with NA and empty cells") {
  TempDir dir;
  write_file(dir.file("p.csv"),
             "unit,t1,t2,t3,t4\n"
             "a,1.5,,2.5,0.125\n"
             "b,NA,3.25,-1,2\n"
             "c,0,1,1e-3,\n");
  const auto panel = csv::read_panel_wide(dir.file("p.csv"));
  CHECK(panel.units() == 3);
  CHECK(panel.periods() == 4);
  CHECK(panel.unit_ids[1] == "b");
  CHECK(panel.time_ids[3] == "t4");
  CHECK(!panel.observed(0, 1));
  CHECK(!panel.observed(1, 0));
  CHECK(!panel.observed(2, 3));
  CHECK(panel.values(0, 3) == 0.125);
  CHECK(panel.values(2, 2) == 1e-3);

  csv::write_panel_wide(dir.file("q.csv"), panel.values, panel.mask, panel.unit_ids,
                        panel.time_ids, "roundtrip");
  const auto back = csv::read_panel_wide(dir.file("q.csv"));
  CHECK(back.values == panel.values);
  CHECK(back.mask == panel.mask);
  CHECK(back.unit_ids == panel.unit_ids);
}

TEST_CASE("long panel ingestion") {
  TempDir dir;
  write_file(dir.file("p.csv"),
             "unit,time,value\n"
             "a,2001,1.5\n"
             "a,2002,2.5\n"
             "b,2001,3.5\n"
             "b,2003,4.5\n"
             "a,2003,0.5\n");
  const auto panel = csv::read_panel_long(dir.file("p.csv"));
  CHECK(panel.units() == 2);
  CHECK(panel.periods() == 3);
  CHECK(panel.values(0, 0) == 1.5);
  CHECK(!panel.observed(1, 1)); // b,2002 absent
  CHECK(panel.values(1, 2) == 4.5);
}

TEST_CASE("csv error paths name the problem") {
  TempDir dir;
  CHECK_THROWS_AS(csv::read_panel_wide(dir.file("missing.csv")), CsvError);
  write_file(dir.file("bad.csv"), "unit,t1,t2\na,1\n");
  CHECK_THROWS_AS(csv::read_panel_wide(dir.file("bad.csv")), CsvError);
  write_file(dir.file("dup.csv"), "unit,time,value\na,1,2\na,1,3\nb,1,1\nb,2,2\na,2,5\n");
  CHECK_THROWS_AS(csv::read_panel_long(dir.file("dup.csv")), CsvError);
}

TEST_CASE("schedule and covariate readers") {
  TempDir dir;
  write_file(dir.file("sched.csv"), "unit,adopt_time\na,t3\nb,NEVER\n");
  const std::vector<std::string> units{"a", "b", "c"};
  const std::vector<std::string> times{"t1", "t2", "t3", "t4"};
  const auto adopt = csv::read_schedule(dir.file("sched.csv"), units, times);
  CHECK(adopt == std::vector<Index>{2, 4, 4}); // c absent: never treated

  write_file(dir.file("cov.csv"), "unit,group,score\nb,1,0.5\na,0,1.5\nc,1,-0.5\n");
  const auto cov = csv::read_covariates(dir.file("cov.csv"), units, {true, false});
  CHECK(cov.values(0, 0) == 0.0); // row for unit a
  CHECK(cov.values(1, 1) == 0.5);
  CHECK(cov.kinds[0] == ColumnKind::Discrete);
  CHECK_THROWS_AS(
      csv::read_covariates(dir.file("cov.csv"), {"a", "zz"}, {true, false}), CsvError);
}

TEST_CASE("impute command writes completed values identical to the library") {
  TempDir dir;
  // toy 4x5 masked panel
  std::mt19937_64 rng(1234);
  const Matrix lambda = testutil::random_matrix(6, 1, rng);
  const Matrix f = testutil::random_matrix(8, 1, rng);
  Matrix y = lambda * f.transpose() + 0.2 * testutil::random_matrix(6, 8, rng);
  MaskMatrix mask = MaskMatrix::Ones(6, 8);
  mask(0, 3) = mask(2, 5) = mask(4, 1) = 0;
  auto panel = MaskedPanel::make(y, mask);
  csv::write_panel_wide(dir.file("panel.csv"), panel.values, panel.mask, panel.unit_ids,
                        panel.time_ids);

  cli::RunConfig config;
  config.command = "impute";
  config.input = dir.file("panel.csv");
  config.rank = "1";
  config.min_overlap = 1;
  config.out = dir.file("out");
  cli::run_impute(config);

  const auto completed = csv::read_panel_wide((fs::path(config.out) / "completed.csv").string());
  const auto model = fit(panel, 1, FitOptions{1});
  const auto imputed = impute(panel, model);
  for (Index i = 0; i < 6; ++i)
    for (Index t = 0; t < 8; ++t)
      CHECK(completed.values(i, t) == imputed.completed(i, t)); // %.17g round trip is exact

  // observed cells pass through bit-for-bit
  for (Index i = 0; i < 6; ++i)
    for (Index t = 0; t < 8; ++t)
      if (mask(i, t)) CHECK(completed.values(i, t) == y(i, t));

  // se.csv has entries exactly at the imputed cells (read it raw; rows with
  // no imputed cell are legitimately empty, unlike a panel)
  {
    std::ifstream in(fs::path(config.out) / "se.csv");
    std::string line;
    std::getline(in, line); // artifact header
    std::getline(in, line); // column header
    Index i = 0;
    while (std::getline(in, line)) {
      const auto cells = csv::split_line(line);
      REQUIRE(cells.size() == 9);
      for (Index t = 0; t < 8; ++t) {
        const bool has_se = !cells[static_cast<std::size_t>(t) + 1].empty();
        CHECK(has_se == !panel.observed(i, t));
        if (has_se) CHECK(std::stod(cells[static_cast<std::size_t>(t) + 1]) > 0.0);
      }
      ++i;
    }
    CHECK(i == 6);
  }
  CHECK(fs::exists(fs::path(config.out) / "model.json"));
}

TEST_CASE("impute with automatic rank selection picks the strong factor count") {
  TempDir dir;
  std::mt19937_64 rng(4242);
  const Matrix lambda = testutil::random_matrix(60, 2, rng);
  const Matrix f = testutil::random_matrix(70, 2, rng) * 3.0;
  const Matrix y = lambda * f.transpose() + 0.5 * testutil::random_matrix(60, 70, rng);
  auto panel = MaskedPanel::dense(y);
  csv::write_panel_wide(dir.file("panel.csv"), panel.values, panel.mask, panel.unit_ids,
                        panel.time_ids);
  cli::RunConfig config;
  config.input = dir.file("panel.csv");
  config.rank = "auto";
  config.out = dir.file("out");
  cli::run_impute(config);
  std::ifstream in(fs::path(config.out) / "model.json");
  const std::string json((std::istreambuf_iterator<char>(in)), {});
  CHECK(json.find("\"rank\": 2") != std::string::npos);
}

TEST_CASE("impute on a fully observed panel passes values through") {
  TempDir dir;
  std::mt19937_64 rng(777);
  auto panel = MaskedPanel::dense(testutil::random_matrix(10, 12, rng));
  csv::write_panel_wide(dir.file("panel.csv"), panel.values, panel.mask, panel.unit_ids,
                        panel.time_ids);
  cli::RunConfig config;
  config.input = dir.file("panel.csv");
  config.rank = "2";
  config.out = dir.file("out");
  cli::run_impute(config);
  const auto completed = csv::read_panel_wide((fs::path(config.out) / "completed.csv").string());
  CHECK(completed.values == panel.values); // bit-for-bit
}

TEST_CASE("test-treatment command emits the documented schema") {
  TempDir dir;
  const Index n = 60, T = 60;
  std::mt19937_64 rng(888);
  const Matrix lambda = testutil::random_matrix(n, 1, rng);
  const Matrix f = testutil::random_matrix(T, 1, rng);
  const Matrix y = lambda * f.transpose() + 0.5 * testutil::random_matrix(n, T, rng);
  auto panel = MaskedPanel::dense(y);
  csv::write_panel_wide(dir.file("panel.csv"), panel.values, panel.mask, panel.unit_ids,
                        panel.time_ids);
  std::string sched = "unit,adopt_time\n";
  for (Index i = 0; i < 12; ++i)
    sched += panel.unit_ids[static_cast<std::size_t>(i)] + "," +
             panel.time_ids[static_cast<std::size_t>(T / 2)] + "\n";
  write_file(dir.file("sched.csv"), sched);

  cli::RunConfig config;
  config.input = dir.file("panel.csv");
  config.schedule = dir.file("sched.csv");
  config.rank = "1";
  config.out = dir.file("out");
  cli::run_test_treatment(config);

  std::ifstream in(fs::path(config.out) / "effects.csv");
  REQUIRE(in.good());
  std::string line;
  std::getline(in, line);
  CHECK(line.rfind("# lfm", 0) == 0); // artifact header
  std::getline(in, line);
  CHECK(line == "unit,target,estimate,se,z,p,null_imposed");
  int rows = 0;
  double first_estimate = 0, first_se = 0;
  while (std::getline(in, line)) {
    const auto cells = csv::split_line(line);
    REQUIRE(cells.size() == 7);
    CHECK(cells[1] == "avg");
    const double p = std::stod(cells[5]);
    CHECK(p >= 0.0);
    CHECK(p <= 1.0);
    if (rows == 0) {
      first_estimate = std::stod(cells[2]);
      first_se = std::stod(cells[3]);
    }
    ++rows;
  }
  CHECK(rows == 12);

  // CLI output equals a direct library call bit-for-bit (%.17g round trip)
  {
    std::vector<Index> adopt(static_cast<std::size_t>(n), T);
    for (Index i = 0; i < 12; ++i) adopt[static_cast<std::size_t>(i)] = T / 2;
    auto tp = TreatmentPanel::make(y, adopt);
    const auto model = fit_control(tp, 1);
    const auto res = test_average(tp, model, 0);
    CHECK(first_estimate == res.estimate(0));
    CHECK(first_se == res.se(0));
  }

  // identical treated/control outcomes on a noiseless panel: estimates are
  // tiny relative to the outcome scale (the one-shot control fit is not
  // exact under missingness, so they are not literal zeros)
  const Matrix y0 = lambda * f.transpose();
  auto panel0 = MaskedPanel::dense(y0);
  csv::write_panel_wide(dir.file("panel0.csv"), panel0.values, panel0.mask, panel0.unit_ids,
                        panel0.time_ids);
  config.input = dir.file("panel0.csv");
  config.out = dir.file("out0");
  cli::run_test_treatment(config);
  std::ifstream in0(fs::path(config.out) / "effects.csv");
  std::getline(in0, line);
  std::getline(in0, line);
  while (std::getline(in0, line)) {
    const auto cells = csv::split_line(line);
    CHECK(std::abs(std::stod(cells[2])) < 0.05);
  }
}

TEST_CASE("simulate command is reproducible and reports the scenario") {
  TempDir dir;
  cli::RunConfig config;
  config.preset = "smoke";
  config.reps = 6;
  config.seed = 42;
  config.workers = 2;
  config.out = dir.file("a");
  cli::run_simulate(config);
  config.out = dir.file("b");
  cli::run_simulate(config);

  auto slurp = [](const fs::path& p) {
    std::ifstream in(p);
    return std::string(std::istreambuf_iterator<char>(in), {});
  };
  CHECK(slurp(fs::path(dir.file("a")) / "reports.csv") ==
        slurp(fs::path(dir.file("b")) / "reports.csv"));
  CHECK(fs::exists(fs::path(dir.file("a")) / "reports.json"));

  // scenario JSON file route
  write_file(dir.file("scen.json"),
             R"({"name":"tiny","kind":"rel_mse","n":40,"T":40,"rank":1,"fit_rank":1,
                 "pattern":{"kind":"random","p":0.8},"reps":3,"seed":9})");
  config.preset.clear();
  config.scenario_file = dir.file("scen.json");
  config.out = dir.file("c");
  cli::run_simulate(config);
  const std::string csv_text = slurp(fs::path(dir.file("c")) / "reports.csv");
  CHECK(csv_text.find("tiny") != std::string::npos);
}

TEST_CASE("cli binary maps error classes to exit codes") {
  // exercised through the real executable
  const std::string bin = std::string(LFM_CLI_PATH);
  if (!fs::exists(bin)) return; // binary not built in this configuration
  TempDir dir;

  const int missing = std::system(
      (bin + " impute --input " + dir.file("nope.csv") + " --out " + dir.file("o") +
       " 2> " + dir.file("err.txt"))
          .c_str());
  CHECK(WEXITSTATUS(missing) == 2);
  std::ifstream err(dir.file("err.txt"));
  std::string msg((std::istreambuf_iterator<char>(err)), {});
  CHECK(msg.find("nope.csv") != std::string::npos); // message names the path

  const int ok_help = std::system((bin + " --help > /dev/null").c_str());
  CHECK(WEXITSTATUS(ok_help) == 0);
}
