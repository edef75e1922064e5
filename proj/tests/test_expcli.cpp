#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "pvids/expcli.hpp"

namespace fs = std::filesystem;
using namespace pvids;
using namespace pvids::exp;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "pvids_test_expcli" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in{p, std::ios::binary};
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

ExperimentConfig small(const fs::path& out, const std::string& settings = "s1") {
  return resolve_config(std::nullopt, nullptr,
                        {{"days", "1"}, {"settings", settings}, {"algos", "lr,knn"}, {"out", out.string()}});
}

// One-day S1 and S2 datasets shared by the matrix tests.
const fs::path& shared_data() {
  static const fs::path dir = [] {
    auto d = scratch("shared");
    std::ostringstream log;
    cmd_gen(small(d, "s1,s2"), log);
    return d;
  }();
  return dir;
}

}  // namespace

TEST(Config, PrecedenceIsFlagThenEnvThenFile) {
  const auto dir = scratch("config");
  const auto path = (dir / "run.cfg").string();
  std::ofstream{path} << "# comment line\nseed = 3\n  days=2   # trailing comment\nalgos = rf\n";
  EXPECT_EQ(resolve_config(path, nullptr, {}).seed, 3u);
  EXPECT_EQ(resolve_config(path, nullptr, {}).dataset.profile.days, 2);
  EXPECT_EQ(resolve_config(path, "5", {}).seed, 5u);
  EXPECT_EQ(resolve_config(path, "5", {{"seed", "9"}}).seed, 9u);
  EXPECT_EQ(resolve_config(path, "", {}).seed, 3u);
  EXPECT_EQ(resolve_config(std::nullopt, nullptr, {}).seed, 7u);
  EXPECT_EQ(resolve_config(path, nullptr, {}).algorithms, std::vector{ids::Algorithm::rf});
}

TEST(Config, ErrorsNameTheLine) {
  const auto dir = scratch("config_err");
  const auto path = (dir / "bad.cfg").string();
  auto expect_error = [&](const std::string& text, const std::string& fragment) {
    std::ofstream{path} << text;
    try {
      resolve_config(path, nullptr, {});
      FAIL() << "expected an error for: " << text;
    } catch (const ValidationError& e) {
      EXPECT_NE(std::string{e.what()}.find(fragment), std::string::npos) << e.what();
    }
  };
  expect_error("seed = 1\n\nbogus = 2\n", path + ":3: unknown key 'bogus'");
  expect_error("seed = 1\ndays 4\n", path + ":2");
  expect_error("days = 0\n", path + ":1");
  expect_error("test_frac = 1.5\n", path + ":1");
  expect_error("settings = s1,s9\n", path + ":1");
  expect_error("schemes = 4\n", path + ":1");
  expect_error("seed = -3\n", path + ":1");
  try {
    resolve_config(std::nullopt, "abc", {});
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string{e.what()}.find("PVS_SEED"), std::string::npos);
  }
  try {
    resolve_config(std::nullopt, nullptr, {{"days", "x"}});
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string{e.what()}.find("--days"), std::string::npos);
  }
  EXPECT_THROW(resolve_config((dir / "absent.cfg").string(), nullptr, {}), ValidationError);
}

TEST(Gen, OneDayIsByteReproducible) {
  const auto a = scratch("gen_a"), b = scratch("gen_b");
  std::ostringstream log;
  const auto runs = cmd_gen(small(a), log);
  cmd_gen(small(b), log);
  ASSERT_EQ(runs.size(), 2u);
  for (const auto& r : runs) {
    EXPECT_EQ(r.meta.frame_count, 720u);
    EXPECT_EQ(r.meta.attack_count, 144u);
  }
  EXPECT_EQ(runs[0].meta.missing_count, 0u);
  EXPECT_GT(runs[1].meta.missing_count, 0u);
  for (const char* variant : {"clean", "missing"})
    for (const char* f : {"features.csv", "snapshots.csv", "truth.csv", "meta.jsonl"}) {
      const auto rel = fs::path{"s1"} / variant / f;
      ASSERT_TRUE(fs::exists(a / rel)) << rel;
      EXPECT_EQ(slurp(a / rel), slurp(b / rel)) << rel;
    }
  EXPECT_EQ(dataset_hash(a / "s1" / "clean"), dataset_hash(b / "s1" / "clean"));
  EXPECT_NE(dataset_hash(a / "s1" / "clean"), dataset_hash(a / "s1" / "missing"));
}

TEST(Matrix, CardinalityAndReproducibleReports) {
  auto c = small(scratch("matrix_a"), "s1,s2");
  c.data = shared_data().string();
  std::ostringstream log;
  ResultsMatrix m;
  EXPECT_EQ(cmd_matrix(c, log, &m), 0) << log.str();
  EXPECT_EQ(m.cells.size(), 2u * 3u * 2u);
  EXPECT_TRUE(m.complete());
  for (auto s : c.settings)
    for (int scheme : {1, 2, 3})
      for (auto a : c.algorithms) {
        const auto* cell = m.find(s, scheme, a);
        ASSERT_NE(cell, nullptr);
        EXPECT_EQ(cell->report.tp + cell->report.fp + cell->report.tn + cell->report.fn, 144u);
      }
  auto again = c;
  again.out = scratch("matrix_b").string();
  EXPECT_EQ(cmd_matrix(again, log), 0);
  EXPECT_EQ(slurp(fs::path{c.out} / "matrix.csv"), slurp(fs::path{again.out} / "matrix.csv"));
  EXPECT_EQ(slurp(fs::path{c.out} / "matrix.txt"), slurp(fs::path{again.out} / "matrix.txt"));
  const auto csv = slurp(fs::path{c.out} / "matrix.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 13);
  EXPECT_TRUE(fs::exists(fs::path{c.out} / "matrix_timing.csv"));
}

TEST(Matrix, SchemesReadOnlyTheirVariants) {
  auto c = small(scratch("isolation"));
  c.data = shared_data().string();
  std::ostringstream log;
  for (int scheme : {1, 2, 3}) {
    c.schemes = {scheme};
    std::set<std::string> variants;
    run_matrix(c, log, [&](const fs::path& p) { variants.insert(p.parent_path().filename().string()); });
    std::set<std::string> expected;
    if (scheme != 3) expected.insert("clean");
    if (scheme != 1) expected.insert("missing");
    EXPECT_EQ(variants, expected) << "scheme " << scheme;
  }
}

TEST(Matrix, SchemeOneIsUnaffectedByOtherSchemes) {
  auto c = small(scratch("scheme_pairs"));
  c.data = shared_data().string();
  std::ostringstream log;
  c.schemes = {1, 2};
  const auto both = run_matrix(c, log);
  c.schemes = {1};
  const auto one = run_matrix(c, log);
  for (auto a : c.algorithms)
    EXPECT_EQ(both.find(SettingId::S1, 1, a)->report.accuracy, one.find(SettingId::S1, 1, a)->report.accuracy);
}

TEST(Matrix, FailingModelMarksOnlyItsCells) {
  auto c = small(scratch("failure"));
  c.data = shared_data().string();
  ids::Hyperparams hp;
  hp.knn.k = 0;  // rejected at fit time
  std::ostringstream log;
  ResultsMatrix m;
  EXPECT_EQ(cmd_matrix(c, log, &m, hp), 3);
  ASSERT_EQ(m.cells.size(), 6u);
  for (const auto& cell : m.cells) {
    EXPECT_EQ(cell.ok, cell.algorithm != ids::Algorithm::knn);
    if (!cell.ok) EXPECT_NE(cell.error.find("k must be"), std::string::npos) << cell.error;
  }
  const auto csv = slurp(fs::path{c.out} / "matrix.csv");
  EXPECT_NE(csv.find("failed"), std::string::npos);
}

TEST(Matrix, MissingDatasetIsAValidationError) {
  auto c = small(scratch("nodata"));
  std::ostringstream log;
  EXPECT_THROW(run_matrix(c, log), ValidationError);
}

TEST(Baseline, BestThresholdSweep) {
  const auto r = best_threshold({1, 2, 3, 10, 11, 12}, {0, 0, 0, 1, 1, 1});
  EXPECT_TRUE(r.attack_above);
  EXPECT_DOUBLE_EQ(r.threshold, 6.5);
  EXPECT_DOUBLE_EQ(r.accuracy, 1.0);
  const auto below = best_threshold({1, 2, 3, 10, 11, 12}, {1, 1, 0, 0, 0, 0});
  EXPECT_FALSE(below.attack_above);
  EXPECT_DOUBLE_EQ(below.accuracy, 1.0);
  EXPECT_EQ(below.predict(1.5), 1);
  EXPECT_EQ(below.predict(2.5), 0);
  const auto single = best_threshold({4, 5, 6}, {0, 0, 0});
  EXPECT_DOUBLE_EQ(single.accuracy, 1.0);
  for (double x : {4.0, 5.0, 6.0}) EXPECT_EQ(single.predict(x), 0);
  const auto tied = best_threshold({1, 1, 1, 1}, {0, 1, 0, 0});
  EXPECT_DOUBLE_EQ(tied.accuracy, 0.75);
  EXPECT_THROW(best_threshold({}, {}), ValidationError);
  EXPECT_THROW(best_threshold({1}, {0, 1}), ValidationError);
}

TEST(Baseline, SweepMatchesBruteForce) {
  std::mt19937_64 rng{4};
  std::uniform_int_distribution<int> v{0, 20};
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<double> x;
    std::vector<int> y;
    for (int i = 0; i < 40; ++i) {
      x.push_back(v(rng));
      y.push_back(v(rng) > 12);
    }
    double best = 0.0;
    for (int t = -1; t <= 21; ++t)
      for (bool above : {true, false}) {
        const ThresholdRule r{t + 0.5, above, 0.0};
        best = std::max(best, rule_accuracy(r, x, y));
      }
    const auto r = best_threshold(x, y);
    EXPECT_DOUBLE_EQ(r.accuracy, best);
    EXPECT_DOUBLE_EQ(rule_accuracy(r, x, y), best);
  }
}

TEST(Baseline, ScatterRowsAndDegenerateCase) {
  const auto dir = scratch("baseline");
  auto c = small(dir);
  c.dataset.attack_fraction = 0.0;
  c.dataset.meter_error = 0.0;
  std::ostringstream log;
  cmd_gen(c, log);
  const auto reports = cmd_baseline(c, log);
  ASSERT_EQ(reports.size(), 1u);
  const auto& r = reports[0];
  EXPECT_EQ(r.label.size(), 720u);
  EXPECT_DOUBLE_EQ(r.all_frames.accuracy, 1.0);
  EXPECT_DOUBLE_EQ(r.holdout_accuracy, 1.0);
  const auto scatter = slurp(dir / "s1" / "baseline_scatter.csv");
  EXPECT_EQ(std::count(scatter.begin(), scatter.end(), '\n'), 721);
  EXPECT_TRUE(fs::exists(dir / "s1" / "baseline.txt"));

  // Without meter error the apparent loss is the physical loss.
  std::ifstream truth{dir / "s1" / "clean" / "truth.csv"};
  std::string text;
  std::getline(truth, text);
  ASSERT_EQ(csv::split(text)[6], "loss_p");
  std::size_t i = 0;
  while (std::getline(truth, text)) {
    const double loss = csv::to_double(csv::split(text)[6], "truth.csv");
    ASSERT_NEAR(r.apparent_loss[i++], loss, 1e-3) << "frame " << i;
  }
  EXPECT_EQ(i, 720u);
}

TEST(Baseline, AttacksInflateApparentLoss) {
  auto c = small(scratch("baseline_s2"), "s2");
  c.data = shared_data().string();
  std::ostringstream log;
  const auto r = cmd_baseline(c, log).front();
  EXPECT_TRUE(r.all_frames.attack_above);
  EXPECT_GT(r.all_frames.accuracy, 0.8);
}

TEST(TrainEval, ModelFileRoundTrip) {
  const auto dir = scratch("train_eval");
  auto c = small(dir);
  c.data = shared_data().string();
  c.algorithms = {ids::Algorithm::lr};
  c.model = (dir / "lr.json").string();
  c.cv_folds = 3;
  std::ostringstream log;
  const auto written = cmd_train(c, log);
  ASSERT_EQ(written.size(), 1u);
  EXPECT_TRUE(fs::exists(c.model));
  EXPECT_NE(log.str().find("3-fold accuracy"), std::string::npos);
  const auto test_rows = cmd_eval(c, log);
  ASSERT_EQ(test_rows.size(), 1u);
  EXPECT_EQ(test_rows[0].tp + test_rows[0].fp + test_rows[0].tn + test_rows[0].fn, 144u);
  c.split = "all";
  const auto all_rows = cmd_eval(c, log);
  EXPECT_EQ(all_rows[0].tp + all_rows[0].fp + all_rows[0].tn + all_rows[0].fn, 720u);

  // The matrix trains the same model on the same rows, so scheme 1 must agree.
  c.split = "test";
  c.schemes = {1};
  const auto m = run_matrix(c, log);
  EXPECT_EQ(m.find(SettingId::S1, 1, ids::Algorithm::lr)->report.accuracy, test_rows[0].accuracy);
}

TEST(ValidateNet, BundledAndCustomCases) {
  ExperimentConfig c;
  std::ostringstream log;
  const auto sol = cmd_validate_net(c, log);
  EXPECT_NEAR(sol.total_loss_p_kw, 224.95, 0.005 * 224.95);
  EXPECT_NE(log.str().find("69 buses, 73 branches (5 open)"), std::string::npos) << log.str();

  const auto dir = scratch("custom_net");
  std::ofstream{dir / "buses.csv"} << "id,kind,base_kv\n1,substation,12.66\n2,load,12.66\n3,pv,12.66\n";
  std::ofstream{dir / "branches.csv"} << "id,from,to,r_ohm,x_ohm,status\n1,1,2,0.5,0.5,closed\n2,2,3,0.5,0.5,closed\n";
  std::ofstream{dir / "pv.csv"} << "bus,p_rated_kw\n3,100\n";
  c.network = dir.string();
  EXPECT_EQ(cmd_validate_net(c, log).total_loss_p_kw, 0.0);
  std::ofstream{dir / "pv.csv"} << "bus,p_rated_kw\n9,100\n";
  EXPECT_THROW(cmd_validate_net(c, log), ValidationError);
}
