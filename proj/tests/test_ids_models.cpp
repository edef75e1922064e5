#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>

#include <gtest/gtest.h>

#include "pvids/ids/model.hpp"

using namespace pvids;
using namespace pvids::ids;

namespace {

Samples make(std::size_t dim) {
  Samples s;
  s.dim = dim;
  return s;
}

Samples blobs(std::size_t n, std::uint64_t seed, double sep) {
  std::mt19937_64 rng{seed};
  std::normal_distribution<double> g{0.0, 1.0};
  auto s = make(2);
  for (std::size_t i = 0; i < n; ++i) {
    const int label = i % 2;
    const double x[2]{g(rng) + (label ? sep : -sep), g(rng)};
    s.push(x, label);
  }
  return s;
}

Samples xor_set(std::size_t per_corner, std::uint64_t seed) {
  std::mt19937_64 rng{seed};
  std::normal_distribution<double> g{0.0, 0.15};
  auto s = make(2);
  for (int cx : {-1, 1})
    for (int cy : {-1, 1})
      for (std::size_t i = 0; i < per_corner; ++i) {
        const double x[2]{cx + g(rng), cy + g(rng)};
        s.push(x, cx * cy > 0 ? 1 : 0);
      }
  return s;
}

Samples moons(std::size_t n, std::uint64_t seed, double noise) {
  std::mt19937_64 rng{seed};
  std::uniform_real_distribution<double> t{0.0, M_PI};
  std::normal_distribution<double> g{0.0, noise};
  auto s = make(2);
  for (std::size_t i = 0; i < n; ++i) {
    const double a = t(rng);
    const int label = i % 2;
    const double x[2]{label ? 1.0 - std::cos(a) + g(rng) : std::cos(a) + g(rng),
                      label ? 0.5 - std::sin(a) + g(rng) : std::sin(a) + g(rng)};
    s.push(x, label);
  }
  return s;
}

double accuracy(const TrainedModel& m, const Samples& s) { return evaluate(m.scores(s), s.y).accuracy; }

void check_tree(const Tree& t, const TreeParams& p) {
  ASSERT_FALSE(t.nodes.empty());
  EXPECT_LE(t.depth(), p.max_depth);
  for (const auto& nd : t.nodes) {
    if (nd.leaf()) {
      EXPECT_GE(nd.n, p.min_samples_leaf);
    } else {
      EXPECT_GE(nd.n, p.min_samples_split);
      EXPECT_EQ(t.nodes[static_cast<std::size_t>(nd.left)].n + t.nodes[static_cast<std::size_t>(nd.right)].n, nd.n);
    }
  }
}

}  // namespace

TEST(Mlp, GradientMatchesFiniteDifferences) {
  Rng rng{3};
  auto m = init_mlp(3, {4, 5}, rng);
  std::mt19937_64 g{8};
  std::normal_distribution<double> nd{0.0, 1.0};
  Eigen::MatrixXd x(3, 10);
  Eigen::RowVectorXd y(10);
  for (Eigen::Index i = 0; i < 10; ++i) {
    for (Eigen::Index j = 0; j < 3; ++j) x(j, i) = nd(g);
    y(i) = i % 2;
  }
  const double alpha = 1e-2;
  std::vector<Eigen::MatrixXd> gw, tw;
  std::vector<Eigen::VectorXd> gb, tb;
  mlp_loss_grad(m, x, y, alpha, gw, gb);
  const double h = 1e-6;
  auto check = [&](double& param, double analytic) {
    const double keep = param;
    param = keep + h;
    const double up = mlp_loss_grad(m, x, y, alpha, tw, tb);
    param = keep - h;
    const double down = mlp_loss_grad(m, x, y, alpha, tw, tb);
    param = keep;
    const double numeric = (up - down) / (2.0 * h);
    const double rel = std::abs(analytic - numeric) / std::max(std::abs(analytic) + std::abs(numeric), 1e-7);
    EXPECT_LT(rel, 1e-4) << analytic << " vs " << numeric;
  };
  for (std::size_t l = 0; l < m.w.size(); ++l) {
    for (Eigen::Index i = 0; i < m.w[l].size(); ++i) check(m.w[l].data()[i], gw[l].data()[i]);
    for (Eigen::Index i = 0; i < m.b[l].size(); ++i) check(m.b[l][i], gb[l][i]);
  }
}

TEST(Mlp, LearnsXorWhereLogisticRegressionCannot) {
  const auto s = xor_set(50, 4);
  Hyperparams hp;
  hp.mlp.hidden = {16, 16};
  EXPECT_EQ(accuracy(train(Algorithm::mlp, s, hp, 1), s), 1.0);
  EXPECT_LE(accuracy(train(Algorithm::lr, s, hp, 1), s), 0.75);
}

TEST(Logistic, SeparableToyIsPerfect) {
  const auto s = blobs(200, 1, 5.0);
  EXPECT_EQ(accuracy(train(Algorithm::lr, s, {}, 1), s), 1.0);
}

TEST(Logistic, ZeroWeightsScoreOneHalf) {
  LogisticModel m;
  m.w = {0.0, 0.0, 0.0};
  const double x[3]{4.0, -2.0, 7.0};
  EXPECT_EQ(m.score(x), 0.5);
}

TEST(Logistic, ScoreIsMonotoneAlongTheWeights) {
  const auto m = fit_logistic(blobs(300, 2, 1.0));
  ASSERT_GT(m.w[0], 0.0);
  double prev = 0.0;
  for (double t = -5.0; t <= 5.0; t += 0.25) {
    const double x[2]{t, 0.3};
    const double s = m.score(x);
    EXPECT_GE(s, prev);
    prev = s;
  }
}

TEST(Samples, StandardizerCentresAndScales) {
  std::mt19937_64 rng{12};
  std::normal_distribution<double> g{40.0, 7.0};
  auto s = make(3);
  for (int i = 0; i < 500; ++i) {
    const double x[3]{g(rng), 3.0 * g(rng), 2.5};
    s.push(x, i % 2);
  }
  const auto z = Standardizer::fit(s);
  ASSERT_EQ(z.warnings.size(), 1u);  // the constant column
  const auto t = z.transform(s);
  for (std::size_t j = 0; j < 2; ++j) {
    double mean = 0.0, sq = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) mean += t.at(i, j);
    mean /= double(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) sq += (t.at(i, j) - mean) * (t.at(i, j) - mean);
    EXPECT_NEAR(mean, 0.0, 1e-9);
    EXPECT_NEAR(std::sqrt(sq / double(t.size())), 1.0, 1e-9);
  }
  for (std::size_t i = 0; i < t.size(); ++i) EXPECT_EQ(t.at(i, 2), 0.0);
}

TEST(Knn, MatchesBruteForceIncludingTies) {
  std::mt19937_64 rng{21};
  std::uniform_int_distribution<int> grid{0, 6};  // coarse integer grid produces many equal distances
  auto train_set = make(2);
  for (int i = 0; i < 200; ++i) {
    const double x[2]{double(grid(rng)), double(grid(rng))};
    train_set.push(x, i < 2 ? i : int(rng() % 2));
  }
  for (std::size_t k : {1u, 2u, 4u, 5u}) {
    const auto m = fit_knn(train_set, {k, 2.0});
    for (int q = 0; q < 100; ++q) {
      const double x[2]{grid(rng) + 0.5 * (q % 2), double(grid(rng))};
      std::vector<std::pair<double, std::size_t>> all;
      for (std::size_t i = 0; i < train_set.size(); ++i) {
        const double dx = x[0] - train_set.at(i, 0), dy = x[1] - train_set.at(i, 1);
        all.emplace_back(std::sqrt(dx * dx + dy * dy), i);
      }
      std::sort(all.begin(), all.end());
      std::size_t votes = 0;
      for (std::size_t j = 0; j < k; ++j) votes += train_set.y[all[j].second];
      double expected = double(votes) / double(k);
      if (2 * votes == k) expected = train_set.y[all[0].second] ? 0.5 : std::nextafter(0.5, 0.0);
      ASSERT_EQ(m.score(x), expected) << "k=" << k << " query " << q;
      const auto nb = m.neighbours(x);
      for (std::size_t j = 0; j < k; ++j) EXPECT_EQ(nb[j], all[j].second);
    }
  }
}

TEST(Knn, EvenSplitFollowsNearestNeighbour) {
  auto s = make(1);
  const double a = 0.0, b = 1.0;
  s.push(&a, 0);
  s.push(&b, 1);
  const auto m = fit_knn(s, {2, 2.0});
  const double near_normal = 0.2, near_attack = 0.8;
  EXPECT_LT(m.score(&near_normal), 0.5);
  EXPECT_EQ(m.score(&near_attack), 0.5);
  EXPECT_THROW(fit_knn(s, {0, 2.0}), ValidationError);
}

TEST(Forest, TreesRespectGrowthLimits) {
  const auto s = moons(600, 5, 0.3);
  ForestParams p;
  p.trees = 10;
  p.tree = {3, 10, 4, 1};
  const auto f = fit_forest(s, p, 9);
  for (const auto& t : f.trees) check_tree(t, p.tree);
  BoostingParams bp;
  bp.estimators = 20;
  bp.tree = {2, 12, 5, 0};
  const auto g = fit_boosting(s, bp);
  ASSERT_EQ(g.trees.size(), 20u);
  for (const auto& t : g.trees) check_tree(t, bp.tree);
}

TEST(Forest, ScoreIsTheVoteFraction) {
  const auto s = moons(400, 6, 0.3);
  ForestParams p;
  p.trees = 25;
  const auto f = fit_forest(s, p, 2);
  for (std::size_t i = 0; i < 50; ++i) {
    std::size_t votes = 0;
    for (const auto& t : f.trees) votes += t.predict(s.row(i)) >= 0.5;
    EXPECT_DOUBLE_EQ(f.score(s.row(i)), votes / 25.0);
  }
}

TEST(Forest, DeterministicAcrossWorkerCounts) {
  const auto s = moons(400, 7, 0.3);
  ForestParams p;
  p.trees = 20;
  const auto a = fit_forest(s, p, 4, 1), b = fit_forest(s, p, 4, 3);
  for (std::size_t i = 0; i < s.size(); ++i) ASSERT_EQ(a.score(s.row(i)), b.score(s.row(i)));
  const auto c = fit_forest(s, p, 5, 1);
  bool differs = false;
  for (std::size_t i = 0; i < s.size(); ++i) differs = differs || a.score(s.row(i)) != c.score(s.row(i));
  EXPECT_TRUE(differs);
}

TEST(Forest, BeatsLogisticRegressionOnNoisyMoons) {
  const auto s = moons(1000, 8, 0.2);
  const auto sp = train_test_split(s.y, 0.3, 1);
  const auto tr = subset(s, sp.train), te = subset(s, sp.test);
  Hyperparams hp;
  hp.rf.trees = 50;
  EXPECT_GT(accuracy(train(Algorithm::rf, tr, hp, 1), te), accuracy(train(Algorithm::lr, tr, hp, 1), te) + 0.05);
}

TEST(Models, SaveLoadRoundTripForEveryAlgorithm) {
  const auto s = moons(300, 9, 0.25);
  Hyperparams hp;
  hp.rf.trees = 10;
  hp.gbt.estimators = 30;
  hp.mlp.hidden = {8};
  hp.mlp.max_iter = 30;
  const auto dir = std::filesystem::temp_directory_path() / "pvids_test_models";
  std::filesystem::create_directories(dir);
  for (auto a : kAllAlgorithms) {
    const auto m = train(a, s, hp, 3);
    const auto path = (dir / (to_string(a) + ".json")).string();
    save_model(m, path);
    const auto back = load_model(path);
    EXPECT_EQ(back.algorithm, a);
    EXPECT_EQ(back.scores(s), m.scores(s)) << to_string(a);
  }
}

TEST(Models, RejectsOtherFileVersions) {
  const auto s = blobs(50, 3, 2.0);
  auto j = to_json(train(Algorithm::lr, s, {}, 1));
  j["version"] = kModelVersion + 1;
  EXPECT_THROW(model_from_json(j), ParseError);
  j["version"] = kModelVersion;
  j["format"] = "something-else";
  EXPECT_THROW(model_from_json(j), ParseError);
}

TEST(Models, RejectsUntrainableInput) {
  auto one_class = blobs(20, 1, 1.0);
  std::fill(one_class.y.begin(), one_class.y.end(), 0);
  auto non_finite = blobs(20, 1, 1.0);
  non_finite.x[3] = std::nan("");
  auto infinite = blobs(20, 1, 1.0);
  infinite.x[5] = INFINITY;
  for (auto a : kAllAlgorithms) {
    EXPECT_THROW(train(a, one_class, {}, 1), ValidationError) << to_string(a);
    EXPECT_THROW(train(a, non_finite, {}, 1), ValidationError) << to_string(a);
    EXPECT_THROW(train(a, infinite, {}, 1), ValidationError) << to_string(a);
    EXPECT_THROW(train(a, make(2), {}, 1), ValidationError) << to_string(a);
  }
}

TEST(Models, AlgorithmListParsing) {
  EXPECT_EQ(parse_algorithms("lr,rf"), (std::vector{Algorithm::lr, Algorithm::rf}));
  EXPECT_THROW(parse_algorithms("lr,lr"), ValidationError);
  EXPECT_THROW(parse_algorithms("svm"), ValidationError);
  EXPECT_THROW(parse_algorithms(""), ValidationError);
}

TEST(Models, CrossValidationReturnsOneReportPerFold) {
  const auto s = blobs(100, 4, 2.0);
  const auto reports = kfold_cv(s, 5, Algorithm::lr, {}, 1);
  ASSERT_EQ(reports.size(), 5u);
  for (const auto& r : reports) EXPECT_EQ(r.tp + r.fp + r.tn + r.fn, 20u);
}
