#pragma once

#include <fstream>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "pvids/ids/forest.hpp"
#include "pvids/ids/gbt.hpp"
#include "pvids/ids/knn.hpp"
#include "pvids/ids/logistic.hpp"
#include "pvids/ids/metrics.hpp"
#include "pvids/ids/mlp.hpp"
#include "pvids/ids/split.hpp"

namespace pvids::ids {

enum class Algorithm { lr, knn, rf, gbt, mlp };

inline constexpr std::array<Algorithm, 5> kAllAlgorithms{Algorithm::lr, Algorithm::knn, Algorithm::rf, Algorithm::gbt,
                                                         Algorithm::mlp};

inline std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::lr: return "lr";
    case Algorithm::knn: return "knn";
    case Algorithm::rf: return "rf";
    case Algorithm::gbt: return "gbt";
    case Algorithm::mlp: return "mlp";
  }
  return "?";
}

inline Algorithm parse_algorithm(const std::string& s) {
  for (auto a : kAllAlgorithms)
    if (to_string(a) == s) return a;
  throw ValidationError{"unknown algorithm '" + s + "' (expected lr, knn, rf, gbt or mlp)"};
}

/// Comma-separated algorithm list, e.g. "lr,rf". Order is kept; duplicates are rejected.
inline std::vector<Algorithm> parse_algorithms(const std::string& list) {
  std::vector<Algorithm> out;
  for (const auto& tok : csv::split(list)) {
    if (tok.empty()) continue;
    const auto a = parse_algorithm(tok);
    if (std::find(out.begin(), out.end(), a) != out.end()) throw ValidationError{"algorithm '" + tok + "' listed twice"};
    out.push_back(a);
  }
  if (out.empty()) throw ValidationError{"no algorithms selected"};
  return out;
}

struct Hyperparams {
  LogisticParams lr{};
  KnnParams knn{};
  ForestParams rf{};
  BoostingParams gbt{};
  MlpParams mlp{};
};

/// Trees see raw features; the other learners see z-scores.
inline bool uses_standardizer(Algorithm a) { return a == Algorithm::lr || a == Algorithm::knn || a == Algorithm::mlp; }

struct TrainedModel {
  Algorithm algorithm = Algorithm::lr;
  Hyperparams hp{};
  std::optional<Standardizer> scaler;
  std::variant<LogisticModel, KnnModel, ForestModel, BoostingModel, MlpModel> fitted;
  std::uint64_t seed = 0;
  std::string dataset_hash;  // from the training dataset's meta, if known

  double score(const double* x) const {
    std::vector<double> z;
    if (scaler) {
      z.resize(scaler->mean.size());
      scaler->apply(x, z.data());
      x = z.data();
    }
    return std::visit([&](const auto& m) { return m.score(x); }, fitted);
  }

  std::vector<double> scores(const Samples& s) const {
    if (scaler && s.dim != scaler->mean.size()) throw ValidationError{"feature count does not match the model"};
    std::vector<double> out(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) out[i] = score(s.row(i));
    return out;
  }
};

inline TrainedModel train(Algorithm a, const Samples& s, const Hyperparams& hp, std::uint64_t seed,
                          unsigned workers = 0) {
  check_trainable(s);
  TrainedModel m;
  m.algorithm = a;
  m.hp = hp;
  m.seed = seed;
  Samples in = s;
  if (uses_standardizer(a)) {
    m.scaler = Standardizer::fit(s);
    in = m.scaler->transform(s);
  }
  switch (a) {
    case Algorithm::lr: m.fitted = fit_logistic(in, hp.lr); break;
    case Algorithm::knn: m.fitted = fit_knn(in, hp.knn); break;
    case Algorithm::rf: m.fitted = fit_forest(in, hp.rf, seed, workers); break;
    case Algorithm::gbt: m.fitted = fit_boosting(in, hp.gbt); break;
    case Algorithm::mlp: m.fitted = fit_mlp(in, hp.mlp, seed); break;
  }
  return m;
}

/// Stratified k-fold cross-validation; one report per fold.
inline std::vector<EvalReport> kfold_cv(const Samples& s, std::size_t k, Algorithm a, const Hyperparams& hp,
                                        std::uint64_t seed, unsigned workers = 0) {
  std::vector<EvalReport> out;
  for (const auto& split : stratified_kfold(s.y, k, seed)) {
    const auto test = subset(s, split.test);
    const auto model = train(a, subset(s, split.train), hp, seed, workers);
    out.push_back(evaluate(model.scores(test), test.y));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Persistence

inline constexpr std::string_view kModelFormat = "pvids-model";
inline constexpr int kModelVersion = 1;

namespace detail {

using nlohmann::json;

inline json tree_to_json(const Tree& t) {
  json f = json::array(), th = json::array(), l = json::array(), r = json::array(), v = json::array(),
       n = json::array(), d = json::array();
  for (const auto& nd : t.nodes) {
    f.push_back(nd.feature);
    th.push_back(nd.threshold);
    l.push_back(nd.left);
    r.push_back(nd.right);
    v.push_back(nd.value);
    n.push_back(nd.n);
    d.push_back(nd.depth);
  }
  return {{"feature", f}, {"threshold", th}, {"left", l}, {"right", r}, {"value", v}, {"n", n}, {"depth", d}};
}

inline Tree tree_from_json(const json& j) {
  Tree t;
  const auto& f = j.at("feature");
  t.nodes.resize(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) {
    auto& nd = t.nodes[i];
    nd.feature = f[i].get<int>();
    nd.threshold = j.at("threshold")[i].get<double>();
    nd.left = j.at("left")[i].get<int>();
    nd.right = j.at("right")[i].get<int>();
    nd.value = j.at("value")[i].get<double>();
    nd.n = j.at("n")[i].get<std::uint32_t>();
    nd.depth = j.at("depth")[i].get<int>();
    const auto size = static_cast<int>(f.size());
    if (!nd.leaf() && (nd.left <= static_cast<int>(i) || nd.right <= static_cast<int>(i) || nd.left >= size ||
                       nd.right >= size))
      throw ParseError{"model file: tree node " + std::to_string(i) + " has invalid children"};
  }
  if (t.nodes.empty()) throw ParseError{"model file: empty tree"};
  return t;
}

inline json matrix_to_json(const Eigen::MatrixXd& m) {
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::vector<double>(m.data(), m.data() + m.size())}};
}

inline Eigen::MatrixXd matrix_from_json(const json& j) {
  Eigen::MatrixXd m(j.at("rows").get<Eigen::Index>(), j.at("cols").get<Eigen::Index>());
  const auto data = j.at("data").get<std::vector<double>>();
  if (static_cast<Eigen::Index>(data.size()) != m.size()) throw ParseError{"model file: matrix size mismatch"};
  std::copy(data.begin(), data.end(), m.data());
  return m;
}

inline json hyperparams_to_json(const Hyperparams& hp) {
  auto tree = [](const TreeParams& t) {
    return json{{"max_depth", t.max_depth},
                {"min_samples_split", t.min_samples_split},
                {"min_samples_leaf", t.min_samples_leaf},
                {"max_features", t.max_features}};
  };
  return {{"lr", {{"c", hp.lr.c}, {"max_iter", hp.lr.max_iter}, {"tol", hp.lr.tol}}},
          {"knn", {{"k", hp.knn.k}, {"p", hp.knn.p}}},
          {"rf", {{"trees", hp.rf.trees}, {"bootstrap", hp.rf.bootstrap}, {"tree", tree(hp.rf.tree)}}},
          {"gbt",
           {{"estimators", hp.gbt.estimators},
            {"learning_rate", hp.gbt.learning_rate},
            {"seed", hp.gbt.seed},
            {"tree", tree(hp.gbt.tree)}}},
          {"mlp",
           {{"hidden", hp.mlp.hidden},
            {"alpha", hp.mlp.alpha},
            {"learning_rate", hp.mlp.learning_rate},
            {"beta1", hp.mlp.beta1},
            {"beta2", hp.mlp.beta2},
            {"epsilon", hp.mlp.epsilon},
            {"batch", hp.mlp.batch},
            {"max_iter", hp.mlp.max_iter},
            {"tol", hp.mlp.tol},
            {"patience", hp.mlp.patience},
            {"min_learning_rate", hp.mlp.min_learning_rate}}}};
}

inline Hyperparams hyperparams_from_json(const json& j) {
  auto tree_from = [](const json& t) {
    return TreeParams{t.at("max_depth").get<int>(), t.at("min_samples_split").get<std::uint32_t>(),
                      t.at("min_samples_leaf").get<std::uint32_t>(), t.at("max_features").get<std::size_t>()};
  };
  Hyperparams hp;
  const auto& lr = j.at("lr");
  hp.lr = {lr.at("c").get<double>(), lr.at("max_iter").get<int>(), lr.at("tol").get<double>()};
  hp.knn = {j.at("knn").at("k").get<std::size_t>(), j.at("knn").at("p").get<double>()};
  const auto& rf = j.at("rf");
  hp.rf = {rf.at("trees").get<std::size_t>(), tree_from(rf.at("tree")), rf.at("bootstrap").get<bool>()};
  const auto& g = j.at("gbt");
  hp.gbt = {g.at("estimators").get<std::size_t>(), g.at("learning_rate").get<double>(), tree_from(g.at("tree")),
            g.at("seed").get<std::uint64_t>()};
  const auto& m = j.at("mlp");
  hp.mlp.hidden = m.at("hidden").get<std::vector<std::size_t>>();
  hp.mlp.alpha = m.at("alpha").get<double>();
  hp.mlp.learning_rate = m.at("learning_rate").get<double>();
  hp.mlp.beta1 = m.at("beta1").get<double>();
  hp.mlp.beta2 = m.at("beta2").get<double>();
  hp.mlp.epsilon = m.at("epsilon").get<double>();
  hp.mlp.batch = m.at("batch").get<std::size_t>();
  hp.mlp.max_iter = m.at("max_iter").get<int>();
  hp.mlp.tol = m.at("tol").get<double>();
  hp.mlp.patience = m.at("patience").get<int>();
  hp.mlp.min_learning_rate = m.at("min_learning_rate").get<double>();
  return hp;
}

}  // namespace detail

inline nlohmann::json to_json(const TrainedModel& m) {
  using nlohmann::json;
  json j{{"format", kModelFormat},
         {"version", kModelVersion},
         {"algorithm", to_string(m.algorithm)},
         {"seed", m.seed},
         {"dataset_hash", m.dataset_hash},
         {"standardized", m.scaler.has_value()},
         {"hyperparams", detail::hyperparams_to_json(m.hp)}};
  if (m.scaler) j["standardizer"] = {{"mean", m.scaler->mean}, {"std", m.scaler->stdev}};
  json params;
  std::visit(
      [&](const auto& f) {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, LogisticModel>) {
          params = {{"w", f.w}, {"b", f.b}, {"iterations", f.iterations}, {"converged", f.converged}};
        } else if constexpr (std::is_same_v<T, KnnModel>) {
          params = {{"dim", f.store.dim}, {"x", f.store.x}, {"y", f.store.y}};
        } else if constexpr (std::is_same_v<T, ForestModel>) {
          params = {{"trees", json::array()}};
          for (const auto& t : f.trees) params["trees"].push_back(detail::tree_to_json(t));
        } else if constexpr (std::is_same_v<T, BoostingModel>) {
          params = {{"init", f.init}, {"learning_rate", f.learning_rate}, {"trees", json::array()}};
          for (const auto& t : f.trees) params["trees"].push_back(detail::tree_to_json(t));
        } else {
          params = {{"layers", json::array()}, {"epochs", f.epochs}, {"final_loss", f.final_loss}};
          for (std::size_t l = 0; l < f.w.size(); ++l)
            params["layers"].push_back(
                {{"w", detail::matrix_to_json(f.w[l])}, {"b", std::vector<double>(f.b[l].data(), f.b[l].data() + f.b[l].size())}});
        }
      },
      m.fitted);
  j["params"] = std::move(params);
  return j;
}

inline TrainedModel model_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != kModelFormat) throw ParseError{"not a pvids model file"};
    const int version = j.at("version").get<int>();
    if (version != kModelVersion)
      throw ParseError{"model file version " + std::to_string(version) + " is not supported (expected " +
                       std::to_string(kModelVersion) + ")"};
    TrainedModel m;
    m.algorithm = parse_algorithm(j.at("algorithm").get<std::string>());
    m.seed = j.at("seed").get<std::uint64_t>();
    m.dataset_hash = j.at("dataset_hash").get<std::string>();
    m.hp = detail::hyperparams_from_json(j.at("hyperparams"));
    if (j.at("standardized").get<bool>()) {
      Standardizer z;
      z.mean = j.at("standardizer").at("mean").get<std::vector<double>>();
      z.stdev = j.at("standardizer").at("std").get<std::vector<double>>();
      m.scaler = z;
    }
    const auto& p = j.at("params");
    switch (m.algorithm) {
      case Algorithm::lr: {
        LogisticModel f;
        f.w = p.at("w").get<std::vector<double>>();
        f.b = p.at("b").get<double>();
        f.iterations = p.at("iterations").get<int>();
        f.converged = p.at("converged").get<bool>();
        m.fitted = f;
        break;
      }
      case Algorithm::knn: {
        KnnModel f;
        f.params = m.hp.knn;
        f.store.dim = p.at("dim").get<std::size_t>();
        f.store.x = p.at("x").get<std::vector<double>>();
        f.store.y = p.at("y").get<std::vector<int>>();
        if (f.store.x.size() != f.store.dim * f.store.y.size()) throw ParseError{"model file: neighbour store size mismatch"};
        m.fitted = f;
        break;
      }
      case Algorithm::rf: {
        ForestModel f;
        for (const auto& t : p.at("trees")) f.trees.push_back(detail::tree_from_json(t));
        m.fitted = f;
        break;
      }
      case Algorithm::gbt: {
        BoostingModel f;
        f.init = p.at("init").get<double>();
        f.learning_rate = p.at("learning_rate").get<double>();
        for (const auto& t : p.at("trees")) f.trees.push_back(detail::tree_from_json(t));
        m.fitted = f;
        break;
      }
      case Algorithm::mlp: {
        MlpModel f;
        f.epochs = p.at("epochs").get<int>();
        f.final_loss = p.at("final_loss").get<double>();
        for (const auto& layer : p.at("layers")) {
          f.w.push_back(detail::matrix_from_json(layer.at("w")));
          const auto b = layer.at("b").get<std::vector<double>>();
          f.b.push_back(Eigen::Map<const Eigen::VectorXd>(b.data(), static_cast<Eigen::Index>(b.size())));
        }
        m.fitted = f;
        break;
      }
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError{std::string{"model file: "} + e.what()};
  }
}

inline void save_model(const TrainedModel& m, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw ValidationError{"cannot write " + path};
  os << to_json(m).dump() << '\n';
}

inline TrainedModel load_model(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ValidationError{"cannot read " + path};
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError{path + ": " + e.what()};
  }
  return model_from_json(j);
}

}  // namespace pvids::ids
