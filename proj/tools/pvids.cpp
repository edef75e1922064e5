// pvids: dataset generation, training, evaluation and the experiment matrix.

#include <cstdlib>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "pvids/expcli.hpp"

namespace {

enum ExitCode { kOk = 0, kValidation = 1, kRuntime = 2, kPartial = 3 };

// Flags shared by every subcommand; each maps onto the config key of the same meaning.
struct CommonFlags {
  std::optional<std::string> config;
  std::vector<std::pair<std::string, std::optional<std::string>>> values{
      {"seed", {}},   {"setting", {}}, {"scheme", {}},   {"algos", {}},     {"out", {}},
      {"days", {}},   {"profiles", {}}, {"data", {}},    {"network", {}},   {"model", {}},
      {"workers", {}}, {"test_frac", {}}, {"cv_folds", {}}, {"split", {}}};

  void attach(CLI::App& app) {
    static const std::map<std::string, std::string> help{
        {"seed", "master seed (overrides PVS_SEED and the config file)"},
        {"setting", "network setting s1|s2|s3|s4, or a comma list"},
        {"scheme", "training/testing scheme 1|2|3, or a comma list"},
        {"algos", "comma list of lr,knn,rf,gbt,mlp"},
        {"out", "output directory"},
        {"days", "days of profile data (720 frames each)"},
        {"profiles", "'synthetic' or a directory holding loads.csv and pv.csv"},
        {"data", "dataset root (defaults to --out)"},
        {"network", "directory holding buses.csv, branches.csv and pv.csv"},
        {"model", "model file for train/eval"},
        {"workers", "worker threads (0 = all cores)"},
        {"test_frac", "holdout test fraction"},
        {"cv_folds", "stratified k-fold reports during train (0 = off)"},
        {"split", "rows scored by eval: test or all"}};
    app.add_option("--config", config, "flat key = value config file");
    for (auto& [key, value] : values) {
      std::string flag = "--" + key;
      std::replace(flag.begin(), flag.end(), '_', '-');
      app.add_option(flag, value, help.at(key));
    }
  }

  pvids::exp::ExperimentConfig resolve() const {
    std::vector<std::pair<std::string, std::string>> flags;
    for (const auto& [key, value] : values)
      if (value) flags.emplace_back(key, *value);
    return pvids::exp::resolve_config(config, std::getenv("PVS_SEED"), flags);
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"PV inverter attack simulator and intrusion-detection toolkit"};
  app.require_subcommand(1);
  CommonFlags flags;
  auto* gen = app.add_subcommand("gen", "generate clean and missing-data datasets");
  auto* train = app.add_subcommand("train", "train models on a dataset's holdout training rows");
  auto* eval = app.add_subcommand("eval", "evaluate saved models");
  auto* matrix = app.add_subcommand("matrix", "run the settings x schemes x algorithms matrix");
  auto* baseline = app.add_subcommand("baseline", "apparent-loss threshold baseline");
  auto* validate = app.add_subcommand("validate-net", "load and check a network case");
  for (auto* sub : {gen, train, eval, matrix, baseline, validate}) flags.attach(*sub);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kValidation;
  }

  try {
    const auto cfg = flags.resolve();
    if (gen->parsed()) {
      pvids::exp::cmd_gen(cfg, std::cout);
    } else if (train->parsed()) {
      pvids::exp::cmd_train(cfg, std::cout);
    } else if (eval->parsed()) {
      pvids::exp::cmd_eval(cfg, std::cout);
    } else if (matrix->parsed()) {
      return pvids::exp::cmd_matrix(cfg, std::cout) == 0 ? kOk : kPartial;
    } else if (baseline->parsed()) {
      pvids::exp::cmd_baseline(cfg, std::cout);
    } else if (validate->parsed()) {
      pvids::exp::cmd_validate_net(cfg, std::cout);
    }
  } catch (const pvids::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kValidation;
  } catch (const pvids::ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntime;
  }
  return kOk;
}
