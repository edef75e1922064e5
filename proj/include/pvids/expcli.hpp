#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <limits>
#include <numeric>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "pvids/case69.hpp"
#include "pvids/ids.hpp"
#include "pvids/telemetry.hpp"

namespace pvids::exp {

namespace fs = std::filesystem;

inline constexpr std::array<SettingId, 4> kAllSettings{SettingId::S1, SettingId::S2, SettingId::S3, SettingId::S4};

/// Training/testing variant per scheme: 1 clean/clean, 2 clean/missing, 3 missing/missing.
inline bool scheme_trains_missing(int scheme) { return scheme == 3; }
inline bool scheme_tests_missing(int scheme) { return scheme != 1; }

inline std::string scheme_caption(int scheme) {
  switch (scheme) {
    case 1: return "train clean / test clean";
    case 2: return "train clean / test missing";
    case 3: return "train missing / test missing";
  }
  return "?";
}

struct ExperimentConfig {
  std::vector<SettingId> settings{kAllSettings.begin(), kAllSettings.end()};
  std::vector<int> schemes{1, 2, 3};
  std::vector<ids::Algorithm> algorithms{ids::kAllAlgorithms.begin(), ids::kAllAlgorithms.end()};
  std::uint64_t seed = 7;
  std::string out = "runs";
  std::string data;     // dataset root; empty means `out`
  std::string network;  // directory holding buses.csv, branches.csv, pv.csv; empty means the bundled case
  std::string model;    // model file for train / eval
  std::string split = "test";  // eval rows: the holdout test side, or "all"
  double test_frac = 0.2;
  int cv_folds = 0;  // > 0 adds stratified k-fold reports to `train`
  unsigned workers = 0;
  DatasetConfig dataset{};  // generator knobs; setting, seed and variant are filled per run

  std::string data_root() const { return data.empty() ? out : data; }
};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string{s.substr(b, e - b + 1)};
}

inline std::uint64_t parse_u64(const std::string& v, const std::string& where) {
  if (v.empty() || v.find_first_not_of("0123456789") != std::string::npos)
    throw ValidationError{where + ": expected an unsigned integer, got '" + v + "'"};
  try {
    return std::stoull(v);
  } catch (const std::exception&) {
    throw ValidationError{where + ": value '" + v + "' is out of range"};
  }
}

inline double parse_real(const std::string& v, const std::string& where) {
  try {
    return csv::to_double(v, where);
  } catch (const ParseError& e) {
    throw ValidationError{e.what()};
  }
}

inline double parse_fraction(const std::string& v, const std::string& where, bool open_interval = false) {
  const double x = parse_real(v, where);
  const bool ok = open_interval ? (x > 0.0 && x < 1.0) : (x >= 0.0 && x <= 1.0);
  if (!ok) throw ValidationError{where + ": " + v + " must lie in " + (open_interval ? "(0, 1)" : "[0, 1]")};
  return x;
}

inline bool parse_bool(const std::string& v, const std::string& where) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ValidationError{where + ": expected true or false, got '" + v + "'"};
}

inline std::vector<SettingId> parse_settings(const std::string& v, const std::string& where) {
  std::vector<SettingId> out;
  for (const auto& item : csv::split(v)) {
    try {
      const auto s = parse_setting(item);
      if (std::find(out.begin(), out.end(), s) != out.end()) throw ValidationError{"setting " + item + " listed twice"};
      out.push_back(s);
    } catch (const ValidationError& e) {
      throw ValidationError{where + ": " + e.what()};
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

inline std::vector<int> parse_schemes(const std::string& v, const std::string& where) {
  std::vector<int> out;
  for (const auto& item : csv::split(v)) {
    if (item != "1" && item != "2" && item != "3")
      throw ValidationError{where + ": unknown scheme '" + item + "' (expected 1, 2 or 3)"};
    const int s = item[0] - '0';
    if (std::find(out.begin(), out.end(), s) != out.end())
      throw ValidationError{where + ": scheme " + item + " listed twice"};
    out.push_back(s);
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace detail

/// Applies one key = value setting. `where` prefixes error messages (file:line, flag or env name).
inline void set_key(ExperimentConfig& c, const std::string& key, const std::string& value, const std::string& where) {
  using namespace detail;
  auto& d = c.dataset;
  if (key == "seed") {
    c.seed = parse_u64(value, where);
  } else if (key == "setting" || key == "settings") {
    c.settings = parse_settings(value, where);
  } else if (key == "scheme" || key == "schemes") {
    c.schemes = parse_schemes(value, where);
  } else if (key == "algos" || key == "algorithms") {
    try {
      c.algorithms = ids::parse_algorithms(value);
    } catch (const std::exception& e) {
      throw ValidationError{where + ": " + e.what()};
    }
  } else if (key == "out") {
    c.out = value;
  } else if (key == "data") {
    c.data = value;
  } else if (key == "network") {
    c.network = value;
  } else if (key == "model") {
    c.model = value;
  } else if (key == "split") {
    if (value != "test" && value != "all") throw ValidationError{where + ": split must be 'test' or 'all'"};
    c.split = value;
  } else if (key == "test_frac") {
    c.test_frac = parse_fraction(value, where, true);
  } else if (key == "cv_folds") {
    const auto k = parse_u64(value, where);
    if (k == 1 || k > 1000) throw ValidationError{where + ": cv_folds must be 0 (off) or between 2 and 1000"};
    c.cv_folds = static_cast<int>(k);
  } else if (key == "workers") {
    c.workers = static_cast<unsigned>(std::min<std::uint64_t>(parse_u64(value, where), 1024));
  } else if (key == "days") {
    const auto n = parse_u64(value, where);
    if (n < 1 || n > 3650) throw ValidationError{where + ": days must be between 1 and 3650"};
    d.profile.days = static_cast<int>(n);
  } else if (key == "profiles") {
    d.profile_source = value;
  } else if (key == "attack_fraction") {
    d.attack_fraction = parse_fraction(value, where);
  } else if (key == "meter_error") {
    d.meter_error = parse_fraction(value, where);
  } else if (key == "missing_frame_prob") {
    d.missing_frame_prob = parse_fraction(value, where);
  } else if (key == "missing_bus_frac") {
    d.missing_bus_frac = parse_fraction(value, where);
  } else if (key == "pv_oversize") {
    d.pv_oversize = parse_real(value, where);
    if (d.pv_oversize < 1.0) throw ValidationError{where + ": pv_oversize must be at least 1"};
  } else if (key == "cloudiness") {
    d.profile.cloudiness = parse_fraction(value, where);
  } else if (key == "day_variation") {
    d.profile.day_variation = parse_real(value, where);
    if (d.profile.day_variation < 0.0) throw ValidationError{where + ": day_variation must be non-negative"};
  } else if (key == "spikes") {
    d.profile.spikes = parse_real(value, where);
    if (d.profile.spikes < 0.0) throw ValidationError{where + ": spikes must be non-negative"};
  } else if (key == "peak_fraction") {
    d.profile.peak_fraction = parse_fraction(value, where, true);
  } else if (key == "pv_peak") {
    d.profile.pv_peak = parse_fraction(value, where);
  } else if (key == "maxp_tracks_available") {
    d.physics.maxp_tracks_available = parse_bool(value, where);
  } else {
    throw ValidationError{where + ": unknown key '" + key + "'"};
  }
}

/// Reads a flat `key = value` file; `#` starts a comment. Errors carry path:line.
inline void read_config_file(ExperimentConfig& c, const std::string& path) {
  std::ifstream in{path};
  if (!in) throw ValidationError{"cannot open config file " + path};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto where = path + ":" + std::to_string(lineno);
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto text = detail::trim(line);
    if (text.empty()) continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos) throw ValidationError{where + ": expected 'key = value'"};
    const auto key = detail::trim(std::string_view{text}.substr(0, eq));
    const auto value = detail::trim(std::string_view{text}.substr(eq + 1));
    if (key.empty()) throw ValidationError{where + ": missing key before '='"};
    set_key(c, key, value, where);
  }
}

/// Builds the effective configuration. Precedence: flag > PVS_SEED environment > config file > defaults.
inline ExperimentConfig resolve_config(const std::optional<std::string>& config_path, const char* env_seed,
                                       const std::vector<std::pair<std::string, std::string>>& flags) {
  ExperimentConfig c;
  if (config_path) read_config_file(c, *config_path);
  if (env_seed != nullptr && *env_seed != '\0') set_key(c, "seed", env_seed, "PVS_SEED");
  for (const auto& [key, value] : flags) set_key(c, key, value, "--" + key);
  return c;
}

// ---------------------------------------------------------------------------
// Inputs

struct GridCase {
  NetworkModel model;
  std::vector<PvPlacement> placements;
};

inline GridCase load_grid(const ExperimentConfig& c) {
  if (c.network.empty()) return {case69::network(), case69::default_pv_placements()};
  const fs::path dir{c.network};
  auto model = load_network((dir / "buses.csv").string(), (dir / "branches.csv").string());
  auto pvs = read_pv_placements((dir / "pv.csv").string());
  for (const auto& p : pvs)
    if (p.bus_id < 1 || p.bus_id > static_cast<int>(model.num_buses()))
      throw ValidationError{"PV placement at bus " + std::to_string(p.bus_id) + " is not on the network"};
  return {std::move(model), std::move(pvs)};
}

inline fs::path dataset_dir(const std::string& root, SettingId s, bool missing) {
  return fs::path{root} / to_string(s) / (missing ? "missing" : "clean");
}

/// Stable identifier of a dataset: FNV-1a of its meta record.
inline std::string dataset_hash(const fs::path& dir) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << tag_hash(read_meta(dir).dump());
  return os.str();
}

// ---------------------------------------------------------------------------
// gen

struct GenSummary {
  SettingId setting;
  bool missing;
  fs::path dir;
  DatasetMeta meta;
};

/// Generates the clean and missing variants of every configured setting from the same seed,
/// so the two variants share frames, attacks and meter error and differ only in missing data.
inline std::vector<GenSummary> cmd_gen(const ExperimentConfig& c, std::ostream& log) {
  const auto grid = load_grid(c);
  std::vector<GenSummary> out;
  for (auto s : c.settings) {
    for (bool missing : {false, true}) {
      auto cfg = c.dataset;
      cfg.setting = s;
      cfg.seed = c.seed;
      cfg.missing = missing;
      cfg.workers = c.workers;
      const auto ds = generate_dataset(grid.model, grid.placements, cfg);
      const auto dir = dataset_dir(c.data_root(), s, missing);
      write_dataset(ds, dir);
      for (const auto& w : ds.warnings) log << "warning: " << w << '\n';
      log << to_string(s) << (missing ? " missing" : " clean") << ": " << ds.meta.frame_count << " frames, "
          << ds.meta.attack_count << " attacks, " << ds.meta.missing_count << " with missing data -> "
          << dir.string() << '\n';
      out.push_back({s, missing, dir, ds.meta});
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// matrix

struct CellResult {
  SettingId setting = SettingId::S1;
  int scheme = 1;
  ids::Algorithm algorithm = ids::Algorithm::lr;
  bool ok = false;
  std::string error;
  ids::EvalReport report{};
  double train_seconds = 0.0;
  double eval_seconds = 0.0;
};

struct ResultsMatrix {
  std::vector<CellResult> cells;  // setting-major, then scheme, then algorithm

  bool complete() const {
    return std::all_of(cells.begin(), cells.end(), [](const CellResult& c) { return c.ok; });
  }
  const CellResult* find(SettingId s, int scheme, ids::Algorithm a) const {
    for (const auto& c : cells)
      if (c.setting == s && c.scheme == scheme && c.algorithm == a) return &c;
    return nullptr;
  }
};

/// Called with every dataset file the matrix opens.
using ReadHook = std::function<void(const fs::path&)>;

/// Loads a features table, reporting the access first.
inline ids::Samples load_samples(const fs::path& dir, const ReadHook& on_read) {
  const auto path = dir / "features.csv";
  if (!fs::exists(path)) throw ValidationError{"dataset missing: " + path.string() + " (run `gen` first)"};
  if (on_read) on_read(path);
  return ids::from_table(read_features_csv(path.string()));
}

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

/// Trains each (setting, training variant, algorithm) once on the holdout training rows and
/// evaluates every requested scheme on the matching test rows. A failing model marks its cells
/// failed without stopping the rest.
inline ResultsMatrix run_matrix(const ExperimentConfig& c, std::ostream& log, const ReadHook& on_read = {},
                                const ids::Hyperparams& hp = {}) {
  struct Variant {
    SettingId setting;
    bool missing;
    ids::Samples data;
    std::string hash;
  };
  struct Job {
    std::size_t variant;
    ids::Algorithm algorithm;
    std::optional<ids::TrainedModel> model;
    std::string error;
    double seconds = 0.0;
  };

  const bool need_clean = std::any_of(c.schemes.begin(), c.schemes.end(), [](int s) { return s != 3; });
  const bool need_missing = std::any_of(c.schemes.begin(), c.schemes.end(), [](int s) { return s != 1; });
  std::vector<Variant> variants;
  std::vector<ids::Split> splits;  // per setting, in c.settings order
  for (auto s : c.settings) {
    std::vector<int> labels;
    for (bool missing : {false, true}) {
      if ((missing && !need_missing) || (!missing && !need_clean)) continue;
      const auto dir = dataset_dir(c.data_root(), s, missing);
      Variant v{s, missing, load_samples(dir, on_read), dataset_hash(dir)};
      if (!labels.empty() && labels != v.data.y)
        throw ValidationError{"clean and missing variants of " + to_string(s) + " do not share frames; regenerate both"};
      labels = v.data.y;
      variants.push_back(std::move(v));
    }
    splits.push_back(ids::train_test_split(labels, c.test_frac, c.seed));
  }
  auto variant_index = [&](SettingId s, bool missing) {
    for (std::size_t i = 0; i < variants.size(); ++i)
      if (variants[i].setting == s && variants[i].missing == missing) return i;
    throw std::logic_error{"variant not loaded"};
  };
  auto split_of = [&](SettingId s) -> const ids::Split& {
    return splits[static_cast<std::size_t>(std::find(c.settings.begin(), c.settings.end(), s) - c.settings.begin())];
  };

  std::vector<Job> jobs;
  for (auto s : c.settings)
    for (bool missing : {false, true}) {
      const bool used = std::any_of(c.schemes.begin(), c.schemes.end(),
                                    [&](int sc) { return scheme_trains_missing(sc) == missing; });
      if (!used) continue;
      for (auto a : c.algorithms) jobs.push_back({variant_index(s, missing), a, std::nullopt, {}, 0.0});
    }

  // Jobs share the pool; a forest only fans out its trees when the jobs run serially.
  const unsigned inner = c.workers == 1 ? 1u : (jobs.size() > 1 ? 1u : c.workers);
  parallel_for(
      jobs.size(),
      [&](std::size_t j) {
        auto& job = jobs[j];
        const auto& v = variants[job.variant];
        const auto t0 = std::chrono::steady_clock::now();
        try {
          auto m = ids::train(job.algorithm, ids::subset(v.data, split_of(v.setting).train), hp, c.seed, inner);
          m.dataset_hash = v.hash;
          job.model = std::move(m);
        } catch (const std::exception& e) {
          job.error = e.what();
        }
        job.seconds = seconds_since(t0);
      },
      c.workers);

  ResultsMatrix out;
  for (auto s : c.settings)
    for (int scheme : c.schemes)
      for (auto a : c.algorithms) {
        CellResult cell;
        cell.setting = s;
        cell.scheme = scheme;
        cell.algorithm = a;
        const auto train_v = variant_index(s, scheme_trains_missing(scheme));
        const auto& job = *std::find_if(jobs.begin(), jobs.end(),
                                        [&](const Job& j) { return j.variant == train_v && j.algorithm == a; });
        cell.train_seconds = job.seconds;
        if (!job.model) {
          cell.error = "training failed: " + job.error;
        } else {
          const auto t0 = std::chrono::steady_clock::now();
          try {
            const auto test = ids::subset(variants[variant_index(s, scheme_tests_missing(scheme))].data, split_of(s).test);
            cell.report = ids::evaluate(job.model->scores(test), test.y);
            cell.ok = true;
          } catch (const std::exception& e) {
            cell.error = std::string{"evaluation failed: "} + e.what();
          }
          cell.eval_seconds = seconds_since(t0);
        }
        log << to_string(s) << " scheme " << scheme << ' ' << ids::to_string(a) << ": ";
        if (cell.ok)
          log << "accuracy " << std::fixed << std::setprecision(4) << cell.report.accuracy;
        else
          log << "FAILED (" << cell.error << ')';
        log << std::fixed << std::setprecision(2) << " [train " << cell.train_seconds << " s, eval " << cell.eval_seconds
            << " s]\n";
        log.unsetf(std::ios::floatfield);
        out.cells.push_back(std::move(cell));
      }
  return out;
}

inline constexpr std::array<const char*, 7> kMetricNames{"accuracy", "precision", "recall", "f1",
                                                         "auc",      "pr_auc",    "jaccard"};

inline std::array<double, 7> metric_values(const ids::EvalReport& r) {
  return {r.accuracy, r.precision, r.recall, r.f1, r.auc, r.pr_auc, r.jaccard};
}

/// Machine-readable matrix; one row per cell. Contains no timings, so reruns are byte-identical.
inline void write_matrix_csv(std::ostream& os, const ResultsMatrix& m) {
  os << "setting,scheme,algorithm,status";
  for (auto n : kMetricNames) os << ',' << n;
  os << ",tp,fp,tn,fn,precision_undefined,error\n";
  for (const auto& c : m.cells) {
    os << to_string(c.setting) << ',' << c.scheme << ',' << ids::to_string(c.algorithm) << ','
       << (c.ok ? "ok" : "failed");
    if (c.ok) {
      for (double v : metric_values(c.report)) os << ',' << fmt6(v);
      os << ',' << c.report.tp << ',' << c.report.fp << ',' << c.report.tn << ',' << c.report.fn << ','
         << (c.report.precision_undefined ? 1 : 0) << ',';
    } else {
      auto msg = c.error;
      std::replace(msg.begin(), msg.end(), ',', ';');
      std::replace(msg.begin(), msg.end(), '\n', ' ');
      os << ",,,,,,,,,,,,," << msg;
    }
    os << '\n';
  }
}

/// Aligned text tables, one block per (setting, scheme); the best value of each metric is starred.
inline void write_matrix_table(std::ostream& os, const ResultsMatrix& m) {
  std::vector<std::pair<SettingId, int>> blocks;
  for (const auto& c : m.cells)
    if (std::find(blocks.begin(), blocks.end(), std::pair{c.setting, c.scheme}) == blocks.end())
      blocks.emplace_back(c.setting, c.scheme);
  for (const auto& [s, scheme] : blocks) {
    std::vector<const CellResult*> rows;
    for (const auto& c : m.cells)
      if (c.setting == s && c.scheme == scheme) rows.push_back(&c);
    std::array<double, 7> best{};
    best.fill(-1.0);
    for (const auto* r : rows)
      if (r->ok)
        for (std::size_t k = 0; k < 7; ++k) best[k] = std::max(best[k], metric_values(r->report)[k]);

    os << "Setting " << static_cast<int>(s) << ", Scheme " << scheme << " (" << scheme_caption(scheme) << ")\n";
    os << std::left << std::setw(10) << "algorithm";
    for (auto n : kMetricNames) os << std::right << std::setw(11) << n;
    os << '\n';
    for (const auto* r : rows) {
      os << std::left << std::setw(10) << ids::to_string(r->algorithm);
      if (!r->ok) {
        os << "  failed: " << r->error << '\n';
        continue;
      }
      const auto v = metric_values(r->report);
      for (std::size_t k = 0; k < 7; ++k) {
        std::ostringstream cell;
        cell << std::fixed << std::setprecision(4) << v[k] << (v[k] == best[k] ? "*" : " ");
        os << std::right << std::setw(11) << cell.str();
      }
      os << '\n';
    }
    os << '\n';
  }
  os << std::left << "* best value of the metric within the block\n";
}

inline void write_timing_csv(std::ostream& os, const ResultsMatrix& m) {
  os << "setting,scheme,algorithm,train_seconds,eval_seconds\n";
  for (const auto& c : m.cells)
    os << to_string(c.setting) << ',' << c.scheme << ',' << ids::to_string(c.algorithm) << ',' << fmt6(c.train_seconds)
       << ',' << fmt6(c.eval_seconds) << '\n';
}

/// Runs the matrix and writes matrix.csv, matrix.txt and matrix_timing.csv into `out`.
/// Returns 0 when every cell succeeded and 3 otherwise.
inline int cmd_matrix(const ExperimentConfig& c, std::ostream& log, ResultsMatrix* result = nullptr,
                      const ids::Hyperparams& hp = {}) {
  const auto t0 = std::chrono::steady_clock::now();
  auto m = run_matrix(c, log, {}, hp);
  fs::create_directories(c.out);
  {
    std::ofstream f{fs::path{c.out} / "matrix.csv", std::ios::binary};
    write_matrix_csv(f, m);
  }
  {
    std::ofstream f{fs::path{c.out} / "matrix.txt", std::ios::binary};
    write_matrix_table(f, m);
  }
  {
    std::ofstream f{fs::path{c.out} / "matrix_timing.csv", std::ios::binary};
    write_timing_csv(f, m);
  }
  write_matrix_table(log, m);
  log << "matrix: " << m.cells.size() << " cells in " << std::fixed << std::setprecision(1) << seconds_since(t0)
      << " s -> " << c.out << '\n';
  log.unsetf(std::ios::floatfield);
  const int code = m.complete() ? 0 : 3;
  if (result) *result = std::move(m);
  return code;
}

// ---------------------------------------------------------------------------
// baseline

/// Best single-threshold rule on one scalar. Predicts attack when x > threshold (attack_above)
/// or when x < threshold; the threshold may be -inf or +inf, which flags a single class.
struct ThresholdRule {
  double threshold = -std::numeric_limits<double>::infinity();
  bool attack_above = true;
  double accuracy = 0.0;

  int predict(double x) const { return attack_above ? (x > threshold ? 1 : 0) : (x < threshold ? 1 : 0); }
};

/// Exhaustive sweep over every cut between distinct sorted values, in both directions.
/// Ties go to the first cut found scanning upward, "above" before "below".
inline ThresholdRule best_threshold(const std::vector<double>& x, const std::vector<int>& y) {
  if (x.size() != y.size()) throw ValidationError{"threshold sweep needs one label per value"};
  if (x.empty()) throw ValidationError{"threshold sweep needs at least one value"};
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return x[a] < x[b]; });
  const std::size_t n = x.size();
  const auto pos = static_cast<std::size_t>(std::count(y.begin(), y.end(), 1));
  const std::size_t neg = n - pos;
  constexpr double inf = std::numeric_limits<double>::infinity();

  ThresholdRule best;
  std::size_t best_correct = 0;
  bool first = true;
  std::size_t pos_below = 0, neg_below = 0;
  for (std::size_t k = 0; k <= n; ++k) {
    if (k > 0) (y[order[k - 1]] ? pos_below : neg_below) += 1;
    if (k > 0 && k < n && x[order[k - 1]] == x[order[k]]) continue;
    const double t = k == 0 ? -inf : (k == n ? inf : x[order[k - 1]] + (x[order[k]] - x[order[k - 1]]) / 2.0);
    const std::size_t above = neg_below + (pos - pos_below);  // attack when x > t
    const std::size_t below = pos_below + (neg - neg_below);  // attack when x < t
    if (first || above > best_correct) {
      best = {t, true, 0.0};
      best_correct = above;
      first = false;
    }
    if (below > best_correct) {
      best = {t, false, 0.0};
      best_correct = below;
    }
  }
  best.accuracy = static_cast<double>(best_correct) / static_cast<double>(n);
  return best;
}

inline double rule_accuracy(const ThresholdRule& r, const std::vector<double>& x, const std::vector<int>& y) {
  std::size_t correct = 0;
  for (std::size_t i = 0; i < x.size(); ++i) correct += r.predict(x[i]) == y[i] ? 1 : 0;
  return x.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(x.size());
}

struct BaselineReport {
  std::vector<long> timestamp;
  std::vector<double> apparent_loss;
  std::vector<int> label;
  ThresholdRule all_frames;    // best rule over every frame (an optimistic upper bound)
  ThresholdRule train_rule;    // best rule on the holdout training rows
  double holdout_accuracy = 0.0;  // train_rule applied to the holdout test rows
  double oracle_test_accuracy = 0.0;  // best rule chosen on the test rows themselves
};

inline BaselineReport apparent_loss_baseline(const fs::path& dir, const std::vector<int>& load_buses,
                                             std::size_t num_pvs, double test_frac, std::uint64_t seed) {
  const auto snaps = read_snapshots_csv((dir / "snapshots.csv").string(), load_buses, num_pvs);
  BaselineReport r;
  for (const auto& s : snaps) {
    r.timestamp.push_back(s.timestamp);
    r.apparent_loss.push_back(apparent_loss(s));
    r.label.push_back(static_cast<int>(s.label));
  }
  r.all_frames = best_threshold(r.apparent_loss, r.label);
  if (std::count(r.label.begin(), r.label.end(), 1) == 0 || std::count(r.label.begin(), r.label.end(), 0) == 0) {
    r.train_rule = r.all_frames;
    r.holdout_accuracy = r.oracle_test_accuracy = r.all_frames.accuracy;
    return r;
  }
  const auto split = ids::train_test_split(r.label, test_frac, seed);
  auto pick = [&](const std::vector<std::size_t>& idx) {
    std::vector<double> x;
    std::vector<int> y;
    for (auto i : idx) {
      x.push_back(r.apparent_loss[i]);
      y.push_back(r.label[i]);
    }
    return std::pair{x, y};
  };
  const auto [xtr, ytr] = pick(split.train);
  const auto [xte, yte] = pick(split.test);
  r.train_rule = best_threshold(xtr, ytr);
  r.holdout_accuracy = rule_accuracy(r.train_rule, xte, yte);
  r.oracle_test_accuracy = best_threshold(xte, yte).accuracy;
  return r;
}

inline std::string describe(const ThresholdRule& r) {
  std::ostringstream os;
  os << "attack if apparent loss " << (r.attack_above ? "> " : "< ") << r.threshold << " kW, accuracy " << std::fixed
     << std::setprecision(4) << r.accuracy;
  return os.str();
}

/// Writes baseline_scatter.csv (one row per frame) and baseline.txt for every configured
/// setting's clean dataset.
inline std::vector<BaselineReport> cmd_baseline(const ExperimentConfig& c, std::ostream& log) {
  const auto grid = load_grid(c);
  const auto load_buses = grid.model.bus_ids_of(BusKind::load);
  std::vector<BaselineReport> out;
  for (auto s : c.settings) {
    const auto dir = dataset_dir(c.data_root(), s, false);
    if (!fs::exists(dir / "snapshots.csv")) throw ValidationError{"dataset missing: " + dir.string() + " (run `gen` first)"};
    auto r = apparent_loss_baseline(dir, load_buses, grid.placements.size(), c.test_frac, c.seed);
    const auto dest = fs::path{c.out} / to_string(s);
    fs::create_directories(dest);
    {
      std::ofstream f{dest / "baseline_scatter.csv", std::ios::binary};
      f << "timestamp,apparent_loss_kw,label\n";
      for (std::size_t i = 0; i < r.label.size(); ++i)
        f << r.timestamp[i] << ',' << fmt6(r.apparent_loss[i]) << ',' << r.label[i] << '\n';
    }
    std::ostringstream report;
    report << to_string(s) << " apparent-loss threshold baseline (" << r.label.size() << " frames)\n"
           << "  all frames:     " << describe(r.all_frames) << '\n'
           << "  holdout train:  " << describe(r.train_rule) << '\n'
           << "  holdout test:   accuracy " << std::fixed << std::setprecision(4) << r.holdout_accuracy
           << " (best rule on test rows " << r.oracle_test_accuracy << ")\n";
    {
      std::ofstream f{dest / "baseline.txt", std::ios::binary};
      f << report.str();
    }
    log << report.str();
    out.push_back(std::move(r));
  }
  return out;
}

// ---------------------------------------------------------------------------
// train / eval

inline fs::path model_path(const ExperimentConfig& c, ids::Algorithm a) {
  if (!c.model.empty() && c.algorithms.size() == 1) return c.model;
  return fs::path{c.out} / (ids::to_string(a) + ".model.json");
}

/// Single-dataset directory for train/eval: `data` when it holds features.csv, otherwise the
/// clean (train) or missing (scheme 2/3 test) variant of the first configured setting.
inline fs::path resolve_dataset(const ExperimentConfig& c, bool missing) {
  const fs::path data{c.data_root()};
  if (fs::exists(data / "features.csv")) return data;
  return dataset_dir(c.data_root(), c.settings.front(), missing);
}

inline std::vector<fs::path> cmd_train(const ExperimentConfig& c, std::ostream& log) {
  const auto scheme = c.schemes.front();
  const auto dir = resolve_dataset(c, scheme_trains_missing(scheme));
  const auto all = load_samples(dir, {});
  const auto split = ids::train_test_split(all.y, c.test_frac, c.seed);
  const auto rows = ids::subset(all, split.train);
  const auto hash = dataset_hash(dir);
  std::vector<fs::path> written;
  for (auto a : c.algorithms) {
    const auto t0 = std::chrono::steady_clock::now();
    auto m = ids::train(a, rows, {}, c.seed, c.workers);
    m.dataset_hash = hash;
    const auto path = model_path(c, a);
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    ids::save_model(m, path.string());
    log << ids::to_string(a) << ": trained on " << rows.size() << " rows of " << dir.string() << " in " << std::fixed
        << std::setprecision(2) << seconds_since(t0) << " s -> " << path.string() << '\n';
    log.unsetf(std::ios::floatfield);
    if (c.cv_folds > 0) {
      const auto folds = ids::kfold_cv(rows, static_cast<std::size_t>(c.cv_folds), a, {}, c.seed, c.workers);
      double mean = 0.0;
      for (const auto& f : folds) mean += f.accuracy / static_cast<double>(folds.size());
      log << "  " << c.cv_folds << "-fold accuracy:";
      for (const auto& f : folds) log << ' ' << fmt6(f.accuracy);
      log << " (mean " << fmt6(mean) << ")\n";
    }
    written.push_back(path);
  }
  return written;
}

inline void write_report(std::ostream& os, const ids::EvalReport& r) {
  os << "tp " << r.tp << "  fp " << r.fp << "  tn " << r.tn << "  fn " << r.fn << '\n';
  const auto v = metric_values(r);
  for (std::size_t k = 0; k < v.size(); ++k) os << std::left << std::setw(10) << kMetricNames[k] << fmt6(v[k]) << '\n';
  if (r.precision_undefined) os << "note: no positive predictions; precision reported as 0\n";
}

inline std::vector<ids::EvalReport> cmd_eval(const ExperimentConfig& c, std::ostream& log) {
  const auto scheme = c.schemes.front();
  const auto dir = resolve_dataset(c, scheme_tests_missing(scheme));
  const auto all = load_samples(dir, {});
  std::vector<ids::EvalReport> out;
  for (auto a : c.algorithms) {
    const auto path = model_path(c, a);
    const auto m = ids::load_model(path.string());
    ids::Samples rows = all;
    if (c.split == "test") rows = ids::subset(all, ids::train_test_split(all.y, c.test_frac, m.seed).test);
    const auto r = ids::evaluate(m.scores(rows), rows.y);
    log << ids::to_string(m.algorithm) << " on " << rows.size() << " rows of " << dir.string() << " (" << c.split
        << ")\n";
    write_report(log, r);
    out.push_back(r);
  }
  return out;
}

// ---------------------------------------------------------------------------
// validate-net

/// Loads and validates the network, then solves it at nominal load as a sanity check.
inline PowerFlowSolution cmd_validate_net(const ExperimentConfig& c, std::ostream& log) {
  const auto grid = load_grid(c);
  const auto& m = grid.model;
  const auto open = std::count_if(m.branches().begin(), m.branches().end(), [](const Branch& b) { return !b.closed; });
  log << "network: " << m.num_buses() << " buses, " << m.branches().size() << " branches (" << open << " open), "
      << m.bus_ids_of(BusKind::load).size() << " load buses, " << grid.placements.size() << " PV placements\n";
  InjectionSet inj(m.num_buses());
  // Bus files carry no demand; the nominal loads apply only when the topology is the standard case.
  if (m == case69::network(m.base_mva())) {
    const auto loads = case69::nominal_loads();
    for (std::size_t i = 0; i < loads.size(); ++i) inj.add(static_cast<int>(i + 1), -loads[i].first, -loads[i].second);
  }
  const auto sol = solve(m, inj);
  if (!sol.converged()) throw SolverError{std::string{"base case did not converge: "} + to_string(sol.status)};
  std::size_t worst = 0;
  for (std::size_t i = 1; i < sol.v_pu.size(); ++i)
    if (sol.v_pu[i] < sol.v_pu[worst]) worst = i;
  log << "base case: loss " << fmt6(sol.total_loss_p_kw) << " kW, minimum voltage " << fmt6(sol.v_pu[worst])
      << " pu at bus " << worst + 1 << ", " << sol.iterations << " sweeps\n";
  return sol;
}

}  // namespace pvids::exp
