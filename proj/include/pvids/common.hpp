#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <functional>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

namespace pvids {

/// Malformed input file or row.
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Input parsed but violates a model invariant.
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Numerical failure that is reported instead of returned (e.g. voltage collapse).
struct SolverError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

using Rng = std::mt19937_64;

// splitmix64 finalizer; used to derive independent per-frame streams.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline std::uint64_t tag_hash(std::string_view tag) {
  std::uint64_t h = 0xCBF29CE484222325ULL;  // FNV-1a
  for (unsigned char c : tag) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

/// Seeded stream for (seed, index, purpose). Streams with different purposes never share state.
inline Rng derive_rng(std::uint64_t seed, std::uint64_t index, std::string_view purpose) {
  return Rng{mix64(mix64(seed ^ tag_hash(purpose)) + index)};
}

// The standard distributions are implementation-defined; these are not, so
// generated datasets are byte-identical across standard libraries.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline double uniform(Rng& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

/// Uniform integer in [lo, hi].
inline int uniform_int(Rng& rng, int lo, int hi) {
  const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
  return lo + static_cast<int>(uniform01(rng) * static_cast<double>(span));
}

inline double normal(Rng& rng) {
  double u1 = uniform01(rng);
  while (u1 <= 0.0) u1 = uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

template <class T>
void shuffle(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(i));
    std::swap(v[i - 1], v[j]);
  }
}

/// Fixed six-decimal rendering used by every persisted numeric field.
inline std::string fmt6(double v) {
  char buf[64];
  if (v == 0.0) v = 0.0;  // drop negative zero
  std::snprintf(buf, sizeof buf, "%.6f", v);
  std::string s{buf};
  if (s == "-0.000000") s = "0.000000";
  return s;
}

namespace csv {

inline std::vector<std::string> split(std::string_view line, char sep = ',') {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    out.emplace_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  for (auto& f : out) {
    while (!f.empty() && (f.back() == '\r' || f.back() == ' ')) f.pop_back();
    while (!f.empty() && f.front() == ' ') f.erase(f.begin());
  }
  return out;
}

inline double to_double(const std::string& s, const std::string& where) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument{s};
    return v;
  } catch (const std::exception&) {
    throw ParseError{where + ": not a number '" + s + "'"};
  }
}

inline long long to_int(const std::string& s, const std::string& where) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(s, &used);
    if (used != s.size()) throw std::invalid_argument{s};
    return v;
  } catch (const std::exception&) {
    throw ParseError{where + ": not an integer '" + s + "'"};
  }
}

/// Reads a CSV file, checks the header, and returns the data rows (blank lines skipped).
inline std::vector<std::vector<std::string>> read(const std::string& path, std::string_view expected_header) {
  std::ifstream in{path};
  if (!in) throw ParseError{"cannot open " + path};
  std::string line;
  if (!std::getline(in, line)) throw ParseError{path + ": empty file"};
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line.erase(0, 3);  // UTF-8 BOM
  if (line != expected_header)
    throw ParseError{path + ": expected header '" + std::string{expected_header} + "', got '" + line + "'"};
  const auto ncols = split(expected_header).size();
  std::vector<std::vector<std::string>> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    auto fields = split(line);
    if (fields.size() != ncols)
      throw ParseError{path + ":" + std::to_string(lineno) + ": expected " + std::to_string(ncols) + " fields, got " +
                       std::to_string(fields.size())};
    rows.push_back(std::move(fields));
  }
  return rows;
}

}  // namespace csv

/// Calls body(i) for i in [0, n) on up to `workers` threads. Results must go to pre-sized slots.
inline void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body, unsigned workers = 0) {
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, std::max<std::size_t>(n, 1)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < n; i += workers) body(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace pvids
