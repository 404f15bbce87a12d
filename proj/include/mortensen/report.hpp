// Run reporting: pass/fail metrics, the SHA-256 artifact manifest, the
// long-format plot-data emitter and a small worker pool for sweep members
// (thread count overridable via MORTENSEN_THREADS).
#pragma once

#include "mortensen/core.hpp"

#include <json.hpp>
#include <openssl/evp.h>

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace mortensen {

struct Metric {
  std::string name;
  double value = 0;
  double tolerance = std::numeric_limits<double>::quiet_NaN();  // NaN = informational
  std::string cmp = "<=";
  bool pass = true;
  std::vector<std::string> artifacts;
};

inline Metric metric_le(const std::string& name, double value, double tol,
                        std::vector<std::string> artifacts = {}) {
  return Metric{name, value, tol, "<=", value <= tol, std::move(artifacts)};
}

inline Metric metric_ge(const std::string& name, double value, double tol,
                        std::vector<std::string> artifacts = {}) {
  return Metric{name, value, tol, ">=", value >= tol, std::move(artifacts)};
}

inline Metric metric_gt(const std::string& name, double value, double tol,
                        std::vector<std::string> artifacts = {}) {
  return Metric{name, value, tol, ">", value > tol, std::move(artifacts)};
}

inline Metric metric_flag(const std::string& name, bool ok,
                          std::vector<std::string> artifacts = {}) {
  return Metric{name, ok ? 1.0 : 0.0, 1.0, "==", ok, std::move(artifacts)};
}

inline Metric metric_info(const std::string& name, double value,
                          std::vector<std::string> artifacts = {}) {
  Metric m;
  m.name = name;
  m.value = value;
  m.cmp = "info";
  m.pass = true;
  m.artifacts = std::move(artifacts);
  return m;
}

struct RunReport {
  std::string kind;
  std::string name;
  uint64_t seed = 0;
  std::vector<Metric> metrics;
  double wall_clock_sec = 0;

  bool pass() const {
    for (const auto& m : metrics)
      if (!m.pass) return false;
    return true;
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["kind"] = kind;
    j["name"] = name;
    j["seed"] = seed;
    j["pass"] = pass();
    j["wall_clock_sec"] = wall_clock_sec;
    j["metrics"] = nlohmann::json::array();
    for (const auto& m : metrics) {
      nlohmann::json mj;
      mj["name"] = m.name;
      mj["value"] = m.value;
      if (!std::isnan(m.tolerance)) mj["tolerance"] = m.tolerance;
      mj["cmp"] = m.cmp;
      mj["pass"] = m.pass;
      mj["artifacts"] = m.artifacts;
      j["metrics"].push_back(mj);
    }
    return j;
  }
};

// ---------------------------------------------------------------------------
// Hashing and the artifact manifest

inline std::string sha256_hex(const void* data, size_t len) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int dlen = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx, data, len) != 1 || EVP_DigestFinal_ex(ctx, digest, &dlen) != 1) {
    EVP_MD_CTX_free(ctx);
    throw Error("sha256: digest failure");
  }
  EVP_MD_CTX_free(ctx);
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(2 * dlen);
  for (unsigned i = 0; i < dlen; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xf]);
  }
  return out;
}

inline std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("sha256_file: cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  const std::string bytes = ss.str();
  return sha256_hex(bytes.data(), bytes.size());
}

// manifest.txt lists `sha256  filename` for every artifact except the report
// and the manifest itself (the report carries wall-clock timings).
inline void write_manifest(const std::filesystem::path& dir) {
  std::vector<std::string> names;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    if (name == "manifest.txt" || name == "report.json") continue;
    names.push_back(name);
  }
  std::sort(names.begin(), names.end());
  std::ofstream out(dir / "manifest.txt");
  for (const auto& name : names) out << sha256_file(dir / name) << "  " << name << "\n";
}

// ---------------------------------------------------------------------------
// Worker pool

inline int worker_count(int tasks) {
  int n = static_cast<int>(std::thread::hardware_concurrency());
  if (const char* env = std::getenv("MORTENSEN_THREADS")) {
    const int parsed = std::atoi(env);
    if (parsed > 0) n = parsed;
  }
  if (n < 1) n = 1;
  return std::min(n, tasks);
}

template <class F>
void parallel_for(int n, F&& fn) {
  const int workers = worker_count(n);
  if (workers <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

// ---------------------------------------------------------------------------
// Plot data (long format: series,xvalue,yvalue)

namespace detail {

inline std::vector<std::vector<std::string>> read_csv_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("read_csv_table: cannot open " + path.string());
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    rows.push_back(std::move(cells));
  }
  return rows;
}

}  // namespace detail

struct PlotDataResult {
  std::vector<std::string> emitted;
  std::vector<std::string> missing;
};

// Derives plot-ready CSVs from a completed run directory. Missing upstream
// artifacts are reported by name; emission covers whatever is present.
inline PlotDataResult emit_plotdata(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  PlotDataResult result;
  const auto emit = [&](const std::string& out_name,
                        const std::vector<std::array<std::string, 3>>& rows) {
    std::ofstream out(dir / out_name);
    out << "series,xvalue,yvalue\n";
    for (const auto& r : rows) out << r[0] << "," << r[1] << "," << r[2] << "\n";
    result.emitted.push_back(out_name);
  };

  // error-vs-kappa (log-log material).
  if (fs::exists(dir / "value_sweep.csv") || fs::exists(dir / "traj_sweep.csv")) {
    std::vector<std::array<std::string, 3>> rows;
    if (fs::exists(dir / "value_sweep.csv")) {
      const auto table = detail::read_csv_table(dir / "value_sweep.csv");
      for (size_t i = 1; i < table.size(); ++i)
        rows.push_back({"value_sup_error", table[i][0], table[i][1]});
    }
    if (fs::exists(dir / "traj_sweep.csv")) {
      const auto table = detail::read_csv_table(dir / "traj_sweep.csv");
      for (size_t i = 1; i < table.size(); ++i)
        rows.push_back({"trajectory_sup_error", table[i][0], table[i][1]});
    }
    emit("error_vs_kappa.csv", rows);
  } else {
    result.missing.push_back("value_sweep.csv");
  }

  // Laplace-value-vs-epsilon.
  {
    std::vector<std::array<std::string, 3>> rows;
    bool any = false;
    for (const auto& entry : fs::directory_iterator(dir)) {
      const std::string name = entry.path().filename().string();
      if (name.rfind("laplace_", 0) != 0 || entry.path().extension() != ".csv") continue;
      const std::string series = name.substr(8, name.size() - 12);
      const auto table = detail::read_csv_table(entry.path());
      for (size_t i = 1; i < table.size(); ++i)
        rows.push_back({series, table[i][0], table[i][1]});
      any = true;
    }
    if (any) {
      std::sort(rows.begin(), rows.end());
      emit("laplace_vs_epsilon.csv", rows);
    } else {
      result.missing.push_back("laplace_*.csv");
    }
  }

  // Observer path against the twin truth.
  if (fs::exists(dir / "truth.csv") && fs::exists(dir / "observer.csv")) {
    std::vector<std::array<std::string, 3>> rows;
    const auto truth = detail::read_csv_table(dir / "truth.csv");
    const size_t n = truth.empty() ? 0 : truth[0].size() - 1;
    for (size_t i = 1; i < truth.size(); ++i)
      for (size_t a = 1; a <= n && a < truth[i].size(); ++a)
        rows.push_back({"truth_x" + std::to_string(a), truth[i][0], truth[i][a]});
    const auto obs = detail::read_csv_table(dir / "observer.csv");
    for (size_t i = 1; i < obs.size(); ++i)
      for (size_t a = 1; a + 1 < obs[i].size(); ++a)
        rows.push_back({"observer_x" + std::to_string(a), obs[i][0], obs[i][a]});
    emit("observer_vs_truth.csv", rows);
  } else {
    result.missing.push_back("truth.csv/observer.csv");
  }

  // Value-function slices (1D fields only).
  if (fs::exists(dir / "dp_field.csv")) {
    const auto table = detail::read_csv_table(dir / "dp_field.csv");
    if (!table.empty() && table[0].size() == 3) {
      const std::string t_first = table[1][0];
      std::string t_last = table.back()[0];
      std::vector<std::array<std::string, 3>> rows;
      for (size_t i = 1; i < table.size(); ++i) {
        if (table[i][0] == t_first)
          rows.push_back({"V(t=" + t_first + ")", table[i][1], table[i][2]});
        if (table[i][0] == t_last)
          rows.push_back({"V(t=" + t_last + ")", table[i][1], table[i][2]});
      }
      emit("value_slices.csv", rows);
    }
  } else {
    result.missing.push_back("dp_field.csv");
  }

  if (result.emitted.empty())
    throw Error("emit_plotdata: no recognized artifacts in " + dir.string());
  return result;
}

}  // namespace mortensen
