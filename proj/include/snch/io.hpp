#pragma once

// CSV tables with a fixed column order and %.17g numbers, atomic file
// replacement, SHA-256 checksums and the run manifest.

#include <openssl/evp.h>

#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "snch/config.hpp"
#include "snch/diagnostics.hpp"
#include "snch/error.hpp"
#include "snch/experiments.hpp"

#ifndef SNCH_VERSION
#define SNCH_VERSION "0.0.0"
#endif

namespace snch {

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Header plus rows; every row has the header's width.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

  CsvTable& row(std::vector<std::string> cells) {
    if (cells.size() != header_.size()) throw Error("CsvTable: row width differs from header");
    rows_.push_back(std::move(cells));
    return *this;
  }

  const std::vector<std::string>& header() const { return header_; }
  std::size_t rows() const { return rows_.size(); }

  std::string str() const {
    std::string out;
    auto line = [&](const std::vector<std::string>& cells) {
      for (std::size_t i = 0; i < cells.size(); ++i) out += (i ? "," : "") + cells[i];
      out += '\n';
    };
    line(header_);
    for (const auto& r : rows_) line(r);
    return out;
  }

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

inline std::string num(double v) { return format_double(v); }
inline std::string num(std::size_t v) { return std::to_string(v); }
inline std::string flag(bool b) { return b ? "1" : "0"; }

/// Writes to a sibling temporary file and renames it over `path`.
inline void atomic_write(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("atomic_write: cannot open " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error("atomic_write: write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("read_file: cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::string sha256_hex(const std::string& data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1) throw Error("sha256 failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

// ----------------------------------------------------------------- tables

inline CsvTable timeseries_table(const PathRecord& r) {
  CsvTable t({"t", "mass", "energy", "h_norm", "v_seminorm", "vstar_norm", "grad_mu_sq_cum", "ito_residual"});
  for (std::size_t i = 0; i < r.size(); ++i)
    t.row({num(r.times[i]), num(r.mass[i]), num(r.energy[i]), num(r.h_norm[i]), num(r.v_seminorm[i]),
           num(r.vstar_norm[i]), num(r.grad_mu_sq_cum[i]),
           r.ito_residual.empty() ? std::string("nan") : num(r.ito_residual[i])});
  return t;
}

inline CsvTable field_table(const Field& f) {
  CsvTable t({"x", "y", "phi"});
  const GridSpec& g = f.grid;
  for (int i = 0; i < g.n(0); ++i)
    for (int j = 0; j < g.n(1); ++j)
      t.row({num(g.node(0, i)), num(g.dim == 2 ? g.node(1, j) : 0.0),
             num(f.values[static_cast<std::size_t>(i) * g.n(1) + j])});
  return t;
}

inline CsvTable ensemble_table(const EnsembleStats& s) {
  CsvTable t({"quantity", "p", "n_paths", "estimate", "stderr"});
  auto add = [&](const char* name, const MomentEstimate& m) {
    t.row({name, num(s.p), num(s.n_paths), num(m.estimate), num(m.stderr_)});
  };
  add("sup_t_h_norm", s.sup_h);
  add("grad_phi_l2t", s.grad_phi_l2);
  add("grad_mu_l2t", s.grad_mu_l2);
  return t;
}

struct KernelCheckRow {
  MollifierFamily family = MollifierFamily::gaussian_r2;
  double epsilon = 0.0;
  int n = 1;
  double normalization_residual = 0.0;
  double consistency_error = 0.0;
  double min_a = 0.0;
};

inline CsvTable kernel_check_table(const std::vector<KernelCheckRow>& rows) {
  CsvTable t({"family", "epsilon", "n", "normalization_residual", "consistency_error", "min_a"});
  for (const auto& r : rows)
    t.row({to_string(r.family), num(r.epsilon), std::to_string(r.n), num(r.normalization_residual),
           num(r.consistency_error), num(r.min_a)});
  return t;
}

inline CsvTable rate_table(const RateStudyResult& r) {
  CsvTable t({"epsilon", "err_vstar", "err_l2h", "err", "stderr", "floor", "fitted"});
  for (const auto& row : r.rows)
    t.row({num(row.epsilon), num(row.err_vstar), num(row.err_l2h), num(row.err), num(row.stderr_), num(row.floor),
           flag(row.fitted)});
  return t;
}

inline CsvTable rate_summary_table(const RateStudyResult& r) {
  CsvTable t({"slope", "monotone", "passed", "in_band", "reference_floor", "h3_proxy"});
  t.row({num(r.slope), flag(r.monotone), flag(r.passed), flag(r.in_band), num(r.reference_floor), num(r.h3_proxy)});
  return t;
}

inline CsvTable cdep_table(const CdepStudyResult& r) {
  CsvTable t({"delta", "distance", "rho", "stderr"});
  for (const auto& row : r.rows) t.row({num(row.delta), num(row.distance), num(row.rho), num(row.stderr_)});
  return t;
}

inline CsvTable yosida_table(const YosidaStudyResult& r) {
  CsvTable t({"lambda", "sup_h_distance", "dpsi_at_1_5"});
  for (const auto& row : r.rows) t.row({num(row.lambda), num(row.sup_h_distance), num(row.dpsi_at_1_5)});
  return t;
}

inline CsvTable refinement_table(const RefinementStudyResult& r) {
  CsvTable t({"kind", "parameter", "value", "difference", "ratio"});
  for (const auto& row : r.rows)
    t.row({row.kind, num(row.parameter), num(row.value), num(row.difference), num(row.ratio)});
  return t;
}

inline CsvTable ito_table(const ItoStudyResult& r) {
  CsvTable t({"dt", "max_residual", "ratio"});
  for (const auto& row : r.rows) t.row({num(row.dt), num(row.max_residual), num(row.ratio)});
  return t;
}

// --------------------------------------------------------------- manifest

/// Collects output files and writes manifest.json beside them.
class OutputDir {
 public:
  explicit OutputDir(std::filesystem::path dir) : dir_(std::move(dir)) { std::filesystem::create_directories(dir_); }

  const std::filesystem::path& path() const { return dir_; }

  void write(const std::string& name, const std::string& content) {
    atomic_write(dir_ / name, content);
    files_[name] = sha256_hex(content);
  }
  void write(const std::string& name, const CsvTable& t) { write(name, t.str()); }

  const std::map<std::string, std::string>& checksums() const { return files_; }

  /// `wall_clock` is excluded from every checksum so reruns stay byte-comparable.
  void write_manifest(const std::string& command, const RunConfig& cfg, const std::vector<AssumptionCheck>& checks,
                      double wall_clock, const nlohmann::json& extra = nlohmann::json::object()) {
    const std::string canonical = to_ini(cfg);
    nlohmann::json m;
    m["command"] = command;
    m["version"] = SNCH_VERSION;
    m["config_sha256"] = sha256_hex(canonical);
    m["config"] = canonical;
    m["seed"] = cfg.master_seed();
    m["paths"] = cfg.run.paths;
    m["workers"] = cfg.run.workers;
    m["files"] = files_;
    nlohmann::json a = nlohmann::json::array();
    for (const auto& c : checks)
      a.push_back({{"id", c.id}, {"passed", c.passed}, {"value", c.value}, {"note", c.note}});
    m["assumptions"] = a;
    m["wall_clock_seconds"] = wall_clock;
    for (const auto& [k, v] : extra.items()) m[k] = v;
    atomic_write(dir_ / "manifest.json", m.dump(2) + "\n");
  }

 private:
  std::filesystem::path dir_;
  std::map<std::string, std::string> files_;
};

}  // namespace snch
