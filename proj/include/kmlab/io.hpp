#pragma once

// File formats: JSON for models and rate constants, CSV with '#' metadata
// lines for results, and atomic writes (temp file + rename) so an error
// never leaves a partial file behind.

#include <charconv>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "kmlab/dynamics.hpp"
#include "kmlab/mixture.hpp"

namespace kmlab {

inline constexpr std::string_view kVersion = "0.1.0";

/// FNV-1a, 64 bit.
inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

/// Writes `content` to a sibling temp file and renames it over `path`.
inline void atomic_write(const std::filesystem::path& path, std::string_view content) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) {
      out.close();
      fs::remove(tmp);
      throw std::runtime_error("write failed: " + tmp.string());
    }
  }
  fs::rename(tmp, path);
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

/// Shortest decimal that round-trips.
inline std::string fmt_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

// ---------------------------------------------------------------------------
// Tables

/// Flat table: column names plus rows of already-formatted cells.
struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  void add(std::vector<std::string> row) {
    if (row.size() != columns.size()) throw std::logic_error("row width does not match columns");
    rows.push_back(std::move(row));
  }
};

struct Metadata {
  std::string config_hash;
  std::uint64_t seed = 0;
  std::vector<std::pair<std::string, std::string>> extra;
};

inline std::string to_csv(const Table& t, const Metadata& meta) {
  std::ostringstream os;
  os << "# kmlab " << kVersion << "\n";
  os << "# config_hash=" << meta.config_hash << "\n";
  os << "# seed=" << meta.seed << "\n";
  for (const auto& [k, v] : meta.extra) os << "# " << k << "=" << v << "\n";
  for (std::size_t i = 0; i < t.columns.size(); ++i) os << (i ? "," : "") << t.columns[i];
  os << "\n";
  for (const auto& r : t.rows) {
    for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << r[i];
    os << "\n";
  }
  return os.str();
}

/// JSON mirror of a CSV table: metadata plus one object per row. Cells that
/// parse as numbers are emitted as numbers.
inline nlohmann::json to_json(const Table& t, const Metadata& meta) {
  nlohmann::json j;
  j["version"] = std::string(kVersion);
  j["config_hash"] = meta.config_hash;
  j["seed"] = meta.seed;
  for (const auto& [k, v] : meta.extra) j["meta"][k] = v;
  j["rows"] = nlohmann::json::array();
  for (const auto& r : t.rows) {
    nlohmann::json row;
    for (std::size_t i = 0; i < r.size(); ++i) {
      const std::string& cell = r[i];
      std::size_t used = 0;
      double v = 0;
      bool numeric = false;
      try {
        v = std::stod(cell, &used);
        numeric = used == cell.size();
      } catch (const std::exception&) {
      }
      if (numeric) row[t.columns[i]] = v;
      else row[t.columns[i]] = cell;
    }
    j["rows"].push_back(std::move(row));
  }
  return j;
}

/// Writes `<stem>.csv` and `<stem>.json`.
inline void write_table(const std::filesystem::path& stem, const Table& t, const Metadata& meta) {
  std::filesystem::path csv = stem, js = stem;
  csv += ".csv";
  js += ".json";
  atomic_write(csv, to_csv(t, meta));
  atomic_write(js, to_json(t, meta).dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Models

inline nlohmann::json model_to_json(const MixtureModel& m) {
  nlohmann::json j;
  j["components"] = nlohmann::json::array();
  for (const Component& c : m.components()) {
    j["components"].push_back({{"mean", c.mean}, {"sigma", c.sigma}, {"weight", c.weight}});
  }
  return j;
}

/// {"components": [{"mean": [...], "sigma": s, "weight": w}, ...]}
inline MixtureModel model_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("components") || !j["components"].is_array()) {
    throw std::domain_error("model: expected an object with a 'components' array");
  }
  std::vector<Component> comps;
  std::size_t idx = 0;
  for (const auto& c : j["components"]) {
    const std::string where = "model.components[" + std::to_string(idx++) + "]";
    for (const char* key : {"mean", "sigma", "weight"}) {
      if (!c.contains(key)) throw std::domain_error(where + ": missing key '" + key + "'");
    }
    try {
      comps.push_back({c["mean"].get<Vec>(), c["sigma"].get<double>(), c["weight"].get<double>()});
    } catch (const nlohmann::json::exception& e) {
      throw std::domain_error(where + ": " + e.what());
    }
  }
  return MixtureModel(std::move(comps));
}

// ---------------------------------------------------------------------------
// Rate constants

inline nlohmann::json rate_constants_to_json(const RateConstants& a) {
  return {{"a1", a.a1}, {"a2", a.a2}, {"a3", a.a3}, {"a4", a.a4},
          {"a5", a.a5}, {"a6", a.a6}, {"a7", a.a7}, {"a8", a.a8}};
}

inline RateConstants rate_constants_from_json(const nlohmann::json& j) {
  const nlohmann::json& c = j.contains("constants") ? j["constants"] : j;
  auto get = [&](const char* k) {
    if (!c.contains(k)) throw std::domain_error(std::string("rate constants: missing '") + k + "'");
    return c[k].get<double>();
  };
  return {get("a1"), get("a2"), get("a3"), get("a4"), get("a5"), get("a6"), get("a7"), get("a8")};
}

inline RateConstants load_rate_constants(const std::filesystem::path& path) {
  return rate_constants_from_json(nlohmann::json::parse(read_file(path)));
}

#ifdef KMLAB_DATA_DIR
inline std::filesystem::path shipped_rate_constants_path() {
  return std::filesystem::path(KMLAB_DATA_DIR) / "rate_constants.json";
}
#endif

// ---------------------------------------------------------------------------
// Trajectories

inline Table trajectory_table(const Trajectory& tr) {
  Table t{{"t", "cos2", "growth_factor", "regime", "samples"}, {}};
  for (const auto& r : tr.records) {
    t.add({std::to_string(r.t), fmt_double(r.cos2), fmt_double(r.growth_factor), std::string(to_string(r.regime)),
           std::to_string(r.samples)});
  }
  return t;
}

// ---------------------------------------------------------------------------
// Sample files: little-endian binary, header (uint64 d, uint64 n), then n*d
// doubles row-major. Labels are not stored.

inline void write_samples(const std::filesystem::path& path, const SampleSet& s) {
  std::string buf;
  const std::uint64_t hdr[2] = {s.dim, s.size()};
  buf.append(reinterpret_cast<const char*>(hdr), sizeof(hdr));
  buf.append(reinterpret_cast<const char*>(s.points.data()), s.points.size() * sizeof(double));
  atomic_write(path, buf);
}

inline SampleSet read_samples(const std::filesystem::path& path) {
  const std::string buf = read_file(path);
  std::uint64_t hdr[2];
  if (buf.size() < sizeof(hdr)) throw std::domain_error("sample file too short: " + path.string());
  std::memcpy(hdr, buf.data(), sizeof(hdr));
  if (hdr[0] == 0 || buf.size() != sizeof(hdr) + hdr[0] * hdr[1] * sizeof(double)) {
    throw std::domain_error("sample file size does not match its header: " + path.string());
  }
  SampleSet s;
  s.dim = hdr[0];
  s.points.resize(hdr[0] * hdr[1]);
  std::memcpy(s.points.data(), buf.data() + sizeof(hdr), s.points.size() * sizeof(double));
  s.labels.assign(hdr[1], 0);
  return s;
}

}  // namespace kmlab
