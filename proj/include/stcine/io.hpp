#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "stcine/volume.hpp"

namespace stcine::io {

/// Flat key-value text config: one `key = value` per line, '#' comments.
/// Repeated structures use indexed key groups (e.g. "ellipse.0.cx").
class Config {
 public:
  Config() = default;

  static Config parse(const std::string& text);
  static Config load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;
  std::string to_string() const;

  bool has(const std::string& key) const { return kv_.count(key) > 0; }

  std::string get_str(const std::string& key) const;
  std::string get_str(const std::string& key, const std::string& fallback) const;
  int64_t get_int(const std::string& key) const;
  int64_t get_int(const std::string& key, int64_t fallback) const;
  double get_double(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

  void set(const std::string& key, const std::string& value) { kv_[key] = value; }
  void set_int(const std::string& key, int64_t value);
  void set_double(const std::string& key, double value);

  /// Number of entries of an indexed group, i.e. largest n such that
  /// "<prefix>.<i>.<...>" exists for all i < n.
  int group_count(const std::string& prefix) const;

  const std::map<std::string, std::string>& entries() const { return kv_; }

 private:
  std::map<std::string, std::string> kv_;
};

/// Minimal CSV writer; numeric cells are written round-trip exact.
class CsvWriter {
 public:
  explicit CsvWriter(const std::filesystem::path& path);
  ~CsvWriter();
  CsvWriter(const CsvWriter&) = delete;
  CsvWriter& operator=(const CsvWriter&) = delete;

  void cell(const std::string& s);
  void cell(double x);
  void cell(int64_t x);
  void end_row();

 private:
  struct Impl;
  Impl* impl_;
};

std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path);

// --- binary volume container (header + little-endian IEEE-754 doubles) ---

void save_volume(const std::filesystem::path& path, const RealVolume& v);
void save_volume(const std::filesystem::path& path, const ComplexVolume& v);
RealVolume load_real_volume(const std::filesystem::path& path);
ComplexVolume load_complex_volume(const std::filesystem::path& path);
bool volume_is_complex(const std::filesystem::path& path);

/// 16-bit binary PGM, values linearly mapped from [lo, hi] to [0, 65535].
void write_pgm16(const std::filesystem::path& path, const Mat<double>& img, double lo, double hi);

}  // namespace stcine::io
