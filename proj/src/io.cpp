#include "stcine/io.hpp"

#include <cinttypes>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace stcine::io {

namespace {

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void missing_key(const std::string& key) {
  throw std::invalid_argument("config: missing key '" + key + "'");
}

}  // namespace

Config Config::parse(const std::string& text) {
  Config c;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config: line " + std::to_string(lineno) + " has no '='");
    std::string key = trim(line.substr(0, eq));
    std::string val = trim(line.substr(eq + 1));
    if (key.empty()) throw std::invalid_argument("config: empty key on line " + std::to_string(lineno));
    c.kv_[key] = val;
  }
  return c;
}

Config Config::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

void Config::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("config: cannot write " + path.string());
  out << to_string();
}

std::string Config::to_string() const {
  std::string s;
  for (const auto& [k, v] : kv_) s += k + " = " + v + "\n";
  return s;
}

std::string Config::get_str(const std::string& key) const {
  auto it = kv_.find(key);
  if (it == kv_.end()) missing_key(key);
  return it->second;
}

std::string Config::get_str(const std::string& key, const std::string& fallback) const {
  auto it = kv_.find(key);
  return it == kv_.end() ? fallback : it->second;
}

int64_t Config::get_int(const std::string& key) const {
  const std::string s = get_str(key);
  size_t pos = 0;
  int64_t v = std::stoll(s, &pos);
  if (pos != s.size()) throw std::invalid_argument("config: key '" + key + "' is not an integer");
  return v;
}

int64_t Config::get_int(const std::string& key, int64_t fallback) const {
  return has(key) ? get_int(key) : fallback;
}

double Config::get_double(const std::string& key) const {
  const std::string s = get_str(key);
  size_t pos = 0;
  double v = std::stod(s, &pos);
  if (pos != s.size()) throw std::invalid_argument("config: key '" + key + "' is not a number");
  return v;
}

double Config::get_double(const std::string& key, double fallback) const {
  return has(key) ? get_double(key) : fallback;
}

bool Config::get_bool(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  const std::string s = get_str(key);
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw std::invalid_argument("config: key '" + key + "' is not a boolean");
}

void Config::set_int(const std::string& key, int64_t value) { kv_[key] = std::to_string(value); }

void Config::set_double(const std::string& key, double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  kv_[key] = buf;
}

int Config::group_count(const std::string& prefix) const {
  int n = 0;
  while (true) {
    std::string probe = prefix + "." + std::to_string(n) + ".";
    auto it = kv_.lower_bound(probe);
    if (it == kv_.end() || it->first.compare(0, probe.size(), probe) != 0) break;
    ++n;
  }
  return n;
}

// --- CSV ---

struct CsvWriter::Impl {
  std::ofstream out;
  bool row_started = false;
};

CsvWriter::CsvWriter(const std::filesystem::path& path) : impl_(new Impl) {
  impl_->out.open(path);
  if (!impl_->out) {
    delete impl_;
    throw std::runtime_error("csv: cannot write " + path.string());
  }
}

CsvWriter::~CsvWriter() { delete impl_; }

void CsvWriter::cell(const std::string& s) {
  if (impl_->row_started) impl_->out << ',';
  impl_->out << s;
  impl_->row_started = true;
}

void CsvWriter::cell(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  cell(std::string(buf));
}

void CsvWriter::cell(int64_t x) { cell(std::to_string(x)); }

void CsvWriter::end_row() {
  impl_->out << '\n';
  impl_->row_started = false;
}

std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("csv: cannot open " + path.string());
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<std::string> row;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) row.push_back(cell);
    rows.push_back(std::move(row));
  }
  return rows;
}

// --- binary volume container ---

namespace {

constexpr char kMagic[4] = {'S', 'T', 'C', 'V'};
constexpr uint32_t kVersion = 1;
constexpr uint8_t kDtypeReal = 0;
constexpr uint8_t kDtypeComplex = 1;

static_assert(sizeof(double) == 8, "expects IEEE-754 binary64");

void write_u32(std::ofstream& out, uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); }
uint32_t read_u32(std::ifstream& in) {
  uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), 4);
  return v;
}

struct VolumeHeader {
  uint8_t dtype;
  uint32_t nx, ny, nt;
};

void write_header(std::ofstream& out, const VolumeHeader& h) {
  out.write(kMagic, 4);
  write_u32(out, kVersion);
  uint8_t pad[3] = {0, 0, 0};
  out.write(reinterpret_cast<const char*>(&h.dtype), 1);
  out.write(reinterpret_cast<const char*>(pad), 3);
  write_u32(out, h.nx);
  write_u32(out, h.ny);
  write_u32(out, h.nt);
}

VolumeHeader read_header(std::ifstream& in, const std::filesystem::path& path) {
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0)
    throw std::runtime_error("volume: bad magic in " + path.string());
  uint32_t version = read_u32(in);
  if (version != kVersion) throw std::runtime_error("volume: unsupported version in " + path.string());
  VolumeHeader h{};
  uint8_t pad[3];
  in.read(reinterpret_cast<char*>(&h.dtype), 1);
  in.read(reinterpret_cast<char*>(pad), 3);
  h.nx = read_u32(in);
  h.ny = read_u32(in);
  h.nt = read_u32(in);
  if (!in) throw std::runtime_error("volume: truncated header in " + path.string());
  return h;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("volume: cannot write " + path.string());
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("volume: cannot open " + path.string());
  return in;
}

}  // namespace

void save_volume(const std::filesystem::path& path, const RealVolume& v) {
  auto out = open_out(path);
  write_header(out, {kDtypeReal, (uint32_t)v.nx, (uint32_t)v.ny, (uint32_t)v.nt});
  out.write(reinterpret_cast<const char*>(v.v.data()), static_cast<std::streamsize>(v.size() * 8));
  if (!out) throw std::runtime_error("volume: short write to " + path.string());
}

void save_volume(const std::filesystem::path& path, const ComplexVolume& v) {
  auto out = open_out(path);
  write_header(out, {kDtypeComplex, (uint32_t)v.nx, (uint32_t)v.ny, (uint32_t)v.nt});
  out.write(reinterpret_cast<const char*>(v.v.data()), static_cast<std::streamsize>(v.size() * 16));
  if (!out) throw std::runtime_error("volume: short write to " + path.string());
}

RealVolume load_real_volume(const std::filesystem::path& path) {
  auto in = open_in(path);
  VolumeHeader h = read_header(in, path);
  if (h.dtype != kDtypeReal) throw std::runtime_error("volume: " + path.string() + " is not real");
  RealVolume v(h.nx, h.ny, h.nt);
  in.read(reinterpret_cast<char*>(v.v.data()), static_cast<std::streamsize>(v.size() * 8));
  if (!in) throw std::runtime_error("volume: truncated data in " + path.string());
  return v;
}

ComplexVolume load_complex_volume(const std::filesystem::path& path) {
  auto in = open_in(path);
  VolumeHeader h = read_header(in, path);
  if (h.dtype != kDtypeComplex) throw std::runtime_error("volume: " + path.string() + " is not complex");
  ComplexVolume v(h.nx, h.ny, h.nt);
  in.read(reinterpret_cast<char*>(v.v.data()), static_cast<std::streamsize>(v.size() * 16));
  if (!in) throw std::runtime_error("volume: truncated data in " + path.string());
  return v;
}

bool volume_is_complex(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_header(in, path).dtype == kDtypeComplex;
}

// --- PGM ---

void write_pgm16(const std::filesystem::path& path, const Mat<double>& img, double lo, double hi) {
  if (hi <= lo) throw std::invalid_argument("pgm: empty intensity range");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("pgm: cannot write " + path.string());
  out << "P5\n" << img.cols << " " << img.rows << "\n65535\n";
  std::vector<uint8_t> bytes;
  bytes.reserve(img.size() * 2);
  for (int r = 0; r < img.rows; ++r) {
    for (int c = 0; c < img.cols; ++c) {
      double f = (img(r, c) - lo) / (hi - lo);
      f = f < 0.0 ? 0.0 : (f > 1.0 ? 1.0 : f);
      auto q = static_cast<uint16_t>(f * 65535.0 + 0.5);
      bytes.push_back(static_cast<uint8_t>(q >> 8));  // PGM is big-endian
      bytes.push_back(static_cast<uint8_t>(q & 0xff));
    }
  }
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace stcine::io
