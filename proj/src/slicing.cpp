#include "stcine/slicing.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

#include "stcine/io.hpp"

namespace stcine::slicing {

const char* to_string(SliceKind k) {
  switch (k) {
    case SliceKind::XyFrame: return "xy-frame";
    case SliceKind::XtSlice: return "xt-slice";
    case SliceKind::YtSlice: return "yt-slice";
    case SliceKind::XytChannels: return "xyt-channels";
  }
  return "?";
}

const char* to_string(DomainMode m) {
  switch (m) {
    case DomainMode::Xy: return "xy";
    case DomainMode::XtYt: return "xt-yt";
    case DomainMode::XytChannels: return "xy-t-channels";
  }
  return "?";
}

const char* to_string(LabelMode m) {
  return m == LabelMode::GroundTruth ? "ground-truth" : "residual";
}

DomainMode domain_from_string(const std::string& s) {
  if (s == "xy") return DomainMode::Xy;
  if (s == "xt-yt") return DomainMode::XtYt;
  if (s == "xy-t-channels") return DomainMode::XytChannels;
  throw std::invalid_argument("unknown domain mode '" + s + "'");
}

LabelMode label_mode_from_string(const std::string& s) {
  if (s == "ground-truth") return LabelMode::GroundTruth;
  if (s == "residual") return LabelMode::Residual;
  throw std::invalid_argument("unknown label mode '" + s + "'");
}

RealVolume compute_residual(const RealVolume& x_i, const RealVolume& x) {
  if (!x_i.same_shape(x)) throw std::invalid_argument("residual: shape mismatch");
  RealVolume r(x_i.nx, x_i.ny, x_i.nt);
  for (size_t i = 0; i < r.size(); ++i) r.v[i] = x_i.v[i] - x.v[i];
  return r;
}

Mat<double> extract_xt(const RealVolume& vol, int y) {
  if (y < 0 || y >= vol.ny) throw std::out_of_range("extract_xt: y out of range");
  Mat<double> m(vol.nx, vol.nt);
  for (int t = 0; t < vol.nt; ++t)
    for (int x = 0; x < vol.nx; ++x) m(x, t) = vol(x, y, t);
  return m;
}

Mat<double> extract_yt(const RealVolume& vol, int x) {
  if (x < 0 || x >= vol.nx) throw std::out_of_range("extract_yt: x out of range");
  Mat<double> m(vol.ny, vol.nt);
  for (int t = 0; t < vol.nt; ++t)
    for (int y = 0; y < vol.ny; ++y) m(y, t) = vol(x, y, t);
  return m;
}

namespace {

Patch crop_frame(const RealVolume& v, int t, int x0, int y0, int w, int h) {
  Patch p(1, h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) p.at(0, y, x) = v(x0 + x, y0 + y, t);
  return p;
}

Patch crop_xt(const RealVolume& v, int y, int x0, int w) {
  Patch p(1, w, v.nt);
  for (int t = 0; t < v.nt; ++t)
    for (int x = 0; x < w; ++x) p.at(0, x, t) = v(x0 + x, y, t);
  return p;
}

Patch crop_yt(const RealVolume& v, int x, int y0, int h) {
  Patch p(1, h, v.nt);
  for (int t = 0; t < v.nt; ++t)
    for (int y = 0; y < h; ++y) p.at(0, y, t) = v(x, y0 + y, t);
  return p;
}

Patch crop_channels(const RealVolume& v, int x0, int y0, int w, int h) {
  Patch p(v.nt, h, w);
  for (int t = 0; t < v.nt; ++t)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) p.at(t, y, x) = v(x0 + x, y0 + y, t);
  return p;
}

}  // namespace

std::vector<SliceSample> build_dataset(const std::vector<VolumePair>& pairs,
                                       const DatasetSpec& spec) {
  if (pairs.empty()) throw std::invalid_argument("build_dataset: no volumes");
  if (spec.crop < 0) throw std::invalid_argument("build_dataset: negative crop");
  const RealVolume& first = pairs.front().input;
  for (const auto& p : pairs) {
    if (!p.input.same_shape(p.ground_truth))
      throw std::invalid_argument("build_dataset: input/ground-truth shape mismatch");
    if (!p.input.same_shape(first)) throw std::invalid_argument("build_dataset: volumes differ in shape");
  }
  int c = spec.crop;
  int w = first.nx - 2 * c, h = first.ny - 2 * c;
  if (w < 1 || h < 1) throw std::invalid_argument("build_dataset: crop exceeds extent");

  std::vector<SliceSample> out;
  for (const auto& pair : pairs) {
    RealVolume label_vol = spec.label_mode == LabelMode::GroundTruth
                               ? pair.ground_truth
                               : compute_residual(pair.input, pair.ground_truth);
    switch (spec.mode) {
      case DomainMode::Xy:
        for (int t = 0; t < first.nt; ++t) {
          SliceSample s;
          s.origin = {pair.subject, pair.slice_z, SliceKind::XyFrame, t, c, c};
          s.input = crop_frame(pair.input, t, c, c, w, h);
          s.label = crop_frame(label_vol, t, c, c, w, h);
          out.push_back(std::move(s));
        }
        break;
      case DomainMode::XtYt:
        for (int y = c; y < first.ny - c; ++y) {
          SliceSample s;
          s.origin = {pair.subject, pair.slice_z, SliceKind::XtSlice, y, c, 0};
          s.input = crop_xt(pair.input, y, c, w);
          s.label = crop_xt(label_vol, y, c, w);
          out.push_back(std::move(s));
        }
        for (int x = c; x < first.nx - c; ++x) {
          SliceSample s;
          s.origin = {pair.subject, pair.slice_z, SliceKind::YtSlice, x, c, 0};
          s.input = crop_yt(pair.input, x, c, h);
          s.label = crop_yt(label_vol, x, c, h);
          out.push_back(std::move(s));
        }
        break;
      case DomainMode::XytChannels: {
        SliceSample s;
        s.origin = {pair.subject, pair.slice_z, SliceKind::XytChannels, 0, c, c};
        s.input = crop_channels(pair.input, c, c, w, h);
        s.label = crop_channels(label_vol, c, c, w, h);
        out.push_back(std::move(s));
        break;
      }
    }
  }
  return out;
}

DatasetCounts dataset_counts(int64_t n, int64_t nz, int64_t nx_cropped, int64_t ny_cropped,
                             int64_t nt) {
  return {n * nz * nt, n * nz, n * (nx_cropped + ny_cropped) * nz};
}

namespace {

void flip_cols(Patch& p) {
  for (int c = 0; c < p.channels; ++c)
    for (int r = 0; r < p.rows; ++r)
      for (int a = 0, b = p.cols - 1; a < b; ++a, --b) std::swap(p.at(c, r, a), p.at(c, r, b));
}

void flip_rows(Patch& p) {
  for (int c = 0; c < p.channels; ++c)
    for (int a = 0, b = p.rows - 1; a < b; ++a, --b)
      for (int col = 0; col < p.cols; ++col) std::swap(p.at(c, a, col), p.at(c, b, col));
}

/// Cyclic shift along the time axis: columns for xt/yt slices, channels for
/// sequence-as-channels stacks.
void shift_time(Patch& p, SliceKind kind, int s) {
  if (s == 0) return;
  Patch src = p;
  if (kind == SliceKind::XtSlice || kind == SliceKind::YtSlice) {
    int nt = p.cols;
    if (std::abs(s) >= nt) throw std::invalid_argument("augment: shift exceeds temporal extent");
    for (int c = 0; c < p.channels; ++c)
      for (int r = 0; r < p.rows; ++r)
        for (int t = 0; t < nt; ++t) p.at(c, r, (t + s % nt + nt) % nt) = src.at(c, r, t);
  } else if (kind == SliceKind::XytChannels) {
    int nt = p.channels;
    if (std::abs(s) >= nt) throw std::invalid_argument("augment: shift exceeds temporal extent");
    for (int c = 0; c < nt; ++c)
      for (int r = 0; r < p.rows; ++r)
        for (int col = 0; col < p.cols; ++col) p.at((c + s % nt + nt) % nt, r, col) = src.at(c, r, col);
  } else {
    throw std::invalid_argument("augment: temporal shift on a sample without a time axis");
  }
}

}  // namespace

SliceSample augment(const SliceSample& sample, const AugmentOps& ops, LabelMode label_mode) {
  SliceSample out = sample;
  if (ops.flip_h) {
    flip_cols(out.input);
    flip_cols(out.label);
  }
  if (ops.flip_v) {
    flip_rows(out.input);
    flip_rows(out.label);
  }
  if (ops.t_shift != 0) {
    shift_time(out.input, out.origin.kind, ops.t_shift);
    shift_time(out.label, out.origin.kind, ops.t_shift);
  }
  if (ops.offset != 0.0) {
    for (auto& v : out.input.v) v += ops.offset;
    if (label_mode == LabelMode::GroundTruth)
      for (auto& v : out.label.v) v += ops.offset;
  }
  return out;
}

AugmentOps random_augment_ops(int nt, double max_offset, Rng& rng) {
  AugmentOps ops;
  ops.flip_h = rng.next_double() < 0.5;
  ops.flip_v = rng.next_double() < 0.5;
  ops.t_shift = nt > 1 ? rng.uniform_int(-(nt - 1), nt - 1) : 0;
  ops.offset = rng.uniform(-max_offset, max_offset);
  return ops;
}

std::vector<int> window_offsets(int extent, int window, int stride) {
  if (window < 1 || window > extent) throw std::invalid_argument("window_offsets: bad window");
  if (stride < 1) throw std::invalid_argument("window_offsets: stride must be >= 1");
  std::vector<int> offs;
  for (int o = 0; o + window <= extent; o += stride) offs.push_back(o);
  if (offs.back() + window < extent) offs.push_back(extent - window);
  return offs;
}

std::vector<SliceSample> extract_for_prediction(const RealVolume& x_i, DomainMode mode,
                                                int window_x, int window_y, int stride,
                                                int subject, int slice_z) {
  std::vector<SliceSample> out;
  auto offs_x = window_offsets(x_i.nx, window_x, stride);
  auto offs_y = window_offsets(x_i.ny, window_y, stride);
  switch (mode) {
    case DomainMode::Xy:
      for (int t = 0; t < x_i.nt; ++t)
        for (int oy : offs_y)
          for (int ox : offs_x) {
            SliceSample s;
            s.origin = {subject, slice_z, SliceKind::XyFrame, t, ox, oy};
            s.input = crop_frame(x_i, t, ox, oy, window_x, window_y);
            out.push_back(std::move(s));
          }
      break;
    case DomainMode::XtYt:
      for (int y = 0; y < x_i.ny; ++y)
        for (int ox : offs_x) {
          SliceSample s;
          s.origin = {subject, slice_z, SliceKind::XtSlice, y, ox, 0};
          s.input = crop_xt(x_i, y, ox, window_x);
          out.push_back(std::move(s));
        }
      for (int x = 0; x < x_i.nx; ++x)
        for (int oy : offs_y) {
          SliceSample s;
          s.origin = {subject, slice_z, SliceKind::YtSlice, x, oy, 0};
          s.input = crop_yt(x_i, x, oy, window_y);
          out.push_back(std::move(s));
        }
      break;
    case DomainMode::XytChannels:
      for (int oy : offs_y)
        for (int ox : offs_x) {
          SliceSample s;
          s.origin = {subject, slice_z, SliceKind::XytChannels, 0, ox, oy};
          s.input = crop_channels(x_i, ox, oy, window_x, window_y);
          out.push_back(std::move(s));
        }
      break;
  }
  return out;
}

Reassembled reassemble(const std::vector<std::pair<SliceOrigin, Patch>>& predictions, int nx,
                       int ny, int nt) {
  RealVolume sum(nx, ny, nt);
  Volume<int> count(nx, ny, nt);
  auto add = [&](int x, int y, int t, double v) {
    if (x < 0 || x >= nx || y < 0 || y >= ny || t < 0 || t >= nt)
      throw std::out_of_range("reassemble: prediction outside the target volume");
    sum(x, y, t) += v;
    count(x, y, t) += 1;
  };
  for (const auto& [origin, p] : predictions) {
    switch (origin.kind) {
      case SliceKind::XyFrame:
        if (p.channels != 1) throw std::invalid_argument("reassemble: xy frame must have 1 channel");
        for (int r = 0; r < p.rows; ++r)
          for (int c = 0; c < p.cols; ++c)
            add(origin.off0 + c, origin.off1 + r, origin.index, p.at(0, r, c));
        break;
      case SliceKind::XtSlice:
        for (int r = 0; r < p.rows; ++r)
          for (int t = 0; t < p.cols; ++t) add(origin.off0 + r, origin.index, t, p.at(0, r, t));
        break;
      case SliceKind::YtSlice:
        for (int r = 0; r < p.rows; ++r)
          for (int t = 0; t < p.cols; ++t) add(origin.index, origin.off0 + r, t, p.at(0, r, t));
        break;
      case SliceKind::XytChannels:
        for (int ch = 0; ch < p.channels; ++ch)
          for (int r = 0; r < p.rows; ++r)
            for (int c = 0; c < p.cols; ++c)
              add(origin.off0 + c, origin.off1 + r, ch, p.at(ch, r, c));
        break;
    }
  }
  for (size_t i = 0; i < sum.size(); ++i) {
    if (count.v[i] == 0) throw std::runtime_error("reassemble: uncovered voxel");
    sum.v[i] /= count.v[i];
  }
  return {std::move(sum), std::move(count)};
}

// --- persistence: one binary file per sample plus a CSV manifest ---

namespace {

constexpr char kSMagic[4] = {'S', 'T', 'C', 'S'};

void write_patch(std::ofstream& out, const Patch& p) {
  uint32_t dims[3] = {(uint32_t)p.channels, (uint32_t)p.rows, (uint32_t)p.cols};
  out.write(reinterpret_cast<const char*>(dims), sizeof(dims));
  out.write(reinterpret_cast<const char*>(p.v.data()), static_cast<std::streamsize>(p.size() * 8));
}

Patch read_patch(std::ifstream& in) {
  uint32_t dims[3];
  in.read(reinterpret_cast<char*>(dims), sizeof(dims));
  Patch p;
  if (dims[0] == 0) return p;
  p = Patch((int)dims[0], (int)dims[1], (int)dims[2]);
  in.read(reinterpret_cast<char*>(p.v.data()), static_cast<std::streamsize>(p.size() * 8));
  return p;
}

SliceKind kind_from_string(const std::string& s) {
  if (s == "xy-frame") return SliceKind::XyFrame;
  if (s == "xt-slice") return SliceKind::XtSlice;
  if (s == "yt-slice") return SliceKind::YtSlice;
  if (s == "xyt-channels") return SliceKind::XytChannels;
  throw std::invalid_argument("unknown slice kind '" + s + "'");
}

}  // namespace

void save_dataset(const std::filesystem::path& dir, const std::vector<SliceSample>& samples) {
  std::filesystem::create_directories(dir);
  io::CsvWriter manifest(dir / "manifest.csv");
  for (const auto* h : {"file", "subject", "slice_z", "kind", "index", "off0", "off1",
                        "channels", "rows", "cols"})
    manifest.cell(std::string(h));
  manifest.end_row();
  char name[32];
  for (size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    std::snprintf(name, sizeof(name), "sample_%06zu.bin", i);
    std::ofstream out(dir / name, std::ios::binary);
    if (!out) throw std::runtime_error("dataset: cannot write sample file");
    out.write(kSMagic, 4);
    write_patch(out, s.input);
    write_patch(out, s.label);
    manifest.cell(std::string(name));
    manifest.cell(static_cast<int64_t>(s.origin.subject));
    manifest.cell(static_cast<int64_t>(s.origin.slice_z));
    manifest.cell(std::string(to_string(s.origin.kind)));
    manifest.cell(static_cast<int64_t>(s.origin.index));
    manifest.cell(static_cast<int64_t>(s.origin.off0));
    manifest.cell(static_cast<int64_t>(s.origin.off1));
    manifest.cell(static_cast<int64_t>(s.input.channels));
    manifest.cell(static_cast<int64_t>(s.input.rows));
    manifest.cell(static_cast<int64_t>(s.input.cols));
    manifest.end_row();
  }
}

std::vector<SliceSample> load_dataset(const std::filesystem::path& dir) {
  auto rows = io::read_csv(dir / "manifest.csv");
  if (rows.empty()) throw std::runtime_error("dataset: empty manifest");
  std::vector<SliceSample> samples;
  for (size_t i = 1; i < rows.size(); ++i) {
    const auto& r = rows[i];
    if (r.size() < 10) throw std::runtime_error("dataset: malformed manifest row");
    SliceSample s;
    s.origin.subject = std::stoi(r[1]);
    s.origin.slice_z = std::stoi(r[2]);
    s.origin.kind = kind_from_string(r[3]);
    s.origin.index = std::stoi(r[4]);
    s.origin.off0 = std::stoi(r[5]);
    s.origin.off1 = std::stoi(r[6]);
    std::ifstream in(dir / r[0], std::ios::binary);
    if (!in) throw std::runtime_error("dataset: cannot open " + r[0]);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kSMagic, 4) != 0)
      throw std::runtime_error("dataset: bad magic in " + r[0]);
    s.input = read_patch(in);
    s.label = read_patch(in);
    if (!in) throw std::runtime_error("dataset: truncated sample " + r[0]);
    samples.push_back(std::move(s));
  }
  return samples;
}

}  // namespace stcine::slicing
