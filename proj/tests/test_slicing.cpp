#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>

#include "stcine/rng.hpp"
#include "stcine/slicing.hpp"

using namespace stcine;
using namespace stcine::slicing;

namespace {

RealVolume random_volume(int nx, int ny, int nt, Rng& rng) {
  RealVolume v(nx, ny, nt);
  for (auto& x : v.v) x = rng.next_gaussian();
  return v;
}

/// Dyadic rationals with a short mantissa: differences are exact in IEEE
/// doubles, so algebraic round-trips can be checked bitwise.
RealVolume dyadic_volume(int nx, int ny, int nt, Rng& rng) {
  RealVolume v(nx, ny, nt);
  for (auto& x : v.v) x = static_cast<double>(rng.uniform_int(-4096, 4096)) / 1024.0;
  return v;
}

VolumePair random_pair(int nx, int ny, int nt, Rng& rng, int subject = 0, int z = 0) {
  VolumePair p;
  p.input = random_volume(nx, ny, nt, rng);
  p.ground_truth = random_volume(nx, ny, nt, rng);
  p.subject = subject;
  p.slice_z = z;
  return p;
}

}  // namespace

TEST_CASE("residual algebra") {
  Rng rng(1);
  auto x_i = random_volume(6, 5, 4, rng);
  auto x = random_volume(6, 5, 4, rng);
  SUBCASE("identical volumes give zero") {
    auto r = compute_residual(x, x);
    for (double v : r.v) CHECK(v == 0.0);
  }
  SUBCASE("zero truth returns the input") {
    RealVolume zero(6, 5, 4);
    auto r = compute_residual(x_i, zero);
    CHECK(r.v == x_i.v);
  }
  SUBCASE("input minus residual reconstructs the truth exactly on dyadic data") {
    auto a = dyadic_volume(6, 5, 4, rng);
    auto b = dyadic_volume(6, 5, 4, rng);
    auto r = compute_residual(a, b);
    for (size_t i = 0; i < r.size(); ++i) CHECK(a.v[i] - r.v[i] == b.v[i]);
  }
  SUBCASE("round-trip on generic data holds to one ulp") {
    auto r = compute_residual(x_i, x);
    for (size_t i = 0; i < r.size(); ++i)
      CHECK(x_i.v[i] - r.v[i] == doctest::Approx(x.v[i]).epsilon(1e-15));
  }
  RealVolume mismatched(5, 5, 4);
  CHECK_THROWS_AS(compute_residual(x_i, mismatched), std::invalid_argument);
}

TEST_CASE("spatio-temporal fibres extract exactly") {
  RealVolume v(4, 3, 2);
  v(2, 1, 0) = 7.0;
  SUBCASE("constant volume gives constant slices") {
    RealVolume c(4, 3, 2, 1.5);
    auto m = extract_xt(c, 0);
    CHECK(m.rows == 4);
    CHECK(m.cols == 2);
    for (double x : m.v) CHECK(x == 1.5);
  }
  SUBCASE("a single voxel shows up in exactly one position") {
    auto xt = extract_xt(v, 1);
    int nonzero = 0;
    for (int r = 0; r < xt.rows; ++r)
      for (int c = 0; c < xt.cols; ++c)
        if (xt(r, c) != 0.0) {
          ++nonzero;
          CHECK(r == 2);
          CHECK(c == 0);
        }
    CHECK(nonzero == 1);
    auto other = extract_xt(v, 0);
    for (double x : other.v) CHECK(x == 0.0);
  }
  SUBCASE("extract then reinsert reproduces the volume bit-exactly") {
    Rng rng(2);
    auto vol = random_volume(5, 6, 3, rng);
    RealVolume rebuilt(5, 6, 3);
    for (int y = 0; y < 6; ++y) {
      auto m = extract_xt(vol, y);
      for (int x = 0; x < 5; ++x)
        for (int t = 0; t < 3; ++t) rebuilt(x, y, t) = m(x, t);
    }
    CHECK(rebuilt.v == vol.v);
  }
  CHECK_THROWS_AS(extract_xt(v, 3), std::out_of_range);
  CHECK_THROWS_AS(extract_yt(v, 4), std::out_of_range);
}

TEST_CASE("dataset counts follow the closed forms") {
  // the 320 -> 220 crop instance: one subject, one slice
  auto c = dataset_counts(1, 1, 220, 220, 30);
  CHECK(c.frames == 30);
  CHECK(c.sequences == 1);
  CHECK(c.spatio_temporal == 440);

  auto big = dataset_counts(12, 12, 220, 220, 30);
  CHECK(big.frames == 4320);
  CHECK(big.spatio_temporal == 63360);
}

TEST_CASE("build_dataset produces the advertised sample counts and shapes") {
  Rng rng(3);
  std::vector<VolumePair> pairs;
  for (int s = 0; s < 2; ++s) pairs.push_back(random_pair(12, 10, 4, rng, s, 0));

  DatasetSpec spec;
  spec.crop = 2;
  SUBCASE("xy frames") {
    spec.mode = DomainMode::Xy;
    spec.label_mode = LabelMode::GroundTruth;
    auto ds = build_dataset(pairs, spec);
    CHECK(ds.size() == 2 * 4);
    CHECK(ds[0].input.rows == 10 - 4);
    CHECK(ds[0].input.cols == 12 - 4);
    CHECK(ds[0].label.v == ds[0].label.v);
  }
  SUBCASE("xt-yt slices") {
    spec.mode = DomainMode::XtYt;
    spec.label_mode = LabelMode::Residual;
    auto ds = build_dataset(pairs, spec);
    CHECK(static_cast<int64_t>(ds.size()) ==
          dataset_counts(2, 1, 12 - 4, 10 - 4, 4).spatio_temporal);
    // xt slices first: rows = cropped x extent, cols = nt
    CHECK(ds[0].origin.kind == SliceKind::XtSlice);
    CHECK(ds[0].input.rows == 8);
    CHECK(ds[0].input.cols == 4);
  }
  SUBCASE("sequence as channels") {
    spec.mode = DomainMode::XytChannels;
    auto ds = build_dataset(pairs, spec);
    CHECK(ds.size() == 2);
    CHECK(ds[0].input.channels == 4);
  }
  SUBCASE("residual labels satisfy input - label = truth") {
    std::vector<VolumePair> dyadic;
    for (int s2 = 0; s2 < 2; ++s2) {
      VolumePair p;
      p.input = dyadic_volume(12, 10, 4, rng);
      p.ground_truth = dyadic_volume(12, 10, 4, rng);
      p.subject = s2;
      dyadic.push_back(std::move(p));
    }
    auto& pairs = dyadic;
    spec.mode = DomainMode::Xy;
    spec.label_mode = LabelMode::Residual;
    auto res_ds = build_dataset(pairs, spec);
    spec.label_mode = LabelMode::GroundTruth;
    auto gt_ds = build_dataset(pairs, spec);
    for (size_t i = 0; i < res_ds.size(); ++i)
      for (size_t j = 0; j < res_ds[i].label.size(); ++j)
        CHECK(res_ds[i].input.v[j] - res_ds[i].label.v[j] == gt_ds[i].label.v[j]);
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(build_dataset({}, spec), std::invalid_argument);
    spec.crop = 6;
    CHECK_THROWS_AS(build_dataset(pairs, spec), std::invalid_argument);
  }
}

TEST_CASE("count law holds over a randomized sweep") {
  Rng rng(4);
  for (int rep = 0; rep < 10; ++rep) {
    int n = rng.uniform_int(1, 3), nz = rng.uniform_int(1, 2);
    int nx = rng.uniform_int(8, 14), ny = rng.uniform_int(8, 14), nt = rng.uniform_int(2, 5);
    int crop = rng.uniform_int(0, 2);
    std::vector<VolumePair> pairs;
    for (int s = 0; s < n; ++s)
      for (int z = 0; z < nz; ++z) pairs.push_back(random_pair(nx, ny, nt, rng, s, z));
    DatasetSpec spec;
    spec.crop = crop;
    auto counts = dataset_counts(n, nz, nx - 2 * crop, ny - 2 * crop, nt);
    spec.mode = DomainMode::Xy;
    CHECK(static_cast<int64_t>(build_dataset(pairs, spec).size()) == counts.frames);
    spec.mode = DomainMode::XtYt;
    CHECK(static_cast<int64_t>(build_dataset(pairs, spec).size()) == counts.spatio_temporal);
    spec.mode = DomainMode::XytChannels;
    CHECK(static_cast<int64_t>(build_dataset(pairs, spec).size()) == counts.sequences);
  }
}

TEST_CASE("augmentation ops behave as a group action") {
  Rng rng(5);
  std::vector<VolumePair> pairs = {random_pair(10, 10, 6, rng)};
  DatasetSpec spec;
  spec.mode = DomainMode::XtYt;
  spec.crop = 1;
  spec.label_mode = LabelMode::Residual;
  auto ds = build_dataset(pairs, spec);
  const SliceSample& s = ds.front();

  SUBCASE("identity ops leave the sample unchanged") {
    auto out = augment(s, AugmentOps{}, spec.label_mode);
    CHECK(out.input.v == s.input.v);
    CHECK(out.label.v == s.label.v);
  }
  SUBCASE("double horizontal flip is the identity") {
    AugmentOps f;
    f.flip_h = true;
    auto out = augment(augment(s, f, spec.label_mode), f, spec.label_mode);
    CHECK(out.input.v == s.input.v);
  }
  SUBCASE("shift by s then nt - s is the identity") {
    AugmentOps a, b;
    a.t_shift = 2;
    b.t_shift = 6 - 2;
    auto out = augment(augment(s, a, spec.label_mode), b, spec.label_mode);
    CHECK(out.input.v == s.input.v);
    CHECK(out.label.v == s.label.v);
  }
  SUBCASE("residual labels ignore the constant offset") {
    AugmentOps o;
    o.offset = 0.75;
    auto out = augment(s, o, LabelMode::Residual);
    CHECK(out.label.v == s.label.v);
    for (size_t i = 0; i < s.input.size(); ++i)
      CHECK(out.input.v[i] == doctest::Approx(s.input.v[i] + 0.75));
    auto gt = augment(s, o, LabelMode::GroundTruth);
    for (size_t i = 0; i < s.label.size(); ++i)
      CHECK(gt.label.v[i] == doctest::Approx(s.label.v[i] + 0.75));
  }
  SUBCASE("shift bounds are validated") {
    AugmentOps bad;
    bad.t_shift = 6;
    CHECK_THROWS_AS(augment(s, bad, spec.label_mode), std::invalid_argument);
  }
  SUBCASE("xy frames reject temporal shifts") {
    DatasetSpec xy = spec;
    xy.mode = DomainMode::Xy;
    auto frames = build_dataset(pairs, xy);
    AugmentOps shift;
    shift.t_shift = 1;
    CHECK_THROWS_AS(augment(frames.front(), shift, xy.label_mode), std::invalid_argument);
  }
}

TEST_CASE("window offsets cover the axis and match the enumeration oracle") {
  auto offs = window_offsets(320, 220, 50);
  CHECK(offs == std::vector<int>{0, 50, 100});

  // coverage counts per position against a direct enumeration
  std::vector<int> coverage(320, 0);
  for (int o : offs)
    for (int i = 0; i < 220; ++i) coverage[o + i]++;
  std::vector<int> oracle(320, 0);
  for (int p = 0; p < 320; ++p)
    for (int o : {0, 50, 100})
      if (p >= o && p < o + 220) oracle[p]++;
  CHECK(coverage == oracle);
  CHECK(coverage[0] == 1);
  CHECK(coverage[60] == 2);
  CHECK(coverage[150] == 3);
  CHECK(coverage[319] == 1);

  // the final window pins to the end when the stride overshoots
  auto tail = window_offsets(10, 4, 5);
  CHECK(tail == std::vector<int>{0, 5, 6});
  CHECK_THROWS_AS(window_offsets(8, 9, 2), std::invalid_argument);
}

TEST_CASE("reassembly averages overlapping predictions") {
  SUBCASE("a single full-size xyt prediction copies through") {
    Rng rng(6);
    auto vol = random_volume(6, 5, 3, rng);
    Patch p(3, 5, 6);
    for (int t = 0; t < 3; ++t)
      for (int y = 0; y < 5; ++y)
        for (int x = 0; x < 6; ++x) p.at(t, y, x) = vol(x, y, t);
    SliceOrigin origin{0, 0, SliceKind::XytChannels, 0, 0, 0};
    auto out = reassemble({{origin, p}}, 6, 5, 3);
    CHECK(out.volume.v == vol.v);
    for (int c : out.coverage.v) CHECK(c == 1);
  }
  SUBCASE("two identical overlapping patches leave values unchanged") {
    Patch p(1, 2, 2);
    p.v = {1, 2, 3, 4};
    SliceOrigin a{0, 0, SliceKind::XyFrame, 0, 0, 0};
    auto out = reassemble({{a, p}, {a, p}}, 2, 2, 1);
    CHECK(out.volume(0, 0, 0) == 1.0);
    CHECK(out.volume(1, 1, 0) == 4.0);
    for (int c : out.coverage.v) CHECK(c == 2);
  }
  SUBCASE("uncovered voxels are an error") {
    Patch p(1, 1, 1);
    p.v = {1.0};
    SliceOrigin a{0, 0, SliceKind::XyFrame, 0, 0, 0};
    CHECK_THROWS_AS(reassemble({{a, p}}, 2, 2, 1), std::runtime_error);
  }
}

TEST_CASE("label reassembly round-trips every mode bit-exactly") {
  Rng rng(7);
  std::vector<VolumePair> pairs = {random_pair(8, 6, 4, rng)};
  const RealVolume& truth = pairs.front().ground_truth;
  for (DomainMode mode : {DomainMode::Xy, DomainMode::XtYt, DomainMode::XytChannels}) {
    DatasetSpec spec;
    spec.mode = mode;
    spec.crop = 0;
    spec.label_mode = LabelMode::GroundTruth;
    auto ds = build_dataset(pairs, spec);
    std::vector<std::pair<SliceOrigin, Patch>> preds;
    for (auto& s : ds) preds.emplace_back(s.origin, s.label);
    auto out = reassemble(preds, 8, 6, 4);
    CHECK(out.volume.v == truth.v);
  }
}

TEST_CASE("prediction extraction covers the volume") {
  Rng rng(8);
  auto vol = random_volume(16, 16, 4, rng);
  for (DomainMode mode : {DomainMode::Xy, DomainMode::XtYt, DomainMode::XytChannels}) {
    auto samples = extract_for_prediction(vol, mode, 12, 12, 2);
    std::vector<std::pair<SliceOrigin, Patch>> preds;
    for (auto& s : samples) preds.emplace_back(s.origin, s.input);
    auto out = reassemble(preds, 16, 16, 4);  // throws if any voxel is uncovered
    for (int c : out.coverage.v) CHECK(c >= 1);
  }
  // xt-yt sample count: every slice position times the window offsets
  auto st = extract_for_prediction(vol, DomainMode::XtYt, 12, 12, 2);
  CHECK(st.size() == 2u * 16u * window_offsets(16, 12, 2).size());
}

TEST_CASE("datasets persist and reload") {
  Rng rng(9);
  std::vector<VolumePair> pairs = {random_pair(8, 8, 3, rng)};
  DatasetSpec spec;
  spec.mode = DomainMode::XtYt;
  spec.crop = 1;
  spec.label_mode = LabelMode::Residual;
  auto ds = build_dataset(pairs, spec);

  auto dir = std::filesystem::temp_directory_path() / "stcine_tests" / "dataset";
  std::filesystem::remove_all(dir);
  save_dataset(dir, ds);
  auto back = load_dataset(dir);
  REQUIRE(back.size() == ds.size());
  for (size_t i = 0; i < ds.size(); ++i) {
    CHECK(back[i].origin.kind == ds[i].origin.kind);
    CHECK(back[i].origin.index == ds[i].origin.index);
    CHECK(back[i].input.v == ds[i].input.v);
    CHECK(back[i].label.v == ds[i].label.v);
  }
}
