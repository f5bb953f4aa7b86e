#include "stcine/homology.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "stcine/io.hpp"
#include "stcine/rng.hpp"

namespace stcine::homology {

namespace {

double dist(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

void check_cloud(const PointCloud& cloud) {
  if (cloud.size() < 1) throw std::invalid_argument("homology: empty cloud");
  for (const auto& p : cloud.points) {
    if (static_cast<int>(p.size()) != cloud.dim)
      throw std::invalid_argument("homology: inconsistent point dimension");
    for (double x : p)
      if (!std::isfinite(x)) throw std::invalid_argument("homology: non-finite coordinate");
  }
}

}  // namespace

Mat<double> pairwise_distances(const PointCloud& cloud) {
  check_cloud(cloud);
  int n = cloud.size();
  Mat<double> d(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) d(i, j) = d(j, i) = dist(cloud.points[i], cloud.points[j]);
  return d;
}

PointCloud normalize_by_diameter(const PointCloud& cloud) {
  check_cloud(cloud);
  if (cloud.size() < 2) throw std::invalid_argument("homology: need >= 2 points to normalise");
  double diam = 0.0;
  int n = cloud.size();
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) diam = std::max(diam, dist(cloud.points[i], cloud.points[j]));
  if (diam <= 0.0) throw std::invalid_argument("homology: zero diameter");
  PointCloud out = cloud;
  for (auto& p : out.points)
    for (auto& x : p) x /= diam;
  return out;
}

Barcode h0_barcode(const PointCloud& cloud) {
  check_cloud(cloud);
  int n = cloud.size();
  Barcode bc;
  bc.diameter = 1.0;
  if (n == 1) return bc;

  // Prim's MST on the complete Euclidean graph, O(n^2) without storing the
  // distance matrix.
  std::vector<char> in_tree(n, 0);
  std::vector<double> best(n, std::numeric_limits<double>::infinity());
  in_tree[0] = 1;
  for (int j = 1; j < n; ++j) best[j] = dist(cloud.points[0], cloud.points[j]);
  bc.deaths.reserve(n - 1);
  for (int added = 1; added < n; ++added) {
    int pick = -1;
    double pick_d = std::numeric_limits<double>::infinity();
    for (int j = 0; j < n; ++j)
      if (!in_tree[j] && best[j] < pick_d) {
        pick = j;
        pick_d = best[j];
      }
    in_tree[pick] = 1;
    bc.deaths.push_back(pick_d);
    for (int j = 0; j < n; ++j)
      if (!in_tree[j]) best[j] = std::min(best[j], dist(cloud.points[pick], cloud.points[j]));
  }
  std::sort(bc.deaths.begin(), bc.deaths.end());
  return bc;
}

int betti0(const Barcode& barcode, int n_points, double r) {
  auto it = std::upper_bound(barcode.deaths.begin(), barcode.deaths.end(), r);
  return n_points - static_cast<int>(it - barcode.deaths.begin());
}

PointCloud sample_patches(const std::vector<Mat<double>>& images, int count, int patch_size,
                          uint64_t seed) {
  if (images.empty()) throw std::invalid_argument("sample_patches: no images");
  if (count < 1) throw std::invalid_argument("sample_patches: count must be >= 1");
  for (const auto& img : images)
    if (img.rows < patch_size || img.cols < patch_size)
      throw std::invalid_argument("sample_patches: image smaller than the patch");
  Rng rng(seed);
  PointCloud cloud;
  cloud.dim = patch_size * patch_size;
  cloud.points.reserve(count);
  for (int i = 0; i < count; ++i) {
    const Mat<double>& img = images[rng.next_below(images.size())];
    int r0 = static_cast<int>(rng.next_below(img.rows - patch_size + 1));
    int c0 = static_cast<int>(rng.next_below(img.cols - patch_size + 1));
    std::vector<double> p(cloud.dim);
    for (int r = 0; r < patch_size; ++r)
      for (int c = 0; c < patch_size; ++c) p[r * patch_size + c] = img(r0 + r, c0 + c);
    cloud.points.push_back(std::move(p));
  }
  return cloud;
}

std::vector<double> averaged_betti_curve(const std::vector<Mat<double>>& images, int repeats,
                                         int count, int patch_size,
                                         const std::vector<double>& r_grid, uint64_t seed) {
  if (repeats < 1) throw std::invalid_argument("averaged_betti_curve: repeats must be >= 1");
  std::vector<double> mean(r_grid.size(), 0.0);
  for (int rep = 0; rep < repeats; ++rep) {
    PointCloud cloud = sample_patches(images, count, patch_size, derive_seed(seed, rep));
    cloud = normalize_by_diameter(cloud);
    Barcode bc = h0_barcode(cloud);
    for (size_t i = 0; i < r_grid.size(); ++i) mean[i] += betti0(bc, cloud.size(), r_grid[i]);
  }
  for (auto& v : mean) v /= repeats;
  return mean;
}

void save_barcode_csv(const std::filesystem::path& path, const Barcode& barcode) {
  io::CsvWriter csv(path);
  csv.cell(std::string("birth"));
  csv.cell(std::string("death"));
  csv.end_row();
  for (double d : barcode.deaths) {
    csv.cell(0.0);
    csv.cell(d);
    csv.end_row();
  }
}

std::vector<double> uniform_r_grid(int n_points, double r_max) {
  std::vector<double> g(n_points);
  for (int i = 0; i < n_points; ++i) g[i] = r_max * i / (n_points - 1);
  return g;
}

}  // namespace stcine::homology
