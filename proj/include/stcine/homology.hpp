#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "stcine/volume.hpp"

namespace stcine::homology {

/// Finite point set in R^d (rows = points).
struct PointCloud {
  int dim = 0;
  std::vector<std::vector<double>> points;
  std::string tag;  ///< manifold provenance, e.g. "xy-img"

  int size() const { return static_cast<int>(points.size()); }
};

/// H0 persistence of the Rips 1-skeleton: all components are born at r = 0
/// and die at the single-linkage merge radii.
struct Barcode {
  std::vector<double> deaths;  ///< sorted ascending, length n - 1
  double diameter = 0.0;       ///< normalisation diameter (1 if not normalised)
};

Mat<double> pairwise_distances(const PointCloud& cloud);

/// Scales the cloud so the maximal pairwise distance becomes 1.
PointCloud normalize_by_diameter(const PointCloud& cloud);

/// Merge radii = edge weights of a Euclidean minimum spanning tree, sorted.
Barcode h0_barcode(const PointCloud& cloud);

/// beta0(r) = n - #{deaths <= r}: components of the graph connecting pairs
/// within distance r.
int betti0(const Barcode& barcode, int n_points, double r);

/// Random image patches flattened row-major into R^(patch_size^2).
PointCloud sample_patches(const std::vector<Mat<double>>& images, int count, int patch_size,
                          uint64_t seed);

/// Repeats the sample/normalise/barcode protocol and averages beta0 over
/// the repeats on the given r grid.
std::vector<double> averaged_betti_curve(const std::vector<Mat<double>>& images, int repeats,
                                         int count, int patch_size,
                                         const std::vector<double>& r_grid, uint64_t seed);

std::vector<double> uniform_r_grid(int n_points = 200, double r_max = 1.0);

/// CSV export: one row per bar (birth 0, death radius).
void save_barcode_csv(const std::filesystem::path& path, const Barcode& barcode);

}  // namespace stcine::homology
