#pragma once

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "wrfcm/core.hpp"

namespace wrfcm {

enum class RegionGeometry { kBlocks, kStripes, kCircles };

/// Piecewise-constant test image: `clusters` regions with one gray level
/// each, laid out as a block grid, vertical stripes, or concentric rings.
struct SyntheticSpec {
  int width = 256;
  int height = 256;
  int clusters = 4;
  RegionGeometry geometry = RegionGeometry::kBlocks;
  std::vector<double> levels;  // one per region, distinct, in [0, 255]

  void validate() const {
    if (width < 1 || height < 1) {
      throw std::invalid_argument("SyntheticSpec: width/height must be >= 1");
    }
    if (clusters < 1) {
      throw std::invalid_argument("SyntheticSpec: clusters must be >= 1");
    }
    if (static_cast<int>(levels.size()) != clusters) {
      throw std::invalid_argument("SyntheticSpec: need one gray level per region");
    }
    std::set<double> distinct(levels.begin(), levels.end());
    if (static_cast<int>(distinct.size()) != clusters) {
      throw std::invalid_argument("SyntheticSpec: region levels must be distinct");
    }
    for (double level : levels) {
      if (level < 0.0 || level > 255.0) {
        throw std::invalid_argument("SyntheticSpec: levels must lie in [0, 255]");
      }
    }
  }
};

struct SyntheticImage {
  ImageTensor image;  // grayscale, piecewise constant
  LabelMap truth;
};

/// Generate the image and its exact ground-truth label map. Throws if the
/// requested geometry leaves any region empty at the given size.
inline SyntheticImage gen_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  const int w = spec.width;
  const int h = spec.height;
  const int c = spec.clusters;

  SyntheticImage out;
  out.image = ImageTensor(w, h, 1);
  out.truth = LabelMap(w, h);

  auto region_of = [&](int x, int y) -> int {
    switch (spec.geometry) {
      case RegionGeometry::kBlocks: {
        const int rows = std::max(1, static_cast<int>(std::sqrt(static_cast<double>(c))));
        const int cols = (c + rows - 1) / rows;
        if (w < cols || h < rows) {
          throw std::invalid_argument("gen_synthetic: image too small for block grid");
        }
        const int cell_x = std::min(x * cols / w, cols - 1);
        const int cell_y = std::min(y * rows / h, rows - 1);
        return std::min(cell_y * cols + cell_x, c - 1);
      }
      case RegionGeometry::kStripes: {
        if (w < c) {
          throw std::invalid_argument("gen_synthetic: image too narrow for stripes");
        }
        return std::min(x * c / w, c - 1);
      }
      case RegionGeometry::kCircles: {
        const double cx = (w - 1) / 2.0;
        const double cy = (h - 1) / 2.0;
        const double r_max =
            std::sqrt(cx * cx + cy * cy) + 1e-9;  // farthest corner
        const double d = std::sqrt((x - cx) * (x - cx) + (y - cy) * (y - cy));
        return std::min(static_cast<int>(d / r_max * c), c - 1);
      }
    }
    return 0;
  };

  std::vector<long long> region_size(c, 0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int region = region_of(x, y);
      const int j = y * w + x;
      out.truth.labels[j] = region + 1;
      out.image.at(j, 0) = spec.levels[region];
      region_size[region]++;
    }
  }
  for (int i = 0; i < c; ++i) {
    if (region_size[i] == 0) {
      throw std::invalid_argument("gen_synthetic: region " + std::to_string(i + 1) +
                                  " is empty at this size");
    }
  }
  return out;
}

}  // namespace wrfcm
