#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace wrfcm {

/// Real-valued image with 2-D geometry: K = width*height pixels, each with
/// `channels` intensities on the raw [0, 255] scale. Pixels are row-major,
/// channels interleaved, so pixel j occupies data[j*channels .. j*channels+L).
/// Intensities are stored as doubles and may leave [0, 255] (e.g. after noise
/// synthesis); clamping only happens when writing 8-bit files.
struct ImageTensor {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<double> data;

  ImageTensor() = default;
  ImageTensor(int w, int h, int ch, double fill = 0.0)
      : width(w),
        height(h),
        channels(ch),
        data(static_cast<std::size_t>(w) * h * ch, fill) {}

  int pixels() const { return width * height; }

  double& at(int pixel, int channel) {
    return data[static_cast<std::size_t>(pixel) * channels + channel];
  }
  double at(int pixel, int channel) const {
    return data[static_cast<std::size_t>(pixel) * channels + channel];
  }

  int pixel_index(int x, int y) const { return y * width + x; }

  /// Throws std::invalid_argument on inconsistent dimensions or
  /// non-finite intensities.
  void validate() const {
    if (width < 1 || height < 1) {
      throw std::invalid_argument("ImageTensor: width/height must be >= 1");
    }
    if (channels != 1 && channels != 3) {
      throw std::invalid_argument("ImageTensor: channels must be 1 or 3, got " +
                                  std::to_string(channels));
    }
    if (data.size() != static_cast<std::size_t>(pixels()) * channels) {
      throw std::invalid_argument(
          "ImageTensor: data length " + std::to_string(data.size()) +
          " does not match " + std::to_string(width) + "x" +
          std::to_string(height) + "x" + std::to_string(channels));
    }
    for (double v : data) {
      if (!std::isfinite(v)) {
        throw std::invalid_argument("ImageTensor: non-finite intensity");
      }
    }
  }
};

/// Per-pixel crisp labels in {1..clusters}, same geometry as the image it
/// was derived from.
struct LabelMap {
  int width = 0;
  int height = 0;
  std::vector<int> labels;

  LabelMap() = default;
  LabelMap(int w, int h, int fill = 1)
      : width(w), height(h), labels(static_cast<std::size_t>(w) * h, fill) {}

  int pixels() const { return width * height; }

  void validate(int clusters) const {
    if (labels.size() != static_cast<std::size_t>(pixels())) {
      throw std::invalid_argument("LabelMap: label count does not match geometry");
    }
    for (int v : labels) {
      if (v < 1 || v > clusters) {
        throw std::invalid_argument("LabelMap: label " + std::to_string(v) +
                                    " outside 1.." + std::to_string(clusters));
      }
    }
  }
};

/// Fuzzy memberships u(i, j) of pixel j in cluster i. Every pixel's
/// memberships sum to 1.
struct PartitionMatrix {
  int clusters = 0;
  int pixels = 0;
  std::vector<double> u;

  PartitionMatrix() = default;
  PartitionMatrix(int c, int k, double fill = 0.0)
      : clusters(c), pixels(k), u(static_cast<std::size_t>(c) * k, fill) {}

  double& at(int cluster, int pixel) {
    return u[static_cast<std::size_t>(cluster) * pixels + pixel];
  }
  double at(int cluster, int pixel) const {
    return u[static_cast<std::size_t>(cluster) * pixels + pixel];
  }

  /// Column-stochastic check: every entry in [0,1], every column sums to 1.
  void validate(double tol = 1e-9) const {
    for (double v : u) {
      if (!(v >= 0.0 && v <= 1.0)) {
        throw std::invalid_argument("PartitionMatrix: membership outside [0, 1]");
      }
    }
    for (int j = 0; j < pixels; ++j) {
      double sum = 0.0;
      for (int i = 0; i < clusters; ++i) sum += at(i, j);
      if (std::abs(sum - 1.0) > tol) {
        throw std::invalid_argument(
            "PartitionMatrix: column " + std::to_string(j) + " sums to " +
            std::to_string(sum));
      }
    }
  }
};

/// Cluster centers, one intensity vector per cluster.
struct PrototypeSet {
  int clusters = 0;
  int channels = 0;
  std::vector<double> v;

  PrototypeSet() = default;
  PrototypeSet(int c, int ch, double fill = 0.0)
      : clusters(c), channels(ch), v(static_cast<std::size_t>(c) * ch, fill) {}

  double& at(int cluster, int channel) {
    return v[static_cast<std::size_t>(cluster) * channels + channel];
  }
  double at(int cluster, int channel) const {
    return v[static_cast<std::size_t>(cluster) * channels + channel];
  }

  void validate() const {
    for (double x : v) {
      if (!std::isfinite(x)) {
        throw std::invalid_argument("PrototypeSet: non-finite prototype");
      }
    }
  }
};

/// Estimated difference between the observed image and its noise-free ideal,
/// per pixel and channel. Same layout as ImageTensor data.
struct ResidualField {
  int pixels = 0;
  int channels = 0;
  std::vector<double> r;

  ResidualField() = default;
  ResidualField(int k, int ch, double fill = 0.0)
      : pixels(k), channels(ch), r(static_cast<std::size_t>(k) * ch, fill) {}

  double& at(int pixel, int channel) {
    return r[static_cast<std::size_t>(pixel) * channels + channel];
  }
  double at(int pixel, int channel) const {
    return r[static_cast<std::size_t>(pixel) * channels + channel];
  }

  void validate() const {
    for (double x : r) {
      if (!std::isfinite(x)) {
        throw std::invalid_argument("ResidualField: non-finite residual");
      }
    }
  }
};

/// Robust-estimation weights in (0, 1], one per residual entry. Small weights
/// mark heavy-tailed (impulse-like) residuals.
struct WeightField {
  int pixels = 0;
  int channels = 0;
  std::vector<double> w;

  WeightField() = default;
  WeightField(int k, int ch, double fill = 1.0)
      : pixels(k), channels(ch), w(static_cast<std::size_t>(k) * ch, fill) {}

  double& at(int pixel, int channel) {
    return w[static_cast<std::size_t>(pixel) * channels + channel];
  }
  double at(int pixel, int channel) const {
    return w[static_cast<std::size_t>(pixel) * channels + channel];
  }

  void validate() const {
    for (double x : w) {
      if (!(x > 0.0 && x <= 1.0)) {
        throw std::invalid_argument("WeightField: weight outside (0, 1]");
      }
    }
  }
};

/// Per-pixel local window: neighbor pixel indices (the pixel itself
/// included) with their Euclidean coordinate distances and the spatial
/// weights s = 1/(1+d). Stored CSR-style; neighbors of pixel j live in
/// [offsets[j], offsets[j+1]).
struct NeighborhoodSystem {
  int width = 0;
  int height = 0;
  int radius = 0;
  std::vector<int> offsets;
  std::vector<int> neighbors;
  std::vector<double> distance;
  std::vector<double> weight;      // s = 1/(1+d)
  std::vector<double> weight_sum;  // per-pixel sum of s over the window

  int pixels() const { return width * height; }
  int begin(int pixel) const { return offsets[pixel]; }
  int end(int pixel) const { return offsets[pixel + 1]; }
  int size(int pixel) const { return end(pixel) - begin(pixel); }
};

/// Builds the (2*radius+1)^2 window system, truncated at image borders so
/// that neighbor relations stay symmetric: n in N_j <=> j in N_n.
inline NeighborhoodSystem build_neighborhood(int width, int height, int radius) {
  if (width < 1 || height < 1) {
    throw std::invalid_argument("build_neighborhood: width/height must be >= 1");
  }
  if (radius < 0) {
    throw std::invalid_argument("build_neighborhood: radius must be >= 0");
  }
  NeighborhoodSystem nbhd;
  nbhd.width = width;
  nbhd.height = height;
  nbhd.radius = radius;
  const int k = width * height;
  nbhd.offsets.reserve(k + 1);
  nbhd.offsets.push_back(0);
  const std::size_t window = static_cast<std::size_t>(2 * radius + 1) *
                             static_cast<std::size_t>(2 * radius + 1);
  nbhd.neighbors.reserve(window * k);
  nbhd.distance.reserve(window * k);
  nbhd.weight.reserve(window * k);
  nbhd.weight_sum.reserve(k);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      double s_sum = 0.0;
      for (int dy = -radius; dy <= radius; ++dy) {
        const int ny = y + dy;
        if (ny < 0 || ny >= height) continue;
        for (int dx = -radius; dx <= radius; ++dx) {
          const int nx = x + dx;
          if (nx < 0 || nx >= width) continue;
          const double d = std::sqrt(static_cast<double>(dx * dx + dy * dy));
          const double s = 1.0 / (1.0 + d);
          nbhd.neighbors.push_back(ny * width + nx);
          nbhd.distance.push_back(d);
          nbhd.weight.push_back(s);
          s_sum += s;
        }
      }
      nbhd.offsets.push_back(static_cast<int>(nbhd.neighbors.size()));
      nbhd.weight_sum.push_back(s_sum);
    }
  }
  return nbhd;
}

/// Population standard deviation of each channel.
inline std::vector<double> channel_stddev(const ImageTensor& image) {
  image.validate();
  const int k = image.pixels();
  std::vector<double> sigma(image.channels, 0.0);
  for (int l = 0; l < image.channels; ++l) {
    long double mean = 0.0L;
    for (int j = 0; j < k; ++j) mean += image.at(j, l);
    mean /= k;
    long double var = 0.0L;
    for (int j = 0; j < k; ++j) {
      const long double d = image.at(j, l) - mean;
      var += d * d;
    }
    sigma[l] = static_cast<double>(std::sqrt(var / k));
  }
  return sigma;
}

/// Fidelity strengths beta_l = phi * delta_l / 100, one per channel.
/// phi in [5, 10] is the recommended operating range; phi = 0 disables the
/// fidelity term entirely.
inline std::vector<double> betas_from_phi(double phi,
                                          const std::vector<double>& stddev) {
  if (phi < 0.0) {
    throw std::invalid_argument("betas_from_phi: phi must be >= 0");
  }
  std::vector<double> betas(stddev.size());
  for (std::size_t l = 0; l < stddev.size(); ++l) {
    betas[l] = phi * stddev[l] / 100.0;
  }
  return betas;
}

/// Solver settings shared by the baseline and the residual-driven solver.
struct SolverConfig {
  int clusters = 2;
  double m = 2.0;            // fuzzification exponent, > 1
  double epsilon = 1e-6;     // convergence threshold on the partition change
  double xi = 0.0008;        // weight decay rate, >= 0
  double phi = 7.5;          // fidelity scale; beta_l = phi * stddev_l / 100
  int window_radius = 1;     // 1 -> 3x3 window
  int max_iter = 200;
  std::uint64_t seed = 0;

  void validate() const {
    if (clusters < 1) {
      throw std::invalid_argument("SolverConfig: clusters must be >= 1");
    }
    if (!(m > 1.0)) {
      throw std::invalid_argument("SolverConfig: m must be > 1");
    }
    if (!(epsilon > 0.0)) {
      throw std::invalid_argument("SolverConfig: epsilon must be > 0");
    }
    if (xi < 0.0) {
      throw std::invalid_argument("SolverConfig: xi must be >= 0");
    }
    if (phi < 0.0) {
      throw std::invalid_argument("SolverConfig: phi must be >= 0");
    }
    if (window_radius < 0) {
      throw std::invalid_argument("SolverConfig: window radius must be >= 0");
    }
    if (max_iter < 1) {
      throw std::invalid_argument("SolverConfig: max_iter must be >= 1");
    }
  }
};

/// Per-iteration solver history. theta is the Frobenius norm of the
/// partition change; it is +inf on the first iteration, where no previous
/// partition exists yet.
struct ConvergenceTrace {
  struct Record {
    int iter = 0;
    double theta = 0.0;
    double objective = 0.0;
  };
  std::vector<Record> records;
  bool converged = false;
  /// (iteration, cluster) pairs where an empty cluster was reseeded.
  std::vector<std::pair<int, int>> reseeds;
};

/// CSV export, header `iter,theta,objective`.
inline void write_trace_csv(const ConvergenceTrace& trace, std::ostream& out) {
  out << "iter,theta,objective\n";
  char line[96];
  for (const auto& rec : trace.records) {
    std::snprintf(line, sizeof(line), "%d,%.10g,%.10g\n", rec.iter, rec.theta,
                  rec.objective);
    out << line;
  }
}

}  // namespace wrfcm
