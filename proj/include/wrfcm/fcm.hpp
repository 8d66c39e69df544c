#pragma once

#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <vector>

#include "wrfcm/core.hpp"
#include "wrfcm/rng.hpp"

namespace wrfcm {

namespace detail {

inline double pow_u(double u, double m) {
  if (m == 2.0) return u * u;
  return std::pow(u, m);
}

/// Memberships from per-cluster dissimilarities d(i) for one pixel, written
/// into column j of `u`. Ratio form against the smallest dissimilarity keeps
/// every intermediate in [0, 1], so no overflow for any m > 1. A zero
/// dissimilarity gets the whole mass, split equally among ties.
inline void memberships_from_distances(const std::vector<double>& d, double m,
                                       PartitionMatrix& u, int j) {
  const int c = static_cast<int>(d.size());
  double d_min = d[0];
  for (int i = 1; i < c; ++i) d_min = std::min(d_min, d[i]);

  if (d_min == 0.0) {
    int zeros = 0;
    for (int i = 0; i < c; ++i) {
      if (d[i] == 0.0) ++zeros;
    }
    for (int i = 0; i < c; ++i) {
      u.at(i, j) = (d[i] == 0.0) ? 1.0 / zeros : 0.0;
    }
    return;
  }

  const double exponent = 1.0 / (m - 1.0);
  double sum = 0.0;
  for (int i = 0; i < c; ++i) {
    const double ratio = d_min / d[i];
    const double h = (m == 2.0) ? ratio : std::pow(ratio, exponent);
    u.at(i, j) = h;
    sum += h;
  }
  for (int i = 0; i < c; ++i) u.at(i, j) /= sum;
}

/// Sample `count` distinct pixel indices; pixels whose intensity vector
/// duplicates an already chosen one are skipped while distinct values remain,
/// so initial prototypes do not start coincident (coincident prototypes can
/// never separate under the symmetric updates).
inline std::vector<int> sample_prototype_pixels(const ImageTensor& image,
                                                int count, std::uint64_t seed) {
  const int k = image.pixels();
  if (count > k) {
    throw std::invalid_argument("prototype init: more clusters than pixels");
  }
  SplitMix64 rng(substream_seed(seed, 0x70726f746fULL));
  std::uniform_int_distribution<int> pick(0, k - 1);

  auto same_value = [&](int a, int b) {
    for (int l = 0; l < image.channels; ++l) {
      if (image.at(a, l) != image.at(b, l)) return false;
    }
    return true;
  };

  std::vector<int> chosen;
  chosen.reserve(count);
  const int max_tries = 64 * count + 256;
  int tries = 0;
  bool require_distinct_values = true;
  while (static_cast<int>(chosen.size()) < count) {
    if (tries++ > max_tries) {
      if (!require_distinct_values) {
        throw std::runtime_error("prototype init: sampling failed");
      }
      // image has fewer distinct values than clusters; fall back to
      // distinct indices only
      require_distinct_values = false;
      tries = 0;
    }
    const int candidate = pick(rng);
    bool ok = true;
    for (int prev : chosen) {
      if (prev == candidate || (require_distinct_values && same_value(prev, candidate))) {
        ok = false;
        break;
      }
    }
    if (ok) chosen.push_back(candidate);
  }
  return chosen;
}

inline PrototypeSet prototypes_from_pixels(const ImageTensor& image,
                                           const std::vector<int>& pixels) {
  PrototypeSet v(static_cast<int>(pixels.size()), image.channels);
  for (std::size_t i = 0; i < pixels.size(); ++i) {
    for (int l = 0; l < image.channels; ++l) {
      v.at(static_cast<int>(i), l) = image.at(pixels[i], l);
    }
  }
  return v;
}

inline double frobenius_diff(const PartitionMatrix& a, const PartitionMatrix& b) {
  long double sum = 0.0L;
  for (std::size_t idx = 0; idx < a.u.size(); ++idx) {
    const long double d = a.u[idx] - b.u[idx];
    sum += d * d;
  }
  return static_cast<double>(std::sqrt(sum));
}

}  // namespace detail

/// Membership update for the plain objective
/// sum_i sum_j u_ij^m ||x_j - v_i||^2 with fixed prototypes.
inline PartitionMatrix fcm_membership(const ImageTensor& x, const PrototypeSet& v,
                                      double m) {
  if (!(m > 1.0)) throw std::invalid_argument("fcm_membership: m must be > 1");
  const int k = x.pixels();
  const int c = v.clusters;
  PartitionMatrix u(c, k);
  std::vector<double> d2(c);
  for (int j = 0; j < k; ++j) {
    for (int i = 0; i < c; ++i) {
      double acc = 0.0;
      for (int l = 0; l < x.channels; ++l) {
        const double diff = x.at(j, l) - v.at(i, l);
        acc += diff * diff;
      }
      d2[i] = acc;
    }
    detail::memberships_from_distances(d2, m, u, j);
  }
  return u;
}

/// Prototype update v_i = sum_j u_ij^m x_j / sum_j u_ij^m. Requires every
/// cluster to carry positive membership mass; fcm_fit reseeds empty clusters
/// instead of calling this directly.
inline PrototypeSet fcm_prototypes(const ImageTensor& x, const PartitionMatrix& u,
                                   double m) {
  const int k = x.pixels();
  const int c = u.clusters;
  PrototypeSet v(c, x.channels);
  for (int i = 0; i < c; ++i) {
    long double mass = 0.0L;
    std::vector<long double> num(x.channels, 0.0L);
    for (int j = 0; j < k; ++j) {
      const double um = detail::pow_u(u.at(i, j), m);
      mass += um;
      for (int l = 0; l < x.channels; ++l) num[l] += um * x.at(j, l);
    }
    if (!(mass > 0.0L)) {
      throw std::runtime_error("fcm_prototypes: cluster " + std::to_string(i) +
                               " has zero membership mass");
    }
    for (int l = 0; l < x.channels; ++l) {
      v.at(i, l) = static_cast<double>(num[l] / mass);
    }
  }
  return v;
}

/// Plain clustering objective sum_i sum_j u_ij^m ||x_j - v_i||^2.
inline double fcm_objective(const ImageTensor& x, const PartitionMatrix& u,
                            const PrototypeSet& v, double m) {
  const int k = x.pixels();
  long double sum = 0.0L;
  for (int i = 0; i < u.clusters; ++i) {
    for (int j = 0; j < k; ++j) {
      double d2 = 0.0;
      for (int l = 0; l < x.channels; ++l) {
        const double diff = x.at(j, l) - v.at(i, l);
        d2 += diff * diff;
      }
      sum += static_cast<long double>(detail::pow_u(u.at(i, j), m)) * d2;
    }
  }
  return static_cast<double>(sum);
}

struct FcmResult {
  PartitionMatrix u;
  PrototypeSet v;
  ConvergenceTrace trace;
};

/// Alternating minimization from seeded random prototypes until the
/// partition change drops below epsilon or max_iter is hit. Empty clusters
/// are reseeded from a random pixel and flagged in the trace.
inline FcmResult fcm_fit(const ImageTensor& x, const SolverConfig& config) {
  x.validate();
  config.validate();
  const int k = x.pixels();
  const int c = config.clusters;
  if (c > k) throw std::invalid_argument("fcm_fit: more clusters than pixels");

  FcmResult result;
  result.v = detail::prototypes_from_pixels(
      x, detail::sample_prototype_pixels(x, c, config.seed));

  SplitMix64 reseed_rng(substream_seed(config.seed, 0x7265736565ULL));
  std::uniform_int_distribution<int> pick(0, k - 1);

  PartitionMatrix u_prev;
  for (int iter = 1; iter <= config.max_iter; ++iter) {
    result.u = fcm_membership(x, result.v, config.m);

    // prototype update; empty clusters are reseeded from a random pixel
    for (int i = 0; i < c; ++i) {
      long double mass = 0.0L;
      std::vector<long double> num(x.channels, 0.0L);
      for (int j = 0; j < k; ++j) {
        const double um = detail::pow_u(result.u.at(i, j), config.m);
        mass += um;
        for (int l = 0; l < x.channels; ++l) num[l] += um * x.at(j, l);
      }
      if (mass > 0.0L) {
        for (int l = 0; l < x.channels; ++l) {
          result.v.at(i, l) = static_cast<double>(num[l] / mass);
        }
      } else {
        const int pixel = pick(reseed_rng);
        for (int l = 0; l < x.channels; ++l) result.v.at(i, l) = x.at(pixel, l);
        result.trace.reseeds.emplace_back(iter, i);
      }
    }

    const double theta = (iter == 1)
                             ? std::numeric_limits<double>::infinity()
                             : detail::frobenius_diff(result.u, u_prev);
    result.trace.records.push_back(
        {iter, theta, fcm_objective(x, result.u, result.v, config.m)});
    if (iter > 1 && theta < config.epsilon) {
      result.trace.converged = true;
      break;
    }
    u_prev = result.u;
  }
  return result;
}

}  // namespace wrfcm
