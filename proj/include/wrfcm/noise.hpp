#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "wrfcm/core.hpp"
#include "wrfcm/rng.hpp"

namespace wrfcm {

enum class ImpulseKind { kRandomValued, kSaltPepper };

/// Mixed-noise pipeline specification: optional Poisson (signal-dependent),
/// additive zero-mean Gaussian with stddev sigma, then per-pixel impulse
/// replacement with probability p.
struct NoiseSpec {
  bool poisson = false;
  double gaussian_sigma = 0.0;
  double impulse_prob = 0.0;
  ImpulseKind impulse_kind = ImpulseKind::kRandomValued;
  std::uint64_t seed = 0;

  void validate() const {
    if (gaussian_sigma < 0.0) {
      throw std::invalid_argument("NoiseSpec: sigma must be >= 0");
    }
    if (impulse_prob < 0.0 || impulse_prob >= 1.0) {
      throw std::invalid_argument("NoiseSpec: impulse probability must be in [0, 1)");
    }
  }
};

struct CorruptionResult {
  /// Observed image, unclamped; clamping to [0, 255] happens only when
  /// writing 8-bit files, so a solver sees exactly clean + noise.
  ImageTensor observed;
  /// 1 where the pixel was replaced by impulse noise.
  std::vector<std::uint8_t> impulse_mask;
};

/// Clamp intensities to [0, 255] (the 8-bit file range).
inline ImageTensor clamped(const ImageTensor& image) {
  ImageTensor out = image;
  for (double& v : out.data) v = std::clamp(v, 0.0, 255.0);
  return out;
}

/// Corrupt a clean image: per pixel, (1) Poisson draw with rate equal to the
/// clean intensity if enabled, (2) additive Gaussian, (3) one Bernoulli(p)
/// trial deciding whether the whole pixel (all channels) is replaced by
/// impulse noise. Each pixel consumes an independent substream of the seed,
/// so the result is reproducible regardless of traversal order.
inline CorruptionResult corrupt(const ImageTensor& clean, const NoiseSpec& spec) {
  clean.validate();
  spec.validate();
  for (std::size_t idx = 0; idx < clean.data.size(); ++idx) {
    if (clean.data[idx] < 0.0 || clean.data[idx] > 255.0) {
      throw std::invalid_argument(
          "corrupt: clean intensity " + std::to_string(clean.data[idx]) +
          " outside [0, 255] at element " + std::to_string(idx));
    }
  }

  const int k = clean.pixels();
  const int channels = clean.channels;
  CorruptionResult result;
  result.observed = clean;
  result.impulse_mask.assign(k, 0);

  for (int j = 0; j < k; ++j) {
    SplitMix64 rng(substream_seed(spec.seed, static_cast<std::uint64_t>(j)));

    if (spec.poisson) {
      for (int l = 0; l < channels; ++l) {
        const double rate = clean.at(j, l);
        if (rate > 0.0) {
          std::poisson_distribution<long> poisson(rate);
          result.observed.at(j, l) = static_cast<double>(poisson(rng));
        } else {
          result.observed.at(j, l) = 0.0;
        }
      }
    }

    if (spec.gaussian_sigma > 0.0) {
      for (int l = 0; l < channels; ++l) {
        std::normal_distribution<double> gauss(0.0, spec.gaussian_sigma);
        result.observed.at(j, l) += gauss(rng);
      }
    }

    if (spec.impulse_prob > 0.0) {
      std::bernoulli_distribution hit(spec.impulse_prob);
      if (hit(rng)) {
        result.impulse_mask[j] = 1;
        if (spec.impulse_kind == ImpulseKind::kRandomValued) {
          std::uniform_real_distribution<double> value(0.0, 255.0);
          for (int l = 0; l < channels; ++l) {
            result.observed.at(j, l) = value(rng);
          }
        } else {
          std::bernoulli_distribution salt(0.5);
          const double v = salt(rng) ? 255.0 : 0.0;
          for (int l = 0; l < channels; ++l) {
            result.observed.at(j, l) = v;
          }
        }
      }
    }
  }
  return result;
}

}  // namespace wrfcm
