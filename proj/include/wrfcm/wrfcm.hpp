#pragma once

#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "wrfcm/core.hpp"
#include "wrfcm/fcm.hpp"
#include "wrfcm/rng.hpp"

namespace wrfcm {

namespace detail {

/// Squared distances e(i, j) = ||x_j - r_j - v_i||^2 between noise-corrected
/// pixels and prototypes.
inline std::vector<double> shifted_distance_sq(const ImageTensor& x,
                                               const ResidualField& r,
                                               const PrototypeSet& v) {
  const int k = x.pixels();
  const int c = v.clusters;
  std::vector<double> e(static_cast<std::size_t>(c) * k);
  for (int i = 0; i < c; ++i) {
    double* row = e.data() + static_cast<std::size_t>(i) * k;
    for (int j = 0; j < k; ++j) {
      double acc = 0.0;
      for (int l = 0; l < x.channels; ++l) {
        const double diff = x.at(j, l) - r.at(j, l) - v.at(i, l);
        acc += diff * diff;
      }
      row[j] = acc;
    }
  }
  return e;
}

/// Spatially smoothed per-cluster field: out(i, j) = sum_{n in N_j} s_nj * in(i, n).
inline std::vector<double> windowed_sum(const std::vector<double>& in, int clusters,
                                        const NeighborhoodSystem& nbhd) {
  const int k = nbhd.pixels();
  std::vector<double> out(static_cast<std::size_t>(clusters) * k);
  for (int i = 0; i < clusters; ++i) {
    const double* src = in.data() + static_cast<std::size_t>(i) * k;
    double* dst = out.data() + static_cast<std::size_t>(i) * k;
    for (int j = 0; j < k; ++j) {
      double acc = 0.0;
      for (int t = nbhd.begin(j); t < nbhd.end(j); ++t) {
        acc += nbhd.weight[t] * src[nbhd.neighbors[t]];
      }
      dst[j] = acc;
    }
  }
  return out;
}

/// Membership mass field u_ij^m, same layout as the partition matrix.
inline std::vector<double> membership_mass(const PartitionMatrix& u, double m) {
  std::vector<double> um(u.u.size());
  for (std::size_t idx = 0; idx < u.u.size(); ++idx) {
    um[idx] = pow_u(u.u[idx], m);
  }
  return um;
}

}  // namespace detail

/// Objective of the residual-driven model with spatial windows:
/// data term sum over clusters and windows of u^m ||x_n - r_n - v_i||^2 / (1+d),
/// plus the per-channel fidelity sum of beta_l |w r|^2 / (1+d). Evaluated in
/// the index-swapped arrangement (windows regrouped around each pixel), which
/// is algebraically identical and cheaper.
inline double objective(const ImageTensor& x, const PartitionMatrix& u,
                        const PrototypeSet& v, const ResidualField& r,
                        const WeightField& w, const NeighborhoodSystem& nbhd,
                        const std::vector<double>& betas, double m) {
  const int k = x.pixels();
  const int c = u.clusters;
  const std::vector<double> e = detail::shifted_distance_sq(x, r, v);
  const std::vector<double> mass =
      detail::windowed_sum(detail::membership_mass(u, m), c, nbhd);

  long double data_term = 0.0L;
  for (std::size_t idx = 0; idx < e.size(); ++idx) {
    data_term += static_cast<long double>(mass[idx]) * e[idx];
  }

  long double fidelity = 0.0L;
  for (int l = 0; l < x.channels; ++l) {
    long double acc = 0.0L;
    for (int j = 0; j < k; ++j) {
      const double wr = w.at(j, l) * r.at(j, l);
      acc += static_cast<long double>(nbhd.weight_sum[j]) * wr * wr;
    }
    fidelity += betas[l] * acc;
  }
  return static_cast<double>(data_term + fidelity);
}

/// Membership update: u_ij from the window-weighted dissimilarities
/// D_ij = sum_{n in N_j} ||x_n - r_n - v_i||^2 / (1+d_nj).
inline PartitionMatrix update_membership(const ImageTensor& x, const PrototypeSet& v,
                                         const ResidualField& r,
                                         const NeighborhoodSystem& nbhd, double m) {
  if (!(m > 1.0)) throw std::invalid_argument("update_membership: m must be > 1");
  const int k = x.pixels();
  const int c = v.clusters;
  const std::vector<double> dissim =
      detail::windowed_sum(detail::shifted_distance_sq(x, r, v), c, nbhd);
  PartitionMatrix u(c, k);
  std::vector<double> column(c);
  for (int j = 0; j < k; ++j) {
    for (int i = 0; i < c; ++i) {
      column[i] = dissim[static_cast<std::size_t>(i) * k + j];
    }
    detail::memberships_from_distances(column, m, u, j);
  }
  return u;
}

namespace detail {

/// Numerator/denominator of the prototype update: per cluster i,
/// num = sum_j u_ij^m sum_n s_nj (x_n - r_n) and den = sum_j u_ij^m sum_n s_nj.
/// den is zero exactly when the cluster carries no membership mass.
inline void prototype_sums(const ImageTensor& x, const PartitionMatrix& u,
                           const ResidualField& r, const NeighborhoodSystem& nbhd,
                           double m, std::vector<long double>& num,
                           std::vector<long double>& den) {
  const int k = x.pixels();
  const int c = u.clusters;
  const int channels = x.channels;

  std::vector<double> corrected(static_cast<std::size_t>(k) * channels);
  for (int j = 0; j < k; ++j) {
    for (int l = 0; l < channels; ++l) {
      corrected[static_cast<std::size_t>(j) * channels + l] = x.at(j, l) - r.at(j, l);
    }
  }
  std::vector<double> window_mean(static_cast<std::size_t>(k) * channels, 0.0);
  for (int j = 0; j < k; ++j) {
    for (int t = nbhd.begin(j); t < nbhd.end(j); ++t) {
      const double s = nbhd.weight[t];
      const int n = nbhd.neighbors[t];
      for (int l = 0; l < channels; ++l) {
        window_mean[static_cast<std::size_t>(j) * channels + l] +=
            s * corrected[static_cast<std::size_t>(n) * channels + l];
      }
    }
  }

  num.assign(static_cast<std::size_t>(c) * channels, 0.0L);
  den.assign(c, 0.0L);
  for (int i = 0; i < c; ++i) {
    for (int j = 0; j < k; ++j) {
      const double um = pow_u(u.at(i, j), m);
      den[i] += um * nbhd.weight_sum[j];
      for (int l = 0; l < channels; ++l) {
        num[static_cast<std::size_t>(i) * channels + l] +=
            um * window_mean[static_cast<std::size_t>(j) * channels + l];
      }
    }
  }
}

}  // namespace detail

/// Prototype update: window-weighted mean of the noise-corrected pixels,
/// v_i = sum_j u_ij^m sum_n s_nj (x_n - r_n) / sum_j u_ij^m sum_n s_nj.
inline PrototypeSet update_prototypes(const ImageTensor& x, const PartitionMatrix& u,
                                      const ResidualField& r,
                                      const NeighborhoodSystem& nbhd, double m) {
  std::vector<long double> num, den;
  detail::prototype_sums(x, u, r, nbhd, m, num, den);
  PrototypeSet v(u.clusters, x.channels);
  for (int i = 0; i < u.clusters; ++i) {
    if (!(den[i] > 0.0L)) {
      throw std::runtime_error("update_prototypes: cluster " + std::to_string(i) +
                               " has zero membership mass");
    }
    for (int l = 0; l < x.channels; ++l) {
      v.at(i, l) =
          static_cast<double>(num[static_cast<std::size_t>(i) * x.channels + l] / den[i]);
    }
  }
  return v;
}

/// Residual update. With the windows regrouped around each pixel, the
/// coordinate problem for r_jl is quadratic and its minimizer is
///   r_jl = sum_i T_ij (x_jl - v_il) / (sum_i T_ij + beta_l w_jl^2 S_j)
/// where T_ij = sum_{n in N_j} u_in^m / (1+d_nj) smooths the memberships of
/// the neighbors and S_j is the window weight sum.
inline ResidualField update_residual(const ImageTensor& x, const PartitionMatrix& u,
                                     const PrototypeSet& v, const WeightField& w,
                                     const NeighborhoodSystem& nbhd,
                                     const std::vector<double>& betas, double m) {
  const int k = x.pixels();
  const int c = u.clusters;
  if (static_cast<int>(betas.size()) != x.channels) {
    throw std::invalid_argument("update_residual: one beta per channel required");
  }
  for (double b : betas) {
    if (b < 0.0) throw std::invalid_argument("update_residual: beta must be >= 0");
  }
  const std::vector<double> mass =
      detail::windowed_sum(detail::membership_mass(u, m), c, nbhd);

  ResidualField r(k, x.channels);
  for (int j = 0; j < k; ++j) {
    double mass_sum = 0.0;
    for (int i = 0; i < c; ++i) {
      mass_sum += mass[static_cast<std::size_t>(i) * k + j];
    }
    if (!(mass_sum > 0.0)) {
      throw std::logic_error("update_residual: window at pixel " + std::to_string(j) +
                             " carries no membership mass");
    }
    for (int l = 0; l < x.channels; ++l) {
      double num = 0.0;
      for (int i = 0; i < c; ++i) {
        num += mass[static_cast<std::size_t>(i) * k + j] * (x.at(j, l) - v.at(i, l));
      }
      const double wjl = w.at(j, l);
      const double den = mass_sum + nbhd.weight_sum[j] * betas[l] * wjl * wjl;
      r.at(j, l) = num / den;
    }
  }
  return r;
}

/// Weight update w = exp(-xi * r^2), floored at the smallest positive double
/// so weights stay in (0, 1].
inline WeightField update_weights(const ResidualField& r, double xi) {
  if (xi < 0.0) throw std::invalid_argument("update_weights: xi must be >= 0");
  WeightField w(r.pixels, r.channels);
  for (std::size_t idx = 0; idx < r.r.size(); ++idx) {
    w.w[idx] = std::max(std::exp(-xi * r.r[idx] * r.r[idx]),
                        std::numeric_limits<double>::min());
  }
  return w;
}

enum class FidelityKind { kL2, kL1, kIDiv, kWeightedL2 };

/// Per-channel fidelity value of a residual field under the chosen model:
/// squared l2 (Gaussian), l1 (impulse), I-divergence (Poisson; needs the
/// observed image with x - r > 0), or weighted squared l2 (mixed noise;
/// needs the weight field).
inline std::vector<double> fidelity_eval(const ResidualField& r, FidelityKind kind,
                                         const ImageTensor* x = nullptr,
                                         const WeightField* w = nullptr) {
  std::vector<double> gamma(r.channels, 0.0);
  switch (kind) {
    case FidelityKind::kL2:
      for (int l = 0; l < r.channels; ++l) {
        long double acc = 0.0L;
        for (int j = 0; j < r.pixels; ++j) {
          const double v = r.at(j, l);
          acc += static_cast<long double>(v) * v;
        }
        gamma[l] = static_cast<double>(acc);
      }
      break;
    case FidelityKind::kL1:
      for (int l = 0; l < r.channels; ++l) {
        long double acc = 0.0L;
        for (int j = 0; j < r.pixels; ++j) acc += std::abs(r.at(j, l));
        gamma[l] = static_cast<double>(acc);
      }
      break;
    case FidelityKind::kIDiv: {
      if (x == nullptr) {
        throw std::invalid_argument("fidelity_eval: I-divergence requires the observed image");
      }
      if (x->pixels() != r.pixels || x->channels != r.channels) {
        throw std::invalid_argument("fidelity_eval: image/residual shape mismatch");
      }
      for (int l = 0; l < r.channels; ++l) {
        long double acc = 0.0L;
        for (int j = 0; j < r.pixels; ++j) {
          const double denoised = x->at(j, l) - r.at(j, l);
          if (!(denoised > 0.0)) {
            throw std::domain_error(
                "fidelity_eval: I-divergence needs x - r > 0, violated at pixel " +
                std::to_string(j) + " channel " + std::to_string(l));
          }
          acc += denoised - x->at(j, l) * std::log(denoised);
        }
        gamma[l] = static_cast<double>(acc);
      }
      break;
    }
    case FidelityKind::kWeightedL2:
      if (w == nullptr) {
        throw std::invalid_argument("fidelity_eval: weighted l2 requires the weight field");
      }
      if (w->pixels != r.pixels || w->channels != r.channels) {
        throw std::invalid_argument("fidelity_eval: weight/residual shape mismatch");
      }
      for (int l = 0; l < r.channels; ++l) {
        long double acc = 0.0L;
        for (int j = 0; j < r.pixels; ++j) {
          const double v = w->at(j, l) * r.at(j, l);
          acc += static_cast<long double>(v) * v;
        }
        gamma[l] = static_cast<double>(acc);
      }
      break;
  }
  return gamma;
}

/// Crisp labels by per-pixel argmax membership; ties go to the lowest
/// cluster index. Labels are 1-based.
inline LabelMap defuzzify(const PartitionMatrix& u, int width, int height) {
  if (width * height != u.pixels) {
    throw std::invalid_argument("defuzzify: geometry does not match partition");
  }
  LabelMap labels(width, height);
  for (int j = 0; j < u.pixels; ++j) {
    int best = 0;
    double best_u = u.at(0, j);
    for (int i = 1; i < u.clusters; ++i) {
      if (u.at(i, j) > best_u) {
        best_u = u.at(i, j);
        best = i;
      }
    }
    labels.labels[j] = best + 1;
  }
  return labels;
}

/// Image with every pixel replaced by its cluster's prototype.
inline ImageTensor prototype_image(const LabelMap& labels, const PrototypeSet& v) {
  ImageTensor out(labels.width, labels.height, v.channels);
  for (int j = 0; j < labels.pixels(); ++j) {
    for (int l = 0; l < v.channels; ++l) {
      out.at(j, l) = v.at(labels.labels[j] - 1, l);
    }
  }
  return out;
}

struct SolveOutput {
  PartitionMatrix u;
  PrototypeSet v;
  ResidualField r;
  WeightField w;
  LabelMap labels;
  ImageTensor segmented;
  ConvergenceTrace trace;
};

/// Full solve: weights start at one, the residual at zero, prototypes at
/// seeded random pixels; each iteration runs the membership, prototype and
/// residual updates with weights fixed, then refreshes the weights from the
/// new residual. Stops when the partition change drops below epsilon.
inline SolveOutput wrfcm_fit(const ImageTensor& x, const SolverConfig& config) {
  x.validate();
  config.validate();
  const int k = x.pixels();
  const int c = config.clusters;
  if (c > k) throw std::invalid_argument("wrfcm_fit: more clusters than pixels");

  const NeighborhoodSystem nbhd =
      build_neighborhood(x.width, x.height, config.window_radius);
  const std::vector<double> betas =
      betas_from_phi(config.phi, channel_stddev(x));

  SolveOutput out;
  out.v = detail::prototypes_from_pixels(
      x, detail::sample_prototype_pixels(x, c, config.seed));
  out.r = ResidualField(k, x.channels, 0.0);
  out.w = WeightField(k, x.channels, 1.0);

  SplitMix64 reseed_rng(substream_seed(config.seed, 0x7265736565ULL));
  std::uniform_int_distribution<int> pick(0, k - 1);

  PartitionMatrix u_prev;
  for (int iter = 1; iter <= config.max_iter; ++iter) {
    out.u = update_membership(x, out.v, out.r, nbhd, config.m);

    {
      std::vector<long double> num, den;
      detail::prototype_sums(x, out.u, out.r, nbhd, config.m, num, den);
      for (int i = 0; i < c; ++i) {
        if (den[i] > 0.0L) {
          for (int l = 0; l < x.channels; ++l) {
            out.v.at(i, l) = static_cast<double>(
                num[static_cast<std::size_t>(i) * x.channels + l] / den[i]);
          }
        } else {
          const int pixel = pick(reseed_rng);
          for (int l = 0; l < x.channels; ++l) out.v.at(i, l) = x.at(pixel, l);
          out.trace.reseeds.emplace_back(iter, i);
        }
      }
    }

    out.r = update_residual(x, out.u, out.v, out.w, nbhd, betas, config.m);
    out.w = update_weights(out.r, config.xi);

    const double theta = (iter == 1)
                             ? std::numeric_limits<double>::infinity()
                             : detail::frobenius_diff(out.u, u_prev);
    out.trace.records.push_back(
        {iter, theta, objective(x, out.u, out.v, out.r, out.w, nbhd, betas, config.m)});
    if (iter > 1 && theta < config.epsilon) {
      out.trace.converged = true;
      break;
    }
    u_prev = out.u;
  }

  out.labels = defuzzify(out.u, x.width, x.height);
  out.segmented = prototype_image(out.labels, out.v);
  return out;
}

}  // namespace wrfcm
