#pragma once

// Independent numeric oracles used by the unit and acceptance suites. These
// deliberately re-derive every quantity with literal loops over the window
// definitions instead of calling the library's vectorized paths, so they can
// catch errors in those paths.

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "wrfcm/core.hpp"
#include "wrfcm/wrfcm.hpp"

namespace oracles {

using wrfcm::ImageTensor;
using wrfcm::NeighborhoodSystem;
using wrfcm::PartitionMatrix;
using wrfcm::PrototypeSet;
using wrfcm::ResidualField;
using wrfcm::WeightField;

// ---------------------------------------------------------------------------
// literal objective evaluators

inline double pow_m(double u, double m) { return std::pow(u, m); }

inline double sq_dist(const ImageTensor& x, const ResidualField& r,
                      const PrototypeSet& v, int pixel, int cluster) {
  double acc = 0.0;
  for (int l = 0; l < x.channels; ++l) {
    const double d = x.at(pixel, l) - r.at(pixel, l) - v.at(cluster, l);
    acc += d * d;
  }
  return acc;
}

/// Window dissimilarity D_ij, written as the plain double sum.
inline double windowed_dissim_literal(const ImageTensor& x, const ResidualField& r,
                                      const PrototypeSet& v,
                                      const NeighborhoodSystem& nb, int cluster,
                                      int pixel) {
  double acc = 0.0;
  for (int t = nb.begin(pixel); t < nb.end(pixel); ++t) {
    acc += sq_dist(x, r, v, nb.neighbors[t], cluster) / (1.0 + nb.distance[t]);
  }
  return acc;
}

/// Full objective in the window-major summation order.
inline double objective_literal(const ImageTensor& x, const PartitionMatrix& u,
                                const PrototypeSet& v, const ResidualField& r,
                                const WeightField& w, const NeighborhoodSystem& nb,
                                const std::vector<double>& betas, double m) {
  long double total = 0.0L;
  for (int i = 0; i < u.clusters; ++i) {
    for (int j = 0; j < x.pixels(); ++j) {
      total += static_cast<long double>(pow_m(u.at(i, j), m)) *
               windowed_dissim_literal(x, r, v, nb, i, j);
    }
  }
  for (int l = 0; l < x.channels; ++l) {
    long double acc = 0.0L;
    for (int j = 0; j < x.pixels(); ++j) {
      for (int t = nb.begin(j); t < nb.end(j); ++t) {
        const int n = nb.neighbors[t];
        const double wr = w.at(n, l) * r.at(n, l);
        acc += wr * wr / (1.0 + nb.distance[t]);
      }
    }
    total += betas[l] * acc;
  }
  return static_cast<double>(total);
}

/// Energy of the scalar residual subproblem at coordinate (pixel, channel)
/// with the candidate value rho substituted.
inline double residual_energy_literal(const ImageTensor& x, const PartitionMatrix& u,
                                      const PrototypeSet& v, const WeightField& w,
                                      const NeighborhoodSystem& nb,
                                      const std::vector<double>& betas, double m,
                                      int pixel, int channel, double rho) {
  long double acc = 0.0L;
  for (int i = 0; i < u.clusters; ++i) {
    for (int t = nb.begin(pixel); t < nb.end(pixel); ++t) {
      const int n = nb.neighbors[t];
      const double d = x.at(pixel, channel) - rho - v.at(i, channel);
      acc += pow_m(u.at(i, n), m) * d * d / (1.0 + nb.distance[t]);
    }
  }
  for (int t = nb.begin(pixel); t < nb.end(pixel); ++t) {
    const double wr = w.at(pixel, channel) * rho;
    acc += betas[channel] * wr * wr / (1.0 + nb.distance[t]);
  }
  return static_cast<double>(acc);
}

// ---------------------------------------------------------------------------
// generic minimizers

/// Golden-section search followed by one parabolic refinement step. The
/// refinement recovers the last digits on quadratic energies where plain
/// golden section stalls at the floating-point noise floor.
inline double minimize_scalar(const std::function<double(double)>& f, double lo,
                              double hi, int iters = 80) {
  const double inv_phi = 0.6180339887498949;
  double a = lo, b = hi;
  double x1 = b - inv_phi * (b - a);
  double x2 = a + inv_phi * (b - a);
  double f1 = f(x1), f2 = f(x2);
  for (int it = 0; it < iters; ++it) {
    if (f1 < f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - inv_phi * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + inv_phi * (b - a);
      f2 = f(x2);
    }
  }
  const double mid = 0.5 * (a + b);
  const double h = std::max(1e-3, 1e-6 * (std::abs(mid) + 1.0));
  const double fm = f(mid), fp = f(mid + h), fn = f(mid - h);
  const double denom = fn - 2.0 * fm + fp;
  if (denom > 0.0) {
    return mid + 0.5 * h * (fn - fp) / denom;
  }
  return mid;
}

/// Euclidean projection onto the probability simplex.
inline std::vector<double> project_simplex(std::vector<double> y) {
  std::vector<double> sorted = y;
  std::sort(sorted.begin(), sorted.end(), std::greater<double>());
  double cumulative = 0.0;
  double tau = 0.0;
  int support = 0;
  for (std::size_t k = 0; k < sorted.size(); ++k) {
    cumulative += sorted[k];
    const double candidate = (cumulative - 1.0) / static_cast<double>(k + 1);
    if (sorted[k] - candidate > 0.0) {
      tau = candidate;
      support = static_cast<int>(k + 1);
    }
  }
  (void)support;
  for (double& value : y) value = std::max(0.0, value - tau);
  return y;
}

/// Accelerated projected-gradient (FISTA with adaptive restart) minimization
/// of sum_i u_i^m d_i over the simplex. Plain projected gradient needs
/// kappa*log(1/eps) steps on ill-conditioned columns; the momentum version
/// reaches 1e-9-level accuracy within a few thousand.
inline std::vector<double> minimize_membership_column(const std::vector<double>& d,
                                                      double m, int max_iter = 500000) {
  const int c = static_cast<int>(d.size());
  double d_max = 0.0;
  for (double value : d) d_max = std::max(d_max, value);
  std::vector<double> u(c, 1.0 / c);
  if (d_max <= 0.0) return u;
  const double step = 1.0 / (m * std::max(m - 1.0, 1.0) * d_max);

  std::vector<double> y = u, u_prev = u, grad(c), next(c);
  double momentum = 1.0;
  for (int it = 0; it < max_iter; ++it) {
    for (int i = 0; i < c; ++i) {
      grad[i] = m * std::pow(std::max(y[i], 0.0), m - 1.0) * d[i];
    }
    for (int i = 0; i < c; ++i) next[i] = y[i] - step * grad[i];
    next = project_simplex(std::move(next));

    double move = 0.0;
    double alignment = 0.0;
    for (int i = 0; i < c; ++i) {
      move = std::max(move, std::abs(next[i] - u[i]));
      alignment += (y[i] - next[i]) * (next[i] - u[i]);
    }
    const double momentum_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum * momentum));
    const double mix = (momentum - 1.0) / momentum_next;
    for (int i = 0; i < c; ++i) y[i] = next[i] + mix * (next[i] - u[i]);
    if (alignment > 0.0) {  // restart the momentum when it points uphill
      y = next;
      momentum = 1.0;
    } else {
      momentum = momentum_next;
    }
    u_prev = u;
    u = next;
    if (move < 1e-14) break;
  }
  return u;
}

/// Central finite difference of f at x0. Exact (up to rounding) for
/// quadratics, which is what the stationarity checks rely on.
inline double central_diff(const std::function<double(double)>& f, double x0,
                           double h) {
  return (f(x0 + h) - f(x0 - h)) / (2.0 * h);
}

// ---------------------------------------------------------------------------
// random small instances

struct SmallInstance {
  ImageTensor x;
  PartitionMatrix u;
  PrototypeSet v;
  ResidualField r;
  WeightField w;
  NeighborhoodSystem nb;
  std::vector<double> betas;
  double m = 2.0;
};

inline SmallInstance make_small_instance(std::mt19937& gen, int width, int height,
                                         int channels, int clusters, double m) {
  std::uniform_real_distribution<double> intensity(0.0, 255.0);
  std::uniform_real_distribution<double> residual(-30.0, 30.0);
  std::uniform_real_distribution<double> weight(0.05, 1.0);
  std::uniform_real_distribution<double> beta(0.2, 8.0);

  SmallInstance inst;
  inst.m = m;
  inst.x = ImageTensor(width, height, channels);
  for (double& value : inst.x.data) value = intensity(gen);
  inst.nb = wrfcm::build_neighborhood(width, height, 1);
  inst.v = PrototypeSet(clusters, channels);
  for (double& value : inst.v.v) value = intensity(gen);
  const int k = width * height;
  inst.r = ResidualField(k, channels);
  for (double& value : inst.r.r) value = residual(gen);
  inst.w = WeightField(k, channels);
  for (double& value : inst.w.w) value = weight(gen);
  inst.betas.resize(channels);
  for (double& value : inst.betas) value = beta(gen);
  inst.u = PartitionMatrix(clusters, k);
  for (int j = 0; j < k; ++j) {
    double sum = 0.0;
    for (int i = 0; i < clusters; ++i) {
      inst.u.at(i, j) = weight(gen);
      sum += inst.u.at(i, j);
    }
    for (int i = 0; i < clusters; ++i) inst.u.at(i, j) /= sum;
  }
  return inst;
}

}  // namespace oracles
