#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "wrfcm/core.hpp"

namespace wrfcm {

struct ConfusionCounts {
  long long tp = 0;
  long long fp = 0;
  long long tn = 0;
  long long fn = 0;
};

namespace detail {

inline void check_same_geometry(const LabelMap& a, const LabelMap& b) {
  if (a.width != b.width || a.height != b.height) {
    throw std::invalid_argument("label maps differ in size: " +
                                std::to_string(a.width) + "x" + std::to_string(a.height) +
                                " vs " + std::to_string(b.width) + "x" +
                                std::to_string(b.height));
  }
}

}  // namespace detail

/// Optimal alignment of predicted cluster labels to ground-truth labels.
/// Returns sigma with sigma[p-1] = truth label assigned to predicted label p,
/// chosen to maximize the total matched overlap (exact assignment via
/// subset DP, hence the c <= 10 guard). Ties between equally good
/// assignments are broken on the overlap columns themselves, never on the
/// incoming label numbering, so every reported metric is invariant under
/// relabelings of the prediction.
inline std::vector<int> match_clusters(const LabelMap& pred, const LabelMap& truth,
                                       int clusters) {
  detail::check_same_geometry(pred, truth);
  if (clusters < 1 || clusters > 10) {
    throw std::invalid_argument("match_clusters: cluster count must be in 1..10");
  }
  pred.validate(clusters);
  truth.validate(clusters);

  // overlap[t][p] = |G_t  ∩  S_p|
  std::vector<long long> overlap(static_cast<std::size_t>(clusters) * clusters, 0);
  for (int j = 0; j < pred.pixels(); ++j) {
    overlap[static_cast<std::size_t>(truth.labels[j] - 1) * clusters +
            (pred.labels[j] - 1)]++;
  }

  // canonical order of predicted labels by their overlap columns; predicted
  // labels with identical columns are interchangeable in every metric
  std::vector<int> order(clusters);
  for (int p = 0; p < clusters; ++p) order[p] = p;
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    for (int t = 0; t < clusters; ++t) {
      const long long oa = overlap[static_cast<std::size_t>(t) * clusters + a];
      const long long ob = overlap[static_cast<std::size_t>(t) * clusters + b];
      if (oa != ob) return oa > ob;
    }
    return false;
  });

  // dp over subsets of canonical columns assigned to truth labels 0..t-1
  const int full = 1 << clusters;
  std::vector<long long> best(full, -1);
  std::vector<int> choice(full, -1);
  best[0] = 0;
  for (int mask = 0; mask < full; ++mask) {
    if (best[mask] < 0) continue;
    const int t = __builtin_popcount(static_cast<unsigned>(mask));
    if (t == clusters) continue;
    for (int slot = 0; slot < clusters; ++slot) {
      if (mask & (1 << slot)) continue;
      const int next = mask | (1 << slot);
      const long long score =
          best[mask] +
          overlap[static_cast<std::size_t>(t) * clusters + order[slot]];
      if (score > best[next]) {
        best[next] = score;
        choice[next] = slot;
      }
    }
  }

  std::vector<int> sigma(clusters, 0);
  int mask = full - 1;
  for (int t = clusters - 1; t >= 0; --t) {
    const int slot = choice[mask];
    sigma[order[slot]] = t + 1;
    mask ^= 1 << slot;
  }
  return sigma;
}

/// Apply a label mapping sigma (as returned by match_clusters).
inline LabelMap relabel(const LabelMap& pred, const std::vector<int>& sigma) {
  LabelMap out = pred;
  for (int& label : out.labels) label = sigma[label - 1];
  return out;
}

/// Fraction of pixels whose labels agree. Expects maps already aligned
/// (match_clusters + relabel).
inline double segmentation_accuracy(const LabelMap& pred, const LabelMap& truth) {
  detail::check_same_geometry(pred, truth);
  long long hits = 0;
  for (int j = 0; j < pred.pixels(); ++j) {
    if (pred.labels[j] == truth.labels[j]) ++hits;
  }
  return static_cast<double>(hits) / pred.pixels();
}

/// One-vs-rest confusion counts for the given class.
inline ConfusionCounts confusion(const LabelMap& pred, const LabelMap& truth,
                                 int positive_class) {
  detail::check_same_geometry(pred, truth);
  ConfusionCounts counts;
  for (int j = 0; j < pred.pixels(); ++j) {
    const bool p = pred.labels[j] == positive_class;
    const bool t = truth.labels[j] == positive_class;
    if (p && t) {
      ++counts.tp;
    } else if (p && !t) {
      ++counts.fp;
    } else if (!p && t) {
      ++counts.fn;
    } else {
      ++counts.tn;
    }
  }
  return counts;
}

/// Matthews correlation coefficient; 0 when any denominator factor vanishes.
inline double mcc(const ConfusionCounts& c) {
  const double f1 = static_cast<double>(c.tp + c.fp);
  const double f2 = static_cast<double>(c.tp + c.fn);
  const double f3 = static_cast<double>(c.tn + c.fp);
  const double f4 = static_cast<double>(c.tn + c.fn);
  if (f1 == 0.0 || f2 == 0.0 || f3 == 0.0 || f4 == 0.0) return 0.0;
  const double num = static_cast<double>(c.tp) * c.tn - static_cast<double>(c.fp) * c.fn;
  return num / std::sqrt(f1 * f2 * f3 * f4);
}

/// Sorensen-Dice similarity 2TP / (2TP + FP + FN); 0 when the denominator
/// vanishes.
inline double sds(const ConfusionCounts& c) {
  const double den = static_cast<double>(2 * c.tp + c.fp + c.fn);
  if (den == 0.0) return 0.0;
  return 2.0 * c.tp / den;
}

struct MetricReport {
  double sa = 0.0;
  double sds_macro = 0.0;
  double mcc_macro = 0.0;
  std::vector<double> per_class_sds;
  std::vector<double> per_class_mcc;
};

/// Full evaluation: aligns predicted labels to the ground truth, then
/// reports SA plus one-vs-rest SDS/MCC per class and their macro averages.
inline MetricReport report(const LabelMap& pred, const LabelMap& truth, int clusters) {
  const LabelMap aligned = relabel(pred, match_clusters(pred, truth, clusters));
  MetricReport rep;
  rep.sa = segmentation_accuracy(aligned, truth);
  rep.per_class_sds.resize(clusters);
  rep.per_class_mcc.resize(clusters);
  for (int i = 1; i <= clusters; ++i) {
    const ConfusionCounts counts = confusion(aligned, truth, i);
    rep.per_class_sds[i - 1] = sds(counts);
    rep.per_class_mcc[i - 1] = mcc(counts);
    rep.sds_macro += rep.per_class_sds[i - 1];
    rep.mcc_macro += rep.per_class_mcc[i - 1];
  }
  rep.sds_macro /= clusters;
  rep.mcc_macro /= clusters;
  return rep;
}

}  // namespace wrfcm
