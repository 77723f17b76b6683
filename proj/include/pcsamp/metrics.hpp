#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "pcsamp/errors.hpp"
#include "pcsamp/point_cloud.hpp"

namespace pcsamp {

/// Coefficient of variation (population std / mean) of each sampled point's
/// distance to its nearest sampled neighbor. 0 for perfectly even spacing;
/// scale-free. Lower is more uniform.
template <typename Scalar>
Scalar metric_uniformity(const SampleResultT<Scalar>& sample,
                         const PointCloudT<Scalar>& cloud) {
  const Index m = sample.size();
  if (m < 2) throw TooFewPoints("metric_uniformity: needs at least 2 sampled points");
  VectorX<Scalar> nn(m);
  for (Index i = 0; i < m; ++i) {
    Scalar best = std::numeric_limits<Scalar>::infinity();
    for (Index j = 0; j < m; ++j) {
      if (i == j) continue;
      const Scalar d2 =
          (cloud.points.row(sample.indices[i]) - cloud.points.row(sample.indices[j])).squaredNorm();
      best = std::min(best, d2);
    }
    nn[i] = std::sqrt(best);
  }
  const Scalar mean = nn.mean();
  if (mean == Scalar(0)) return Scalar(0);  // all sampled points coincide
  const Scalar var = (nn.array() - mean).square().mean();
  return std::sqrt(var) / mean;
}

/// One-sided Chamfer distance: mean over all original points of the distance
/// to the nearest sampled point. The sample is a subset, so the reverse side
/// is identically zero.
template <typename Scalar>
Scalar metric_chamfer(const SampleResultT<Scalar>& sample, const PointCloudT<Scalar>& cloud) {
  if (sample.size() < 1) throw TooFewPoints("metric_chamfer: empty sample");
  Scalar total = 0;
  for (Index p = 0; p < cloud.size(); ++p) {
    Scalar best = std::numeric_limits<Scalar>::infinity();
    for (Index i = 0; i < sample.size(); ++i) {
      const Scalar d2 = (cloud.points.row(p) - cloud.points.row(sample.indices[i])).squaredNorm();
      best = std::min(best, d2);
    }
    total += std::sqrt(best);
  }
  return total / static_cast<Scalar>(cloud.size());
}

/// |sampled edge points| / |edge points|. An empty edge set recalls
/// vacuously (1).
template <typename Scalar>
Scalar metric_edge_recall(const SampleResultT<Scalar>& sample,
                          const std::vector<bool>& edge_mask) {
  if (edge_mask.empty()) throw MissingMask("metric_edge_recall: no ground-truth edge mask");
  Index edge_total = 0;
  for (bool b : edge_mask) edge_total += b;
  if (edge_total == 0) return Scalar(1);
  Index hit = 0;
  for (Index i = 0; i < sample.size(); ++i) {
    const Index p = sample.indices[i];
    if (p < 0 || p >= static_cast<Index>(edge_mask.size()))
      throw MissingMask("metric_edge_recall: sample index outside the mask");
    hit += edge_mask[static_cast<std::size_t>(p)];
  }
  return static_cast<Scalar>(hit) / static_cast<Scalar>(edge_total);
}

}  // namespace pcsamp
