#pragma once

#include <cstdint>
#include <string>

#include <Eigen/Core>

#include "pcsamp/errors.hpp"

namespace pcsamp {

using Index = Eigen::Index;

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using PointMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, 3>;

using IndexMatrix = Eigen::Matrix<Index, Eigen::Dynamic, Eigen::Dynamic>;
using IndexVector = Eigen::Matrix<Index, Eigen::Dynamic, 1>;

/// Ordered set of 3D points with optional per-point feature rows.
template <typename Scalar>
struct PointCloudT {
  PointMatrix<Scalar> points;   // N x 3
  MatrixX<Scalar> features;     // N x d_f, or 0 x 0 when absent
  std::string id;

  Index size() const { return points.rows(); }
  bool has_features() const { return features.size() > 0; }

  /// The representation attention operates on: features when present,
  /// raw coordinates otherwise.
  Eigen::Ref<const MatrixX<Scalar>> attended() const {
    if (has_features()) return features;
    return points;
  }
};

using PointCloud = PointCloudT<double>;

/// Row o lists the k nearest neighbors of point o, ascending by distance,
/// with o itself always among them.
struct NeighborTable {
  IndexMatrix indices;  // N x k

  Index size() const { return indices.rows(); }
  Index k() const { return indices.cols(); }
};

enum class Policy { random, fps, voxel, top_m, prior, bin };

inline const char* to_string(Policy p) {
  switch (p) {
    case Policy::random: return "random";
    case Policy::fps: return "fps";
    case Policy::voxel: return "voxel";
    case Policy::top_m: return "top-m";
    case Policy::prior: return "prior";
    case Policy::bin: return "bin";
  }
  return "?";
}

/// Output of any sampler: selected original-point indices plus aligned
/// per-point provenance.
template <typename Scalar>
struct SampleResultT {
  IndexVector indices;       // M distinct indices into the input cloud
  VectorX<Scalar> scores;    // aligned normalized scores (zeros if scoreless)
  IndexVector bins;          // aligned bin ids (zeros outside bin policy)
  std::uint64_t seed = 0;
  Policy policy = Policy::random;
  bool shortfall = false;    // voxel only: fewer representatives than target

  Index size() const { return indices.size(); }
};

using SampleResult = SampleResultT<double>;

}  // namespace pcsamp
