#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

#include "pcsamp/errors.hpp"
#include "pcsamp/point_cloud.hpp"
#include "pcsamp/rng.hpp"

namespace pcsamp {

/// Center on the centroid and scale so the farthest point sits on the unit
/// sphere. A cloud of coincident points maps to the origin.
template <typename Scalar>
PointCloudT<Scalar> normalize_unit_sphere(const PointCloudT<Scalar>& cloud) {
  if (cloud.size() < 1) throw EmptyCloud("normalize_unit_sphere: empty cloud");
  PointCloudT<Scalar> out = cloud;
  const Eigen::Matrix<Scalar, 1, 3> centroid = cloud.points.colwise().mean();
  out.points.rowwise() -= centroid;
  const Scalar max_norm = out.points.rowwise().norm().maxCoeff();
  if (max_norm > Scalar(0)) out.points /= max_norm;
  return out;
}

enum class KnnSpace { coordinates, attended };

namespace detail {

// Neighbor ordering: ascending squared distance; the query point precedes
// any coincident duplicate so self-inclusion survives k = 1; remaining ties
// go to the smaller index.
template <typename Scalar>
struct NeighborOrder {
  const VectorX<Scalar>& d2;
  Index self;
  bool operator()(Index a, Index b) const {
    if (d2[a] != d2[b]) return d2[a] < d2[b];
    if ((a == self) != (b == self)) return a == self;
    return a < b;
  }
};

template <typename Scalar>
void check_k(const PointCloudT<Scalar>& cloud, Index k) {
  if (k < 1 || k > cloud.size())
    throw InvalidK("knn: k must satisfy 1 <= k <= N, got k=" + std::to_string(k) +
                   " with N=" + std::to_string(cloud.size()));
}

template <typename Scalar>
MatrixX<Scalar> knn_rep(const PointCloudT<Scalar>& cloud, KnnSpace space) {
  if (space == KnnSpace::attended) return cloud.attended();
  return cloud.points;
}

}  // namespace detail

/// Exhaustive O(N^2) k-nearest-neighbor search.
template <typename Scalar>
NeighborTable knn(const PointCloudT<Scalar>& cloud, Index k,
                  KnnSpace space = KnnSpace::coordinates) {
  detail::check_k(cloud, k);
  const MatrixX<Scalar> rep = detail::knn_rep(cloud, space);
  const Index n = rep.rows();

  NeighborTable table;
  table.indices.resize(n, k);
  VectorX<Scalar> d2(n);
  std::vector<Index> order(static_cast<std::size_t>(n));
  for (Index o = 0; o < n; ++o) {
    for (Index p = 0; p < n; ++p) d2[p] = (rep.row(p) - rep.row(o)).squaredNorm();
    std::iota(order.begin(), order.end(), Index(0));
    std::partial_sort(order.begin(), order.begin() + k, order.end(),
                      detail::NeighborOrder<Scalar>{d2, o});
    for (Index j = 0; j < k; ++j) table.indices(o, j) = order[static_cast<std::size_t>(j)];
  }
  return table;
}

namespace detail {

inline std::uint64_t pack_cell(Index ix, Index iy, Index iz) {
  // 21 bits per axis; grid resolutions here are ~cbrt(N).
  return (static_cast<std::uint64_t>(ix) << 42) | (static_cast<std::uint64_t>(iy) << 21) |
         static_cast<std::uint64_t>(iz);
}

}  // namespace detail

/// Uniform-grid accelerated k-NN. Produces bit-identical tables to knn():
/// cells are expanded in Chebyshev rings until no farther ring can contain a
/// closer or tie-breaking candidate, then the same ordering is applied.
template <typename Scalar>
NeighborTable knn_grid(const PointCloudT<Scalar>& cloud, Index k,
                       KnnSpace space = KnnSpace::coordinates) {
  detail::check_k(cloud, k);
  if (space == KnnSpace::attended && cloud.has_features()) {
    // The grid only indexes 3D coordinates; feature-space queries fall back.
    return knn(cloud, k, space);
  }
  const Index n = cloud.size();
  const PointMatrix<Scalar>& pts = cloud.points;
  // Distances are taken from the same dynamic-width matrix knn() uses so the
  // two paths produce identical floating-point values.
  const MatrixX<Scalar> rep = detail::knn_rep(cloud, space);

  const Eigen::Matrix<Scalar, 1, 3> lo = pts.colwise().minCoeff();
  const Eigen::Matrix<Scalar, 1, 3> hi = pts.colwise().maxCoeff();
  const Scalar extent = (hi - lo).maxCoeff();
  const Index res = std::max<Index>(1, static_cast<Index>(std::cbrt(static_cast<double>(n))));
  const Scalar cell = extent > Scalar(0) ? extent / static_cast<Scalar>(res) : Scalar(1);

  auto cell_of = [&](Index p, int axis) {
    Index c = static_cast<Index>(std::floor((pts(p, axis) - lo[axis]) / cell));
    return std::clamp<Index>(c, 0, res);  // top boundary folds into the last cell
  };

  std::unordered_map<std::uint64_t, std::vector<Index>> buckets;
  buckets.reserve(static_cast<std::size_t>(n));
  for (Index p = 0; p < n; ++p)
    buckets[detail::pack_cell(cell_of(p, 0), cell_of(p, 1), cell_of(p, 2))].push_back(p);

  NeighborTable table;
  table.indices.resize(n, k);
  std::vector<Index> cand;
  VectorX<Scalar> d2(n);
  for (Index o = 0; o < n; ++o) {
    const Index cx = cell_of(o, 0), cy = cell_of(o, 1), cz = cell_of(o, 2);
    cand.clear();
    Scalar kth_d2 = std::numeric_limits<Scalar>::infinity();
    const auto visit_cell = [&](Index ix, Index iy, Index iz) {
      if (ix < 0 || iy < 0 || iz < 0 || ix > res || iy > res || iz > res) return;
      auto it = buckets.find(detail::pack_cell(ix, iy, iz));
      if (it == buckets.end()) return;
      for (Index p : it->second) {
        d2[p] = (rep.row(p) - rep.row(o)).squaredNorm();
        cand.push_back(p);
      }
    };
    bool bound_met = false;
    for (Index r = 0;; ++r) {
      if (r == 0) {
        visit_cell(cx, cy, cz);
      } else {
        for (Index ix = cx - r; ix <= cx + r; ++ix)
          for (Index iy = cy - r; iy <= cy + r; ++iy)
            for (Index iz = cz - r; iz <= cz + r; ++iz) {
              const Index cheb = std::max({std::abs(ix - cx), std::abs(iy - cy), std::abs(iz - cz)});
              if (cheb == r) visit_cell(ix, iy, iz);
            }
      }
      // One extra ring is visited after the distance bound is met, which
      // absorbs rounding slivers right at the ring boundary and exact ties.
      if (bound_met) break;
      if (static_cast<Index>(cand.size()) >= k) {
        std::nth_element(cand.begin(), cand.begin() + (k - 1), cand.end(),
                         detail::NeighborOrder<Scalar>{d2, o});
        kth_d2 = d2[cand[static_cast<std::size_t>(k - 1)]];
        // Any point in ring r+1 or beyond is at distance >= r*cell.
        const Scalar ring_min = static_cast<Scalar>(r) * cell;
        bound_met = ring_min * ring_min > kth_d2;
      }
      if (r > 3 * res + 2) break;  // every cell visited
    }
    std::partial_sort(cand.begin(), cand.begin() + k, cand.end(),
                      detail::NeighborOrder<Scalar>{d2, o});
    for (Index j = 0; j < k; ++j) table.indices(o, j) = cand[static_cast<std::size_t>(j)];
  }
  return table;
}

/// count[o] = number of rows of the table containing o. Sums to N*k.
inline IndexVector neighbor_frequency(const NeighborTable& table) {
  IndexVector counts = IndexVector::Zero(table.size());
  for (Index o = 0; o < table.size(); ++o)
    for (Index j = 0; j < table.k(); ++j) counts[table.indices(o, j)] += 1;
  return counts;
}

namespace detail {

template <typename Scalar>
void check_m(const PointCloudT<Scalar>& cloud, Index m) {
  if (m < 1 || m > cloud.size())
    throw InvalidM("sampler: M must satisfy 1 <= M <= N, got M=" + std::to_string(m) +
                   " with N=" + std::to_string(cloud.size()));
}

}  // namespace detail

/// M distinct indices drawn uniformly without replacement.
template <typename Scalar>
SampleResultT<Scalar> sample_random(const PointCloudT<Scalar>& cloud, Index m,
                                    std::uint64_t seed) {
  detail::check_m(cloud, m);
  Rng rng(seed);
  SampleResultT<Scalar> result;
  result.indices = draw_without_replacement(cloud.size(), m, rng);
  result.scores = VectorX<Scalar>::Zero(m);
  result.bins = IndexVector::Zero(m);
  result.seed = seed;
  result.policy = Policy::random;
  return result;
}

/// Greedy farthest point sampling from a fixed start index. Each step picks
/// the point maximizing the distance to the selected set, ties to the
/// smaller index.
template <typename Scalar>
SampleResultT<Scalar> sample_fps(const PointCloudT<Scalar>& cloud, Index m,
                                 Index start = 0) {
  detail::check_m(cloud, m);
  if (start < 0 || start >= cloud.size())
    throw InvalidM("sample_fps: start index out of range");
  const Index n = cloud.size();
  const PointMatrix<Scalar>& pts = cloud.points;

  IndexVector chosen(m);
  std::vector<bool> selected(static_cast<std::size_t>(n), false);
  VectorX<Scalar> min_d2 = VectorX<Scalar>::Constant(n, std::numeric_limits<Scalar>::infinity());

  Index current = start;
  for (Index i = 0; i < m; ++i) {
    chosen[i] = current;
    selected[static_cast<std::size_t>(current)] = true;
    Index best = -1;
    Scalar best_d2 = -1;
    for (Index p = 0; p < n; ++p) {
      const Scalar d2 = (pts.row(p) - pts.row(current)).squaredNorm();
      if (d2 < min_d2[p]) min_d2[p] = d2;
      if (!selected[static_cast<std::size_t>(p)] && min_d2[p] > best_d2) {
        best_d2 = min_d2[p];
        best = p;
      }
    }
    current = best;
  }

  SampleResultT<Scalar> result;
  result.indices = chosen;
  result.scores = VectorX<Scalar>::Zero(m);
  result.bins = IndexVector::Zero(m);
  result.seed = 0;
  result.policy = Policy::fps;
  return result;
}

/// FPS with a seeded random start index.
template <typename Scalar>
SampleResultT<Scalar> sample_fps_seeded(const PointCloudT<Scalar>& cloud, Index m,
                                        std::uint64_t seed) {
  Rng rng(derive_seed(seed, kStreamFpsStart));
  auto result = sample_fps(cloud, m, rng.uniform_index(cloud.size()));
  result.seed = seed;
  return result;
}

/// Voxel-grid downsampling: one representative per occupied cubic cell (the
/// point nearest the cell center, ties to the smaller index). Representatives
/// beyond the target are truncated by seeded random subsampling; a shortfall
/// is flagged when fewer exist.
template <typename Scalar>
SampleResultT<Scalar> sample_voxel(const PointCloudT<Scalar>& cloud, Scalar cell,
                                   Index m_target, std::uint64_t seed) {
  if (!(cell > Scalar(0))) throw InvalidCell("sample_voxel: cell must be > 0");
  if (m_target < 1) throw InvalidM("sample_voxel: target must be >= 1");
  const Index n = cloud.size();
  const PointMatrix<Scalar>& pts = cloud.points;

  // Cell coordinates are origin-anchored and shifted into non-negative range
  // for packing; 21 bits per axis bounds the usable grid.
  constexpr Index kOffset = Index(1) << 20;
  const Scalar reach = pts.cwiseAbs().maxCoeff();
  if (reach / cell >= static_cast<Scalar>(kOffset - 1))
    throw InvalidCell("sample_voxel: cell too small for the cloud extent");

  struct Rep {
    Index index;
    Scalar d2_center;
  };
  std::unordered_map<std::uint64_t, Rep> reps;
  reps.reserve(static_cast<std::size_t>(n));
  for (Index p = 0; p < n; ++p) {
    Index c[3];
    Scalar d2 = 0;
    for (int a = 0; a < 3; ++a) {
      c[a] = static_cast<Index>(std::floor(pts(p, a) / cell));
      const Scalar center = (static_cast<Scalar>(c[a]) + Scalar(0.5)) * cell;
      d2 += (pts(p, a) - center) * (pts(p, a) - center);
    }
    const std::uint64_t key = detail::pack_cell(c[0] + kOffset, c[1] + kOffset, c[2] + kOffset);
    auto [it, inserted] = reps.try_emplace(key, Rep{p, d2});
    if (!inserted && (d2 < it->second.d2_center ||
                      (d2 == it->second.d2_center && p < it->second.index)))
      it->second = Rep{p, d2};
  }

  std::vector<Index> indices;
  indices.reserve(reps.size());
  for (const auto& [key, rep] : reps) indices.push_back(rep.index);
  std::sort(indices.begin(), indices.end());

  SampleResultT<Scalar> result;
  result.seed = seed;
  result.policy = Policy::voxel;
  const Index r = static_cast<Index>(indices.size());
  if (r > m_target) {
    Rng rng(derive_seed(seed, kStreamVoxel));
    const IndexVector pick = draw_without_replacement(r, m_target, rng);
    std::vector<Index> kept(static_cast<std::size_t>(m_target));
    for (Index i = 0; i < m_target; ++i)
      kept[static_cast<std::size_t>(i)] = indices[static_cast<std::size_t>(pick[i])];
    std::sort(kept.begin(), kept.end());
    result.indices = Eigen::Map<const IndexVector>(kept.data(), m_target);
  } else {
    result.indices = Eigen::Map<const IndexVector>(indices.data(), r);
    result.shortfall = r < m_target;
  }
  result.scores = VectorX<Scalar>::Zero(result.indices.size());
  result.bins = IndexVector::Zero(result.indices.size());
  return result;
}

}  // namespace pcsamp
