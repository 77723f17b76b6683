#pragma once

#include <cassert>
#include <cmath>
#include <string>

#include <Eigen/Core>

#include "pcsamp/attention.hpp"
#include "pcsamp/errors.hpp"
#include "pcsamp/point_cloud.hpp"

namespace pcsamp {

/// The seven reductions mapping an attention map to per-point sampling
/// scores. The first two read the dense map, the rest the sparse one.
/// Config files name them with the roman tokens i..vii in this order.
enum class IndexingMode {
  dense_row_std,          // i
  dense_column_sum,       // ii
  row_std,                // iii
  row_sum,                // iv
  column_sum,             // v
  column_average,         // vi
  column_square_divided,  // vii
};

inline const char* mode_token(IndexingMode m) {
  switch (m) {
    case IndexingMode::dense_row_std: return "i";
    case IndexingMode::dense_column_sum: return "ii";
    case IndexingMode::row_std: return "iii";
    case IndexingMode::row_sum: return "iv";
    case IndexingMode::column_sum: return "v";
    case IndexingMode::column_average: return "vi";
    case IndexingMode::column_square_divided: return "vii";
  }
  return "?";
}

inline IndexingMode parse_mode(const std::string& token) {
  if (token == "i") return IndexingMode::dense_row_std;
  if (token == "ii") return IndexingMode::dense_column_sum;
  if (token == "iii") return IndexingMode::row_std;
  if (token == "iv") return IndexingMode::row_sum;
  if (token == "v") return IndexingMode::column_sum;
  if (token == "vi") return IndexingMode::column_average;
  if (token == "vii") return IndexingMode::column_square_divided;
  throw FormatError("unknown indexing mode '" + token + "' (expected i..vii)");
}

inline bool is_dense_mode(IndexingMode m) {
  return m == IndexingMode::dense_row_std || m == IndexingMode::dense_column_sum;
}

/// Insert-variant maps have row sums pinned to 1, which makes the row-sum
/// reduction degenerate; it is rejected at the pipeline level.
inline bool mode_allowed(SamVariant variant, IndexingMode m) {
  if (is_dense_mode(m)) return false;
  if (variant == SamVariant::insert && m == IndexingMode::row_sum) return false;
  return true;
}

template <typename Scalar>
struct ScoreVectorT {
  VectorX<Scalar> raw;
  VectorX<Scalar> normalized;
  IndexingMode mode = IndexingMode::column_square_divided;
};

using ScoreVector = ScoreVectorT<double>;

namespace detail {

// Population standard deviation (divide by count), two-pass.
template <typename Derived>
typename Derived::Scalar population_std(const Eigen::DenseBase<Derived>& v) {
  using Scalar = typename Derived::Scalar;
  const Scalar mean = v.derived().array().mean();
  const Scalar var = (v.derived().array() - mean).square().mean();
  return std::sqrt(var);
}

}  // namespace detail

/// Dense-map reductions (modes i and ii).
template <typename Scalar>
VectorX<Scalar> score(const DenseAttentionMapT<Scalar>& map, IndexingMode mode) {
  if (!is_dense_mode(mode))
    throw IncompatibleMode(std::string("score: mode ") + mode_token(mode) +
                           " requires a sparse attention map");
  const Index n = map.size();
  VectorX<Scalar> a(n);
  if (mode == IndexingMode::dense_row_std) {
    for (Index o = 0; o < n; ++o) a[o] = detail::population_std(map.values.row(o));
  } else {
    a = map.values.colwise().sum().transpose();
  }
  return a;
}

/// Sparse-map reductions (modes iii..vii). The row-sum reduction is defined
/// for both variants; on insert maps it is identically 1, which is exactly
/// why the pipeline refuses it there.
template <typename Scalar>
VectorX<Scalar> score(const SparseAttentionMapT<Scalar>& map, IndexingMode mode) {
  if (is_dense_mode(mode))
    throw IncompatibleMode(std::string("score: mode ") + mode_token(mode) +
                           " requires a dense attention map");
  const Index n = map.size();
  VectorX<Scalar> a = VectorX<Scalar>::Zero(n);
  switch (mode) {
    case IndexingMode::row_std:
      for (Index o = 0; o < n; ++o) a[o] = detail::population_std(map.vals.row(o));
      break;
    case IndexingMode::row_sum:
      a = map.vals.rowwise().sum();
      break;
    case IndexingMode::column_sum:
    case IndexingMode::column_average:
    case IndexingMode::column_square_divided: {
      for (Index o = 0; o < n; ++o)
        for (Index j = 0; j < map.k(); ++j) a[map.cols(o, j)] += map.vals(o, j);
      if (mode != IndexingMode::column_sum) {
        for (Index o = 0; o < n; ++o) {
          // Zero columns cannot arise from a self-inclusive neighbor table.
          assert(map.column_counts[o] >= 1);
          const Scalar n_o = static_cast<Scalar>(map.column_counts[o]);
          a[o] /= (mode == IndexingMode::column_average) ? n_o : n_o * n_o;
        }
      }
      break;
    }
    default:
      break;
  }
  return a;
}

/// Affine transform to mean 0.5 and population deviation 1; constant input
/// maps every score to 0.5. Ranking-preserving.
template <typename Scalar>
VectorX<Scalar> normalize_scores(const VectorX<Scalar>& raw) {
  const Scalar mean = raw.mean();
  const Scalar dev = detail::population_std(raw);
  if (dev == Scalar(0)) return VectorX<Scalar>::Constant(raw.size(), Scalar(0.5));
  return ((raw.array() - mean) / dev + Scalar(0.5)).matrix();
}

}  // namespace pcsamp
