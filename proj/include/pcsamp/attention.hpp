#pragma once

#include <cmath>
#include <cstdint>
#include <string>

#include <Eigen/Core>

#include "pcsamp/errors.hpp"
#include "pcsamp/point_cloud.hpp"
#include "pcsamp/rng.hpp"

namespace pcsamp {

/// Query/key projections plus bin-token embeddings. Tokens live in input
/// space and pass through the key projection alongside the point rows.
template <typename Scalar>
struct WeightSetT {
  MatrixX<Scalar> w_query;    // d_in x d
  MatrixX<Scalar> w_key;      // d_in x d
  MatrixX<Scalar> bin_tokens; // n_b x d_in
  std::string provenance;     // seed or file path

  Index d_in() const { return w_query.rows(); }
  Index d() const { return w_query.cols(); }
  Index token_count() const { return bin_tokens.rows(); }
};

using WeightSet = WeightSetT<double>;

/// Row-stochastic N x N attention map.
template <typename Scalar>
struct DenseAttentionMapT {
  MatrixX<Scalar> values;

  Index size() const { return values.rows(); }
};

using DenseAttentionMap = DenseAttentionMapT<double>;

enum class SamVariant { carve, insert };

inline const char* to_string(SamVariant v) {
  return v == SamVariant::carve ? "carve" : "insert";
}

/// Row-compressed N x N sparse attention map with exactly k stored entries
/// per row at the neighbor-table columns. column_counts[o] is n_o, the number
/// of stored cells in column o.
template <typename Scalar>
struct SparseAttentionMapT {
  IndexMatrix cols;          // N x k, neighbor-table order
  MatrixX<Scalar> vals;      // N x k
  IndexVector column_counts; // n_o per column
  SamVariant variant = SamVariant::carve;

  Index size() const { return cols.rows(); }
  Index k() const { return cols.cols(); }

  MatrixX<Scalar> to_dense() const {
    MatrixX<Scalar> dense = MatrixX<Scalar>::Zero(size(), size());
    for (Index o = 0; o < size(); ++o)
      for (Index j = 0; j < k(); ++j) dense(o, cols(o, j)) = vals(o, j);
    return dense;
  }
};

using SparseAttentionMap = SparseAttentionMapT<double>;

/// Token-augmented energies: softmax runs jointly over the N point columns
/// and the n_b token columns, so point-block rows sum to slightly under 1.
/// Pre-softmax blocks are retained for the bin-weight computation.
template <typename Scalar>
struct TokenEnergyMatrixT {
  MatrixX<Scalar> point_block;              // N x N, pre-softmax
  MatrixX<Scalar> token_block;              // N x n_b, pre-softmax
  MatrixX<Scalar> post_softmax_point_block; // N x N
};

using TokenEnergyMatrix = TokenEnergyMatrixT<double>;

/// Softmax along each row with max-subtraction. Swept column by column so
/// the work stays contiguous in Eigen's column-major storage.
template <typename Scalar>
void softmax_rows_in_place(MatrixX<Scalar>& m) {
  VectorX<Scalar> row_max = m.col(0);
  for (Index j = 1; j < m.cols(); ++j) row_max = row_max.cwiseMax(m.col(j));
  VectorX<Scalar> row_sum = VectorX<Scalar>::Zero(m.rows());
  for (Index j = 0; j < m.cols(); ++j) {
    m.col(j) = (m.col(j) - row_max).array().exp();
    row_sum += m.col(j);
  }
  for (Index j = 0; j < m.cols(); ++j) m.col(j).array() /= row_sum.array();
}

/// Fresh projection weights: zero-mean normal entries with deviation
/// 1/sqrt(d_in), deterministic per seed.
template <typename Scalar = double>
WeightSetT<Scalar> init_weights(Index d_in, Index d, Index n_b, std::uint64_t seed) {
  if (d_in < 1 || d < 1 || n_b < 0)
    throw DimMismatch("init_weights: dimensions must be >= 1 (n_b >= 0)");
  Rng rng(seed);
  const Scalar scale = Scalar(1) / std::sqrt(static_cast<Scalar>(d_in));
  const auto fill = [&](MatrixX<Scalar>& m, Index r, Index c) {
    m.resize(r, c);
    for (Index i = 0; i < r; ++i)
      for (Index j = 0; j < c; ++j) m(i, j) = scale * static_cast<Scalar>(rng.normal());
  };
  WeightSetT<Scalar> ws;
  fill(ws.w_query, d_in, d);
  fill(ws.w_key, d_in, d);
  fill(ws.bin_tokens, n_b, d_in);
  ws.provenance = "seed:" + std::to_string(seed);
  return ws;
}

namespace detail {

template <typename Scalar>
void check_width(const PointCloudT<Scalar>& cloud, const WeightSetT<Scalar>& ws,
                 const char* where) {
  if (cloud.attended().cols() != ws.d_in())
    throw DimMismatch(std::string(where) + ": input width " +
                      std::to_string(cloud.attended().cols()) + " != weight d_in " +
                      std::to_string(ws.d_in()));
}

}  // namespace detail

/// Global attention: row-softmax of (X Wq)(X Wk)^T / sqrt(d).
template <typename Scalar>
DenseAttentionMapT<Scalar> global_map(const PointCloudT<Scalar>& cloud,
                                      const WeightSetT<Scalar>& ws) {
  detail::check_width(cloud, ws, "global_map");
  const MatrixX<Scalar> x = cloud.attended();
  const Scalar inv_scale = Scalar(1) / std::sqrt(static_cast<Scalar>(ws.d()));
  DenseAttentionMapT<Scalar> map;
  map.values.noalias() = (x * ws.w_query) * (x * ws.w_key).transpose();
  map.values *= inv_scale;
  softmax_rows_in_place(map.values);
  return map;
}

/// Local attention rows: softmax over each point's k neighbors with keys
/// taken from relative offsets (x_neighbor - x_center).
template <typename Scalar>
MatrixX<Scalar> local_rows(const PointCloudT<Scalar>& cloud, const NeighborTable& table,
                           const WeightSetT<Scalar>& ws) {
  detail::check_width(cloud, ws, "local_rows");
  if (table.size() != cloud.size())
    throw ShapeMismatch("local_rows: table size != cloud size");
  const MatrixX<Scalar> x = cloud.attended();
  const MatrixX<Scalar> queries = x * ws.w_query;  // N x d
  const Scalar inv_scale = Scalar(1) / std::sqrt(static_cast<Scalar>(ws.d()));

  MatrixX<Scalar> rows(table.size(), table.k());
  VectorX<Scalar> offset_key(ws.d());
  for (Index o = 0; o < table.size(); ++o) {
    for (Index j = 0; j < table.k(); ++j) {
      const Index nb = table.indices(o, j);
      offset_key.noalias() = ws.w_key.transpose() * (x.row(nb) - x.row(o)).transpose();
      rows(o, j) = queries.row(o).dot(offset_key) * inv_scale;
    }
  }
  softmax_rows_in_place(rows);
  return rows;
}

namespace detail {

inline IndexVector tally_columns(const NeighborTable& table) {
  IndexVector counts = IndexVector::Zero(table.size());
  for (Index o = 0; o < table.size(); ++o)
    for (Index j = 0; j < table.k(); ++j) counts[table.indices(o, j)] += 1;
  return counts;
}

}  // namespace detail

/// Carve the dense map: keep each row's values at its k neighbor columns.
template <typename Scalar>
SparseAttentionMapT<Scalar> carve_sam(const DenseAttentionMapT<Scalar>& dense,
                                      const NeighborTable& table) {
  if (dense.size() != table.size() || dense.values.cols() != table.size())
    throw ShapeMismatch("carve_sam: dense map and table sizes differ");
  SparseAttentionMapT<Scalar> sam;
  sam.cols = table.indices;
  sam.vals.resize(table.size(), table.k());
  for (Index o = 0; o < table.size(); ++o)
    for (Index j = 0; j < table.k(); ++j) sam.vals(o, j) = dense.values(o, table.indices(o, j));
  sam.column_counts = detail::tally_columns(table);
  sam.variant = SamVariant::carve;
  return sam;
}

/// Insert local attention rows into an empty N x N map at the neighbor
/// columns; rows keep their softmax sum of 1.
template <typename Scalar>
SparseAttentionMapT<Scalar> insert_sam(const MatrixX<Scalar>& local,
                                       const NeighborTable& table) {
  if (local.rows() != table.size() || local.cols() != table.k())
    throw ShapeMismatch("insert_sam: local rows and table shapes differ");
  SparseAttentionMapT<Scalar> sam;
  sam.cols = table.indices;
  sam.vals = local;
  sam.column_counts = detail::tally_columns(table);
  sam.variant = SamVariant::insert;
  return sam;
}

/// Cross-attention energies of points against [points; bin tokens], split
/// into point and token blocks. Tokens are appended on the key side only,
/// so the point block stays N x N.
template <typename Scalar>
TokenEnergyMatrixT<Scalar> token_energies(const PointCloudT<Scalar>& cloud,
                                          const WeightSetT<Scalar>& ws) {
  detail::check_width(cloud, ws, "token_energies");
  if (ws.token_count() < 1)
    throw DimMismatch("token_energies: weight set carries no bin tokens");
  const MatrixX<Scalar> x = cloud.attended();
  const Index n = x.rows();
  const Index n_b = ws.token_count();

  MatrixX<Scalar> keyed(n + n_b, ws.d());
  keyed.topRows(n).noalias() = x * ws.w_key;
  keyed.bottomRows(n_b).noalias() = ws.bin_tokens * ws.w_key;

  const Scalar inv_scale = Scalar(1) / std::sqrt(static_cast<Scalar>(ws.d()));
  MatrixX<Scalar> energies;
  energies.noalias() = (x * ws.w_query) * keyed.transpose();
  energies *= inv_scale;

  TokenEnergyMatrixT<Scalar> out;
  out.point_block = energies.leftCols(n);
  out.token_block = energies.rightCols(n_b);
  softmax_rows_in_place(energies);
  out.post_softmax_point_block = energies.leftCols(n);
  return out;
}

}  // namespace pcsamp
