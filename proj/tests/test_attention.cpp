#include <sstream>

#include "doctest.h"
#include "pcsamp/attention.hpp"
#include "pcsamp/geometry.hpp"
#include "pcsamp/io.hpp"

using namespace pcsamp;

namespace {

PointCloud random_cloud(Index n, std::uint64_t seed) {
  Rng rng(seed);
  PointCloud cloud;
  cloud.points.resize(n, 3);
  for (Index i = 0; i < n; ++i)
    cloud.points.row(i) << rng.uniform() * 2 - 1, rng.uniform() * 2 - 1, rng.uniform() * 2 - 1;
  return cloud;
}

// Independent row softmax over the concatenated [point | token] energies.
Eigen::MatrixXd full_softmax_oracle(const TokenEnergyMatrix& e) {
  const Index n = e.point_block.rows();
  const Index n_b = e.token_block.cols();
  Eigen::MatrixXd full(n, n + n_b);
  full << e.point_block, e.token_block;
  for (Index i = 0; i < n; ++i) {
    double mx = full.row(i).maxCoeff();
    double total = 0;
    for (Index j = 0; j < n + n_b; ++j) {
      full(i, j) = std::exp(full(i, j) - mx);
      total += full(i, j);
    }
    full.row(i) /= total;
  }
  return full;
}

}  // namespace

TEST_CASE("init_weights is deterministic per seed") {
  const WeightSet a = init_weights(3, 8, 2, 42);
  const WeightSet b = init_weights(3, 8, 2, 42);
  CHECK(a.w_query == b.w_query);
  CHECK(a.w_key == b.w_key);
  CHECK(a.bin_tokens == b.bin_tokens);
  const WeightSet c = init_weights(3, 8, 2, 43);
  CHECK(a.w_query != c.w_query);
}

TEST_CASE("init_weights entries are zero-mean at the 1/sqrt(d_in) scale") {
  const int seeds = 10000;
  double sum00 = 0, sum_sq = 0;
  for (int s = 0; s < seeds; ++s) {
    const WeightSet ws = init_weights(3, 8, 0, static_cast<std::uint64_t>(s));
    sum00 += ws.w_query(0, 0);
    sum_sq += ws.w_query(0, 0) * ws.w_query(0, 0);
  }
  const double sigma = 1.0 / std::sqrt(3.0);
  const double se = sigma / std::sqrt(static_cast<double>(seeds));
  CHECK(std::abs(sum00 / seeds) <= 3 * se);
  // Second moment close to sigma^2 as well.
  CHECK(sum_sq / seeds == doctest::Approx(sigma * sigma).epsilon(0.1));
}

TEST_CASE("init_weights accepts a tokenless configuration") {
  const WeightSet ws = init_weights(3, 4, 0, 7);
  CHECK(ws.token_count() == 0);
  CHECK(ws.bin_tokens.rows() == 0);
}

TEST_CASE("weights survive a save/load round trip bit-exactly") {
  const WeightSet ws = init_weights(5, 6, 3, 99);
  std::stringstream buf(std::ios::in | std::ios::out | std::ios::binary);
  save_weights(buf, ws);
  const WeightSet back = load_weights(buf);
  CHECK(back.w_query == ws.w_query);
  CHECK(back.w_key == ws.w_key);
  CHECK(back.bin_tokens == ws.bin_tokens);
}

TEST_CASE("weights loader rejects a truncated payload") {
  const WeightSet ws = init_weights(3, 8, 1, 5);
  std::stringstream buf(std::ios::in | std::ios::out | std::ios::binary);
  save_weights(buf, ws);
  std::string bytes = buf.str();
  bytes.resize(bytes.size() - 16);
  std::stringstream cut(bytes, std::ios::in | std::ios::binary);
  CHECK_THROWS_AS(load_weights(cut), FormatError);
}

TEST_CASE("weights loader rejects a bad magic") {
  std::stringstream buf(std::string("NOTAFILE"), std::ios::in | std::ios::binary);
  CHECK_THROWS_AS(load_weights(buf), FormatError);
}

TEST_CASE("a hand-written identity weights file loads as expected") {
  std::stringstream buf(std::ios::in | std::ios::out | std::ios::binary);
  buf.write(kWeightsMagic, 8);
  const std::uint32_t header[4] = {1, 1, 1, 0};  // version, d_in, d, n_b
  buf.write(reinterpret_cast<const char*>(header), sizeof header);
  const double one = 1.0;
  buf.write(reinterpret_cast<const char*>(&one), 8);  // w_query
  buf.write(reinterpret_cast<const char*>(&one), 8);  // w_key
  const WeightSet ws = load_weights(buf);
  CHECK(ws.d_in() == 1);
  CHECK(ws.d() == 1);
  CHECK(ws.w_query(0, 0) == 1.0);
  CHECK(ws.token_count() == 0);
}

TEST_CASE("global map of a single point is [[1]]") {
  const PointCloud cloud = random_cloud(1, 0);
  const DenseAttentionMap map = global_map(cloud, init_weights(3, 4, 0, 1));
  CHECK(map.values.rows() == 1);
  CHECK(map.values(0, 0) == doctest::Approx(1.0));
}

TEST_CASE("global map of two identical points is uniform") {
  PointCloud cloud;
  cloud.points.resize(2, 3);
  cloud.points << 0.3, -0.2, 0.9, 0.3, -0.2, 0.9;
  const DenseAttentionMap map = global_map(cloud, init_weights(3, 4, 0, 2));
  CHECK((map.values.array() - 0.5).abs().maxCoeff() <= 1e-12);
}

TEST_CASE("global map rows are stochastic with entries in (0,1)") {
  const PointCloud cloud = random_cloud(8, 3);
  const DenseAttentionMap map = global_map(cloud, init_weights(3, 8, 0, 4));
  for (Index i = 0; i < 8; ++i) {
    CHECK(std::abs(map.values.row(i).sum() - 1.0) <= 1e-9);
    CHECK(map.values.row(i).minCoeff() > 0.0);
    CHECK(map.values.row(i).maxCoeff() < 1.0);
  }
}

TEST_CASE("global map rejects mismatched input width") {
  PointCloud cloud = random_cloud(4, 5);
  cloud.features.resize(4, 5);
  cloud.features.setZero();
  CHECK_THROWS_AS(global_map(cloud, init_weights(3, 4, 0, 6)), DimMismatch);
}

TEST_CASE("local rows with a single neighbor are all ones") {
  const PointCloud cloud = random_cloud(6, 7);
  const NeighborTable table = knn(cloud, 1);
  const Eigen::MatrixXd rows = local_rows(cloud, table, init_weights(3, 4, 0, 8));
  CHECK((rows.array() - 1.0).abs().maxCoeff() <= 1e-12);
}

TEST_CASE("local rows over coincident neighbors are uniform") {
  PointCloud cloud;
  cloud.points.resize(3, 3);
  cloud.points << 1, 2, 3, 1, 2, 3, 1, 2, 3;
  const NeighborTable table = knn(cloud, 3);
  const Eigen::MatrixXd rows = local_rows(cloud, table, init_weights(3, 4, 0, 9));
  CHECK((rows.array() - 1.0 / 3.0).abs().maxCoeff() <= 1e-12);
}

TEST_CASE("local rows are stochastic") {
  const PointCloud cloud = random_cloud(8, 10);
  const NeighborTable table = knn(cloud, 4);
  const Eigen::MatrixXd rows = local_rows(cloud, table, init_weights(3, 8, 0, 11));
  for (Index i = 0; i < 8; ++i) CHECK(std::abs(rows.row(i).sum() - 1.0) <= 1e-9);
}

TEST_CASE("carving with k=N reproduces the dense map exactly") {
  const PointCloud cloud = random_cloud(9, 12);
  const DenseAttentionMap dense = global_map(cloud, init_weights(3, 8, 0, 13));
  const SparseAttentionMap sam = carve_sam(dense, knn(cloud, 9));
  CHECK((sam.to_dense() - dense.values).cwiseAbs().maxCoeff() == 0.0);
  CHECK(sam.column_counts.sum() == 9 * 9);
}

TEST_CASE("carve keeps the dense values at the neighbor columns") {
  const PointCloud chain = [] {
    PointCloud c;
    c.points.resize(3, 3);
    c.points << 0, 0, 0, 1, 0, 0, 2, 0, 0;
    return c;
  }();
  const DenseAttentionMap dense = global_map(chain, init_weights(3, 4, 0, 14));
  const SparseAttentionMap sam = carve_sam(dense, knn(chain, 2));
  CHECK(sam.column_counts.sum() == 6);
  for (Index o = 0; o < 3; ++o) {
    for (Index j = 0; j < 2; ++j)
      CHECK(sam.vals(o, j) == dense.values(o, sam.cols(o, j)));
    CHECK(sam.vals.row(o).sum() < 1.0);  // softmax mass outside the kept cells
  }
  CHECK(sam.variant == SamVariant::carve);
}

TEST_CASE("insert places local rows and keeps row sums at one") {
  const PointCloud cloud = random_cloud(7, 15);
  const NeighborTable table = knn(cloud, 3);
  const WeightSet ws = init_weights(3, 4, 0, 16);
  const SparseAttentionMap sam = insert_sam(local_rows(cloud, table, ws), table);
  CHECK(sam.variant == SamVariant::insert);
  for (Index o = 0; o < 7; ++o) CHECK(std::abs(sam.vals.row(o).sum() - 1.0) <= 1e-6);
  CHECK(sam.column_counts.sum() == 7 * 3);

  const SparseAttentionMap carved = carve_sam(global_map(cloud, ws), table);
  CHECK(carved.cols == sam.cols);  // identical nonzero positions
}

TEST_CASE("insert with k=1 is the identity pattern") {
  const PointCloud cloud = random_cloud(5, 17);
  const NeighborTable table = knn(cloud, 1);
  const SparseAttentionMap sam = insert_sam(local_rows(cloud, table, init_weights(3, 4, 0, 18)), table);
  const Eigen::MatrixXd dense = sam.to_dense();
  CHECK((dense - Eigen::MatrixXd::Identity(5, 5)).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("token energies match an independent joint softmax") {
  const PointCloud cloud = random_cloud(10, 19);
  const WeightSet ws = init_weights(3, 8, 3, 20);
  const TokenEnergyMatrix e = token_energies(cloud, ws);
  CHECK(e.point_block.rows() == 10);
  CHECK(e.point_block.cols() == 10);
  CHECK(e.token_block.cols() == 3);

  const Eigen::MatrixXd full = full_softmax_oracle(e);
  for (Index i = 0; i < 10; ++i) CHECK(std::abs(full.row(i).sum() - 1.0) <= 1e-9);
  CHECK((full.leftCols(10) - e.post_softmax_point_block).cwiseAbs().maxCoeff() <= 1e-12);

  // Point-block row sums sit just under 1, within the token-mass bound.
  for (Index i = 0; i < 10; ++i) {
    const double point_sum = e.post_softmax_point_block.row(i).sum();
    const double row_max = full.row(i).maxCoeff();
    CHECK(point_sum < 1.0);
    CHECK(point_sum >= 1.0 - 3 * row_max);
  }
}

TEST_CASE("a token duplicating a point key gets that point's energy column") {
  PointCloud cloud = random_cloud(6, 21);
  WeightSet ws = init_weights(3, 8, 1, 22);
  ws.bin_tokens.row(0) = cloud.points.row(2);
  const TokenEnergyMatrix e = token_energies(cloud, ws);
  CHECK((e.token_block.col(0) - e.point_block.col(2)).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("uniform energies give the closed-form point-block mass") {
  const Index n = 12, n_b = 4;
  const PointCloud cloud = random_cloud(n, 23);
  WeightSet ws = init_weights(3, 8, n_b, 24);
  ws.w_key.setZero();  // every energy becomes 0
  const TokenEnergyMatrix e = token_energies(cloud, ws);
  const double expect = static_cast<double>(n) / static_cast<double>(n + n_b);
  for (Index i = 0; i < n; ++i)
    CHECK(e.post_softmax_point_block.row(i).sum() == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("token energies require at least one token") {
  const PointCloud cloud = random_cloud(4, 25);
  CHECK_THROWS_AS(token_energies(cloud, init_weights(3, 4, 0, 26)), DimMismatch);
}

TEST_CASE("input scaling keeps softmax rows stochastic") {
  PointCloud cloud = random_cloud(8, 27);
  const WeightSet ws = init_weights(3, 8, 2, 28);
  cloud.points *= 37.5;
  const DenseAttentionMap map = global_map(cloud, ws);
  for (Index i = 0; i < 8; ++i) CHECK(std::abs(map.values.row(i).sum() - 1.0) <= 1e-6);
  const TokenEnergyMatrix e = token_energies(cloud, ws);
  const Eigen::MatrixXd full = full_softmax_oracle(e);
  for (Index i = 0; i < 8; ++i) CHECK(std::abs(full.row(i).sum() - 1.0) <= 1e-6);
}
