#pragma once

#include <chrono>
#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "pcsamp/attention.hpp"
#include "pcsamp/geometry.hpp"
#include "pcsamp/io.hpp"
#include "pcsamp/metrics.hpp"
#include "pcsamp/pipeline.hpp"
#include "pcsamp/shapes.hpp"

namespace pcsamp {

struct BenchRow {
  std::string shape;
  std::string sampler;
  Index m = 0;
  double uniformity = 0;
  double chamfer = 0;
  double edge_recall = 0;
  double millis = 0;
};

struct BenchReport {
  std::vector<BenchRow> rows;
  std::uint64_t seed = 0;
  PipelineConfig config;
};

namespace detail {

/// Deterministic cell-size search: the largest probed cell yielding at least
/// m representatives (voxel counts are only roughly monotone in cell size,
/// so this is a heuristic, not an exact inversion).
inline double pick_voxel_cell(const PointCloud& cloud, Index m) {
  const Eigen::RowVector3d lo = cloud.points.colwise().minCoeff();
  const Eigen::RowVector3d hi = cloud.points.colwise().maxCoeff();
  const double diag = (hi - lo).norm();
  if (diag <= 0) return 1.0;
  double best = diag * 1e-4;
  double cell_lo = diag * 1e-4, cell_hi = diag;
  for (int it = 0; it < 32; ++it) {
    const double cell = 0.5 * (cell_lo + cell_hi);
    const auto reps = sample_voxel(cloud, cell, std::numeric_limits<Index>::max() / 2, 0);
    if (reps.size() >= m) {
      best = cell;
      cell_lo = cell;
    } else {
      cell_hi = cell;
    }
  }
  return best;
}

inline SampleResult run_sampler(const std::string& name, const PointCloud& cloud, Index m,
                                std::uint64_t seed, const PipelineConfig& cfg) {
  if (name == "rs") return sample_random(cloud, m, seed);
  if (name == "fps") return sample_fps(cloud, m, Index(0));
  if (name == "voxel") return sample_voxel(cloud, pick_voxel_cell(cloud, m), m, seed);
  PipelineConfig local = cfg;
  if (name == "top-m") local.policy = SamplePolicy::top_m;
  else if (name == "prior") local.policy = SamplePolicy::prior;
  else if (name == "bin") local.policy = SamplePolicy::bin;
  else throw UnknownGenerator("unknown sampler '" + name + "'");
  const WeightSet ws = init_weights(cloud.attended().cols(), local.key_dim, local.bin_count,
                                    derive_seed(seed, kStreamWeights));
  return run_pipeline(cloud, ws, local, std::optional<VectorX<double>>{}, m, seed).sample;
}

}  // namespace detail

/// One deterministic record per (shape, sampler, M). Shapes are normalized
/// to the unit sphere before sampling; each grid point gets its own seed
/// stream so results do not depend on execution order.
inline BenchReport run_bench(const std::vector<SyntheticShape>& shapes,
                             const std::vector<std::string>& samplers,
                             const std::vector<Index>& m_list, std::uint64_t seed,
                             const PipelineConfig& cfg = {}) {
  BenchReport report;
  report.seed = seed;
  report.config = cfg;
  std::uint64_t row_id = 0;
  for (const auto& shape : shapes) {
    const PointCloud cloud = normalize_unit_sphere(shape.cloud);
    for (const auto& sampler : samplers) {
      for (const Index m : m_list) {
        const std::uint64_t row_seed = derive_seed(seed, row_id++);
        const auto t0 = std::chrono::steady_clock::now();
        const SampleResult sample = detail::run_sampler(sampler, cloud, m, row_seed, cfg);
        const auto t1 = std::chrono::steady_clock::now();
        BenchRow row;
        row.shape = shape.generator;
        row.sampler = sampler;
        row.m = m;
        row.uniformity = sample.size() >= 2 ? metric_uniformity(sample, cloud) : 0.0;
        row.chamfer = metric_chamfer(sample, cloud);
        row.edge_recall = metric_edge_recall(sample, shape.edge_mask);
        row.millis = std::chrono::duration<double, std::milli>(t1 - t0).count();
        report.rows.push_back(std::move(row));
      }
    }
  }
  return report;
}

/// Timing is off by default so reports stay byte-reproducible run to run.
inline void write_bench_report(std::ostream& out, const BenchReport& report,
                               bool include_timing = false) {
  out << "# bench seed=" << report.seed << " mode=" << mode_token(report.config.mode)
      << " k=" << report.config.k << " n_b=" << report.config.bin_count
      << " tau=" << fmt_g17(report.config.tau) << '\n';
  out << "# task-accuracy metrics are out of reach here; geometric proxies stand in\n";
  out << "# shape sampler M uniformity chamfer edge_recall" << (include_timing ? " millis" : "")
      << '\n';
  for (const auto& row : report.rows) {
    out << row.shape << ' ' << row.sampler << ' ' << row.m << ' ' << fmt_g17(row.uniformity)
        << ' ' << fmt_g17(row.chamfer) << ' ' << fmt_g17(row.edge_recall);
    if (include_timing) out << ' ' << fmt_g17(row.millis);
    out << '\n';
  }
}

}  // namespace pcsamp
