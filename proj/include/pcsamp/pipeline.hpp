#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "pcsamp/attention.hpp"
#include "pcsamp/bins.hpp"
#include "pcsamp/errors.hpp"
#include "pcsamp/geometry.hpp"
#include "pcsamp/point_cloud.hpp"
#include "pcsamp/scoring.hpp"

namespace pcsamp {

enum class SamplePolicy { top_m, prior, bin };

inline const char* to_string(SamplePolicy p) {
  switch (p) {
    case SamplePolicy::top_m: return "top-m";
    case SamplePolicy::prior: return "prior";
    case SamplePolicy::bin: return "bin";
  }
  return "?";
}

inline SamplePolicy parse_policy(const std::string& token) {
  if (token == "top-m") return SamplePolicy::top_m;
  if (token == "prior") return SamplePolicy::prior;
  if (token == "bin") return SamplePolicy::bin;
  throw FormatError("unknown policy '" + token + "' (expected top-m, prior, bin)");
}

template <typename Scalar>
struct PipelineConfigT {
  IndexingMode mode = IndexingMode::column_square_divided;
  Index k = 32;
  Index bin_count = 6;
  Scalar gamma = Scalar(0.99);
  Scalar tau = Scalar(0.1);
  SamVariant variant = SamVariant::carve;
  SamplePolicy policy = SamplePolicy::bin;
  Index key_dim = 8;  // d of synthesized weight sets
};

using PipelineConfig = PipelineConfigT<double>;

template <typename Scalar>
void validate_config(const PipelineConfigT<Scalar>& cfg) {
  if (cfg.k < 1) throw InvalidK("config: k must be >= 1");
  if (cfg.bin_count < 1) throw TooFewPoints("config: n_b must be >= 1");
  if (!(cfg.tau > Scalar(0))) throw InvalidTau("config: tau must be > 0");
  if (!(cfg.gamma > Scalar(0) && cfg.gamma < Scalar(1)))
    throw FormatError("config: gamma must lie in (0,1)");
  if (cfg.key_dim < 1) throw DimMismatch("config: d must be >= 1");
  if (cfg.variant == SamVariant::insert && !mode_allowed(cfg.variant, cfg.mode))
    throw IncompatibleMode(std::string("config: mode ") + mode_token(cfg.mode) +
                           " is not available on insert-variant maps");
}

/// knn -> attention map -> indexing-mode reduction -> normalization.
/// Dense modes read the global map directly; sparse modes read the carved
/// or inserted map.
template <typename Scalar>
ScoreVectorT<Scalar> compute_scores(const PointCloudT<Scalar>& cloud,
                                    const WeightSetT<Scalar>& ws,
                                    const PipelineConfigT<Scalar>& cfg) {
  validate_config(cfg);
  ScoreVectorT<Scalar> scores;
  scores.mode = cfg.mode;
  if (is_dense_mode(cfg.mode)) {
    if (cfg.variant == SamVariant::insert)
      throw IncompatibleMode("compute_scores: dense modes need the carve path");
    scores.raw = score(global_map(cloud, ws), cfg.mode);
  } else {
    const Index k = std::min(cfg.k, cloud.size());
    const NeighborTable table = knn(cloud, k, KnnSpace::attended);
    if (cfg.variant == SamVariant::carve) {
      scores.raw = score(carve_sam(global_map(cloud, ws), table), cfg.mode);
    } else {
      scores.raw = score(insert_sam(local_rows(cloud, table, ws), table), cfg.mode);
    }
  }
  scores.normalized = normalize_scores(scores.raw);
  return scores;
}

template <typename Scalar>
struct PipelineResultT {
  SampleResultT<Scalar> sample;
  BinModelT<Scalar> bin_model;
  VectorX<Scalar> updated_boundaries;
  ScoreVectorT<Scalar> scores;
};

using PipelineResult = PipelineResultT<double>;

/// Full sampling pipeline for one shape. With no stored boundaries the cuts
/// come from this shape's own score distribution (single-shape batch, first
/// iteration); with frozen boundaries supplied they are used as-is. Per-bin
/// draws use seed streams derived from (seed, bin index), which makes the
/// single-bin case coincide with sample_prior under the same seed.
template <typename Scalar>
PipelineResultT<Scalar> run_pipeline(const PointCloudT<Scalar>& cloud,
                                     const WeightSetT<Scalar>& ws,
                                     const PipelineConfigT<Scalar>& cfg,
                                     const std::optional<VectorX<Scalar>>& frozen_boundaries,
                                     Index m, std::uint64_t seed) {
  validate_config(cfg);
  if (m < 1 || m > cloud.size()) throw InvalidM("run_pipeline: M out of range");

  PipelineResultT<Scalar> result;
  result.scores = compute_scores(cloud, ws, cfg);
  const VectorX<Scalar>& a = result.scores.normalized;

  if (cfg.policy == SamplePolicy::top_m) {
    result.sample = sample_top_m(a, m);
    result.sample.seed = seed;
    return result;
  }
  if (cfg.policy == SamplePolicy::prior) {
    result.sample = sample_prior(a, m, cfg.tau, seed);
    return result;
  }

  // Bin policy.
  BinModelT<Scalar>& model = result.bin_model;
  model.gamma = cfg.gamma;
  model.bin_count = cfg.bin_count;
  if (frozen_boundaries) {
    if (frozen_boundaries->size() != cfg.bin_count - 1)
      throw LengthMismatch("run_pipeline: stored boundaries do not match n_b");
    model.boundaries = *frozen_boundaries;
    result.updated_boundaries = model.boundaries;
  } else {
    model.boundaries = quantile_boundaries(a, cfg.bin_count);
    result.updated_boundaries = model.boundaries;
  }

  const PartitionResult<Scalar> part = partition(a, model.boundaries);
  model.counts = part.counts;

  if (ws.token_count() != cfg.bin_count)
    throw ShapeMismatch("run_pipeline: weight set has " + std::to_string(ws.token_count()) +
                        " bin tokens for n_b=" + std::to_string(cfg.bin_count));
  const TokenEnergyMatrixT<Scalar> energies = token_energies(cloud, ws);
  model.weights = bin_weights(energies.token_block, part.bin_of, part.counts);
  model.allocations = allocate(m, model.weights, model.counts);
  model.ratios.resize(cfg.bin_count);
  for (Index j = 0; j < cfg.bin_count; ++j)
    model.ratios[j] = model.counts[j] > 0 ? static_cast<Scalar>(model.allocations[j]) /
                                                static_cast<Scalar>(model.counts[j])
                                          : Scalar(0);

  SampleResultT<Scalar>& sample = result.sample;
  sample.indices.resize(m);
  sample.scores.resize(m);
  sample.bins.resize(m);
  sample.seed = seed;
  sample.policy = Policy::bin;
  Index at = 0;
  std::vector<Index> members;
  for (Index j = 0; j < cfg.bin_count; ++j) {
    if (model.allocations[j] == 0) continue;
    members.clear();
    for (Index i = 0; i < part.bin_of.size(); ++i)
      if (part.bin_of[i] == j) members.push_back(i);
    IndexVector member_vec = Eigen::Map<const IndexVector>(members.data(),
                                                           static_cast<Index>(members.size()));
    VectorX<Scalar> member_scores(member_vec.size());
    for (Index i = 0; i < member_vec.size(); ++i) member_scores[i] = a[member_vec[i]];
    const IndexVector picked = in_bin_sample(member_vec, member_scores, model.allocations[j],
                                             cfg.tau, derive_seed(seed, static_cast<std::uint64_t>(j)));
    for (Index i = 0; i < picked.size(); ++i) {
      sample.indices[at] = picked[i];
      sample.scores[at] = a[picked[i]];
      sample.bins[at] = j;
      ++at;
    }
  }
  return result;
}

/// Sequential calibration fold: each batch's pooled quantile cuts are folded
/// into the running boundaries, the first batch directly, later ones with
/// momentum.
template <typename Scalar>
struct CalibrationStateT {
  VectorX<Scalar> boundaries;
  Scalar gamma = Scalar(0.99);
  Index bin_count = 0;
  Index steps = 0;
};

using CalibrationState = CalibrationStateT<double>;

template <typename Scalar>
void calibrate_step(CalibrationStateT<Scalar>& state,
                    const std::vector<VectorX<Scalar>>& batch_scores) {
  const VectorX<Scalar> current = batch_boundaries(batch_scores, state.bin_count);
  state.boundaries = state.steps == 0
                         ? current
                         : momentum_update(state.boundaries, current, state.gamma);
  state.steps += 1;
}

}  // namespace pcsamp
