#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "pcsamp/errors.hpp"
#include "pcsamp/point_cloud.hpp"
#include "pcsamp/rng.hpp"
#include "pcsamp/scoring.hpp"

namespace pcsamp {

/// Per-shape bin bookkeeping: boundaries (descending, bin 0 holds the highest
/// scores), member counts, token-derived weights, integer allocations, and
/// realized sampling ratios.
template <typename Scalar>
struct BinModelT {
  VectorX<Scalar> boundaries;  // n_b - 1 thresholds, descending
  IndexVector counts;          // beta, sums to N
  VectorX<Scalar> weights;     // omega, >= 0
  IndexVector allocations;     // kappa, sums to M
  VectorX<Scalar> ratios;      // kappa/beta per bin (0 for empty bins)
  Scalar gamma = Scalar(0.99);
  Index bin_count = 0;
};

using BinModel = BinModelT<double>;

/// Empirical quantile cuts of a pooled score sample at levels j/n_b,
/// midpoint-between-order-statistics convention, returned descending.
/// Each of the n_b buckets receives floor(P/n_b) or ceil(P/n_b) points.
template <typename Scalar>
VectorX<Scalar> quantile_boundaries(VectorX<Scalar> pooled, Index n_b) {
  if (n_b < 1) throw TooFewPoints("quantile_boundaries: n_b must be >= 1");
  const Index p = pooled.size();
  if (p < n_b)
    throw TooFewPoints("quantile_boundaries: pooled count " + std::to_string(p) +
                       " below bin count " + std::to_string(n_b));
  std::sort(pooled.data(), pooled.data() + p);
  VectorX<Scalar> cuts(n_b - 1);
  for (Index j = 1; j < n_b; ++j) {
    const double level = static_cast<double>(j) * static_cast<double>(p) /
                         static_cast<double>(n_b);
    Index m = static_cast<Index>(std::llround(level));
    m = std::clamp<Index>(m, 1, p - 1);
    // Descending: the j-th cut from the top separates the upper j buckets.
    cuts[n_b - 1 - j] = (pooled[m - 1] + pooled[m]) / Scalar(2);
  }
  return cuts;
}

/// Quantile cuts over all scores of a batch of shapes pooled together.
template <typename Scalar>
VectorX<Scalar> batch_boundaries(const std::vector<VectorX<Scalar>>& shape_scores,
                                 Index n_b) {
  Index total = 0;
  for (const auto& s : shape_scores) total += s.size();
  VectorX<Scalar> pooled(total);
  Index at = 0;
  for (const auto& s : shape_scores) {
    pooled.segment(at, s.size()) = s;
    at += s.size();
  }
  return quantile_boundaries(std::move(pooled), n_b);
}

/// Momentum update of bin boundaries. The first calibration step bypasses
/// this and adopts the batch cuts directly.
template <typename Scalar>
VectorX<Scalar> momentum_update(const VectorX<Scalar>& prev, const VectorX<Scalar>& current,
                                Scalar gamma) {
  if (prev.size() != current.size())
    throw LengthMismatch("momentum_update: boundary vectors differ in length");
  if (!(gamma > Scalar(0) && gamma < Scalar(1)))
    throw Error("momentum_update: gamma must lie in (0,1)");
  return gamma * prev + (Scalar(1) - gamma) * current;
}

template <typename Scalar>
struct PartitionResult {
  IndexVector bin_of;  // per point, in [0, n_b)
  IndexVector counts;  // beta, length n_b
};

/// Assign each score to a bin: bin j = number of boundaries strictly above
/// the score, so boundary equality lands in the higher-score bin. Duplicate
/// boundaries (constant-score degeneracy) leave the intervening bins empty.
template <typename Scalar>
PartitionResult<Scalar> partition(const VectorX<Scalar>& normalized,
                                  const VectorX<Scalar>& boundaries) {
  const Index n_b = boundaries.size() + 1;
  PartitionResult<Scalar> out;
  out.bin_of.resize(normalized.size());
  out.counts = IndexVector::Zero(n_b);
  for (Index i = 0; i < normalized.size(); ++i) {
    Index b = 0;
    while (b < boundaries.size() && boundaries[b] > normalized[i]) ++b;
    out.bin_of[i] = b;
    out.counts[b] += 1;
  }
  return out;
}

/// Bin weights from the pre-softmax point-to-token block: mask each token
/// column to its bin's members, mean-pool, then ReLU. Pooling precedes the
/// ReLU so negative member energies are fused before clipping. Empty bins
/// get weight 0.
template <typename Scalar>
VectorX<Scalar> bin_weights(const MatrixX<Scalar>& token_block, const IndexVector& bin_of,
                            const IndexVector& counts) {
  const Index n_b = counts.size();
  if (token_block.cols() != n_b)
    throw ShapeMismatch("bin_weights: token block has " + std::to_string(token_block.cols()) +
                        " columns for " + std::to_string(n_b) + " bins");
  if (token_block.rows() != bin_of.size())
    throw ShapeMismatch("bin_weights: token block rows != assignment length");
  VectorX<Scalar> sums = VectorX<Scalar>::Zero(n_b);
  for (Index i = 0; i < bin_of.size(); ++i) sums[bin_of[i]] += token_block(i, bin_of[i]);
  VectorX<Scalar> omega(n_b);
  for (Index j = 0; j < n_b; ++j)
    omega[j] = counts[j] > 0
                   ? std::max(Scalar(0), sums[j] / static_cast<Scalar>(counts[j]))
                   : Scalar(0);
  return omega;
}

/// Diagnostics for the allocation loop; the acceptance suite checks the
/// pass bound and the remaining-count monotonicity.
struct AllocationTrace {
  Index passes = 0;
  bool fallback_used = false;
  bool overshoot_repaired = false;
  std::vector<Index> remaining_after_pass;
};

/// Convert bin weights and occupancies into integer per-bin sample counts
/// summing exactly to M. Working weights x = omega*beta + epsilon are scaled
/// each pass so the remainder would be met exactly in real arithmetic;
/// rounding is repaired afterwards. Saturated bins (kappa = beta) drop out
/// by zeroing x. A pass that neither finishes nor saturates a bin cannot
/// make reliable progress through rounding alone, so the remainder is then
/// handed out one unit at a time to unsaturated bins in descending-x order;
/// this also bounds the loop at n_b + 1 passes.
template <typename Scalar>
IndexVector allocate(Index m, const VectorX<Scalar>& omega, const IndexVector& beta,
                     AllocationTrace* trace = nullptr) {
  const Index n_b = beta.size();
  if (omega.size() != n_b) throw LengthMismatch("allocate: omega and beta differ in length");
  const Index total = beta.sum();
  if (m < 1 || m > total)
    throw Infeasible("allocate: M=" + std::to_string(m) + " infeasible for " +
                     std::to_string(total) + " binned points");

  constexpr Scalar kEpsilon = Scalar(1e-8);
  IndexVector kappa = IndexVector::Zero(n_b);
  VectorX<Scalar> x = (omega.array() * beta.template cast<Scalar>().array() + kEpsilon).matrix();
  VectorX<Scalar> target = VectorX<Scalar>::Zero(n_b);  // unrounded running allocation
  Index remaining = m;
  AllocationTrace local_trace;
  AllocationTrace& tr = trace ? *trace : local_trace;

  while (remaining > 0) {
    tr.passes += 1;
    const Scalar scale = static_cast<Scalar>(remaining) / x.sum();
    Index saturated_this_pass = 0;
    for (Index j = 0; j < n_b; ++j) {
      if (x[j] == Scalar(0)) continue;
      target[j] = std::min(target[j] + scale * x[j], static_cast<Scalar>(beta[j]));
      kappa[j] = static_cast<Index>(
          std::llround(static_cast<double>(kappa[j]) + static_cast<double>(scale * x[j])));
      if (kappa[j] >= beta[j]) {
        kappa[j] = beta[j];
        target[j] = static_cast<Scalar>(beta[j]);
        x[j] = Scalar(0);
        ++saturated_this_pass;
      }
    }
    remaining = m - kappa.sum();
    tr.remaining_after_pass.push_back(remaining);
    if (remaining > 0 && saturated_this_pass == 0) {
      // Hand out the rest one by one, largest working weight first.
      tr.fallback_used = true;
      std::vector<Index> order(static_cast<std::size_t>(n_b));
      for (Index j = 0; j < n_b; ++j) order[static_cast<std::size_t>(j)] = j;
      std::stable_sort(order.begin(), order.end(),
                       [&](Index a, Index b) { return x[a] > x[b]; });
      while (remaining > 0) {
        for (Index j : order) {
          if (kappa[j] < beta[j]) {
            kappa[j] += 1;
            target[j] = static_cast<Scalar>(kappa[j]);
            if (--remaining == 0) break;
          }
        }
      }
      tr.remaining_after_pass.back() = 0;
      break;
    }
  }

  // Rounding can overshoot past M (the loop guard only catches remainder > 0).
  // Walk units back from the bins whose rounded count most exceeds the
  // unrounded allocation, ties to the larger kappa.
  while (kappa.sum() > m) {
    tr.overshoot_repaired = true;
    Index worst = -1;
    Scalar worst_excess = -std::numeric_limits<Scalar>::infinity();
    for (Index j = 0; j < n_b; ++j) {
      if (kappa[j] == 0) continue;
      const Scalar excess = static_cast<Scalar>(kappa[j]) - target[j];
      if (excess > worst_excess ||
          (excess == worst_excess && worst >= 0 && kappa[j] > kappa[worst])) {
        worst = j;
        worst_excess = excess;
      }
    }
    kappa[worst] -= 1;
  }
  return kappa;
}

/// Softmax with temperature over a score vector (the in-bin prior).
template <typename Scalar>
VectorX<Scalar> softmax_priors(const VectorX<Scalar>& scores, Scalar tau) {
  if (!(tau > Scalar(0))) throw InvalidTau("softmax_priors: tau must be > 0");
  const Scalar mx = scores.maxCoeff();
  VectorX<Scalar> w = ((scores.array() - mx) / tau).exp().matrix();
  return w / w.sum();
}

/// Draw `count` distinct members without replacement with probabilities
/// softmax(score/tau), renormalizing over the remainder after each draw.
/// `members` are original point indices aligned with `scores`.
template <typename Scalar>
IndexVector in_bin_sample(const IndexVector& members, const VectorX<Scalar>& scores,
                          Index count, Scalar tau, std::uint64_t seed) {
  if (!(tau > Scalar(0))) throw InvalidTau("in_bin_sample: tau must be > 0");
  if (members.size() != scores.size())
    throw LengthMismatch("in_bin_sample: members and scores differ in length");
  if (count < 0 || count > members.size())
    throw InvalidM("in_bin_sample: count out of range");

  std::vector<Index> live(static_cast<std::size_t>(members.size()));
  for (Index i = 0; i < members.size(); ++i) live[static_cast<std::size_t>(i)] = i;
  Rng rng(seed);
  IndexVector out(count);
  std::vector<Scalar> weights;
  for (Index draw = 0; draw < count; ++draw) {
    // Re-centering on the remaining maximum keeps the weights finite for
    // arbitrarily small tau.
    Scalar mx = -std::numeric_limits<Scalar>::infinity();
    for (Index i : live) mx = std::max(mx, scores[i]);
    weights.resize(live.size());
    Scalar total = 0;
    for (std::size_t i = 0; i < live.size(); ++i) {
      weights[i] = std::exp((scores[live[i]] - mx) / tau);
      total += weights[i];
    }
    const Scalar u = static_cast<Scalar>(rng.uniform()) * total;
    Scalar cum = 0;
    std::size_t picked = live.size() - 1;
    for (std::size_t i = 0; i < live.size(); ++i) {
      cum += weights[i];
      if (cum > u) {
        picked = i;
        break;
      }
    }
    out[draw] = members[live[picked]];
    live.erase(live.begin() + static_cast<std::ptrdiff_t>(picked));
  }
  return out;
}

/// The M highest-scored points, ties to the smaller index.
template <typename Scalar>
SampleResultT<Scalar> sample_top_m(const VectorX<Scalar>& normalized, Index m) {
  if (m < 1 || m > normalized.size()) throw InvalidM("sample_top_m: M out of range");
  std::vector<Index> order(static_cast<std::size_t>(normalized.size()));
  for (Index i = 0; i < normalized.size(); ++i) order[static_cast<std::size_t>(i)] = i;
  std::partial_sort(order.begin(), order.begin() + m, order.end(), [&](Index a, Index b) {
    if (normalized[a] != normalized[b]) return normalized[a] > normalized[b];
    return a < b;
  });
  SampleResultT<Scalar> result;
  result.indices.resize(m);
  result.scores.resize(m);
  for (Index i = 0; i < m; ++i) {
    result.indices[i] = order[static_cast<std::size_t>(i)];
    result.scores[i] = normalized[result.indices[i]];
  }
  result.bins = IndexVector::Zero(m);
  result.policy = Policy::top_m;
  return result;
}

/// Prior-based sampling over the whole cloud: the single-bin special case.
template <typename Scalar>
SampleResultT<Scalar> sample_prior(const VectorX<Scalar>& normalized, Index m, Scalar tau,
                                   std::uint64_t seed) {
  if (m < 1 || m > normalized.size()) throw InvalidM("sample_prior: M out of range");
  IndexVector members(normalized.size());
  for (Index i = 0; i < normalized.size(); ++i) members[i] = i;
  SampleResultT<Scalar> result;
  result.indices = in_bin_sample(members, normalized, m, tau, derive_seed(seed, 0));
  result.scores.resize(m);
  for (Index i = 0; i < m; ++i) result.scores[i] = normalized[result.indices[i]];
  result.bins = IndexVector::Zero(m);
  result.seed = seed;
  result.policy = Policy::prior;
  return result;
}

}  // namespace pcsamp
