#pragma once

#include <cstdint>

#include "sdx/types.hpp"

namespace sdx {

struct FitResult {
  Vec alpha;
  Vec residual;                          // f - P*alpha
  std::vector<std::uint8_t> inlier_mask; // |residual| < inlier threshold
  double inlier_ratio = 0.0;
  bool converged = true;
  int iterations = 0;
};

struct RansacConfig {
  int num_bases = 10;
  double inlier_threshold = 10.0;
  int max_iters = 200;
  double early_stop_ratio = 0.95;
  std::uint64_t rng_seed = 0;
};

/// Least squares fit; with orthonormal columns this is alpha = P'f.
FitResult fit_lsf(const BlockSignal& block, const BasisSet& basis,
                  double inlier_threshold = 10.0);

/// Least absolute deviation fit via iteratively reweighted least squares.
/// Returns the best iterate flagged non-converged if the relative objective
/// change never drops below tol.
FitResult fit_lad(const BlockSignal& block, const BasisSet& basis,
                  double inlier_threshold = 10.0, int max_iters = 100,
                  double tol = 1e-8);

/// Consensus-set search: sample K pixels, solve the KxK system, count pixels
/// fit within the threshold, keep the largest consensus; early-stops at the
/// configured ratio; refits once over all inliers and re-thresholds.
FitResult ransac_segment(const BlockSignal& block, const BasisSet& basis,
                         const RansacConfig& cfg);

}  // namespace sdx
