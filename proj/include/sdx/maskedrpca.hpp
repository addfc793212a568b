#pragma once

#include "sdx/types.hpp"

namespace sdx {

struct MrConfig {
  double lambda1 = 0.12;  // weight on ||S||_1
  double lambda2 = 0.30;  // weight on the row-group norm ||W||_{2,1}
  double rho = 1.0;       // augmented penalty
  // Proximal linearization weights; values <= 0 select automatic scaling
  // (2x a spectral bound of the corresponding elementwise map).
  double rho_l = 0.0;
  double rho_s = 0.0;
  double rho_w = 0.0;
  int max_iters = 300;
  double rel_tol = 1e-8;
  double binarize_threshold = 0.5;
};

struct MrResult {
  Mat low_rank;      // L
  Mat sparse;        // S
  Mat w_continuous;  // in [0,1]^{N x M}
  Mat w_binary;      // 0/1 entries
  Mat dual;          // U
  std::vector<double> loss_trace;
  int iterations = 0;
  bool converged = false;
};

/// Sum of l2 norms of the rows.
double row_group_norm(const Mat& w);

/// Linearized alternating solve of
///   min ||L||_* + l1 ||S||_1 + l2 ||W||_{2,1}
///   s.t. W in [0,1]^{NxM},  X = (1-W) o L + W o S.
/// Rows of X index pixels, columns index frames.
MrResult mr_solve(const Mat& x, const MrConfig& cfg);

}  // namespace sdx
