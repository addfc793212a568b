#pragma once

#include <Eigen/Sparse>

#include "sdx/types.hpp"

namespace sdx {

using SpMat = Eigen::SparseMatrix<double>;

/// Forward first-difference matrices over a rows x cols grid vectorized
/// column-major. dx differences horizontal neighbours (along grid columns),
/// dy vertical ones; no wraparound, no ghost pixels, so a constant signal
/// maps to exactly zero.
struct DifferenceOperator {
  int grid_rows = 0;
  int grid_cols = 0;
  SpMat dx;       // rows*(cols-1) x n
  SpMat dy;       // (rows-1)*cols x n
  SpMat stacked;  // [dx; dy]

  int signal_size() const { return grid_rows * grid_cols; }

  static DifferenceOperator make_grid(int rows, int cols);
  /// NxN image block.
  static DifferenceOperator make(int block_side) { return make_grid(block_side, block_side); }
  /// Plain 1-D signal of length n (only "vertical" neighbours exist).
  static DifferenceOperator make_1d(int n) { return make_grid(n, 1); }
};

/// Anisotropic total variation: sum of absolute horizontal and vertical
/// first differences.
double total_variation(const Vec& signal, const DifferenceOperator& op);

/// Elementwise shrinkage sign(x) * max(|x| - t, 0); the prox of t*||.||_1.
Vec soft_threshold(const Vec& x, double t);
double soft_threshold(double x, double t);

/// Group shrinkage max(1 - t/||x||, 0) * x; the prox of t*||.||_2.
Vec block_soft_threshold(const Vec& x, double t);

/// Singular value thresholding: U * max(S - t, 0) * V'.
Mat svt(const Mat& m, double t);

/// Elementwise clamp to [0, 1].
Vec project_box01(const Vec& x);

/// Zero all but the k largest-magnitude entries; ties keep lower indices.
Vec project_topk(const Vec& x, int k);

}  // namespace sdx
