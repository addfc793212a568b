#pragma once

#include <Eigen/SparseCholesky>

#include <string>

#include "sdx/operators.hpp"
#include "sdx/types.hpp"

namespace sdx {

struct SlConfig {
  int subspace_dim = 20;
  double lambda1 = 0.5;  // gradient (smoothness) weight
  double lambda2 = 1.0;  // elementwise sparsity weight
  double lambda3 = 2.0;  // group sparsity weight
  int group_cell = 2;    // spatial cell side: 2 -> 2x2 groups, 4 -> 4x4
  int outer_iters = 50;
  double rel_tol = 1e-5;
  int segment_iters = 200;
  std::uint64_t seed = 0;
};

/// Partition of {0..n-1} into square spatial cells of the block grid.
std::vector<std::vector<int>> make_groups(int block_side, int cell);

struct LearnedSubspace {
  BasisSet basis;  // kind = Learned
  std::vector<double> loss_trace;            // per outer iteration, before projection
  std::vector<double> loss_post_projection;  // same iterations, after Gram-Schmidt
};

/// Shared precomputed state for the alternating updates.
class SlWorkspace {
 public:
  SlWorkspace(int block_side, const SlConfig& cfg);

  const DifferenceOperator& diffop() const { return diffop_; }
  const std::vector<std::vector<int>>& groups() const { return groups_; }
  /// Solves (I + lambda1 * D'D) q = rhs.
  Vec smooth_solve(const Vec& rhs) const;
  const SlConfig& config() const { return cfg_; }
  int block_side() const { return side_; }

 private:
  int side_;
  SlConfig cfg_;
  DifferenceOperator diffop_;
  std::vector<std::vector<int>> groups_;
  Eigen::SimplicialLDLT<SpMat> smoother_;
};

/// Coefficient update: (P'P + l1 P'D'D P)^-1 P'(x - s).
Vec sl_update_alpha(const Vec& x, const Vec& s, const Mat& p, const SlWorkspace& ws);

/// Outlier update: per group, block-soft((x - P a)_g - l2, l3), negatives
/// clamped to zero.
Vec sl_update_s(const Vec& x, const Vec& alpha, const Mat& p, const SlWorkspace& ws);

/// Closed-form column sweep of the basis followed by no projection; the
/// caller orthonormalizes. Dead columns (zero coefficient energy) are
/// reseeded from the training vector with the largest residual.
Mat sl_update_basis(const Mat& x, const Mat& alphas, const Mat& s, Mat p,
                    const SlWorkspace& ws);

/// Full objective: sum_i 1/2||x_i - P a_i - s_i||^2 + l1 ||D P a_i||^2
///                 + l2 ||s_i||_1 + l3 sum_g ||s_{i,g}||_2.
double sl_objective(const Mat& x, const Mat& alphas, const Mat& s, const Mat& p,
                    const SlWorkspace& ws);

/// Alternating minimization over coefficients, outliers and the subspace.
LearnedSubspace sl_train(const std::vector<Vec>& training_blocks, int block_side,
                         const SlConfig& cfg);

/// Segmentation with a fixed learned subspace; foreground is the support of s.
DecompositionResult sl_segment(const BlockSignal& block, const LearnedSubspace& learned,
                               const SlConfig& cfg);

/// Versioned plain-text serialization of a learned subspace.
void save_subspace(const LearnedSubspace& learned, const std::string& path);
LearnedSubspace load_subspace(const std::string& path);

}  // namespace sdx
