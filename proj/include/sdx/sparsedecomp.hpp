#pragma once

#include "sdx/operators.hpp"
#include "sdx/types.hpp"

namespace sdx {

struct SdConfig {
  double lambda1 = 10.0;  // weight on ||f - P*alpha||_1
  double lambda2 = 4.0;   // weight on the total-variation term
  double rho1 = 1.0;
  double rho2 = 1.0;
  double rho3 = 1.0;
  int max_iters = 50;
  double rel_tol = 1e-6;          // early stop on relative loss change
  double inlier_threshold = 10.0; // |s_i| at or above this is foreground
};

/// Final primal residual norms of the split constraints.
struct SdResiduals {
  double y_gap = 0.0;  // ||y - alpha||
  double z_gap = 0.0;  // ||z + P*alpha - f||
  double x_gap = 0.0;  // ||x + DP*alpha - Df||
};

/// ADMM solver for  min ||alpha||_1 + l1*||f - P a||_1 + l2*||D f - D P a||_1.
/// The quadratic system matrix is factored once at construction and shared
/// across blocks; instances are immutable and safe to use concurrently.
class SdSolver {
 public:
  SdSolver(BasisSet basis, DifferenceOperator diffop, SdConfig cfg);

  DecompositionResult solve(const BlockSignal& block, SdResiduals* residuals = nullptr) const;

  /// Exact objective value at the given coefficients.
  double objective(const Vec& alpha, const Vec& f) const;

  const SdConfig& config() const { return cfg_; }
  const BasisSet& basis() const { return basis_; }
  const DifferenceOperator& diffop() const { return diffop_; }

 private:
  BasisSet basis_;
  DifferenceOperator diffop_;
  SdConfig cfg_;
  Mat dp_;  // D * P, dense
  Eigen::LDLT<Mat> system_;
};

}  // namespace sdx
