#include "sdx/sparsedecomp.hpp"

#include <cmath>

namespace sdx {

SdSolver::SdSolver(BasisSet basis, DifferenceOperator diffop, SdConfig cfg)
    : basis_(std::move(basis)), diffop_(std::move(diffop)), cfg_(cfg) {
  if (cfg_.lambda1 <= 0 || cfg_.lambda2 <= 0 || cfg_.rho1 <= 0 || cfg_.rho2 <= 0 ||
      cfg_.rho3 <= 0)
    throw ParameterError("SdSolver: weights and penalties must be positive");
  if (basis_.dim() != diffop_.signal_size())
    throw ParameterError("SdSolver: basis and difference operator disagree on size");
  dp_ = diffop_.stacked * basis_.columns;
  const int k = basis_.count();
  Mat system = cfg_.rho3 * (dp_.transpose() * dp_) +
               cfg_.rho2 * (basis_.columns.transpose() * basis_.columns) +
               cfg_.rho1 * Mat::Identity(k, k);
  system_.compute(system);
}

double SdSolver::objective(const Vec& alpha, const Vec& f) const {
  const Vec r = f - basis_.columns * alpha;
  return alpha.lpNorm<1>() + cfg_.lambda1 * r.lpNorm<1>() +
         cfg_.lambda2 * (diffop_.stacked * r).lpNorm<1>();
}

DecompositionResult SdSolver::solve(const BlockSignal& block, SdResiduals* residuals) const {
  if (block.values.size() != basis_.dim())
    throw ParameterError("SdSolver::solve: block size mismatch");
  const Mat& p = basis_.columns;
  const Vec& f = block.values;
  const Vec df = diffop_.stacked * f;

  // Warm start at the least squares fit; duals at zero make the auxiliary
  // variables consistent with the constraints.
  Vec alpha = p.transpose() * f;
  Vec y = alpha;
  Vec z = f - p * alpha;
  Vec x = df - dp_ * alpha;
  Vec u1 = Vec::Zero(y.size());
  Vec u2 = Vec::Zero(z.size());
  Vec u3 = Vec::Zero(x.size());

  DecompositionResult result;
  result.loss_trace.reserve(cfg_.max_iters);
  double prev_loss = objective(alpha, f);
  result.converged = false;

  // The warm start is a fixed point of the alpha step until the duals move,
  // so a single unchanged loss value does not mean convergence.
  int settled = 0;
  int it = 0;
  for (; it < cfg_.max_iters; ++it) {
    const Vec rhs = u1 - p.transpose() * u2 - dp_.transpose() * u3 + cfg_.rho1 * y +
                    cfg_.rho2 * (p.transpose() * (f - z)) +
                    cfg_.rho3 * (dp_.transpose() * (df - x));
    alpha = system_.solve(rhs);
    y = soft_threshold(alpha - u1 / cfg_.rho1, 1.0 / cfg_.rho1);
    const Vec pa = p * alpha;
    const Vec dpa = dp_ * alpha;
    z = soft_threshold(f - pa - u2 / cfg_.rho2, cfg_.lambda1 / cfg_.rho2);
    x = soft_threshold(df - dpa - u3 / cfg_.rho3, cfg_.lambda2 / cfg_.rho3);
    u1 += cfg_.rho1 * (y - alpha);
    u2 += cfg_.rho2 * (z + pa - f);
    u3 += cfg_.rho3 * (x + dpa - df);

    const double loss = objective(alpha, f);
    if (!std::isfinite(loss))
      throw NumericalError("SdSolver: non-finite loss at iteration " + std::to_string(it));
    result.loss_trace.push_back(loss);
    if (std::abs(loss - prev_loss) <= cfg_.rel_tol * std::max(prev_loss, 1e-12)) {
      if (++settled >= 2) {
        result.converged = true;
        ++it;
        break;
      }
    } else {
      settled = 0;
    }
    prev_loss = loss;
  }

  result.iterations = it;
  result.alpha = alpha;
  result.sparse = f - p * alpha;
  result.mask_continuous = result.sparse.cwiseAbs();
  result.mask.resize(f.size());
  for (Eigen::Index i = 0; i < f.size(); ++i)
    result.mask[i] = std::abs(result.sparse[i]) >= cfg_.inlier_threshold;

  if (residuals) {
    residuals->y_gap = (y - alpha).norm();
    residuals->z_gap = (z + p * alpha - f).norm();
    residuals->x_gap = (x + dp_ * alpha - df).norm();
  }
  return result;
}

}  // namespace sdx
