#include "sdx/maskeddecomp.hpp"

#include <Eigen/SparseCholesky>

#include <cmath>

#include "sdx/robustfit.hpp"
#include "sdx/rng.hpp"

namespace sdx {

Vec md_initialize(const Vec& x, const MdConfig& cfg, MdInit scheme) {
  const Eigen::Index n = x.size();
  Rng rng(cfg.seed);
  switch (scheme) {
    case MdInit::Zeros:
      return Vec::Zero(n);
    case MdInit::Half:
      return Vec::Constant(n, 0.5);
    case MdInit::Gaussian: {
      Vec w(n);
      const double stddev = std::sqrt(0.1);
      for (Eigen::Index i = 0; i < n; ++i) w[i] = rng.normal(0.5, stddev);
      return project_box01(w);
    }
    case MdInit::Uniform: {
      Vec w(n);
      for (Eigen::Index i = 0; i < n; ++i) w[i] = rng.uniform();
      return w;
    }
    case MdInit::LsfError: {
      // Fit component 1 alone; pixels with above-average error start masked.
      const Vec alpha = cfg.basis1.columns.transpose() * x;
      const Vec err = (x - cfg.basis1.columns * alpha).cwiseAbs();
      const double cut = err.mean();
      Vec w(n);
      for (Eigen::Index i = 0; i < n; ++i) w[i] = err[i] > cut ? 1.0 : 0.0;
      return w;
    }
  }
  throw ParameterError("md_initialize: unknown scheme");
}

double md_objective(const Vec& alpha1, const Vec& alpha2, const Vec& w, const Vec& x,
                    const MdConfig& cfg, const DifferenceOperator& diffop) {
  const Vec fit = x - (1.0 - w.array()).matrix().cwiseProduct(cfg.basis1.columns * alpha1) -
                  w.cwiseProduct(cfg.basis2.columns * alpha2);
  return 0.5 * fit.squaredNorm() + cfg.lambda1 * w.lpNorm<1>() +
         cfg.lambda2 * (diffop.stacked * w).lpNorm<1>();
}

double md_objective(const MaskedResult& result, const Vec& x, const MdConfig& cfg,
                    const DifferenceOperator& diffop) {
  return md_objective(result.alpha1, result.alpha2, result.w_continuous, x, cfg, diffop);
}

namespace {

// Weighted least squares min_a ||diag(v) (P a - rhs)||. The mask can starve a
// component of support and leave the system rank-deficient; the
// minimum-norm solution keeps the unobservable coefficient directions at
// zero instead of letting them drift between iterations.
Vec weighted_coefficients(const Mat& p, const Vec& v, const Vec& rhs, bool* degenerate) {
  const Mat vp = v.asDiagonal() * p;
  Eigen::CompleteOrthogonalDecomposition<Mat> cod(vp);
  if (cod.rank() < p.cols()) *degenerate = true;
  return cod.solve(v.cwiseProduct(rhs));
}

}  // namespace

MaskedResult md_solve(const BlockSignal& x_signal, const MdConfig& cfg) {
  const Vec& x = x_signal.values;
  const Eigen::Index n = x.size();
  if (cfg.basis1.dim() != n || cfg.basis2.dim() != n)
    throw ParameterError("md_solve: basis dimensions do not match the signal");
  if (cfg.k1 < 1 || cfg.k1 > cfg.basis1.count() || cfg.k2 < 1 || cfg.k2 > cfg.basis2.count())
    throw ParameterError("md_solve: sparsity caps out of range");
  if (cfg.lambda1 <= 0 || cfg.lambda2 <= 0)
    throw ParameterError("md_solve: weights must be positive");
  if (cfg.binarize_threshold <= 0 || cfg.binarize_threshold >= 1)
    throw ParameterError("md_solve: binarize threshold must lie in (0,1)");

  const double rho1 = cfg.rho1 > 0 ? cfg.rho1 : std::max(1.0, 2.0 * cfg.lambda1);
  const double rho2 = cfg.rho2 > 0 ? cfg.rho2 : std::max(1.0, 2.0 * cfg.lambda2);
  const DifferenceOperator diffop =
      x_signal.block_side > 0 ? DifferenceOperator::make(x_signal.block_side)
                              : DifferenceOperator::make_1d(static_cast<int>(n));
  const Mat& p1 = cfg.basis1.columns;
  const Mat& p2 = cfg.basis2.columns;
  const SpMat dtd = SpMat(diffop.stacked.transpose() * diffop.stacked);

  MaskedResult result;
  Vec w = md_initialize(x, cfg, cfg.init);
  Vec y = w;
  Vec z = diffop.stacked * w;
  Vec u1 = Vec::Zero(n);
  Vec u2 = Vec::Zero(z.size());
  Vec alpha1 = Vec::Zero(p1.cols());
  Vec alpha2 = Vec::Zero(p2.cols());

  Eigen::SimplicialLDLT<SpMat> mw_solver;
  {
    SpMat identity(n, n);
    identity.setIdentity();
    mw_solver.analyzePattern(SpMat(identity + dtd));
  }

  const auto binarize = [&](const Vec& v) {
    Vec b(v.size());
    for (Eigen::Index i = 0; i < v.size(); ++i)
      b[i] = v[i] >= cfg.binarize_threshold ? 1.0 : 0.0;
    return b;
  };

  double prev_loss = std::numeric_limits<double>::infinity();
  int it = 0;
  for (; it < cfg.max_iters; ++it) {
    // Coefficients are fit under the thresholded mask: fractional mask values
    // otherwise bleed each component into the other one's fit and the
    // alternation amplifies the leak geometrically. The mask itself keeps
    // its continuous relaxation below.
    const Vec wb_step = binarize(w);
    const Vec wb_star = (1.0 - wb_step.array()).matrix();
    alpha1 = weighted_coefficients(p1, wb_star, x - wb_step.cwiseProduct(p2 * alpha2),
                                   &result.degenerate_system);
    alpha1 = project_topk(alpha1, cfg.k1);
    alpha2 = weighted_coefficients(p2, wb_step, x - wb_star.cwiseProduct(p1 * alpha1),
                                   &result.degenerate_system);
    alpha2 = project_topk(alpha2, cfg.k2);

    const Vec c1 = p1 * alpha1;
    const Vec c2 = p2 * alpha2;
    const Vec c = c2 - c1;   // the mask multiplies this difference
    const Vec h = x - c1;

    // Quadratic mask solve followed by box projection.
    SpMat m_w = SpMat(rho2 * dtd);
    for (Eigen::Index i = 0; i < n; ++i)
      m_w.coeffRef(i, i) += c[i] * c[i] + rho1;
    mw_solver.factorize(m_w);
    if (mw_solver.info() != Eigen::Success)
      throw NumericalError("md_solve: mask system factorization failed");
    const Vec rhs = c.cwiseProduct(h) + rho1 * y + rho2 * (diffop.stacked.transpose() * z) -
                    u1 - diffop.stacked.transpose() * u2;
    w = project_box01(mw_solver.solve(rhs));
    if (cfg.binarize_mode == BinarizeMode::EachIteration) w = binarize(w);

    y = soft_threshold(w + u1 / rho1, cfg.lambda1 / rho1);
    const Vec dw = diffop.stacked * w;
    z = soft_threshold(dw + u2 / rho2, cfg.lambda2 / rho2);
    u1 += rho1 * (w - y);
    u2 += rho2 * (dw - z);

    const double loss = md_objective(alpha1, alpha2, w, x, cfg, diffop);
    if (!std::isfinite(loss))
      throw NumericalError("md_solve: non-finite loss at iteration " + std::to_string(it));
    result.loss_trace.push_back(loss);
    if (std::isfinite(prev_loss) &&
        std::abs(loss - prev_loss) <= cfg.rel_tol * std::max(std::abs(prev_loss), 1e-12)) {
      result.converged = true;
      ++it;
      break;
    }
    prev_loss = loss;
  }

  result.iterations = it;
  result.alpha1 = alpha1;
  result.alpha2 = alpha2;
  result.w_continuous = w;
  result.component1 = p1 * alpha1;
  result.component2 = p2 * alpha2;
  const Vec wb = binarize(w);
  result.w_binary.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) result.w_binary[i] = wb[i] != 0.0;
  result.reconstruction = (1.0 - wb.array()).matrix().cwiseProduct(result.component1) +
                          wb.cwiseProduct(result.component2);
  return result;
}

}  // namespace sdx
