#include "sdx/maskedrpca.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <vector>

#include "sdx/operators.hpp"

namespace sdx {

double row_group_norm(const Mat& w) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < w.rows(); ++i) total += w.row(i).norm();
  return total;
}

namespace {

double nuclear_norm(const Mat& m) {
  return Eigen::JacobiSVD<Mat>(m).singularValues().sum();
}

}  // namespace

MrResult mr_solve(const Mat& x, const MrConfig& cfg) {
  if (!x.allFinite()) throw ParameterError("mr_solve: input has non-finite entries");
  if (cfg.lambda1 <= 0 || cfg.lambda2 <= 0 || cfg.rho <= 0)
    throw ParameterError("mr_solve: weights and penalty must be positive");
  const Eigen::Index rows = x.rows(), cols = x.cols();

  // Keeping everything in the first component (L = X, W = 0) is feasible and
  // stationary, so a cold start never separates anything. A short additive
  // pre-pass (spectral truncation alternated with outlier thresholding)
  // plants the iterates in the right basin.
  const double x_scale = x.cwiseAbs().maxCoeff();
  const auto robust_scale = [](const Mat& m) {
    std::vector<double> mags(m.size());
    for (Eigen::Index i = 0; i < m.size(); ++i) mags[i] = std::abs(m(i));
    std::nth_element(mags.begin(), mags.begin() + mags.size() / 2, mags.end());
    return mags[mags.size() / 2];
  };

  // Gross outliers dwarf the bulk of the entries, so an upper-quantile
  // amplitude cut seeds the overlaid set; the spectral truncation loop then
  // refines it against the low-rank explanation.
  std::vector<double> mags(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) mags[i] = std::abs(x(i));
  const size_t q93 = static_cast<size_t>(0.93 * (mags.size() - 1));
  std::nth_element(mags.begin(), mags.begin() + q93, mags.end());
  const double bulk_amplitude = std::max(mags[q93], 1e-12 * std::max(1.0, x_scale));
  const double seed_cut = std::max(4.0 * robust_scale(x), 2.0 * bulk_amplitude);

  Mat sparse = Mat::Zero(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i)
      if (std::abs(x(i, j)) > seed_cut) sparse(i, j) = x(i, j);
  Mat low = x;
  for (int warm = 0; warm < 10; ++warm) {
    Eigen::JacobiSVD<Mat> svd(x - sparse, Eigen::ComputeThinU | Eigen::ComputeThinV);
    Vec sigma = svd.singularValues();
    const double cut = 0.25 * sigma[0];
    for (Eigen::Index i = 0; i < sigma.size(); ++i)
      if (sigma[i] < cut) sigma[i] = 0.0;
    low = svd.matrixU() * sigma.asDiagonal() * svd.matrixV().transpose();
    const Mat residual = x - low;
    const double cut_r = std::max(6.0 * robust_scale(residual), 1.5 * bulk_amplitude);
    sparse.setZero();
    for (Eigen::Index j = 0; j < cols; ++j)
      for (Eigen::Index i = 0; i < rows; ++i)
        if (std::abs(residual(i, j)) > cut_r) sparse(i, j) = residual(i, j);
  }
  Mat w = Mat::Zero(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) w(i, j) = sparse(i, j) != 0.0 ? 1.0 : 0.0;
  Mat dual = Mat::Zero(rows, cols);

  const auto residual = [&](const Mat& l, const Mat& s, const Mat& wm) {
    return Mat(x - (1.0 - wm.array()).matrix().cwiseProduct(l) - wm.cwiseProduct(s));
  };
  const auto loss_at = [&](const Mat& l, const Mat& s, const Mat& wm) {
    return nuclear_norm(l) + cfg.lambda1 * s.cwiseAbs().sum() + cfg.lambda2 * row_group_norm(wm) +
           0.5 * cfg.rho * residual(l, s, wm).squaredNorm();
  };

  MrResult result;
  double prev_loss = std::numeric_limits<double>::infinity();
  int settled = 0;  // successive small loss changes; one alone can be a
                    // startup artifact of the alternation
  int it = 0;
  for (; it < cfg.max_iters; ++it) {
    // Masks live in [0,1], so the L and S maps have unit spectral bound.
    const double rho_l = cfg.rho_l > 0 ? cfg.rho_l : 2.0;
    const double rho_s = cfg.rho_s > 0 ? cfg.rho_s : 2.0;
    const double gap = (low - sparse).cwiseAbs().maxCoeff();
    const double rho_w = cfg.rho_w > 0 ? cfg.rho_w : 2.0 * std::max(1.0, gap * gap);

    const Mat shifted0 = residual(low, sparse, w) + dual / cfg.rho;
    const Mat a = low + (1.0 / rho_l) * (1.0 - w.array()).matrix().cwiseProduct(shifted0);
    low = svt(a, 1.0 / (cfg.rho * rho_l));

    const Mat shifted1 = residual(low, sparse, w) + dual / cfg.rho;
    const Mat b = sparse + (1.0 / rho_s) * w.cwiseProduct(shifted1);
    for (Eigen::Index j = 0; j < cols; ++j)
      for (Eigen::Index i = 0; i < rows; ++i)
        sparse(i, j) = soft_threshold(b(i, j), cfg.lambda1 / (cfg.rho * rho_s));

    const Mat shifted2 = residual(low, sparse, w) + dual / cfg.rho;
    const Mat c = w - (1.0 / rho_w) * (low - sparse).cwiseProduct(shifted2);
    for (Eigen::Index i = 0; i < rows; ++i) {
      const Vec row = block_soft_threshold(c.row(i).transpose(), cfg.lambda2 / (cfg.rho * rho_w));
      w.row(i) = project_box01(row).transpose();
    }

    dual += cfg.rho * residual(low, sparse, w);

    const double loss = loss_at(low, sparse, w);
    if (!std::isfinite(loss))
      throw NumericalError("mr_solve: non-finite loss at iteration " + std::to_string(it));
    result.loss_trace.push_back(loss);
    if (std::isfinite(prev_loss) &&
        std::abs(loss - prev_loss) <= cfg.rel_tol * std::max(std::abs(prev_loss), 1e-12)) {
      if (++settled >= 3) {
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
  result.low_rank = low;
  result.sparse = sparse;
  result.w_continuous = w;
  result.w_binary = Mat::Zero(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i)
      result.w_binary(i, j) = w(i, j) >= cfg.binarize_threshold ? 1.0 : 0.0;
  result.dual = dual;
  return result;
}

}  // namespace sdx
