#include "sdx/robustfit.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sdx/rng.hpp"

namespace sdx {

namespace {

void check_sizes(const BlockSignal& block, const BasisSet& basis, const char* who) {
  if (block.values.size() != basis.dim())
    throw ParameterError(std::string(who) + ": block/basis size mismatch");
}

FitResult finish(Vec alpha, const Vec& f, const Mat& p, double threshold) {
  FitResult fit;
  fit.alpha = std::move(alpha);
  fit.residual = f - p * fit.alpha;
  fit.inlier_mask.resize(f.size());
  int inliers = 0;
  for (Eigen::Index i = 0; i < f.size(); ++i) {
    fit.inlier_mask[i] = std::abs(fit.residual[i]) < threshold;
    inliers += fit.inlier_mask[i];
  }
  fit.inlier_ratio = static_cast<double>(inliers) / static_cast<double>(f.size());
  return fit;
}

// Ordinary least squares on a row subset, used for consensus refits.
Vec least_squares_rows(const Mat& p, const Vec& f, const std::vector<int>& rows) {
  Mat sub(rows.size(), p.cols());
  Vec rhs(rows.size());
  for (size_t i = 0; i < rows.size(); ++i) {
    sub.row(static_cast<Eigen::Index>(i)) = p.row(rows[i]);
    rhs[static_cast<Eigen::Index>(i)] = f[rows[i]];
  }
  return sub.colPivHouseholderQr().solve(rhs);
}

}  // namespace

FitResult fit_lsf(const BlockSignal& block, const BasisSet& basis, double inlier_threshold) {
  check_sizes(block, basis, "fit_lsf");
  return finish(basis.columns.transpose() * block.values, block.values, basis.columns,
                inlier_threshold);
}

FitResult fit_lad(const BlockSignal& block, const BasisSet& basis, double inlier_threshold,
                  int max_iters, double tol) {
  check_sizes(block, basis, "fit_lad");
  const Mat& p = basis.columns;
  const Vec& f = block.values;

  Vec alpha = p.transpose() * f;  // least squares warm start
  double objective = (f - p * alpha).lpNorm<1>();
  Vec best_alpha = alpha;
  double best_objective = objective;
  bool converged = false;
  int it = 0;
  for (; it < max_iters; ++it) {
    const Vec r = f - p * alpha;
    Vec w(f.size());
    for (Eigen::Index i = 0; i < f.size(); ++i) w[i] = 1.0 / std::max(std::abs(r[i]), 1e-6);
    const Mat pw = p.transpose() * w.asDiagonal();
    Mat gram = pw * p;
    alpha = gram.ldlt().solve(pw * f);

    const double next = (f - p * alpha).lpNorm<1>();
    if (next < best_objective) {
      best_objective = next;
      best_alpha = alpha;
    }
    if (std::abs(next - objective) <= tol * std::max(objective, 1e-12)) {
      converged = true;
      ++it;
      break;
    }
    objective = next;
  }
  FitResult fit = finish(best_alpha, f, p, inlier_threshold);
  fit.converged = converged;
  fit.iterations = it;
  return fit;
}

FitResult ransac_segment(const BlockSignal& block, const BasisSet& basis,
                         const RansacConfig& cfg) {
  check_sizes(block, basis, "ransac_segment");
  const Mat& p = basis.columns;
  const Vec& f = block.values;
  const int n = static_cast<int>(f.size());
  const int k = basis.count();
  if (k > n) throw ParameterError("ransac_segment: more bases than pixels");

  Rng rng(cfg.rng_seed);
  std::vector<int> pool(n);
  std::iota(pool.begin(), pool.end(), 0);

  std::vector<std::uint8_t> best_consensus;
  int best_count = -1;
  bool any_solvable = false;
  int iters_used = 0;
  Mat sample_mat(k, k);
  Vec sample_rhs(k);

  for (int iter = 0; iter < cfg.max_iters; ++iter) {
    iters_used = iter + 1;
    // Partial Fisher-Yates draw of k distinct pixels.
    for (int i = 0; i < k; ++i) std::swap(pool[i], pool[i + rng.index(n - i)]);
    for (int i = 0; i < k; ++i) {
      sample_mat.row(i) = p.row(pool[i]);
      sample_rhs[i] = f[pool[i]];
    }
    Eigen::FullPivLU<Mat> lu(sample_mat);
    if (!lu.isInvertible()) continue;  // singular sample, counts toward the budget
    any_solvable = true;
    const Vec alpha = lu.solve(sample_rhs);

    const Vec r = f - p * alpha;
    std::vector<std::uint8_t> consensus(n);
    int count = 0;
    for (int i = 0; i < n; ++i) {
      consensus[i] = std::abs(r[i]) < cfg.inlier_threshold;
      count += consensus[i];
    }
    if (count > best_count) {
      best_count = count;
      best_consensus = std::move(consensus);
    }
    if (static_cast<double>(best_count) / n >= cfg.early_stop_ratio) break;
  }
  if (!any_solvable)
    throw DegeneracyError("ransac_segment: every sampled system was singular");

  // Refit once over all inliers, then a single re-threshold pass.
  std::vector<int> inlier_rows;
  for (int i = 0; i < n; ++i)
    if (best_consensus[i]) inlier_rows.push_back(i);
  Vec alpha = inlier_rows.size() >= static_cast<size_t>(k)
                  ? least_squares_rows(p, f, inlier_rows)
                  : p.transpose() * f;
  FitResult fit = finish(std::move(alpha), f, p, cfg.inlier_threshold);
  fit.iterations = iters_used;
  return fit;
}

}  // namespace sdx
