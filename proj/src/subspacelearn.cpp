#include "sdx/subspacelearn.hpp"

#include <cmath>
#include <fstream>

#include "sdx/bases.hpp"

namespace sdx {

std::vector<std::vector<int>> make_groups(int block_side, int cell) {
  if (cell < 1) throw ParameterError("make_groups: cell must be positive");
  std::vector<std::vector<int>> groups;
  for (int c0 = 0; c0 < block_side; c0 += cell)
    for (int r0 = 0; r0 < block_side; r0 += cell) {
      std::vector<int> g;
      for (int c = c0; c < std::min(c0 + cell, block_side); ++c)
        for (int r = r0; r < std::min(r0 + cell, block_side); ++r)
          g.push_back(r + c * block_side);
      groups.push_back(std::move(g));
    }
  return groups;
}

SlWorkspace::SlWorkspace(int block_side, const SlConfig& cfg)
    : side_(block_side), cfg_(cfg), diffop_(DifferenceOperator::make(block_side)),
      groups_(make_groups(block_side, cfg.group_cell)) {
  if (cfg_.lambda1 < 0 || cfg_.lambda2 < 0 || cfg_.lambda3 < 0)
    throw ParameterError("SlWorkspace: negative weights");
  const int n = side_ * side_;
  SpMat identity(n, n);
  identity.setIdentity();
  SpMat system = identity + cfg_.lambda1 * SpMat(diffop_.stacked.transpose() * diffop_.stacked);
  smoother_.compute(system);
  if (smoother_.info() != Eigen::Success)
    throw NumericalError("SlWorkspace: smoothing system factorization failed");
}

Vec SlWorkspace::smooth_solve(const Vec& rhs) const { return smoother_.solve(rhs); }

Vec sl_update_alpha(const Vec& x, const Vec& s, const Mat& p, const SlWorkspace& ws) {
  const Mat dp = ws.diffop().stacked * p;
  const Mat system = p.transpose() * p + ws.config().lambda1 * (dp.transpose() * dp);
  return system.ldlt().solve(p.transpose() * (x - s));
}

Vec sl_update_s(const Vec& x, const Vec& alpha, const Mat& p, const SlWorkspace& ws) {
  const Vec residual = x - p * alpha;
  Vec s = Vec::Zero(x.size());
  const double l2 = ws.config().lambda2;
  const double l3 = ws.config().lambda3;
  for (const auto& group : ws.groups()) {
    Vec t(group.size());
    for (size_t i = 0; i < group.size(); ++i) t[static_cast<Eigen::Index>(i)] = residual[group[i]] - l2;
    const Vec shrunk = block_soft_threshold(t, l3);
    for (size_t i = 0; i < group.size(); ++i)
      s[group[i]] = std::max(shrunk[static_cast<Eigen::Index>(i)], 0.0);
  }
  return s;
}

Mat sl_update_basis(const Mat& x, const Mat& alphas, const Mat& s, Mat p,
                    const SlWorkspace& ws) {
  const double l1 = ws.config().lambda1;
  const SpMat& d = ws.diffop().stacked;
  const SpMat dtd = SpMat(d.transpose() * d);
  const int k = static_cast<int>(p.cols());

  Mat model = p * alphas;        // n x Nd, kept current through the sweep
  Mat error = x - s - model;     // x_i - s_i - P a_i

  for (int j = 0; j < k; ++j) {
    const Vec aj = alphas.row(j).transpose();
    const double energy = aj.squaredNorm();
    if (energy < 1e-12) {
      // Dead column: reseed from the worst-represented training vector.
      Eigen::Index worst = 0;
      error.colwise().norm().maxCoeff(&worst);
      Vec seed = error.col(worst);
      const double norm = seed.norm();
      p.col(j) = norm > 1e-12 ? Vec(seed / norm) : Vec::Unit(p.rows(), j % p.rows());
      continue;
    }
    // eta summed against the coefficients: E a_j + p_j ||a_j||^2,
    // gamma summed likewise: D (M a_j - p_j ||a_j||^2).
    const Vec ma = model * aj;
    const Vec ea = error * aj;
    const Vec rhs = (ea + energy * p.col(j)) - l1 * (dtd * (ma - energy * p.col(j)));
    const Vec updated = ws.smooth_solve(rhs) / energy;
    const Vec delta = updated - p.col(j);
    model.noalias() += delta * aj.transpose();
    error.noalias() -= delta * aj.transpose();
    p.col(j) = updated;
  }
  return p;
}

double sl_objective(const Mat& x, const Mat& alphas, const Mat& s, const Mat& p,
                    const SlWorkspace& ws) {
  const double l1 = ws.config().lambda1;
  const double l2 = ws.config().lambda2;
  const double l3 = ws.config().lambda3;
  const Mat model = p * alphas;
  const Mat fit_error = x - model - s;
  const Mat grads = ws.diffop().stacked * model;
  double loss = 0.5 * fit_error.squaredNorm() + l1 * grads.squaredNorm() +
                l2 * s.cwiseAbs().sum();
  for (Eigen::Index i = 0; i < s.cols(); ++i)
    for (const auto& group : ws.groups()) {
      double sq = 0.0;
      for (int idx : group) sq += s(idx, i) * s(idx, i);
      loss += l3 * std::sqrt(sq);
    }
  return loss;
}

LearnedSubspace sl_train(const std::vector<Vec>& training_blocks, int block_side,
                         const SlConfig& cfg) {
  const int nd = static_cast<int>(training_blocks.size());
  if (nd < cfg.subspace_dim)
    throw ParameterError("sl_train: need at least subspace_dim training blocks");
  const int n = block_side * block_side;
  for (const Vec& b : training_blocks)
    if (b.size() != n) throw ParameterError("sl_train: block size mismatch");

  SlWorkspace ws(block_side, cfg);
  Mat x(n, nd);
  for (int i = 0; i < nd; ++i) x.col(i) = training_blocks[i];

  // Smooth deterministic start: the low-frequency DCT atoms.
  Mat p = make_dct2d(block_side, cfg.subspace_dim).columns;
  Mat alphas = Mat::Zero(cfg.subspace_dim, nd);
  Mat s = Mat::Zero(n, nd);

  LearnedSubspace learned;
  double prev = std::numeric_limits<double>::infinity();
  for (int it = 0; it < cfg.outer_iters; ++it) {
    for (int i = 0; i < nd; ++i) {
      alphas.col(i) = sl_update_alpha(x.col(i), s.col(i), p, ws);
      s.col(i) = sl_update_s(x.col(i), alphas.col(i), p, ws);
    }
    p = sl_update_basis(x, alphas, s, p, ws);

    const double pre = sl_objective(x, alphas, s, p, ws);
    if (!std::isfinite(pre))
      throw NumericalError("sl_train: non-finite loss at iteration " + std::to_string(it));
    p = orthonormal_columns(p);
    const double post = sl_objective(x, alphas, s, p, ws);
    learned.loss_trace.push_back(pre);
    learned.loss_post_projection.push_back(post);

    if (std::isfinite(prev) &&
        std::abs(pre - prev) <= cfg.rel_tol * std::max(std::abs(prev), 1e-12))
      break;
    prev = pre;
  }

  learned.basis.columns = p;
  learned.basis.block_side = block_side;
  learned.basis.kind = BasisKind::Learned;
  for (int j = 0; j < cfg.subspace_dim; ++j) learned.basis.ordering.emplace_back(j, 0);
  return learned;
}

DecompositionResult sl_segment(const BlockSignal& block, const LearnedSubspace& learned,
                               const SlConfig& cfg) {
  const Mat& p = learned.basis.columns;
  if (block.values.size() != p.rows())
    throw ParameterError("sl_segment: block size does not match subspace");
  SlWorkspace ws(learned.basis.block_side, cfg);

  Vec s = Vec::Zero(block.values.size());
  Vec alpha;
  DecompositionResult result;
  double prev = std::numeric_limits<double>::infinity();
  int it = 0;
  result.converged = false;
  for (; it < cfg.segment_iters; ++it) {
    alpha = sl_update_alpha(block.values, s, p, ws);
    s = sl_update_s(block.values, alpha, p, ws);

    Mat xm = block.values, am = alpha, sm = s;
    const double loss = sl_objective(xm, am, sm, p, ws);
    if (!std::isfinite(loss))
      throw NumericalError("sl_segment: non-finite loss at iteration " + std::to_string(it));
    result.loss_trace.push_back(loss);
    if (std::isfinite(prev) &&
        std::abs(loss - prev) <= cfg.rel_tol * std::max(std::abs(prev), 1e-12)) {
      result.converged = true;
      ++it;
      break;
    }
    prev = loss;
  }

  result.iterations = it;
  result.alpha = alpha;
  result.sparse = s;
  result.mask_continuous = s;
  result.mask.resize(s.size());
  for (Eigen::Index i = 0; i < s.size(); ++i) result.mask[i] = s[i] > 0.0;
  return result;
}

void save_subspace(const LearnedSubspace& learned, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open file for writing: " + path);
  const Mat& p = learned.basis.columns;
  out << "sdx-subspace 1\n";
  out << p.rows() << " " << p.cols() << " " << learned.basis.block_side << "\n";
  out.precision(17);
  for (Eigen::Index r = 0; r < p.rows(); ++r) {
    for (Eigen::Index c = 0; c < p.cols(); ++c) out << (c ? " " : "") << p(r, c);
    out << "\n";
  }
  if (!out) throw DataError("write failed: " + path);
}

LearnedSubspace load_subspace(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open subspace file: " + path);
  std::string tag;
  int version = 0;
  in >> tag >> version;
  if (tag != "sdx-subspace" || version != 1)
    throw DataError("unrecognized subspace file: " + path);
  Eigen::Index rows = 0, cols = 0;
  int side = 0;
  in >> rows >> cols >> side;
  if (rows <= 0 || cols <= 0 || rows < cols)
    throw DataError("bad subspace dimensions in " + path);
  LearnedSubspace learned;
  learned.basis.columns.resize(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c)
      if (!(in >> learned.basis.columns(r, c)))
        throw DataError("truncated subspace file: " + path);
  learned.basis.block_side = side;
  learned.basis.kind = BasisKind::Learned;
  for (Eigen::Index j = 0; j < cols; ++j)
    learned.basis.ordering.emplace_back(static_cast<int>(j), 0);
  return learned;
}

}  // namespace sdx
