#include "sdx/operators.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace sdx {

DifferenceOperator DifferenceOperator::make_grid(int rows, int cols) {
  if (rows < 1 || cols < 1) throw ParameterError("DifferenceOperator: empty grid");
  DifferenceOperator op;
  op.grid_rows = rows;
  op.grid_cols = cols;
  const int n = rows * cols;
  const auto idx = [rows](int r, int c) { return r + c * rows; };

  std::vector<Eigen::Triplet<double>> tx, ty;
  tx.reserve(static_cast<size_t>(rows) * std::max(cols - 1, 0) * 2);
  ty.reserve(static_cast<size_t>(cols) * std::max(rows - 1, 0) * 2);
  int row = 0;
  for (int c = 0; c + 1 < cols; ++c)
    for (int r = 0; r < rows; ++r, ++row) {
      tx.emplace_back(row, idx(r, c + 1), 1.0);
      tx.emplace_back(row, idx(r, c), -1.0);
    }
  op.dx.resize(row, n);
  op.dx.setFromTriplets(tx.begin(), tx.end());

  row = 0;
  for (int c = 0; c < cols; ++c)
    for (int r = 0; r + 1 < rows; ++r, ++row) {
      ty.emplace_back(row, idx(r + 1, c), 1.0);
      ty.emplace_back(row, idx(r, c), -1.0);
    }
  op.dy.resize(row, n);
  op.dy.setFromTriplets(ty.begin(), ty.end());

  op.stacked.resize(op.dx.rows() + op.dy.rows(), n);
  std::vector<Eigen::Triplet<double>> ts;
  ts.reserve(tx.size() + ty.size());
  for (const auto& t : tx) ts.push_back(t);
  for (const auto& t : ty) ts.emplace_back(t.row() + op.dx.rows(), t.col(), t.value());
  op.stacked.setFromTriplets(ts.begin(), ts.end());
  return op;
}

double total_variation(const Vec& signal, const DifferenceOperator& op) {
  if (signal.size() != op.signal_size())
    throw ParameterError("total_variation: signal length does not match operator");
  return (op.dx * signal).lpNorm<1>() + (op.dy * signal).lpNorm<1>();
}

double soft_threshold(double x, double t) {
  const double shrunk = std::abs(x) - t;
  return shrunk > 0.0 ? (x > 0.0 ? shrunk : -shrunk) : 0.0;
}

Vec soft_threshold(const Vec& x, double t) {
  if (t < 0.0) throw ParameterError("soft_threshold: negative threshold");
  Vec out(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) out[i] = soft_threshold(x[i], t);
  return out;
}

Vec block_soft_threshold(const Vec& x, double t) {
  if (t < 0.0) throw ParameterError("block_soft_threshold: negative threshold");
  const double norm = x.norm();
  if (norm <= t) return Vec::Zero(x.size());
  return (1.0 - t / norm) * x;
}

Mat svt(const Mat& m, double t) {
  if (t < 0.0) throw ParameterError("svt: negative threshold");
  Eigen::JacobiSVD<Mat> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.info() != Eigen::Success) throw NumericalError("svt: SVD failed to converge");
  Vec sigma = svd.singularValues();
  for (Eigen::Index i = 0; i < sigma.size(); ++i) sigma[i] = std::max(sigma[i] - t, 0.0);
  return svd.matrixU() * sigma.asDiagonal() * svd.matrixV().transpose();
}

Vec project_box01(const Vec& x) {
  return x.cwiseMax(0.0).cwiseMin(1.0);
}

Vec project_topk(const Vec& x, int k) {
  if (k < 0 || k > x.size()) throw ParameterError("project_topk: k out of range");
  if (k == x.size()) return x;
  std::vector<Eigen::Index> order(x.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    return std::abs(x[a]) > std::abs(x[b]);
  });
  Vec out = Vec::Zero(x.size());
  for (int i = 0; i < k; ++i) out[order[i]] = x[order[i]];
  return out;
}

}  // namespace sdx
