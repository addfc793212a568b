#include "sdx/bases.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>

namespace sdx {

std::vector<std::pair<int, int>> zigzag_order(int side, int count) {
  std::vector<std::pair<int, int>> order;
  order.reserve(count);
  for (int s = 0; s <= 2 * (side - 1) && static_cast<int>(order.size()) < count; ++s) {
    // Odd anti-diagonals run u = 0..s, even ones run u = s..0.
    for (int t = 0; t <= s; ++t) {
      const int u = (s % 2 == 1) ? t : s - t;
      const int v = s - u;
      if (u >= side || v >= side) continue;
      order.emplace_back(u, v);
      if (static_cast<int>(order.size()) == count) break;
    }
  }
  return order;
}

namespace {

// 1-D DCT-II sample: beta_u * cos((2x+1) pi u / 2N), unit-norm over x=0..N-1.
double dct1d(int u, int x, int n) {
  const double beta = (u == 0) ? std::sqrt(1.0 / n) : std::sqrt(2.0 / n);
  return beta * std::cos((2.0 * x + 1.0) * M_PI * u / (2.0 * n));
}

}  // namespace

BasisSet make_dct2d(int block_side, int num_bases) {
  const int n = block_side * block_side;
  if (block_side < 1) throw ParameterError("make_dct2d: block_side must be positive");
  if (num_bases < 1 || num_bases > n)
    throw ParameterError("make_dct2d: num_bases out of range [1, N^2]");

  BasisSet basis;
  basis.kind = BasisKind::Dct2d;
  basis.block_side = block_side;
  basis.ordering = zigzag_order(block_side, num_bases);
  basis.columns.resize(n, num_bases);
  for (int k = 0; k < num_bases; ++k) {
    const auto [u, v] = basis.ordering[k];
    for (int c = 0; c < block_side; ++c) {
      const double fx = dct1d(u, c, block_side);
      for (int r = 0; r < block_side; ++r)
        basis.columns(r + c * block_side, k) = fx * dct1d(v, r, block_side);
    }
  }
  return basis;
}

BasisSet make_polynomial2d(int block_side, int num_bases) {
  const int n = block_side * block_side;
  if (block_side < 1) throw ParameterError("make_polynomial2d: block_side must be positive");
  if (num_bases < 1 || num_bases > n)
    throw ParameterError("make_polynomial2d: num_bases out of range [1, N^2]");

  const auto ordering = zigzag_order(block_side, num_bases);
  int max_degree = 0;
  for (const auto& [du, dv] : ordering) max_degree = std::max({max_degree, du, dv});

  // 1-D monomials x^d on the grid {1..N}, normalized then Gram-Schmidt'ed.
  Mat poly1d(block_side, max_degree + 1);
  for (int d = 0; d <= max_degree; ++d) {
    for (int x = 0; x < block_side; ++x)
      poly1d(x, d) = std::pow(static_cast<double>(x + 1), d);
    poly1d.col(d) /= poly1d.col(d).norm();
    Vec q = poly1d.col(d);
    for (int pass = 0; pass < 2; ++pass)
      for (int j = 0; j < d; ++j) q -= poly1d.col(j).dot(q) * poly1d.col(j);
    const double norm = q.norm();
    if (norm < 1e-10)
      throw DegeneracyError("make_polynomial2d: monomial of degree " + std::to_string(d) +
                            " is numerically dependent on lower degrees");
    poly1d.col(d) = q / norm;
  }

  BasisSet basis;
  basis.kind = BasisKind::Polynomial2d;
  basis.block_side = block_side;
  basis.ordering = ordering;
  basis.columns.resize(n, num_bases);
  for (int k = 0; k < num_bases; ++k) {
    const auto [du, dv] = ordering[k];
    for (int c = 0; c < block_side; ++c)
      for (int r = 0; r < block_side; ++r)
        basis.columns(r + c * block_side, k) = poly1d(c, du) * poly1d(r, dv);
  }
  return basis;
}

namespace {

int hadamard_entry(unsigned i, unsigned j) {
  // Sylvester construction: H(i,j) = (-1)^popcount(i & j).
  return (std::popcount(i & j) & 1) ? -1 : 1;
}

int sequency(unsigned j, int n) {
  int changes = 0;
  int prev = hadamard_entry(0, j);
  for (int i = 1; i < n; ++i) {
    const int cur = hadamard_entry(static_cast<unsigned>(i), j);
    changes += cur != prev;
    prev = cur;
  }
  return changes;
}

}  // namespace

BasisSet make_hadamard(int n, int num_bases) {
  if (n < 1 || (n & (n - 1)) != 0) throw ParameterError("make_hadamard: n must be a power of two");
  if (num_bases < 1 || num_bases > n)
    throw ParameterError("make_hadamard: num_bases out of range [1, n]");

  std::vector<int> natural(n);
  std::iota(natural.begin(), natural.end(), 0);
  std::vector<int> seq(n);
  for (int j = 0; j < n; ++j) seq[j] = sequency(static_cast<unsigned>(j), n);
  std::stable_sort(natural.begin(), natural.end(),
                   [&](int a, int b) { return seq[a] < seq[b]; });

  BasisSet basis;
  basis.kind = BasisKind::Hadamard;
  basis.block_side = 0;
  basis.columns.resize(n, num_bases);
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  for (int k = 0; k < num_bases; ++k) {
    const int j = natural[k];
    basis.ordering.emplace_back(seq[j], j);
    for (int i = 0; i < n; ++i)
      basis.columns(i, k) = scale * hadamard_entry(static_cast<unsigned>(i),
                                                   static_cast<unsigned>(j));
  }
  return basis;
}

Mat orthonormal_columns(const Mat& columns) {
  Mat q = columns;
  const int k = static_cast<int>(q.cols());
  for (int j = 0; j < k; ++j) {
    const double original = q.col(j).norm();
    for (int i = 0; i < j; ++i) q.col(j) -= q.col(i).dot(q.col(j)) * q.col(i);
    // Re-orthogonalize when cancellation ate most of the column.
    if (j > 0 && q.col(j).norm() < 1e-8 * std::max(1.0, original))
      for (int i = 0; i < j; ++i) q.col(j) -= q.col(i).dot(q.col(j)) * q.col(i);
    const double norm = q.col(j).norm();
    if (norm < 1e-10 * std::max(1.0, original))
      throw DegeneracyError("orthonormalize: rank " + std::to_string(j) + " < " +
                            std::to_string(k) + " columns");
    q.col(j) /= norm;
    // One clean-up pass keeps max|Q'Q - I| near machine precision.
    for (int i = 0; i < j; ++i) q.col(j) -= q.col(i).dot(q.col(j)) * q.col(i);
    q.col(j) /= q.col(j).norm();
  }
  return q;
}

BasisSet orthonormalize(const Mat& columns) {
  BasisSet basis;
  basis.kind = BasisKind::Custom;
  basis.block_side = 0;
  basis.columns = orthonormal_columns(columns);
  for (int k = 0; k < basis.count(); ++k) basis.ordering.emplace_back(k, 0);
  return basis;
}

}  // namespace sdx
