#pragma once

#include "sdx/types.hpp"

namespace sdx {

/// Zigzag traversal of the (u,v) plane of an NxN grid: anti-diagonals of
/// non-decreasing u+v, alternating direction, starting (0,0),(0,1),(1,0),...
std::vector<std::pair<int, int>> zigzag_order(int side, int count);

/// First num_bases 2-D DCT-II functions of an NxN block in zigzag order.
/// Columns are vectorized column-major and orthonormal.
BasisSet make_dct2d(int block_side, int num_bases);

/// 2-D orthonormal polynomials: 1-D monomials on {1..N} pushed through
/// Gram-Schmidt, combined as outer products, ordered by total degree
/// (zigzag within equal degree).
BasisSet make_polynomial2d(int block_side, int num_bases);

/// First num_bases sequency-ordered columns of the Sylvester Hadamard matrix,
/// scaled to unit norm. n must be a power of two.
BasisSet make_hadamard(int n, int num_bases);

/// Modified Gram-Schmidt with a re-orthogonalization pass. Throws
/// DegeneracyError if the effective rank is below the column count.
BasisSet orthonormalize(const Mat& columns);

/// Raw-matrix variant of the above, used where no BasisSet wrapper is wanted.
Mat orthonormal_columns(const Mat& columns);

}  // namespace sdx
