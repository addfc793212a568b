#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace sdx {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Misuse of an API: bad sizes, out-of-range parameters.
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Unreadable or inconsistent input data.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Rank deficiency where full rank was required.
class DegeneracyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-finite iterates, failed factorizations and the like.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class BasisKind { Dct2d, Polynomial2d, Hadamard, Learned, Custom };

/// A column-orthonormal set of flattened basis images (or 1-D functions).
/// Columns have unit l2 norm and are mutually orthogonal to ~1e-10.
struct BasisSet {
  Mat columns;                                // n x K
  int block_side = 0;                         // N with n = N*N, or 0 for 1-D
  std::vector<std::pair<int, int>> ordering;  // (u,v) frequencies or degrees
  BasisKind kind = BasisKind::Custom;

  int dim() const { return static_cast<int>(columns.rows()); }
  int count() const { return static_cast<int>(columns.cols()); }
};

/// A vectorized N x N image block (column-major) or a plain 1-D signal.
struct BlockSignal {
  Vec values;          // luma, nominally 0..255
  int block_side = 0;  // 0 for 1-D signals
  int row = 0;         // origin in the parent image
  int col = 0;
  std::optional<std::pair<Vec, Vec>> chroma;  // (Cb, Cr), same layout

  int size() const { return static_cast<int>(values.size()); }
};

/// Binary per-pixel labels, 1 = foreground.
struct MaskImage {
  int rows = 0;
  int cols = 0;
  std::vector<std::uint8_t> values;  // row-major, rows*cols entries

  MaskImage() = default;
  MaskImage(int r, int c) : rows(r), cols(c), values(static_cast<size_t>(r) * c, 0) {}

  std::uint8_t& at(int r, int c) { return values[static_cast<size_t>(r) * cols + c]; }
  std::uint8_t at(int r, int c) const { return values[static_cast<size_t>(r) * cols + c]; }
  std::size_t count_foreground() const {
    std::size_t k = 0;
    for (auto v : values) k += v != 0;
    return k;
  }
};

/// Output shared by the single-block decomposition solvers.
struct DecompositionResult {
  Vec alpha;                      // background/subspace coefficients
  Vec alpha2;                     // second-component coefficients, when any
  Vec sparse;                     // the sparse component s
  Vec mask_continuous;            // per-pixel foreground evidence
  std::vector<std::uint8_t> mask; // binarized foreground labels
  std::vector<double> loss_trace;
  int iterations = 0;
  bool converged = true;
};

/// Converts a vectorized (column-major) block mask to a MaskImage.
inline MaskImage mask_from_block(const std::vector<std::uint8_t>& m, int side) {
  MaskImage out(side, side);
  for (int c = 0; c < side; ++c)
    for (int r = 0; r < side; ++r) out.at(r, c) = m[static_cast<size_t>(c) * side + r];
  return out;
}

}  // namespace sdx
