#pragma once

#include <string>

#include "sdx/types.hpp"

namespace sdx {

/// Per-pixel displacement field between two frames, in pixels.
struct FlowField {
  int rows = 0;
  int cols = 0;
  Mat u;  // horizontal displacement
  Mat v;  // vertical displacement
};

/// Stacked linear system for the 8-parameter perspective model: each pixel
/// contributes one row to the horizontal and one to the vertical block.
/// Coordinates are 0-based with x = column, y = row, origin top-left.
struct HomographySystem {
  Mat px, py;  // n x 8
  Vec bx, by;  // x + u and y + v
  int rows = 0, cols = 0;
};

HomographySystem build_system(const FlowField& flow);

/// Applies the mapping a to a point; returns the new (x, y).
std::pair<double, double> homography_apply(const Vec& a, double x, double y);

/// Forward-generates the flow induced by a mapping over a grid.
FlowField homography_flow(const Vec& a, int rows, int cols);

/// Joint least squares over both blocks. When normalize is set (default),
/// coordinates are mapped to [-1,1] for conditioning and the parameters
/// mapped back afterward. Throws DegeneracyError on rank-deficient flow.
Vec fit_global_lsq(const HomographySystem& sys, bool normalize = true);

struct MotionSegConfig {
  double lambda1 = 1.0;   // weight on ||s_x||_1 + ||s_y||_1
  double lambda2 = 0.8;   // weight on ||w||_1
  double lambda3 = 0.5;   // weight on ||Dw||_1
  double rho1 = 1.0;
  double rho2 = 1.0;
  int max_iters = 50;
  double rel_tol = 1e-6;
  double binarize_threshold = 0.5;
  bool affine = false;  // 6-parameter model (a7 = a8 = 0)
};

struct MotionSegResult {
  Vec a;             // global-motion parameters
  Vec sx, sy;        // free sparse displacements for masked pixels
  Vec w_continuous;  // in [0,1]^n, shared between channels
  std::vector<std::uint8_t> w_binary;
  std::vector<double> loss_trace;
  int iterations = 0;
  bool converged = false;
};

/// Masked global-motion fit: a single mask w selects pixels explained by the
/// free sparse component instead of the global model.
MotionSegResult motion_masked_segment(const FlowField& flow, const MotionSegConfig& cfg);

/// Error-thresholded global fit baseline: pixels whose flow residual norm
/// exceeds the threshold are labeled foreground.
std::vector<std::uint8_t> lsq_threshold_baseline(const FlowField& flow, double threshold);

/// Middlebury .flo and plain CSV flow I/O.
FlowField load_flow(const std::string& path);
void save_flow_flo(const FlowField& flow, const std::string& path);
void save_flow_csv(const FlowField& flow, const std::string& path);

}  // namespace sdx
