#pragma once

#include <map>
#include <memory>

#include "sdx/image.hpp"
#include "sdx/robustfit.hpp"
#include "sdx/sparsedecomp.hpp"
#include "sdx/types.hpp"

namespace sdx {

enum class CoreSolver { Ransac, Sd };

enum class BlockClass {
  PureBackground,
  SmoothBackground,
  TextOverConstant,
  CoreSegmented,
  Split,
};

const char* to_string(BlockClass cls);

struct PipelineConfig {
  int max_block = 64;
  int min_block = 8;
  double eps1 = 3.0;             // pure-background standard deviation bound
  double inlier_threshold = 10;  // per-pixel fitting error bound
  double eps2 = 0.5;             // minimum inlier ratio before splitting
  int max_colors = 10;           // distinct-luma bound for text-over-constant
  double min_range = 50.0;       // intensity range needed for text-over-constant
  double color_tolerance = 10.0; // luma distance merged into the modal color
  int num_bases = 10;
  CoreSolver core = CoreSolver::Ransac;
  bool allow_split = true;
  std::uint64_t seed = 0;
  int jobs = 0;  // 0 = hardware concurrency
  RansacConfig ransac;
  SdConfig sd;
};

struct QuadtreeNode {
  int row = 0;
  int col = 0;
  int side = 0;
  BlockClass classification = BlockClass::PureBackground;
  double inlier_ratio = 1.0;
  int core_iterations = 0;  // iterations spent by the core solver, if it ran
  std::vector<std::uint8_t> mask;  // vectorized column-major, empty for Split
  std::vector<QuadtreeNode> children;

  /// Writes this node's labels into a side x side canvas (recursing).
  void paint(std::vector<std::uint8_t>& canvas, int canvas_side, int r0, int c0) const;
};

/// Shared per-block-size solver state (bases, operators, factorizations).
/// Built once, read-only afterwards.
class PipelineContext {
 public:
  explicit PipelineContext(const PipelineConfig& cfg);
  const BasisSet& basis(int side) const;
  const SdSolver& sd(int side) const;
  const PipelineConfig& config() const { return cfg_; }

 private:
  PipelineConfig cfg_;
  std::map<int, BasisSet> bases_;
  std::map<int, std::shared_ptr<SdSolver>> sd_;
};

/// Steps 1-3 of the per-block algorithm; returns the classification and
/// fills `mask` when a simple rule fires, std::nullopt otherwise.
std::optional<BlockClass> classify_simple(const BlockSignal& block,
                                          const PipelineContext& ctx,
                                          std::vector<std::uint8_t>& mask);

/// Full per-block segmentation with quadtree recursion.
QuadtreeNode segment_block(const BlockSignal& block, const PipelineContext& ctx);

struct BlockDiagnostics {
  int row = 0, col = 0, side = 0;
  BlockClass classification = BlockClass::PureBackground;
  double inlier_ratio = 1.0;
  int leaves = 0;
  int iterations = 0;  // summed core-solver iterations over the subtree
  double wall_ms = 0.0;
};

struct SegmentationOutput {
  MaskImage mask;
  std::vector<BlockDiagnostics> blocks;
  double wall_ms = 0.0;
};

/// Tiles the image into max_block blocks, segments each (in parallel when
/// jobs != 1) and stitches the full-image foreground mask.
SegmentationOutput segment_image(const Image& image, const PipelineConfig& cfg);

}  // namespace sdx
