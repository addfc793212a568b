#include "sdx/pipeline.hpp"

#include "sdx/bases.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <map>
#include <thread>

namespace sdx {

const char* to_string(BlockClass cls) {
  switch (cls) {
    case BlockClass::PureBackground: return "pure_background";
    case BlockClass::SmoothBackground: return "smooth_background";
    case BlockClass::TextOverConstant: return "text_over_constant";
    case BlockClass::CoreSegmented: return "core_segmented";
    case BlockClass::Split: return "split";
  }
  return "?";
}

void QuadtreeNode::paint(std::vector<std::uint8_t>& canvas, int canvas_side, int r0,
                         int c0) const {
  if (classification == BlockClass::Split) {
    for (const auto& child : children)
      child.paint(canvas, canvas_side, r0 + (child.row - row), c0 + (child.col - col));
    return;
  }
  for (int c = 0; c < side; ++c)
    for (int r = 0; r < side; ++r)
      canvas[static_cast<size_t>(r0 + r) + static_cast<size_t>(c0 + c) * canvas_side] =
          mask[static_cast<size_t>(r) + static_cast<size_t>(c) * side];
}

PipelineContext::PipelineContext(const PipelineConfig& cfg) : cfg_(cfg) {
  if (cfg_.max_block < 8 || (cfg_.max_block & (cfg_.max_block - 1)) != 0)
    throw ParameterError("pipeline: max_block must be a power of two >= 8");
  for (int side = cfg_.min_block; side <= cfg_.max_block; side *= 2) {
    const int k = std::min(cfg_.num_bases, side * side);
    bases_.emplace(side, make_dct2d(side, k));
    SdConfig sd_cfg = cfg_.sd;
    sd_cfg.inlier_threshold = cfg_.inlier_threshold;
    sd_.emplace(side, std::make_shared<SdSolver>(bases_.at(side),
                                                 DifferenceOperator::make(side), sd_cfg));
  }
}

const BasisSet& PipelineContext::basis(int side) const { return bases_.at(side); }
const SdSolver& PipelineContext::sd(int side) const { return *sd_.at(side); }

namespace {

double stddev(const Vec& v) {
  const double mean = v.mean();
  return std::sqrt((v.array() - mean).square().sum() / static_cast<double>(v.size()));
}

// Least squares fit of `values` restricted to the given coordinates.
Vec restricted_lsf(const Mat& p, const Vec& values, const std::vector<int>& coords) {
  Mat sub(coords.size(), p.cols());
  Vec rhs(coords.size());
  for (size_t i = 0; i < coords.size(); ++i) {
    sub.row(static_cast<Eigen::Index>(i)) = p.row(coords[i]);
    rhs[static_cast<Eigen::Index>(i)] = values[coords[i]];
  }
  return sub.colPivHouseholderQr().solve(rhs);
}

BlockSignal subblock(const BlockSignal& block, int r0, int c0, int side) {
  BlockSignal sub;
  sub.block_side = side;
  sub.row = block.row + r0;
  sub.col = block.col + c0;
  sub.values.resize(side * side);
  if (block.chroma) sub.chroma = {Vec(side * side), Vec(side * side)};
  const int parent = block.block_side;
  for (int c = 0; c < side; ++c)
    for (int r = 0; r < side; ++r) {
      const int from = (r0 + r) + (c0 + c) * parent;
      const int to = r + c * side;
      sub.values[to] = block.values[from];
      if (block.chroma) {
        sub.chroma->first[to] = block.chroma->first[from];
        sub.chroma->second[to] = block.chroma->second[from];
      }
    }
  return sub;
}

}  // namespace

std::optional<BlockClass> classify_simple(const BlockSignal& block,
                                          const PipelineContext& ctx,
                                          std::vector<std::uint8_t>& mask) {
  const PipelineConfig& cfg = ctx.config();
  const int n = block.size();
  mask.assign(n, 0);

  // Step 1: near-constant intensity means pure background.
  if (stddev(block.values) < cfg.eps1) return BlockClass::PureBackground;

  // Step 2: all pixels fit by the smooth model.
  const FitResult lsf = fit_lsf(block, ctx.basis(block.block_side), cfg.inlier_threshold);
  if (lsf.inlier_ratio == 1.0) return BlockClass::SmoothBackground;

  // Step 3: few distinct colors spanning a wide range -> text over constant.
  std::map<int, int> histogram;
  for (int i = 0; i < n; ++i) ++histogram[static_cast<int>(std::lround(block.values[i]))];
  const int lo = histogram.begin()->first;
  const int hi = histogram.rbegin()->first;
  if (static_cast<int>(histogram.size()) < cfg.max_colors && hi - lo > cfg.min_range) {
    int modal = lo, modal_count = -1;
    for (const auto& [color, count] : histogram)
      if (count > modal_count) {
        modal = color;
        modal_count = count;
      }
    for (int i = 0; i < n; ++i)
      mask[i] = std::abs(block.values[i] - modal) >= cfg.color_tolerance;
    return BlockClass::TextOverConstant;
  }
  return std::nullopt;
}

QuadtreeNode segment_block(const BlockSignal& block, const PipelineContext& ctx) {
  const PipelineConfig& cfg = ctx.config();
  const int side = block.block_side;
  const int n = block.size();

  QuadtreeNode node;
  node.row = block.row;
  node.col = block.col;
  node.side = side;

  if (auto simple = classify_simple(block, ctx, node.mask)) {
    node.classification = *simple;
    return node;
  }

  // Step 4: run the core solver on luma.
  std::vector<std::uint8_t> inliers(n);
  if (cfg.core == CoreSolver::Ransac) {
    RansacConfig rc = cfg.ransac;
    rc.inlier_threshold = cfg.inlier_threshold;
    // Distinct per-block stream so tiles do not share sample sequences.
    rc.rng_seed = cfg.seed * 0x9e3779b9ULL + static_cast<std::uint64_t>(block.row) * 131071u +
                  static_cast<std::uint64_t>(block.col) * 524287u + side;
    const FitResult fit = ransac_segment(block, ctx.basis(side), rc);
    inliers = fit.inlier_mask;
    node.core_iterations = fit.iterations;
  } else {
    const DecompositionResult sd = ctx.sd(side).solve(block);
    for (int i = 0; i < n; ++i) inliers[i] = !sd.mask[i];
    node.core_iterations = sd.iterations;
  }

  // Chroma check: inlier pixels must also fit smoothly in both chroma planes.
  if (block.chroma) {
    std::vector<int> coords;
    for (int i = 0; i < n; ++i)
      if (inliers[i]) coords.push_back(i);
    const Mat& p = ctx.basis(side).columns;
    if (static_cast<int>(coords.size()) >= ctx.basis(side).count()) {
      for (const Vec* plane : {&block.chroma->first, &block.chroma->second}) {
        const Vec alpha = restricted_lsf(p, *plane, coords);
        const Vec fitted = p * alpha;
        for (int i : coords)
          if (std::abs((*plane)[i] - fitted[i]) >= cfg.inlier_threshold) inliers[i] = 0;
      }
    }
  }

  int inlier_count = 0;
  for (int i = 0; i < n; ++i) inlier_count += inliers[i];
  node.inlier_ratio = static_cast<double>(inlier_count) / n;

  if (node.inlier_ratio > cfg.eps2 || side <= cfg.min_block || !cfg.allow_split) {
    node.classification = BlockClass::CoreSegmented;
    node.mask.resize(n);
    for (int i = 0; i < n; ++i) node.mask[i] = !inliers[i];
    return node;
  }

  // Step 5: quadtree split.
  node.classification = BlockClass::Split;
  node.mask.clear();
  const int half = side / 2;
  for (int qr = 0; qr < 2; ++qr)
    for (int qc = 0; qc < 2; ++qc)
      node.children.push_back(segment_block(subblock(block, qr * half, qc * half, half), ctx));
  return node;
}

namespace {

int count_leaves(const QuadtreeNode& node) {
  if (node.classification != BlockClass::Split) return 1;
  int total = 0;
  for (const auto& child : node.children) total += count_leaves(child);
  return total;
}

int count_iterations(const QuadtreeNode& node) {
  int total = node.core_iterations;
  for (const auto& child : node.children) total += count_iterations(child);
  return total;
}

}  // namespace

SegmentationOutput segment_image(const Image& image, const PipelineConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  PipelineContext ctx(cfg);
  const auto blocks = extract_blocks(image, cfg.max_block, cfg.max_block);

  std::vector<std::vector<std::uint8_t>> masks(blocks.size());
  std::vector<BlockDiagnostics> diags(blocks.size());

  const auto run_block = [&](size_t b) {
    const auto tb = std::chrono::steady_clock::now();
    const QuadtreeNode root = segment_block(blocks[b], ctx);
    std::vector<std::uint8_t> canvas(static_cast<size_t>(cfg.max_block) * cfg.max_block, 0);
    root.paint(canvas, cfg.max_block, 0, 0);
    masks[b] = std::move(canvas);
    BlockDiagnostics d;
    d.row = blocks[b].row;
    d.col = blocks[b].col;
    d.side = cfg.max_block;
    d.classification = root.classification;
    d.inlier_ratio = root.inlier_ratio;
    d.leaves = count_leaves(root);
    d.iterations = count_iterations(root);
    d.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - tb)
                    .count();
    diags[b] = d;
  };

  int jobs = cfg.jobs > 0 ? cfg.jobs
                          : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  jobs = std::min<int>(jobs, static_cast<int>(blocks.size()));
  if (jobs <= 1) {
    for (size_t b = 0; b < blocks.size(); ++b) run_block(b);
  } else {
    std::atomic<size_t> next{0};
    std::vector<std::thread> workers;
    workers.reserve(jobs);
    for (int t = 0; t < jobs; ++t)
      workers.emplace_back([&] {
        for (size_t b = next.fetch_add(1); b < blocks.size(); b = next.fetch_add(1))
          run_block(b);
      });
    for (auto& w : workers) w.join();
  }

  SegmentationOutput out;
  out.mask = stitch_masks(blocks, masks, image.rows(), image.cols());
  out.blocks = std::move(diags);
  out.wall_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

}  // namespace sdx
