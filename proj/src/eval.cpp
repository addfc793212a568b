#include "sdx/eval.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include "sdx/bases.hpp"
#include "sdx/robustfit.hpp"
#include "sdx/rng.hpp"

namespace sdx {

Scores score_mask(const MaskImage& predicted, const MaskImage& truth) {
  if (predicted.rows != truth.rows || predicted.cols != truth.cols)
    throw ParameterError("score_mask: dimension mismatch");
  long tp = 0, fp = 0, fn = 0;
  for (size_t i = 0; i < predicted.values.size(); ++i) {
    const bool p = predicted.values[i] != 0;
    const bool t = truth.values[i] != 0;
    tp += p && t;
    fp += p && !t;
    fn += !p && t;
  }
  Scores s;
  const bool truth_empty = tp + fn == 0;
  const bool pred_empty = tp + fp == 0;
  s.precision = pred_empty ? (truth_empty ? 1.0 : 0.0)
                           : static_cast<double>(tp) / static_cast<double>(tp + fp);
  s.recall = truth_empty ? (pred_empty ? 1.0 : 0.0)
                         : static_cast<double>(tp) / static_cast<double>(tp + fn);
  s.f1 = (s.precision + s.recall) > 0.0
             ? 2.0 * s.precision * s.recall / (s.precision + s.recall)
             : 0.0;
  return s;
}

std::vector<CorpusItem> make_synthetic_corpus(int items, int sheet_side, std::uint64_t seed) {
  std::vector<CorpusItem> corpus;
  corpus.reserve(items);
  const int block = 64;
  const int per_side = std::max(1, sheet_side / block);
  for (int i = 0; i < items; ++i) {
    Rng rng(seed * 1000003ULL + static_cast<std::uint64_t>(i));
    CorpusItem item;
    item.name = "synth_" + std::to_string(i);
    item.image.luma.resize(per_side * block, per_side * block);
    item.truth = MaskImage(per_side * block, per_side * block);
    for (int br = 0; br < per_side; ++br)
      for (int bc = 0; bc < per_side; ++bc) {
        const double roll = rng.uniform();
        SynthBackground bg = roll < 0.4   ? SynthBackground::Constant
                             : roll < 0.8 ? SynthBackground::SmoothDct
                                          : SynthBackground::Texture;
        const double density = rng.uniform(0.08, 0.3);
        const double gap = (rng.uniform() < 0.5 ? 1.0 : -1.0) * rng.uniform(60.0, 120.0);
        const auto synth = synth_text_block(block, bg, 6, density, gap, rng.next_u64());
        for (int c = 0; c < block; ++c)
          for (int r = 0; r < block; ++r) {
            item.image.luma(br * block + r, bc * block + c) =
                synth.block.values[r + c * block];
            item.truth.at(br * block + r, bc * block + c) = synth.truth.at(r, c);
          }
      }
    corpus.push_back(std::move(item));
  }
  return corpus;
}

std::vector<CorpusItem> load_corpus_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open corpus manifest: " + path);
  std::vector<CorpusItem> corpus;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream row(line);
    std::string image_path, mask_path;
    row >> image_path >> mask_path;
    CorpusItem item;
    item.name = image_path;
    item.image = load_image(image_path);
    if (!mask_path.empty()) {
      item.truth = load_mask(mask_path);
    }
    corpus.push_back(std::move(item));
  }
  return corpus;
}

std::string BenchmarkTable::to_csv(bool include_timing) const {
  std::ostringstream out;
  out << "method,precision,recall,f1,items" << (include_timing ? ",ms_per_image" : "") << "\n";
  for (const auto& row : rows) {
    out << row.method << "," << row.precision << "," << row.recall << "," << row.f1 << ","
        << row.items;
    if (include_timing) out << "," << row.ms_per_image;
    out << "\n";
  }
  return out.str();
}

std::string BenchmarkTable::to_json(bool include_timing) const {
  std::ostringstream out;
  out << "[\n";
  for (size_t i = 0; i < rows.size(); ++i) {
    const auto& row = rows[i];
    out << "  {\"method\": \"" << row.method << "\", \"precision\": " << row.precision
        << ", \"recall\": " << row.recall << ", \"f1\": " << row.f1
        << ", \"items\": " << row.items;
    if (include_timing) out << ", \"ms_per_image\": " << row.ms_per_image;
    out << "}" << (i + 1 < rows.size() ? "," : "") << "\n";
  }
  out << "]\n";
  return out.str();
}

namespace {

// Whole-image segmentation with plain LSF or LAD per 64-block, as the
// baseline rows of the comparison tables.
MaskImage fit_based_mask(const Image& image, const PipelineConfig& cfg, bool lad) {
  const auto blocks = extract_blocks(image, cfg.max_block, cfg.max_block);
  const BasisSet basis = make_dct2d(cfg.max_block, cfg.num_bases);
  std::vector<std::vector<std::uint8_t>> masks(blocks.size());
  for (size_t b = 0; b < blocks.size(); ++b) {
    const FitResult fit = lad ? fit_lad(blocks[b], basis, cfg.inlier_threshold)
                              : fit_lsf(blocks[b], basis, cfg.inlier_threshold);
    masks[b].resize(fit.inlier_mask.size());
    for (size_t i = 0; i < masks[b].size(); ++i) masks[b][i] = !fit.inlier_mask[i];
  }
  return stitch_masks(blocks, masks, image.rows(), image.cols());
}

}  // namespace

BenchmarkTable run_benchmark(const std::vector<CorpusItem>& corpus,
                             const std::vector<std::string>& methods,
                             const PipelineConfig& cfg) {
  BenchmarkTable table;
  for (const auto& method : methods) {
    BenchmarkRow row;
    row.method = method;
    double total_ms = 0.0;
    for (const auto& item : corpus) {
      if (item.truth.values.empty()) {
        std::cerr << "warning: skipping " << item.name << " (no ground truth)\n";
        continue;
      }
      const auto t0 = std::chrono::steady_clock::now();
      MaskImage predicted;
      if (method == "lsf" || method == "lad") {
        predicted = fit_based_mask(item.image, cfg, method == "lad");
      } else if (method == "ransac" || method == "sd") {
        PipelineConfig run_cfg = cfg;
        run_cfg.core = method == "sd" ? CoreSolver::Sd : CoreSolver::Ransac;
        predicted = segment_image(item.image, run_cfg).mask;
      } else {
        throw ParameterError("run_benchmark: unknown method " + method);
      }
      total_ms += std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                      .count();
      const Scores s = score_mask(predicted, item.truth);
      row.precision += s.precision;
      row.recall += s.recall;
      row.f1 += s.f1;
      ++row.items;
    }
    if (row.items > 0) {
      row.precision /= row.items;
      row.recall /= row.items;
      row.f1 /= row.items;
      row.ms_per_image = total_ms / row.items;
    }
    table.rows.push_back(row);
  }
  return table;
}

double additive_objective(const Vec& alpha1, const Vec& alpha2, const Vec& x,
                          const BasisSet& p1, const BasisSet& p2, double lambda1,
                          double lambda2, const DifferenceOperator& diffop) {
  const Vec c2 = p2.columns * alpha2;
  const Vec r = x - p1.columns * alpha1 - c2;
  return 0.5 * r.squaredNorm() + lambda1 * c2.lpNorm<1>() +
         lambda2 * total_variation(c2, diffop);
}

BasisSet sinusoid_subspace_1d(int n, int k) {
  Mat cols(n, k);
  for (int j = 0; j < k; ++j)
    for (int i = 0; i < n; ++i)
      cols(i, j) = std::cos((2.0 * i + 1.0) * M_PI * j / (2.0 * n));
  return orthonormalize(cols);
}

BasisSet hadamard_subspace_1d(int n, int k) {
  const BasisSet full = make_hadamard(n, n);
  BasisSet out;
  out.kind = BasisKind::Hadamard;
  out.columns.resize(n, k);
  // Spread the picks over the sequency range, staying clear of the smooth
  // end that the sinusoid subspace already covers.
  const int lo = n / 3;
  const int step = std::max(1, (n - 1 - lo) / std::max(1, k));
  for (int j = 0; j < k; ++j) {
    const int pick = std::min(n - 1, lo + j * step);
    out.columns.col(j) = full.columns.col(pick);
    out.ordering.push_back(full.ordering[pick]);
  }
  return out;
}

Overlaid1d make_overlaid_1d(const BasisSet& p1, const BasisSet& p2, std::uint64_t seed,
                            double amplitude) {
  const int n = p1.dim();
  if (p2.dim() != n) throw ParameterError("make_overlaid_1d: subspace dimensions differ");
  const int k1 = p1.count(), k2 = p2.count();
  Rng rng(seed);
  Overlaid1d inst;
  Vec a1(k1), a2(k2);
  for (int attempt = 0; attempt < 200; ++attempt) {
    for (int j = 0; j < k1; ++j) a1[j] = rng.normal(0.0, amplitude);
    for (int j = 0; j < k2; ++j) a2[j] = rng.normal(0.0, amplitude);
    inst.component1 = p1.columns * a1;
    inst.component2 = p2.columns * a2;
    inst.mask.assign(n, 0);
    const int segments = 2 + rng.index(3);
    for (int s = 0; s < segments; ++s) {
      const int len = n / 8 + rng.index(n / 8);
      const int start = rng.index(n - len);
      for (int i = start; i < start + len; ++i) inst.mask[i] = 1;
    }
    // The masked stacked system must pin both coefficient vectors down.
    Mat sys(n, k1 + k2);
    for (int i = 0; i < n; ++i) {
      sys.row(i).head(k1) = (inst.mask[i] ? 0.0 : 1.0) * p1.columns.row(i);
      sys.row(i).tail(k2) = (inst.mask[i] ? 1.0 : 0.0) * p2.columns.row(i);
    }
    Eigen::JacobiSVD<Mat> svd(sys);
    if (svd.singularValues()[k1 + k2 - 1] < 0.15) continue;
    // Components must disagree visibly at every mask boundary.
    bool separated = true;
    for (int i = 0; i < n && separated; ++i) {
      const bool boundary = (i > 0 && inst.mask[i] != inst.mask[i - 1]) ||
                            (i + 1 < n && inst.mask[i] != inst.mask[i + 1]);
      if (boundary && std::abs(inst.component1[i] - inst.component2[i]) < amplitude / 8.0)
        separated = false;
    }
    if (separated) break;
  }
  inst.x.block_side = 0;
  inst.x.values.resize(n);
  for (int i = 0; i < n; ++i)
    inst.x.values[i] = inst.mask[i] ? inst.component2[i] : inst.component1[i];
  return inst;
}

DecompositionResult additive_baseline(const BlockSignal& x_signal, const BasisSet& p1,
                                      const BasisSet& p2, double lambda1, double lambda2,
                                      int k1, int k2, double mask_threshold, int iters) {
  const Vec& x = x_signal.values;
  if (p1.dim() != x.size() || p2.dim() != x.size())
    throw ParameterError("additive_baseline: basis dimensions do not match the signal");
  const DifferenceOperator diffop =
      x_signal.block_side > 0 ? DifferenceOperator::make(x_signal.block_side)
                              : DifferenceOperator::make_1d(static_cast<int>(x.size()));

  Vec alpha1 = Vec::Zero(p1.count());
  Vec alpha2 = Vec::Zero(p2.count());
  Vec best1 = alpha1, best2 = alpha2;
  double best = additive_objective(alpha1, alpha2, x, p1, p2, lambda1, lambda2, diffop);

  DecompositionResult result;
  // Lipschitz bound for the smooth part in alpha2 (orthonormal columns).
  const double step0 = 0.5;
  for (int it = 0; it < iters; ++it) {
    alpha1 = project_topk(p1.columns.transpose() * (x - p2.columns * alpha2), k1);

    const Vec c2 = p2.columns * alpha2;
    const Vec r = x - p1.columns * alpha1 - c2;
    Vec grad = -(p2.columns.transpose() * r);
    // Subgradients of the l1 and TV penalties in component space.
    Vec sub = lambda1 * c2.array().sign().matrix();
    sub += lambda2 * (diffop.stacked.transpose() * (diffop.stacked * c2).array().sign().matrix());
    grad += p2.columns.transpose() * sub;
    const double step = step0 / std::sqrt(1.0 + it);
    alpha2 = project_topk(alpha2 - step * grad, k2);

    const double loss = additive_objective(alpha1, alpha2, x, p1, p2, lambda1, lambda2, diffop);
    result.loss_trace.push_back(loss);
    if (loss < best) {
      best = loss;
      best1 = alpha1;
      best2 = alpha2;
    }
  }

  result.iterations = iters;
  result.alpha = best1;
  result.alpha2 = best2;
  const Vec c2 = p2.columns * best2;
  result.sparse = c2;
  result.mask_continuous = c2.cwiseAbs();
  result.mask.resize(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i)
    result.mask[i] = std::abs(c2[i]) >= mask_threshold;
  return result;
}

}  // namespace sdx
