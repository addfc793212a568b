#pragma once

#include <string>

#include "sdx/image.hpp"
#include "sdx/pipeline.hpp"
#include "sdx/types.hpp"

namespace sdx {

struct Scores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// Foreground-positive precision/recall/F1. Degenerate cases: with no
/// positive predictions, precision is 1 exactly when truth is also empty;
/// likewise for recall with an empty truth; F1 is 1 only when both are empty.
Scores score_mask(const MaskImage& predicted, const MaskImage& truth);

struct CorpusItem {
  std::string name;
  Image image;
  MaskImage truth;
};

/// Deterministic synthetic corpus of text-over-background sheets.
std::vector<CorpusItem> make_synthetic_corpus(int items, int sheet_side,
                                              std::uint64_t seed);

/// Corpus manifest: one "image_path<TAB or space>mask_path" pair per line.
std::vector<CorpusItem> load_corpus_manifest(const std::string& path);

struct BenchmarkRow {
  std::string method;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double ms_per_image = 0.0;
  int items = 0;
};

struct BenchmarkTable {
  std::vector<BenchmarkRow> rows;
  // Wall times are volatile, so they only appear when asked for; default
  // output is byte-reproducible for a fixed corpus and seed.
  std::string to_csv(bool include_timing = false) const;
  std::string to_json(bool include_timing = false) const;
};

/// Runs the named pipeline variants ("ransac", "sd", "lsf", "lad") over the
/// corpus and reports averaged scores. Items without ground truth are
/// skipped with a warning on stderr.
BenchmarkTable run_benchmark(const std::vector<CorpusItem>& corpus,
                             const std::vector<std::string>& methods,
                             const PipelineConfig& cfg);

/// Additive two-subspace baseline:
///   min 1/2||x - P1 a1 - P2 a2||^2 + l1 ||P2 a2||_1 + l2 TV(P2 a2)
///   s.t. ||a1||_0 <= k1, ||a2||_0 <= k2,
/// solved by alternating exact a1 steps with projected subgradient steps in
/// a2. The mask thresholds |P2 a2|.
DecompositionResult additive_baseline(const BlockSignal& x, const BasisSet& p1,
                                      const BasisSet& p2, double lambda1, double lambda2,
                                      int k1, int k2, double mask_threshold,
                                      int iters = 200);

/// Objective of the additive model at the given coefficients.
double additive_objective(const Vec& alpha1, const Vec& alpha2, const Vec& x,
                          const BasisSet& p1, const BasisSet& p2, double lambda1,
                          double lambda2, const DifferenceOperator& diffop);

/// One overlaid 1-D instance: a low-frequency sinusoid component and a
/// Hadamard component switched by a segment mask.
struct Overlaid1d {
  BlockSignal x;
  Vec component1, component2;
  std::vector<std::uint8_t> mask;
};

/// The two subspaces of the 1-D decomposition experiment. The Hadamard atoms
/// are spread across sequencies so the subspaces stay separable.
BasisSet sinusoid_subspace_1d(int n, int k);
BasisSet hadamard_subspace_1d(int n, int k);

/// Deterministic identifiable instance: masks are resampled until the
/// stacked masked system has full rank and the components are separated at
/// the mask boundaries, so the generating decomposition is the unique one.
Overlaid1d make_overlaid_1d(const BasisSet& p1, const BasisSet& p2, std::uint64_t seed,
                            double amplitude = 60.0);

}  // namespace sdx
