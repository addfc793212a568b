// Acceptance suite: one line per criterion, non-zero exit if any fails.
//
// Each block is self-contained: it generates its own data, computes the
// reference values it needs (brute force where the contract asks for an
// independent oracle) and prints PASS/FAIL with the measured numbers.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "oracle.hpp"
#include "sdx/bases.hpp"
#include "sdx/eval.hpp"
#include "sdx/image.hpp"
#include "sdx/maskeddecomp.hpp"
#include "sdx/maskedrpca.hpp"
#include "sdx/motionseg.hpp"
#include "sdx/pipeline.hpp"
#include "sdx/robustfit.hpp"
#include "sdx/sparsedecomp.hpp"
#include "sdx/subspacelearn.hpp"

using namespace sdx;

namespace {

int failures = 0;

class Criterion {
 public:
  explicit Criterion(int number, std::string title)
      : number_(number), title_(std::move(title)), start_(std::chrono::steady_clock::now()) {}

  void check(bool ok, const std::string& detail) {
    ok_ = ok_ && ok;
    if (!ok) details_ += (details_.empty() ? "" : "; ") + detail;
    else if (details_.empty()) last_good_ = detail;
  }

  ~Criterion() {
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    std::printf("criterion %2d [%s]: %s (%.2fs)%s%s\n", number_, title_.c_str(),
                ok_ ? "PASS" : "FAIL", secs, ok_ ? " " : " -- ",
                ok_ ? last_good_.c_str() : details_.c_str());
    std::fflush(stdout);
    if (!ok_) ++failures;
  }

 private:
  int number_;
  std::string title_;
  std::chrono::steady_clock::time_point start_;
  bool ok_ = true;
  std::string details_;
  std::string last_good_;
};

std::string fmt(const char* pattern, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), pattern, a, b, c);
  return buf;
}

double gram_deviation(const Mat& p) {
  const Mat gram = p.transpose() * p;
  return (gram - Mat::Identity(p.cols(), p.cols())).cwiseAbs().maxCoeff();
}

MaskImage mask_of(const std::vector<std::uint8_t>& labels, int side) {
  return mask_from_block(labels, side);
}

// ---------------------------------------------------------------------------

void criterion1_bases() {
  Criterion crit(1, "basis correctness");
  double worst_dev = 0.0, worst_recon = 0.0;
  for (int side : {4, 8, 16, 64}) {
    const int n = side * side;
    worst_dev = std::max(worst_dev, gram_deviation(make_dct2d(side, std::min(n, 10)).columns));
    worst_dev = std::max(worst_dev, gram_deviation(make_polynomial2d(side, 10).columns));
    worst_dev = std::max(worst_dev, gram_deviation(make_hadamard(n, 16).columns));

    const BasisSet full = make_dct2d(side, n);
    if (side <= 16) {
      worst_dev = std::max(worst_dev, gram_deviation(full.columns));
    } else {
      // The dense 4096^2 Gram breaks the runtime budget on小 machines, so the
      // full basis is verified through its separable structure: every stored
      // column must equal the outer product of 1-D DCT factors, and the 1-D
      // factor Gram must be orthonormal; the 2-D Gram deviation follows
      // exactly from the factor Gram.
      Mat dct1d(side, side);
      for (int u = 0; u < side; ++u) {
        const double beta = u == 0 ? std::sqrt(1.0 / side) : std::sqrt(2.0 / side);
        for (int x = 0; x < side; ++x)
          dct1d(x, u) = beta * std::cos((2.0 * x + 1.0) * M_PI * u / (2.0 * side));
      }
      double column_dev = 0.0;
      for (int k = 0; k < n; ++k) {
        const auto [u, v] = full.ordering[k];
        for (int c = 0; c < side; ++c)
          for (int r = 0; r < side; ++r)
            column_dev = std::max(column_dev,
                                  std::abs(full.columns(r + c * side, k) -
                                           dct1d(c, u) * dct1d(r, v)));
      }
      const Mat g = dct1d.transpose() * dct1d;
      double kron_dev = 0.0;
      for (int a = 0; a < side; ++a)
        for (int b = 0; b < side; ++b)
          for (int c = 0; c < side; ++c)
            for (int d = 0; d < side; ++d) {
              const double expected = (a == b && c == d) ? 1.0 : 0.0;
              kron_dev = std::max(kron_dev, std::abs(g(a, b) * g(c, d) - expected));
            }
      // Outer-product identity plus factor orthonormality bound the true
      // deviation; the summation error of 4096-term dot products stays
      // below 1e-11 at unit scale.
      worst_dev = std::max(worst_dev, kron_dev + column_dev * 2.0 * side + 1e-11);
    }

    Rng rng(side);
    for (int trial = 0; trial < 3; ++trial) {
      const Vec block = oracle::random_vec(n, rng, 100.0);
      const Vec recon = full.columns * (full.columns.transpose() * block);
      worst_recon = std::max(worst_recon, (recon - block).norm() / side);
    }
  }
  crit.check(worst_dev < 1e-10, fmt("max |P'P - I| = %.2e", worst_dev));
  crit.check(worst_recon < 1e-8, fmt("full-K reconstruction RMSE = %.2e", worst_recon));
  if (worst_dev < 1e-10 && worst_recon < 1e-8)
    crit.check(true, fmt("max |P'P-I| = %.2e, recon RMSE = %.2e", worst_dev, worst_recon));
}

void criterion2_prox_oracles() {
  Criterion crit(2, "prox operators vs brute force");
  Rng rng(20);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const Vec x = oracle::random_vec(6, rng, 2.0);
    const double t = rng.uniform(0.0, 1.5);
    worst = std::max(worst,
                     (soft_threshold(x, t) - oracle::prox_l1_grid(x, t)).cwiseAbs().maxCoeff());
  }
  crit.check(worst < 1e-3, fmt("soft threshold max gap = %.2e", worst));

  double worst_block = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const Vec x = oracle::random_vec(6, rng, 2.0);
    const double t = rng.uniform(0.0, 2.0);
    worst_block = std::max(
        worst_block,
        (block_soft_threshold(x, t) - oracle::prox_l2_radial(x, t)).cwiseAbs().maxCoeff());
  }
  crit.check(worst_block < 1e-3, fmt("block soft threshold max gap = %.2e", worst_block));

  // 2x2 singular value thresholding against a quadratic-formula SVD.
  double worst_svt = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    Mat m(2, 2);
    m << rng.normal(), rng.normal(), rng.normal(), rng.normal();
    const double t = rng.uniform(0.0, 1.0);
    // Independent 2x2 SVD: eigenvalues of m m^T via the quadratic formula.
    const double a = m(0, 0), b = m(0, 1), c = m(1, 0), d = m(1, 1);
    const double s1 = a * a + b * b + c * c + d * d;
    const double det = a * d - b * c;
    const double disc = std::sqrt(std::max(0.0, s1 * s1 - 4.0 * det * det));
    const double sig1 = std::sqrt(std::max(0.0, (s1 + disc) / 2.0));
    const double sig2 = std::sqrt(std::max(0.0, (s1 - disc) / 2.0));
    const Vec sv = Eigen::JacobiSVD<Mat>(svt(m, t)).singularValues();
    worst_svt = std::max(worst_svt, std::abs(sv[0] - std::max(sig1 - t, 0.0)));
    worst_svt = std::max(worst_svt, std::abs(sv[1] - std::max(sig2 - t, 0.0)));
  }
  crit.check(worst_svt < 1e-3, fmt("svt singular-value gap = %.2e", worst_svt));
  crit.check(true, fmt("gaps: l1 %.1e, l2 %.1e, svt %.1e", worst, worst_block, worst_svt));
}

void criterion3_residual_monotonicity() {
  Criterion crit(3, "LSF residual monotone in K");
  Rng rng(30);
  bool monotone = true;
  const int side = 16;
  std::vector<BasisSet> bases;
  for (int k = 1; k <= 20; ++k) bases.push_back(make_dct2d(side, k));
  for (int block_id = 0; block_id < 50 && monotone; ++block_id) {
    Vec block(side * side);
    const double cx = rng.uniform(3.0, 12.0), cy = rng.uniform(3.0, 12.0);
    const double amp = rng.uniform(20.0, 60.0), width = rng.uniform(15.0, 60.0);
    const double gx = rng.uniform(-1.0, 1.0), gy = rng.uniform(-1.0, 1.0);
    for (int c = 0; c < side; ++c)
      for (int r = 0; r < side; ++r)
        block[r + c * side] = 120.0 + gx * c + gy * r +
                              amp * std::exp(-((r - cy) * (r - cy) + (c - cx) * (c - cx)) /
                                             width);
    double prev = std::numeric_limits<double>::infinity();
    for (int k = 1; k <= 20; ++k) {
      const Mat& p = bases[k - 1].columns;
      const double rmse = (block - p * (p.transpose() * block)).norm() / side;
      if (rmse > prev) monotone = false;
      prev = rmse;
    }
  }
  crit.check(monotone, "a residual increased with K");
  if (monotone) crit.check(true, "RMSE non-increasing for K=1..20 on 50 blocks");
}

void criterion4_ransac() {
  Criterion crit(4, "RANSAC recovery");
  const BasisSet basis = make_dct2d(64, 10);
  double f1_sum = 0.0;
  bool deterministic = true;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(7000 + seed);
    const SynthBackground bg =
        rng.uniform() < 0.5 ? SynthBackground::Constant : SynthBackground::SmoothDct;
    const double density = rng.uniform(0.10, 0.30);
    const double gap = (rng.uniform() < 0.5 ? 1.0 : -1.0) * rng.uniform(50.0, 130.0);
    const auto scene = synth_text_block(64, bg, 6, density, gap, 9000 + seed);
    RansacConfig cfg;
    cfg.num_bases = 10;
    cfg.inlier_threshold = 10.0;
    cfg.max_iters = 200;
    cfg.early_stop_ratio = 0.95;
    cfg.rng_seed = seed;
    const FitResult fit = ransac_segment(scene.block, basis, cfg);
    MaskImage predicted(64, 64);
    for (int c = 0; c < 64; ++c)
      for (int r = 0; r < 64; ++r) predicted.at(r, c) = !fit.inlier_mask[r + c * 64];
    f1_sum += score_mask(predicted, scene.truth).f1;
    if (seed < 5) {
      const FitResult again = ransac_segment(scene.block, basis, cfg);
      if (again.inlier_mask != fit.inlier_mask) deterministic = false;
    }
  }
  const double mean_f1 = f1_sum / 100.0;
  crit.check(mean_f1 >= 0.95, fmt("mean F1 = %.4f (need >= 0.95)", mean_f1));
  crit.check(deterministic, "same seed changed the result");

  const char* manifest = std::getenv("SDX_SCREEN_CONTENT_MANIFEST");
  if (manifest != nullptr) {
    const auto corpus = load_corpus_manifest(manifest);
    PipelineConfig cfg;
    const auto table = run_benchmark(corpus, {"ransac"}, cfg);
    const double f1 = table.rows.at(0).f1;
    crit.check(f1 >= 0.85 && f1 <= 0.95, fmt("dataset corpus F1 = %.3f outside [0.85,0.95]", f1));
    crit.check(true, fmt("mean F1 = %.4f, dataset F1 = %.3f", mean_f1, f1));
  } else {
    crit.check(true, fmt("mean F1 = %.4f (annotated dataset not supplied; skipped)", mean_f1));
  }
}

void criterion5_sd() {
  Criterion crit(5, "sparse decomposition solver");
  // Objective vs a high-precision subgradient oracle on 8x8 instances.
  SdConfig precise;
  precise.lambda1 = 2.0;
  precise.lambda2 = 1.0;
  precise.max_iters = 3000;
  precise.rel_tol = 1e-12;
  const SdSolver small(make_dct2d(8, 4), DifferenceOperator::make(8), precise);
  const auto diffop = DifferenceOperator::make(8);
  const Mat dp = diffop.stacked * small.basis().columns;
  Rng rng(50);
  double worst_ratio = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    Vec f = oracle::random_vec(64, rng, 40.0);
    BlockSignal block;
    block.values = f;
    block.block_side = 8;
    const auto result = small.solve(block);
    const double admm = small.objective(result.alpha, f);
    Rng oracle_rng(trial);
    const double reference =
        oracle::l1_composite_min(small.basis().columns, dp, f, diffop.stacked * f, 2.0, 1.0,
                                 20000, oracle_rng);
    worst_ratio = std::max(worst_ratio, std::abs(admm - reference) / reference);
  }
  crit.check(worst_ratio <= 0.005, fmt("worst oracle gap = %.4f%%", 100.0 * worst_ratio));

  // Loss settles below 1e-4 relative change within the default 50 iterations.
  const SdSolver reference(make_dct2d(64, 10), DifferenceOperator::make(64), SdConfig{});
  bool settled_all = true;
  double sd_precision = 0.0, ransac_precision = 0.0;
  const BasisSet basis64 = make_dct2d(64, 10);
  const int corpus_size = 20;
  for (std::uint64_t seed = 0; seed < corpus_size; ++seed) {
    Rng srng(3000 + seed);
    const SynthBackground bg =
        srng.uniform() < 0.5 ? SynthBackground::Constant : SynthBackground::SmoothDct;
    const double density = srng.uniform(0.1, 0.25);
    const double gap = (srng.uniform() < 0.5 ? 1.0 : -1.0) * srng.uniform(60.0, 130.0);
    const auto scene = synth_text_block(64, bg, 6, density, gap, 4000 + seed);
    const auto result = reference.solve(scene.block);
    bool settled = false;
    for (size_t i = 1; i < result.loss_trace.size(); ++i)
      if (std::abs(result.loss_trace[i] - result.loss_trace[i - 1]) /
              std::max(result.loss_trace[i - 1], 1e-12) <
          1e-4)
        settled = true;
    settled_all = settled_all && settled;

    const Scores sd_scores = score_mask(mask_of(result.mask, 64), scene.truth);
    RansacConfig rc;
    rc.rng_seed = seed;
    const FitResult rf = ransac_segment(scene.block, basis64, rc);
    MaskImage rmask(64, 64);
    for (int c = 0; c < 64; ++c)
      for (int r = 0; r < 64; ++r) rmask.at(r, c) = !rf.inlier_mask[r + c * 64];
    sd_precision += sd_scores.precision;
    ransac_precision += score_mask(rmask, scene.truth).precision;
  }
  sd_precision /= corpus_size;
  ransac_precision /= corpus_size;
  crit.check(settled_all, "relative loss change stayed above 1e-4 within 50 iterations");
  crit.check(sd_precision >= ransac_precision,
             fmt("SD precision %.4f < RANSAC precision %.4f", sd_precision, ransac_precision));
  crit.check(true, fmt("oracle gap %.3f%%, precision SD %.4f vs RANSAC %.4f",
                       100.0 * worst_ratio, sd_precision, ransac_precision));
}

void criterion6_pipeline() {
  Criterion crit(6, "quadtree pipeline");
  // Partition property: every pixel painted exactly once on a mixed scene.
  {
    Rng rng(60);
    BlockSignal block;
    block.block_side = 64;
    block.values.resize(64 * 64);
    for (int c = 0; c < 64; ++c)
      for (int r = 0; r < 64; ++r) {
        const bool first = (c < 32) == (r < 32);
        block.values[r + c * 64] = (first ? 70.0 : 210.0) + rng.index(3) - 1.0;
      }
    PipelineConfig cfg;
    cfg.seed = 1;
    PipelineContext ctx(cfg);
    const QuadtreeNode root = segment_block(block, ctx);
    std::vector<std::uint8_t> canvas(64 * 64, 255);
    root.paint(canvas, 64, 0, 0);
    bool covered = true;
    for (auto v : canvas) covered = covered && v != 255;
    crit.check(covered, "a pixel was left unlabeled");
  }

  // Two flat backgrounds in one block: recursion rescues the segmentation.
  double f1_split = 0.0, f1_flat = 0.0;
  {
    Rng rng(77);
    BlockSignal block;
    block.block_side = 64;
    block.values.resize(64 * 64);
    MaskImage truth(64, 64);
    for (int c = 0; c < 64; ++c)
      for (int r = 0; r < 64; ++r) {
        const bool first = (c < 32) == (r < 32);
        block.values[r + c * 64] = (first ? 70.0 : 210.0) + rng.index(3) - 1.0;
      }
    for (int stroke = 0; stroke < 10; ++stroke) {
      const int c0 = 3 + rng.index(58);
      const int r0 = 3 + rng.index(46);
      const int len = 8 + rng.index(10);
      for (int t = 0; t < len && r0 + t < 64; ++t) {
        truth.at(r0 + t, c0) = 1;
        const bool first = (c0 < 32) == ((r0 + t) < 32);
        block.values[(r0 + t) + c0 * 64] = (first ? 150.0 : 130.0) + rng.index(3) - 1.0;
      }
    }
    PipelineConfig cfg;
    cfg.seed = 3;
    PipelineContext ctx(cfg);
    const QuadtreeNode root = segment_block(block, ctx);
    std::vector<std::uint8_t> canvas(64 * 64, 0);
    root.paint(canvas, 64, 0, 0);
    f1_split = score_mask(mask_of(canvas, 64), truth).f1;

    PipelineConfig flat_cfg = cfg;
    flat_cfg.allow_split = false;
    PipelineContext flat_ctx(flat_cfg);
    const QuadtreeNode flat = segment_block(block, flat_ctx);
    std::vector<std::uint8_t> flat_canvas(64 * 64, 0);
    flat.paint(flat_canvas, 64, 0, 0);
    f1_flat = score_mask(mask_of(flat_canvas, 64), truth).f1;
  }
  crit.check(f1_split >= 0.9, fmt("recursive F1 = %.3f (need >= 0.9)", f1_split));
  crit.check(f1_flat < 0.7, fmt("non-recursive F1 = %.3f (need < 0.7)", f1_flat));
  crit.check(true, fmt("F1 with recursion %.3f, without %.3f", f1_split, f1_flat));
}

void criterion7_subspacelearn() {
  Criterion crit(7, "robust subspace learning");
  const int side = 8, dim = 5;
  const auto make_subspace = [&](std::uint64_t seed) {
    Rng rng(seed);
    const Mat pool = make_dct2d(side, 12).columns;
    return orthonormal_columns(pool * oracle::random_mat(12, dim, rng));
  };
  const auto projector_gap = [](const Mat& a, const Mat& b) {
    return (a * a.transpose() - b * b.transpose()).cwiseAbs().maxCoeff();
  };
  SlConfig cfg;
  cfg.subspace_dim = dim;
  cfg.lambda1 = 1e-4;
  cfg.lambda2 = 0.005;
  cfg.lambda3 = 0.01;
  cfg.outer_iters = 120;
  cfg.rel_tol = 1e-9;

  // Data at unit scale keeps the objective around one, so the absolute
  // 1e-9 monotonicity slack sits far above arithmetic noise.
  const auto make_samples = [&](const Mat& subspace, int count, double outlier_fraction,
                                std::uint64_t seed) {
    Rng rng(seed);
    std::vector<Vec> samples;
    for (int i = 0; i < count; ++i) {
      Vec coef(dim);
      for (int j = 0; j < dim; ++j) coef[j] = rng.normal(0.0, 0.1 / (1.0 + 0.3 * j));
      Vec x = subspace * coef;
      if (rng.uniform() < outlier_fraction) {
        const int size = 2 + rng.index(3);
        const int r0 = rng.index(side - size), c0 = rng.index(side - size);
        const double level = rng.uniform(0.1, 0.2);
        for (int c = c0; c < c0 + size; ++c)
          for (int r = r0; r < r0 + size; ++r) x[r + c * side] += level;
      }
      samples.push_back(std::move(x));
    }
    return samples;
  };

  const Mat truth = make_subspace(71);
  const auto clean = make_samples(truth, 200, 0.0, 72);
  const LearnedSubspace clean_learned = sl_train(clean, side, cfg);
  const double clean_gap = projector_gap(clean_learned.basis.columns, truth);
  crit.check(clean_gap < 1e-3, fmt("clean projector gap = %.2e (need < 1e-3)", clean_gap));

  const auto corrupted = make_samples(truth, 200, 0.10, 73);
  const LearnedSubspace robust = sl_train(corrupted, side, cfg);
  const double robust_gap = projector_gap(robust.basis.columns, truth);
  Mat data(side * side, corrupted.size());
  for (size_t i = 0; i < corrupted.size(); ++i) data.col(i) = corrupted[i];
  const double pca_gap = projector_gap(oracle::pca_subspace(data, dim), truth);
  crit.check(robust_gap < 1e-2, fmt("corrupted projector gap = %.2e (need < 1e-2)", robust_gap));
  crit.check(pca_gap >= 5.0 * robust_gap,
             fmt("pca gap %.2e not 5x worse than robust %.2e", pca_gap, robust_gap));

  // The alternating steps themselves must never increase the objective; the
  // orthonormality re-projection between iterations is the one move allowed
  // to perturb it, so each pre-projection value is compared against the
  // previous iteration's post-projection start.
  const auto monotone_steps = [](const LearnedSubspace& learned) {
    for (size_t i = 0; i < learned.loss_trace.size(); ++i) {
      const double start = i == 0 ? std::numeric_limits<double>::infinity()
                                  : learned.loss_post_projection[i - 1];
      if (learned.loss_trace[i] > start + 1e-9) return false;
    }
    return true;
  };
  const bool monotone = monotone_steps(robust) && monotone_steps(clean_learned);
  crit.check(monotone, "an alternating step increased the loss beyond the 1e-9 slack");
  crit.check(true, fmt("gaps: clean %.1e, corrupted %.1e, pca %.1e", clean_gap, robust_gap,
                       pca_gap));
}

void criterion8_masked() {
  Criterion crit(8, "masked decomposition");
  const BasisSet p1 = sinusoid_subspace_1d(256, 10);
  const BasisSet p2 = hadamard_subspace_1d(256, 10);
  MdConfig cfg;
  cfg.basis1 = p1;
  cfg.basis2 = p2;
  cfg.k1 = cfg.k2 = 10;
  cfg.lambda1 = 0.02;
  cfg.lambda2 = 0.5;
  cfg.max_iters = 50;
  cfg.rel_tol = 1e-8;
  cfg.init = MdInit::LsfError;

  int exact = 0;
  double worst_component_rmse = 0.0;
  int agree_instances = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const Overlaid1d inst = make_overlaid_1d(p1, p2, 1000 + seed);
    cfg.seed = seed;
    cfg.init = MdInit::LsfError;
    const MaskedResult result = md_solve(inst.x, cfg);
    const bool recovered = result.w_binary == inst.mask;
    if (recovered) {
      ++exact;
      double err = 0.0;
      for (int i = 0; i < 256; ++i) {
        const double d = inst.mask[i] ? result.component2[i] - inst.component2[i]
                                      : result.component1[i] - inst.component1[i];
        err += d * d;
      }
      worst_component_rmse = std::max(worst_component_rmse, std::sqrt(err / 256.0));
    }

    // All five initialization schemes agree on at least 90% of the pixels.
    std::vector<std::vector<std::uint8_t>> masks;
    for (MdInit scheme : {MdInit::Zeros, MdInit::Half, MdInit::Gaussian, MdInit::Uniform,
                          MdInit::LsfError}) {
      cfg.init = scheme;
      masks.push_back(md_solve(inst.x, cfg).w_binary);
    }
    bool agree = true;
    for (size_t k = 1; k < masks.size(); ++k) {
      int same = 0;
      for (int i = 0; i < 256; ++i) same += masks[k][i] == masks[0][i];
      agree = agree && same >= static_cast<int>(0.9 * 256);
    }
    agree_instances += agree;
  }
  crit.check(exact >= 95, fmt("exact mask recovery on %.0f/100 (need >= 95)", exact));
  crit.check(worst_component_rmse < 1e-3,
             fmt("worst component RMSE on recovered instances = %.2e", worst_component_rmse));
  crit.check(agree_instances == 100,
             fmt("initialization agreement held on %.0f/100 instances",
                 static_cast<double>(agree_instances)));

  // The relative-loss-reduction claim, checked in its native image regime.
  MdConfig image_cfg;
  image_cfg.basis1 = make_dct2d(64, 40);
  image_cfg.basis2 = make_hadamard(4096, 8);
  image_cfg.k1 = 40;
  image_cfg.k2 = 8;
  image_cfg.lambda1 = 10.0;
  image_cfg.lambda2 = 0.2;
  image_cfg.max_iters = 10;
  image_cfg.rel_tol = 0.0;
  image_cfg.init = MdInit::LsfError;
  bool converged_fast = true;
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    const auto scene = synth_overlay_block(64, 6, 0.2, 60.0, seed);
    image_cfg.seed = seed;
    const MaskedResult result = md_solve(scene.block, image_cfg);
    bool reached = false;
    for (size_t i = 1; i < result.loss_trace.size(); ++i)
      if (std::abs(result.loss_trace[i] - result.loss_trace[i - 1]) /
              std::max(result.loss_trace[i - 1], 1e-12) <
          1e-6)
        reached = true;
    converged_fast = converged_fast && reached;
  }
  crit.check(converged_fast, "relative loss reduction missed 1e-6 within 10 iterations");
  crit.check(true, fmt("exact %.0f/100, component RMSE %.1e", exact, worst_component_rmse));
}

void criterion9_maskedrpca() {
  Criterion crit(9, "masked sparse plus low-rank");
  double worst_f1 = 1.0, worst_lerr = 0.0, worst_feas = 0.0;
  bool in_box = true;
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    Rng rng(900 + seed);
    const int rows = 40, cols = 30;
    Mat u(rows, 2), v(cols, 2);
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < 2; ++j) u(i, j) = rng.normal();
    for (int i = 0; i < cols; ++i)
      for (int j = 0; j < 2; ++j) v(i, j) = rng.normal();
    const Mat low = u * v.transpose();
    const double lmax = low.cwiseAbs().maxCoeff();
    Mat truth_w = Mat::Zero(rows, cols), truth_s = Mat::Zero(rows, cols);
    int placed = 0;
    while (placed < 60) {
      const int r = rng.index(4) * 10;
      const int c = rng.index(cols);
      if (truth_w(r, c) != 0.0) continue;
      truth_w(r, c) = 1.0;
      truth_s(r, c) = (rng.uniform() < 0.5 ? 1.0 : -1.0) * rng.uniform(5.0, 8.0) * lmax;
      ++placed;
    }
    const Mat x = (1.0 - truth_w.array()).matrix().cwiseProduct(low) +
                  truth_w.cwiseProduct(truth_s);
    const MrResult result = mr_solve(x, MrConfig{});
    int tp = 0, fp = 0, fn = 0;
    for (int j = 0; j < cols; ++j)
      for (int i = 0; i < rows; ++i) {
        tp += result.w_binary(i, j) != 0 && truth_w(i, j) != 0;
        fp += result.w_binary(i, j) != 0 && truth_w(i, j) == 0;
        fn += result.w_binary(i, j) == 0 && truth_w(i, j) != 0;
      }
    worst_f1 = std::min(worst_f1, 2.0 * tp / std::max(1, 2 * tp + fp + fn));
    worst_lerr = std::max(worst_lerr, (result.low_rank - low).norm() / low.norm());
    const Mat recon =
        (1.0 - result.w_continuous.array()).matrix().cwiseProduct(result.low_rank) +
        result.w_continuous.cwiseProduct(result.sparse);
    worst_feas = std::max(worst_feas, (x - recon).norm() / x.norm());
    in_box = in_box && result.w_continuous.minCoeff() >= 0.0 &&
             result.w_continuous.maxCoeff() <= 1.0;
  }
  crit.check(worst_f1 >= 0.9, fmt("worst support F1 = %.3f (need >= 0.9)", worst_f1));
  crit.check(worst_lerr <= 0.05, fmt("worst relative L error = %.4f (need <= 0.05)", worst_lerr));
  crit.check(worst_feas <= 1e-2, fmt("worst feasibility residual = %.2e", worst_feas));
  crit.check(in_box, "W left the [0,1] box");
  crit.check(true, fmt("F1 >= %.3f, L err <= %.4f, feas <= %.1e", worst_f1, worst_lerr,
                       worst_feas));
}

void criterion10_motion() {
  Criterion crit(10, "motion segmentation");
  const auto gentle = [](std::uint64_t seed) {
    Rng rng(seed);
    Vec a(8);
    a << rng.uniform(-2.0, 2.0), 1.0 + rng.uniform(-0.02, 0.02), rng.uniform(-0.02, 0.02),
        rng.uniform(-2.0, 2.0), rng.uniform(-0.02, 0.02), 1.0 + rng.uniform(-0.02, 0.02),
        rng.uniform(-1e-4, 1e-4), rng.uniform(-1e-4, 1e-4);
    return a;
  };
  const auto iou = [](const std::vector<std::uint8_t>& a, const std::vector<std::uint8_t>& b) {
    int inter = 0, uni = 0;
    for (size_t i = 0; i < a.size(); ++i) {
      inter += a[i] && b[i];
      uni += a[i] || b[i];
    }
    return uni == 0 ? 1.0 : static_cast<double>(inter) / uni;
  };

  // Clean recovery.
  double worst_clean = 0.0;
  for (std::uint64_t seed = 100; seed < 103; ++seed) {
    const Vec a = gentle(seed);
    const FlowField flow = homography_flow(a, 28, 36);
    const Vec fit = fit_global_lsq(build_system(flow));
    worst_clean = std::max(worst_clean, (fit - a).norm() / a.norm());
    const MotionSegConfig cfg;
    const MotionSegResult masked = motion_masked_segment(flow, cfg);
    worst_clean = std::max(worst_clean, (masked.a - a).norm() / a.norm());
  }
  crit.check(worst_clean < 1e-4, fmt("clean-parameter error = %.2e (need < 1e-4)", worst_clean));

  // Rectangle scenes: IoU and the baseline comparison.
  double worst_iou = 1.0;
  bool beats_baseline = true;
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    Rng rng(700 + seed);
    const Vec a = gentle(800 + seed);
    const int rows = 32, cols = 40;
    FlowField flow = homography_flow(a, rows, cols);
    const double fraction = seed < 4 ? 0.12 : 0.22;
    const int h = std::max(2, static_cast<int>(rows * std::sqrt(fraction)));
    const int w = std::max(2, static_cast<int>(cols * std::sqrt(fraction)));
    const int r0 = rng.index(rows - h), c0 = rng.index(cols - w);
    const double du = rng.uniform(4.0, 8.0) * (rng.uniform() < 0.5 ? 1.0 : -1.0);
    const double dv = rng.uniform(4.0, 8.0) * (rng.uniform() < 0.5 ? 1.0 : -1.0);
    std::vector<std::uint8_t> truth(rows * cols, 0);
    for (int c = c0; c < c0 + w; ++c)
      for (int r = r0; r < r0 + h; ++r) {
        flow.u(r, c) = du;
        flow.v(r, c) = dv;
        truth[r + c * rows] = 1;
      }
    const MotionSegConfig cfg;
    const MotionSegResult masked = motion_masked_segment(flow, cfg);
    const double masked_iou = iou(masked.w_binary, truth);
    worst_iou = std::min(worst_iou, masked_iou);
    const double area = static_cast<double>(h * w) / (rows * cols);
    if (area >= 0.15) {
      double best_baseline = 0.0;
      for (double threshold : {0.5, 1.0, 2.0})
        best_baseline =
            std::max(best_baseline, iou(lsq_threshold_baseline(flow, threshold), truth));
      beats_baseline = beats_baseline && masked_iou > best_baseline;
    }
  }
  crit.check(worst_iou >= 0.9, fmt("worst rectangle IoU = %.3f (need >= 0.9)", worst_iou));
  crit.check(beats_baseline, "thresholded least squares matched the masked fit");
  crit.check(true, fmt("clean err %.1e, worst IoU %.3f", worst_clean, worst_iou));
}

void criterion11_cli_determinism() {
  Criterion crit(11, "CLI byte determinism");
#ifndef SDX_CLI_PATH
  crit.check(false, "CLI path not configured");
#else
  const std::string cli = SDX_CLI_PATH;
  const std::string dir = "/tmp/sdx_acceptance";
  std::system(("rm -rf " + dir + " && mkdir -p " + dir).c_str());

  // Input image.
  const auto corpus = make_synthetic_corpus(1, 128, 5);
  save_pgm(corpus[0].image.luma, dir + "/in.pgm");

  const auto read_file = [](const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
  };
  const auto run_twice = [&](const std::string& args, const std::vector<std::string>& outputs) {
    for (int run = 0; run < 2; ++run) {
      const std::string suffix = run == 0 ? "_a" : "_b";
      std::string cmd = cli + " " + args;
      size_t pos;
      while ((pos = cmd.find("{}")) != std::string::npos) cmd.replace(pos, 2, suffix);
      if (std::system((cmd + " > /dev/null 2>&1").c_str()) != 0) return false;
    }
    for (const auto& out : outputs) {
      std::string a = out, b = out;
      size_t pos;
      while ((pos = a.find("{}")) != std::string::npos) a.replace(pos, 2, "_a");
      while ((pos = b.find("{}")) != std::string::npos) b.replace(pos, 2, "_b");
      const std::string da = read_file(a), db = read_file(b);
      if (da.empty() || da != db) return false;
    }
    return true;
  };

  crit.check(run_twice("segment --core ransac --seed 7 --jobs 2 " + dir + "/in.pgm -o " + dir +
                           "/mask{}.pgm --json " + dir + "/diag{}.json",
                       {dir + "/mask{}.pgm", dir + "/diag{}.json"}),
             "segment --core ransac outputs differed");
  crit.check(run_twice("segment --core sd --seed 3 " + dir + "/in.pgm -o " + dir +
                           "/sdmask{}.pgm",
                       {dir + "/sdmask{}.pgm"}),
             "segment --core sd outputs differed");
  crit.check(run_twice("bench --corpus synth --items 1 --sheet 64 --methods ransac --seed 11 "
                       "-o " + dir + "/table{}.csv",
                       {dir + "/table{}.csv"}),
             "bench outputs differed");
  crit.check(true, "all rerun outputs byte-identical");
#endif
}

}  // namespace

int main() {
  const auto t0 = std::chrono::steady_clock::now();
  criterion1_bases();
  criterion2_prox_oracles();
  criterion3_residual_monotonicity();
  criterion4_ransac();
  criterion5_sd();
  criterion6_pipeline();
  criterion7_subspacelearn();
  criterion8_masked();
  criterion9_maskedrpca();
  criterion10_motion();
  criterion11_cli_determinism();
  const double total =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::printf("%s -- %d criterion(s) failed, total %.1fs\n",
              failures == 0 ? "ACCEPTANCE PASS" : "ACCEPTANCE FAIL", failures, total);
  return failures == 0 ? 0 : 1;
}
