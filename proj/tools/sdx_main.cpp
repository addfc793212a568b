// sdx: subspace-based signal/image decomposition toolbox.
//
// Subcommands: segment, ransac, sd, learn, masked, mrpca, motionseg, bench.
// Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

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

using json = nlohmann::ordered_json;
using namespace sdx;

namespace {

Vec load_signal(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open signal file: " + path);
  std::vector<double> values;
  double v = 0.0;
  while (in >> v) values.push_back(v);
  if (values.empty()) throw DataError("empty signal file: " + path);
  return Eigen::Map<const Vec>(values.data(), static_cast<Eigen::Index>(values.size()));
}

void save_signal(const Vec& signal, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open file for writing: " + path);
  out.precision(17);
  for (Eigen::Index i = 0; i < signal.size(); ++i) out << signal[i] << "\n";
  if (!out) throw DataError("write failed: " + path);
}

Mat load_matrix_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open matrix file: " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    for (char& ch : line)
      if (ch == ',' || ch == ';' || ch == '\t') ch = ' ';
    std::istringstream ls(line);
    std::vector<double> row;
    double v = 0.0;
    while (ls >> v) row.push_back(v);
    if (row.empty()) continue;
    if (!rows.empty() && row.size() != rows.front().size())
      throw DataError("ragged rows in matrix file: " + path);
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw DataError("empty matrix file: " + path);
  Mat m(rows.size(), rows.front().size());
  for (size_t r = 0; r < rows.size(); ++r)
    for (size_t c = 0; c < rows.front().size(); ++c) m(r, c) = rows[r][c];
  return m;
}

void save_matrix_csv(const Mat& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open file for writing: " + path);
  out.precision(17);
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) out << (c ? "," : "") << m(r, c);
    out << "\n";
  }
  if (!out) throw DataError("write failed: " + path);
}

void write_text(const std::string& text, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open file for writing: " + path);
  out << text;
  if (!out) throw DataError("write failed: " + path);
}

BlockSignal block_from_image(const Image& image) {
  BlockSignal block;
  const int side = image.rows();
  if (image.rows() != image.cols())
    throw DataError("single-block commands need a square image");
  block.block_side = side;
  block.values.resize(side * side);
  for (int c = 0; c < side; ++c)
    for (int r = 0; r < side; ++r) block.values[r + c * side] = image.luma(r, c);
  if (image.has_chroma()) {
    Vec cb(side * side), cr(side * side);
    for (int c = 0; c < side; ++c)
      for (int r = 0; r < side; ++r) {
        cb[r + c * side] = (*image.cb)(r, c);
        cr[r + c * side] = (*image.cr)(r, c);
      }
    block.chroma = {cb, cr};
  }
  return block;
}

MaskImage mask_of_block(const std::vector<std::uint8_t>& labels, int side) {
  return mask_from_block(labels, side);
}

BasisSet named_basis_1d(const std::string& name, int n, int k) {
  if (name == "sinusoid") return sinusoid_subspace_1d(n, k);
  if (name == "hadamard") return hadamard_subspace_1d(n, k);
  if (name == "hadamard-low") return make_hadamard(n, k);
  throw ParameterError("unknown 1-D basis: " + name +
                       " (want sinusoid|hadamard|hadamard-low)");
}

struct SegmentFlags {
  std::string input, output, json_path;
  std::string core = "ransac";
  PipelineConfig cfg;
  bool no_quadtree = false;
  bool timing = false;
  bool machine_json = false;
};

void add_pipeline_flags(CLI::App* cmd, SegmentFlags& flags) {
  cmd->add_option("input", flags.input, "input image (PGM/PPM)")->required();
  cmd->add_option("-o,--output", flags.output, "output mask (PGM)")->required();
  cmd->add_option("--core", flags.core, "core solver: ransac|sd")
      ->check(CLI::IsMember({"ransac", "sd"}));
  cmd->add_option("--json", flags.json_path, "write per-block diagnostics JSON here");
  cmd->add_option("--max-block", flags.cfg.max_block, "largest block size");
  cmd->add_option("--min-block", flags.cfg.min_block, "smallest block size");
  cmd->add_option("--eps1", flags.cfg.eps1, "pure-background std threshold");
  cmd->add_option("--eps-in", flags.cfg.inlier_threshold, "inlier distortion threshold");
  cmd->add_option("--eps2", flags.cfg.eps2, "quadtree inlier-ratio threshold");
  cmd->add_option("--max-colors", flags.cfg.max_colors, "text-over-constant color bound");
  cmd->add_option("--min-range", flags.cfg.min_range, "text-over-constant range bound");
  cmd->add_option("--bases", flags.cfg.num_bases, "number of smooth bases K");
  cmd->add_option("--ransac-iters", flags.cfg.ransac.max_iters, "RANSAC iteration cap");
  cmd->add_option("--early-stop", flags.cfg.ransac.early_stop_ratio,
                  "RANSAC early-stop inlier ratio");
  cmd->add_option("--lambda1", flags.cfg.sd.lambda1, "SD sparsity weight");
  cmd->add_option("--lambda2", flags.cfg.sd.lambda2, "SD total-variation weight");
  cmd->add_option("--admm-iters", flags.cfg.sd.max_iters, "SD ADMM iteration cap");
  cmd->add_option("--seed", flags.cfg.seed, "random seed");
  cmd->add_option("--jobs", flags.cfg.jobs, "worker threads (0 = all cores)");
  cmd->add_flag("--no-quadtree", flags.no_quadtree, "disable quadtree splitting");
  cmd->add_flag("--timing", flags.timing, "include wall times in diagnostics");
  cmd->set_config("--config", "", "key=value config file (flags win)");
}

json diagnostics_json(const SegmentationOutput& out, const SegmentFlags& flags) {
  json blocks = json::array();
  for (const auto& b : out.blocks) {
    json item{{"row", b.row},
              {"col", b.col},
              {"side", b.side},
              {"class", to_string(b.classification)},
              {"inlier_ratio", b.inlier_ratio},
              {"leaves", b.leaves},
              {"iterations", b.iterations}};
    if (flags.timing) item["wall_ms"] = b.wall_ms;
    blocks.push_back(item);
  }
  json doc{{"core", flags.core},
           {"seed", flags.cfg.seed},
           {"foreground_pixels", out.mask.count_foreground()},
           {"blocks", blocks}};
  if (flags.timing) doc["wall_ms"] = out.wall_ms;
  return doc;
}

int run_segment(const SegmentFlags& flags_in) {
  SegmentFlags flags = flags_in;
  flags.cfg.core = flags.core == "sd" ? CoreSolver::Sd : CoreSolver::Ransac;
  flags.cfg.allow_split = !flags.no_quadtree;
  flags.cfg.ransac.num_bases = flags.cfg.num_bases;
  flags.cfg.ransac.inlier_threshold = flags.cfg.inlier_threshold;
  flags.cfg.sd.inlier_threshold = flags.cfg.inlier_threshold;

  const Image image = load_image(flags.input);
  const SegmentationOutput out = segment_image(image, flags.cfg);
  save_mask(out.mask, flags.output);
  if (!flags.json_path.empty())
    write_text(diagnostics_json(out, flags).dump(2) + "\n", flags.json_path);
  return 0;
}

int run_single_block(const SegmentFlags& flags_in, bool use_sd) {
  SegmentFlags flags = flags_in;
  const Image image = load_image(flags.input);
  const BlockSignal block = block_from_image(image);
  const int side = block.block_side;

  json doc;
  std::vector<std::uint8_t> fg(block.size(), 0);
  if (use_sd) {
    SdConfig cfg = flags.cfg.sd;
    cfg.inlier_threshold = flags.cfg.inlier_threshold;
    const SdSolver solver(make_dct2d(side, std::min(flags.cfg.num_bases, side * side)),
                          DifferenceOperator::make(side), cfg);
    const auto result = solver.solve(block);
    fg = result.mask;
    doc["alpha"] = std::vector<double>(result.alpha.data(),
                                       result.alpha.data() + result.alpha.size());
    doc["iterations"] = result.iterations;
    doc["converged"] = result.converged;
    doc["loss_trace"] = result.loss_trace;
  } else {
    RansacConfig cfg = flags.cfg.ransac;
    cfg.num_bases = flags.cfg.num_bases;
    cfg.inlier_threshold = flags.cfg.inlier_threshold;
    cfg.rng_seed = flags.cfg.seed;
    const auto fit =
        ransac_segment(block, make_dct2d(side, std::min(cfg.num_bases, side * side)), cfg);
    for (int i = 0; i < block.size(); ++i) fg[i] = !fit.inlier_mask[i];
    doc["alpha"] = std::vector<double>(fit.alpha.data(), fit.alpha.data() + fit.alpha.size());
    doc["inlier_ratio"] = fit.inlier_ratio;
  }
  save_mask(mask_of_block(fg, side), flags.output);
  doc["seed"] = flags.cfg.seed;
  if (!flags.json_path.empty()) write_text(doc.dump(2) + "\n", flags.json_path);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"subspace-based signal and image decomposition toolbox"};
  app.require_subcommand(1);

  // ---- segment / ransac / sd -------------------------------------------
  SegmentFlags seg_flags, ransac_flags, sd_flags;
  auto* segment_cmd =
      app.add_subcommand("segment", "full-image foreground/background segmentation");
  add_pipeline_flags(segment_cmd, seg_flags);
  auto* ransac_cmd = app.add_subcommand("ransac", "consensus fit of one square block");
  add_pipeline_flags(ransac_cmd, ransac_flags);
  auto* sd_cmd = app.add_subcommand("sd", "sparse decomposition of one square block");
  add_pipeline_flags(sd_cmd, sd_flags);

  // ---- learn -------------------------------------------------------------
  struct {
    std::vector<std::string> images;
    std::string output;
    int dim = 20;
    int patch = 32;
    int stride = 5;
    int synthetic = 0;
    int iters = 50;
    double lambda1 = 0.5, lambda2 = 1.0, lambda3 = 2.0;
    std::uint64_t seed = 0;
  } learn_flags;
  auto* learn_cmd = app.add_subcommand("learn", "robust subspace learning from patches");
  learn_cmd->add_option("--images", learn_flags.images, "training images (PGM/PPM)");
  learn_cmd->add_option("-o,--output", learn_flags.output, "output subspace file")->required();
  learn_cmd->add_option("--dim", learn_flags.dim, "subspace dimension");
  learn_cmd->add_option("--patch", learn_flags.patch, "patch side");
  learn_cmd->add_option("--stride", learn_flags.stride, "patch stride");
  learn_cmd->add_option("--synthetic", learn_flags.synthetic,
                        "train on this many synthetic patches instead of images");
  learn_cmd->add_option("--iters", learn_flags.iters, "outer iterations");
  learn_cmd->add_option("--lambda1", learn_flags.lambda1, "gradient weight");
  learn_cmd->add_option("--lambda2", learn_flags.lambda2, "sparsity weight");
  learn_cmd->add_option("--lambda3", learn_flags.lambda3, "group weight");
  learn_cmd->add_option("--seed", learn_flags.seed, "random seed");

  // ---- masked --------------------------------------------------------------
  struct {
    std::string mode = "2d";
    std::string input, output, json_path, components;
    std::string basis1 = "sinusoid", basis2 = "hadamard";
    int dim1 = 10, dim2 = 10;
    int k1 = 40, k2 = 8;
    double lambda1 = 10.0, lambda2 = 0.2;
    double rho1 = 0.0, rho2 = 0.0;
    double tol = 1e-6;
    int iters = 10;
    std::string init = "zeros";
    std::string binarize = "end";
    double threshold = 0.5;
    std::uint64_t seed = 0;
  } md_flags;
  auto* masked_cmd = app.add_subcommand("masked", "masked two-subspace decomposition");
  masked_cmd->add_option("--mode", md_flags.mode, "1d or 2d")
      ->check(CLI::IsMember({"1d", "2d"}));
  masked_cmd->add_option("input", md_flags.input, "image (2d) or signal file (1d)")->required();
  masked_cmd->add_option("-o,--output", md_flags.output, "output mask (PGM or text)")
      ->required();
  masked_cmd->add_option("--json", md_flags.json_path, "write diagnostics JSON here");
  masked_cmd->add_option("--components", md_flags.components,
                         "write per-component signals with this path prefix");
  masked_cmd->add_option("--basis1", md_flags.basis1, "1d component-1 basis");
  masked_cmd->add_option("--basis2", md_flags.basis2, "1d component-2 basis");
  masked_cmd->add_option("--dim1", md_flags.dim1, "1d component-1 dimension");
  masked_cmd->add_option("--dim2", md_flags.dim2, "1d component-2 dimension");
  masked_cmd->add_option("--k1", md_flags.k1, "sparsity cap on alpha1");
  masked_cmd->add_option("--k2", md_flags.k2, "sparsity cap on alpha2");
  masked_cmd->add_option("--lambda1", md_flags.lambda1, "mask l1 weight");
  masked_cmd->add_option("--lambda2", md_flags.lambda2, "mask TV weight");
  masked_cmd->add_option("--rho1", md_flags.rho1, "l1 split penalty (0 = auto)");
  masked_cmd->add_option("--rho2", md_flags.rho2, "TV split penalty (0 = auto)");
  masked_cmd->add_option("--tol", md_flags.tol, "relative-loss early stop");
  masked_cmd->add_option("--iters", md_flags.iters, "iteration cap");
  masked_cmd->add_option("--init", md_flags.init, "zeros|half|gaussian|uniform|lsf")
      ->check(CLI::IsMember({"zeros", "half", "gaussian", "uniform", "lsf"}));
  masked_cmd->add_option("--binarize", md_flags.binarize, "end|each")
      ->check(CLI::IsMember({"end", "each"}));
  masked_cmd->add_option("--threshold", md_flags.threshold, "mask binarization threshold");
  masked_cmd->add_option("--seed", md_flags.seed, "random seed");

  // ---- mrpca ----------------------------------------------------------------
  struct {
    std::string input, output_prefix;
    MrConfig cfg;
  } mr_flags;
  auto* mrpca_cmd = app.add_subcommand("mrpca", "masked sparse plus low-rank decomposition");
  mrpca_cmd->add_option("input", mr_flags.input, "matrix CSV (rows = pixels)")->required();
  mrpca_cmd->add_option("-o,--output", mr_flags.output_prefix,
                        "output prefix (writes <p>_L.csv, <p>_S.csv, <p>_W.csv)")
      ->required();
  mrpca_cmd->add_option("--lambda1", mr_flags.cfg.lambda1, "sparsity weight");
  mrpca_cmd->add_option("--lambda2", mr_flags.cfg.lambda2, "row-group weight");
  mrpca_cmd->add_option("--rho", mr_flags.cfg.rho, "augmented penalty");
  mrpca_cmd->add_option("--rho-l", mr_flags.cfg.rho_l, "L proximal weight (0 = auto)");
  mrpca_cmd->add_option("--rho-s", mr_flags.cfg.rho_s, "S proximal weight (0 = auto)");
  mrpca_cmd->add_option("--rho-w", mr_flags.cfg.rho_w, "W proximal weight (0 = auto)");
  mrpca_cmd->add_option("--iters", mr_flags.cfg.max_iters, "iteration cap");
  mrpca_cmd->add_option("--tol", mr_flags.cfg.rel_tol, "relative-loss early stop");
  mrpca_cmd->add_option("--threshold", mr_flags.cfg.binarize_threshold,
                        "mask binarization threshold");

  // ---- motionseg --------------------------------------------------------------
  struct {
    std::string flow, output, json_path;
    MotionSegConfig cfg;
  } motion_flags;
  auto* motion_cmd = app.add_subcommand("motionseg", "motion-field outlier segmentation");
  motion_cmd->add_option("--flow", motion_flags.flow, "flow field (.flo or CSV)")->required();
  motion_cmd->add_option("-o,--output", motion_flags.output, "output mask (PGM)")->required();
  motion_cmd->add_option("--json", motion_flags.json_path, "write parameters JSON here");
  motion_cmd->add_option("--lambda1", motion_flags.cfg.lambda1, "sparse weight");
  motion_cmd->add_option("--lambda2", motion_flags.cfg.lambda2, "mask l1 weight");
  motion_cmd->add_option("--lambda3", motion_flags.cfg.lambda3, "mask TV weight");
  motion_cmd->add_option("--rho1", motion_flags.cfg.rho1, "l1 split penalty");
  motion_cmd->add_option("--rho2", motion_flags.cfg.rho2, "TV split penalty");
  motion_cmd->add_option("--iters", motion_flags.cfg.max_iters, "iteration cap");
  motion_cmd->add_option("--tol", motion_flags.cfg.rel_tol, "relative-loss early stop");
  motion_cmd->add_option("--threshold", motion_flags.cfg.binarize_threshold,
                         "mask binarization threshold");
  motion_cmd->add_flag("--affine", motion_flags.cfg.affine, "six-parameter affine model");

  // ---- bench --------------------------------------------------------------------
  struct {
    std::string corpus = "synth";
    std::string manifest;
    std::string methods = "ransac,sd";
    std::string output, json_path;
    int items = 4;
    int sheet = 128;
    bool timing = false;
    PipelineConfig cfg;
  } bench_flags;
  auto* bench_cmd = app.add_subcommand("bench", "run the evaluation harness");
  bench_cmd->add_option("--corpus", bench_flags.corpus, "synth or manifest")
      ->check(CLI::IsMember({"synth", "manifest"}));
  bench_cmd->add_option("--manifest", bench_flags.manifest,
                        "corpus manifest (image mask per line)");
  bench_cmd->add_option("--methods", bench_flags.methods, "comma-separated method list");
  bench_cmd->add_option("-o,--output", bench_flags.output, "write CSV table here");
  bench_cmd->add_option("--json", bench_flags.json_path, "write JSON table here");
  bench_cmd->add_option("--items", bench_flags.items, "synthetic corpus size");
  bench_cmd->add_option("--sheet", bench_flags.sheet, "synthetic sheet side");
  bench_cmd->add_option("--seed", bench_flags.cfg.seed, "random seed");
  bench_cmd->add_option("--jobs", bench_flags.cfg.jobs, "worker threads");
  bench_cmd->add_flag("--timing", bench_flags.timing, "include wall times in tables");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;  // help/version exit clean, usage errors exit 1
  }

  try {
    if (segment_cmd->parsed()) return run_segment(seg_flags);
    if (ransac_cmd->parsed()) return run_single_block(ransac_flags, false);
    if (sd_cmd->parsed()) return run_single_block(sd_flags, true);

    if (learn_cmd->parsed()) {
      std::vector<Vec> patches;
      if (learn_flags.synthetic > 0) {
        for (int i = 0; i < learn_flags.synthetic; ++i) {
          const auto synth =
              synth_text_block(learn_flags.patch, SynthBackground::SmoothDct, 6, 0.1, 80.0,
                               learn_flags.seed * 7919 + i);
          patches.push_back(synth.block.values);
        }
      } else {
        if (learn_flags.images.empty())
          throw ParameterError("learn: provide --images or --synthetic");
        for (const auto& path : learn_flags.images) {
          const Image image = load_image(path);
          for (const auto& block :
               extract_blocks(image, learn_flags.patch, learn_flags.stride))
            patches.push_back(block.values);
        }
      }
      SlConfig cfg;
      cfg.subspace_dim = learn_flags.dim;
      cfg.lambda1 = learn_flags.lambda1;
      cfg.lambda2 = learn_flags.lambda2;
      cfg.lambda3 = learn_flags.lambda3;
      cfg.outer_iters = learn_flags.iters;
      cfg.seed = learn_flags.seed;
      const LearnedSubspace learned = sl_train(patches, learn_flags.patch, cfg);
      save_subspace(learned, learn_flags.output);
      std::cerr << "trained on " << patches.size() << " patches, final loss "
                << (learned.loss_trace.empty() ? 0.0 : learned.loss_trace.back()) << "\n";
      return 0;
    }

    if (masked_cmd->parsed()) {
      MdConfig cfg;
      cfg.k1 = md_flags.k1;
      cfg.k2 = md_flags.k2;
      cfg.lambda1 = md_flags.lambda1;
      cfg.lambda2 = md_flags.lambda2;
      cfg.rho1 = md_flags.rho1;
      cfg.rho2 = md_flags.rho2;
      cfg.rel_tol = md_flags.tol;
      cfg.max_iters = md_flags.iters;
      cfg.binarize_threshold = md_flags.threshold;
      cfg.binarize_mode =
          md_flags.binarize == "each" ? BinarizeMode::EachIteration : BinarizeMode::AtEnd;
      cfg.seed = md_flags.seed;
      const std::map<std::string, MdInit> init_names = {{"zeros", MdInit::Zeros},
                                                        {"half", MdInit::Half},
                                                        {"gaussian", MdInit::Gaussian},
                                                        {"uniform", MdInit::Uniform},
                                                        {"lsf", MdInit::LsfError}};
      cfg.init = init_names.at(md_flags.init);

      BlockSignal x;
      if (md_flags.mode == "1d") {
        x.block_side = 0;
        x.values = load_signal(md_flags.input);
        const int n = static_cast<int>(x.values.size());
        cfg.basis1 = named_basis_1d(md_flags.basis1, n, md_flags.dim1);
        cfg.basis2 = named_basis_1d(md_flags.basis2, n, md_flags.dim2);
        cfg.k1 = std::min(cfg.k1, md_flags.dim1);
        cfg.k2 = std::min(cfg.k2, md_flags.dim2);
      } else {
        const Image image = load_image(md_flags.input);
        x = block_from_image(image);
        cfg.basis1 = make_dct2d(x.block_side, std::max(md_flags.k1, md_flags.dim1));
        cfg.basis2 = make_hadamard(x.size(), std::max(md_flags.k2, md_flags.dim2));
      }
      const MaskedResult result = md_solve(x, cfg);

      if (md_flags.mode == "1d") {
        std::ostringstream mask_text;
        for (auto w : result.w_binary) mask_text << static_cast<int>(w) << "\n";
        write_text(mask_text.str(), md_flags.output);
      } else {
        save_mask(mask_of_block(result.w_binary, x.block_side), md_flags.output);
      }
      if (!md_flags.components.empty()) {
        save_signal(result.component1, md_flags.components + "_c1.txt");
        save_signal(result.component2, md_flags.components + "_c2.txt");
        save_signal(result.reconstruction, md_flags.components + "_recon.txt");
      }
      if (!md_flags.json_path.empty()) {
        json doc{{"iterations", result.iterations},
                 {"converged", result.converged},
                 {"loss_trace", result.loss_trace},
                 {"degenerate_system", result.degenerate_system},
                 {"seed", md_flags.seed}};
        write_text(doc.dump(2) + "\n", md_flags.json_path);
      }
      return 0;
    }

    if (mrpca_cmd->parsed()) {
      const Mat x = load_matrix_csv(mr_flags.input);
      const MrResult result = mr_solve(x, mr_flags.cfg);
      save_matrix_csv(result.low_rank, mr_flags.output_prefix + "_L.csv");
      save_matrix_csv(result.sparse, mr_flags.output_prefix + "_S.csv");
      save_matrix_csv(result.w_binary, mr_flags.output_prefix + "_W.csv");
      return 0;
    }

    if (motion_cmd->parsed()) {
      const FlowField flow = load_flow(motion_flags.flow);
      const MotionSegResult result = motion_masked_segment(flow, motion_flags.cfg);
      MaskImage mask(flow.rows, flow.cols);
      for (int c = 0; c < flow.cols; ++c)
        for (int r = 0; r < flow.rows; ++r)
          mask.at(r, c) = result.w_binary[r + c * flow.rows];
      save_mask(mask, motion_flags.output);
      if (!motion_flags.json_path.empty()) {
        json doc{{"a", std::vector<double>(result.a.data(), result.a.data() + 8)},
                 {"iterations", result.iterations},
                 {"converged", result.converged},
                 {"loss_trace", result.loss_trace},
                 {"foreground_pixels", mask.count_foreground()}};
        write_text(doc.dump(2) + "\n", motion_flags.json_path);
      }
      return 0;
    }

    if (bench_cmd->parsed()) {
      std::vector<CorpusItem> corpus;
      if (bench_flags.corpus == "manifest") {
        if (bench_flags.manifest.empty())
          throw ParameterError("bench: --corpus manifest needs --manifest");
        corpus = load_corpus_manifest(bench_flags.manifest);
      } else {
        corpus = make_synthetic_corpus(bench_flags.items, bench_flags.sheet,
                                       bench_flags.cfg.seed);
      }
      std::vector<std::string> methods;
      std::stringstream ss(bench_flags.methods);
      std::string tok;
      while (std::getline(ss, tok, ','))
        if (!tok.empty()) methods.push_back(tok);
      const BenchmarkTable table = run_benchmark(corpus, methods, bench_flags.cfg);
      if (!bench_flags.output.empty())
        write_text(table.to_csv(bench_flags.timing), bench_flags.output);
      if (!bench_flags.json_path.empty())
        write_text(table.to_json(bench_flags.timing), bench_flags.json_path);
      if (bench_flags.output.empty() && bench_flags.json_path.empty())
        std::cout << table.to_csv(bench_flags.timing);
      return 0;
    }
  } catch (const ParameterError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const DegeneracyError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 1;
}
