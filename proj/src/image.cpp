#include "sdx/image.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "sdx/bases.hpp"
#include "sdx/rng.hpp"

namespace sdx {

namespace {

int clamp255(double v) {
  return static_cast<int>(std::clamp(std::lround(v), 0L, 255L));
}

// Reads one PNM header token, skipping whitespace and '#' comments.
std::string pnm_token(std::istream& in) {
  std::string tok;
  int c = in.get();
  while (in) {
    if (c == '#') {
      while (in && c != '\n') c = in.get();
    } else if (!std::isspace(c)) {
      break;
    }
    c = in.get();
  }
  while (in && !std::isspace(c)) {
    tok.push_back(static_cast<char>(c));
    c = in.get();
  }
  return tok;
}

}  // namespace

Image load_image(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open image file: " + path);
  const std::string magic = pnm_token(in);
  if (magic != "P5" && magic != "P6")
    throw DataError("unsupported image format (want binary PGM/PPM): " + path);
  const int cols = std::stoi(pnm_token(in));
  const int rows = std::stoi(pnm_token(in));
  const int maxval = std::stoi(pnm_token(in));
  if (cols < 1 || rows < 1 || maxval != 255)
    throw DataError("bad PNM header in " + path);

  const int channels = magic == "P6" ? 3 : 1;
  std::vector<unsigned char> raw(static_cast<size_t>(rows) * cols * channels);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (static_cast<size_t>(in.gcount()) != raw.size())
    throw DataError("truncated pixel data in " + path);

  Image img;
  img.luma.resize(rows, cols);
  if (channels == 1) {
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) img.luma(r, c) = raw[static_cast<size_t>(r) * cols + c];
    return img;
  }
  img.cb.emplace(rows, cols);
  img.cr.emplace(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      const size_t o = (static_cast<size_t>(r) * cols + c) * 3;
      const double red = raw[o], green = raw[o + 1], blue = raw[o + 2];
      // BT.601 full range.
      img.luma(r, c) = 0.299 * red + 0.587 * green + 0.114 * blue;
      (*img.cb)(r, c) = 128.0 - 0.168735892 * red - 0.331264108 * green + 0.5 * blue;
      (*img.cr)(r, c) = 128.0 + 0.5 * red - 0.418687589 * green - 0.081312411 * blue;
    }
  return img;
}

void save_pgm(const Mat& gray, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open file for writing: " + path);
  out << "P5\n" << gray.cols() << " " << gray.rows() << "\n255\n";
  for (Eigen::Index r = 0; r < gray.rows(); ++r)
    for (Eigen::Index c = 0; c < gray.cols(); ++c)
      out.put(static_cast<char>(clamp255(gray(r, c))));
  if (!out) throw DataError("write failed: " + path);
}

void save_mask(const MaskImage& mask, const std::string& path, MaskFormat format) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open file for writing: " + path);
  if (format == MaskFormat::Pgm) {
    out << "P5\n" << mask.cols << " " << mask.rows << "\n255\n";
    for (int r = 0; r < mask.rows; ++r)
      for (int c = 0; c < mask.cols; ++c)
        out.put(mask.at(r, c) ? static_cast<char>(255) : 0);
  } else {
    out << "P4\n" << mask.cols << " " << mask.rows << "\n";
    for (int r = 0; r < mask.rows; ++r) {
      for (int c = 0; c < mask.cols; c += 8) {
        unsigned char byte = 0;
        for (int b = 0; b < 8 && c + b < mask.cols; ++b)
          if (mask.at(r, c + b)) byte |= static_cast<unsigned char>(0x80 >> b);
        out.put(static_cast<char>(byte));
      }
    }
  }
  if (!out) throw DataError("write failed: " + path);
}

MaskImage load_mask(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open mask file: " + path);
  const std::string magic = pnm_token(in);
  if (magic == "P5") {
    const int cols = std::stoi(pnm_token(in));
    const int rows = std::stoi(pnm_token(in));
    const int maxval = std::stoi(pnm_token(in));
    if (maxval != 255) throw DataError("bad mask header in " + path);
    MaskImage mask(rows, cols);
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) {
        const int v = in.get();
        if (v < 0) throw DataError("truncated mask data in " + path);
        mask.at(r, c) = v >= 128;
      }
    return mask;
  }
  if (magic == "P4") {
    const int cols = std::stoi(pnm_token(in));
    const int rows = std::stoi(pnm_token(in));
    MaskImage mask(rows, cols);
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; c += 8) {
        const int byte = in.get();
        if (byte < 0) throw DataError("truncated mask data in " + path);
        for (int b = 0; b < 8 && c + b < cols; ++b)
          mask.at(r, c + b) = (byte & (0x80 >> b)) != 0;
      }
    return mask;
  }
  throw DataError("unsupported mask format in " + path);
}

std::vector<BlockSignal> extract_blocks(const Image& image, int block_side, int stride) {
  if (block_side < 1 || stride < 1)
    throw ParameterError("extract_blocks: block_side and stride must be positive");
  const int rows = image.rows(), cols = image.cols();
  const auto clampr = [rows](int r) { return std::clamp(r, 0, rows - 1); };
  const auto clampc = [cols](int c) { return std::clamp(c, 0, cols - 1); };

  std::vector<BlockSignal> blocks;
  for (int r0 = 0; r0 < rows; r0 += stride)
    for (int c0 = 0; c0 < cols; c0 += stride) {
      BlockSignal blk;
      blk.block_side = block_side;
      blk.row = r0;
      blk.col = c0;
      blk.values.resize(block_side * block_side);
      if (image.has_chroma())
        blk.chroma = {Vec(block_side * block_side), Vec(block_side * block_side)};
      for (int c = 0; c < block_side; ++c)
        for (int r = 0; r < block_side; ++r) {
          const int rr = clampr(r0 + r), cc = clampc(c0 + c);
          const int i = r + c * block_side;
          blk.values[i] = image.luma(rr, cc);
          if (image.has_chroma()) {
            blk.chroma->first[i] = (*image.cb)(rr, cc);
            blk.chroma->second[i] = (*image.cr)(rr, cc);
          }
        }
      blocks.push_back(std::move(blk));
    }
  return blocks;
}

MaskImage stitch_masks(const std::vector<BlockSignal>& blocks,
                       const std::vector<std::vector<std::uint8_t>>& block_masks,
                       int rows, int cols) {
  if (blocks.size() != block_masks.size())
    throw ParameterError("stitch_masks: block/mask count mismatch");
  MaskImage out(rows, cols);
  for (size_t b = 0; b < blocks.size(); ++b) {
    const auto& blk = blocks[b];
    const int side = blk.block_side;
    if (static_cast<int>(block_masks[b].size()) != side * side)
      throw ParameterError("stitch_masks: mask size mismatch at block " + std::to_string(b));
    for (int c = 0; c < side; ++c)
      for (int r = 0; r < side; ++r) {
        const int rr = blk.row + r, cc = blk.col + c;
        if (rr < rows && cc < cols) out.at(rr, cc) = block_masks[b][r + c * side];
      }
  }
  return out;
}

SynthBlock synth_text_block(int block_side, SynthBackground background, int dct_bases,
                            double text_density, double fg_intensity_gap,
                            std::uint64_t seed) {
  if (text_density < 0.0 || text_density > 0.5)
    throw ParameterError("synth_text_block: text_density must be in [0, 0.5]");
  const int n = block_side * block_side;
  Rng rng(seed);

  Mat bg(block_side, block_side);
  switch (background) {
    case SynthBackground::Constant:
      bg.setConstant(rng.uniform(60.0, 200.0));
      break;
    case SynthBackground::SmoothDct: {
      const int k = std::max(1, dct_bases);
      const BasisSet basis = make_dct2d(block_side, k);
      Vec coef(k);
      coef[0] = rng.uniform(90.0, 170.0) * block_side;  // DC level
      for (int i = 1; i < k; ++i) coef[i] = rng.normal(0.0, 25.0);
      Vec flat = basis.columns * coef;
      bg = Eigen::Map<const Mat>(flat.data(), block_side, block_side);
      break;
    }
    case SynthBackground::Texture: {
      const int k = std::min(n, std::max(12, dct_bases));
      const BasisSet basis = make_dct2d(block_side, k);
      Vec coef(k);
      coef[0] = rng.uniform(90.0, 170.0) * block_side;
      for (int i = 1; i < k; ++i) coef[i] = rng.normal(0.0, 40.0);
      Vec flat = basis.columns * coef;
      bg = Eigen::Map<const Mat>(flat.data(), block_side, block_side);
      break;
    }
  }
  for (int r = 0; r < block_side; ++r)
    for (int c = 0; c < block_side; ++c) bg(r, c) = std::clamp(bg(r, c), 0.0, 255.0);

  // Text strokes: 4-connected random walks with a straight-line bias.
  MaskImage truth(block_side, block_side);
  const int target = static_cast<int>(std::lround(text_density * n));
  int painted = 0;
  static const int dr[4] = {0, 0, 1, -1};
  static const int dc[4] = {1, -1, 0, 0};
  while (painted < target) {
    int r = rng.index(block_side), c = rng.index(block_side);
    int dir = rng.index(4);
    const int stroke_len = 3 + rng.index(2 * block_side);
    for (int s = 0; s < stroke_len && painted < target; ++s) {
      if (!truth.at(r, c)) {
        truth.at(r, c) = 1;
        ++painted;
      }
      if (rng.uniform() < 0.25) dir = rng.index(4);
      const int nr = r + dr[dir], nc = c + dc[dir];
      if (nr < 0 || nr >= block_side || nc < 0 || nc >= block_side) break;
      r = nr;
      c = nc;
    }
  }

  SynthBlock out;
  out.truth = truth;
  out.block.block_side = block_side;
  out.block.values.resize(n);
  for (int c = 0; c < block_side; ++c)
    for (int r = 0; r < block_side; ++r) {
      double v = bg(r, c);
      if (truth.at(r, c)) v = std::clamp(v + fg_intensity_gap, 0.0, 255.0);
      out.block.values[r + c * block_side] = v;
    }
  return out;
}

SynthBlock synth_overlay_block(int block_side, int dct_bases, double text_density,
                               double min_contrast, std::uint64_t seed) {
  if (text_density < 0.0 || text_density > 0.5)
    throw ParameterError("synth_overlay_block: text_density must be in [0, 0.5]");
  Rng rng(seed);
  const int n = block_side * block_side;

  // Bounded-amplitude smooth background so a fixed text level keeps its
  // contrast everywhere.
  const int k = std::max(1, dct_bases);
  const BasisSet basis = make_dct2d(block_side, k);
  Vec coef(k);
  const double base = rng.uniform(90.0, 150.0);
  coef[0] = base * block_side;
  for (int i = 1; i < k; ++i) coef[i] = rng.normal(0.0, 10.0);
  Vec bg = basis.columns * coef;
  const double spread = 30.0;
  for (int i = 0; i < n; ++i) bg[i] = std::clamp(bg[i], base - spread, base + spread);

  const bool bright = rng.uniform() < 0.5;
  const double text_level = bright
      ? std::min(255.0, base + spread + min_contrast + rng.uniform(0.0, 30.0))
      : std::max(0.0, base - spread - min_contrast - rng.uniform(0.0, 30.0));

  const SynthBlock strokes =
      synth_text_block(block_side, SynthBackground::Constant, 0, text_density, 0.0, seed + 1);
  SynthBlock out;
  out.truth = strokes.truth;
  out.block.block_side = block_side;
  out.block.values.resize(n);
  for (int c = 0; c < block_side; ++c)
    for (int r = 0; r < block_side; ++r)
      out.block.values[r + c * block_side] =
          out.truth.at(r, c) ? text_level : bg[r + c * block_side];
  return out;
}

}  // namespace sdx
