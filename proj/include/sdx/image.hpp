#pragma once

#include <string>

#include "sdx/types.hpp"

namespace sdx {

/// An 8-bit image held as real-valued planes. Color images are converted to
/// BT.601 full-range YCbCr on load; luma is always present.
struct Image {
  Mat luma;  // rows x cols, 0..255
  std::optional<Mat> cb, cr;

  int rows() const { return static_cast<int>(luma.rows()); }
  int cols() const { return static_cast<int>(luma.cols()); }
  bool has_chroma() const { return cb.has_value(); }
};

/// Reads a binary PGM (P5) or PPM (P6) file, 8 bits per sample.
Image load_image(const std::string& path);

/// Writes an 8-bit binary PGM; values are rounded and clamped to 0..255.
void save_pgm(const Mat& gray, const std::string& path);

enum class MaskFormat { Pbm, Pgm };

void save_mask(const MaskImage& mask, const std::string& path,
               MaskFormat format = MaskFormat::Pgm);
MaskImage load_mask(const std::string& path);

/// Tiles the image into NxN blocks at the given stride. Blocks that would
/// overrun the image are filled by edge replication; origins may therefore
/// point at the last in-range position rather than a multiple of the stride.
std::vector<BlockSignal> extract_blocks(const Image& image, int block_side, int stride);

/// Places per-block masks (vectorized column-major like BlockSignal) back
/// onto an image-sized canvas; out-of-range replicated pixels are dropped.
MaskImage stitch_masks(const std::vector<BlockSignal>& blocks,
                       const std::vector<std::vector<std::uint8_t>>& block_masks,
                       int rows, int cols);

enum class SynthBackground { Constant, SmoothDct, Texture };

struct SynthBlock {
  BlockSignal block;
  MaskImage truth;
};

/// Deterministic synthetic text-over-background block plus its exact ground
/// truth. Text strokes are 4-connected random walks; text_density is the
/// target foreground fraction (reached within a stroke step). Text pixels
/// take the local background value shifted by fg_intensity_gap.
SynthBlock synth_text_block(int block_side, SynthBackground background, int dct_bases,
                            double text_density, double fg_intensity_gap,
                            std::uint64_t seed);

/// Solid-color text overlaid on a smooth background: every text pixel shares
/// one intensity at least min_contrast away from any background pixel. This
/// is the screen-content structure assumed by the masked decomposition.
SynthBlock synth_overlay_block(int block_side, int dct_bases, double text_density,
                               double min_contrast, std::uint64_t seed);

}  // namespace sdx
