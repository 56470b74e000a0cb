#pragma once

#include <vector>

#include "srouda/model.hpp"
#include "srouda/rng.hpp"

namespace srouda {

/// Grid layout of a flattened image vector. Pixels are stored
/// channel-major: index = (ch * h + row) * w + col. Patches are fixed
/// 2x2 spatial blocks spanning all channels.
struct GridShape {
  int h = 0;
  int w = 0;
  int c = 1;
  static constexpr int kPatch = 2;

  int pixel_count() const { return h * w * c; }
  int patch_count() const { return (h / kPatch) * (w / kPatch); }
  Eigen::Index index(int ch, int row, int col) const {
    return (static_cast<Eigen::Index>(ch) * h + row) * w + col;
  }
  void validate() const;
};

struct RmaConfig {
  double mask_ratio = 0.25;
  void validate() const;
};

/// Number of patches zeroed for a given ratio: round(mask_ratio * P).
int rma_mask_count(const GridShape& shape, const RmaConfig& cfg);

/// Uniform sample (without replacement) of the patch indices to zero.
std::vector<std::size_t> rma_sample_mask(const GridShape& shape, const RmaConfig& cfg,
                                         Rng& rng);

/// Zeroes every pixel of the given patches; all other pixels are
/// bit-identical to the input.
Vec rma_apply_mask(const Vec& x, const GridShape& shape,
                   const std::vector<std::size_t>& patches);

/// Random masked augmentation: zeroes round(mask_ratio * P) patches
/// chosen uniformly without replacement.
Vec rma(const Vec& x, const GridShape& shape, const RmaConfig& cfg, Rng& rng);

Vec hflip(const Vec& x, const GridShape& shape);
/// Rotation by quarter_turns * 90 degrees counter-clockwise; non-zero
/// turns require a square grid.
Vec rot90(const Vec& x, const GridShape& shape, int quarter_turns);

/// Horizontal flip with probability 0.5, then rotation by a uniformly
/// chosen multiple of 90 degrees.
Vec standard_aug(const Vec& x, const GridShape& shape, Rng& rng);

/// Dropout analogue of RMA for non-grid inputs: with probability
/// mask_ratio, one uniformly chosen coordinate is zeroed.
Vec coordinate_dropout(const Vec& x, double mask_ratio, Rng& rng);

}  // namespace srouda
