#include "srouda/augment.hpp"

#include <cmath>

namespace srouda {

void GridShape::validate() const {
  if (h <= 0 || w <= 0 || c <= 0) throw ValidationError("grid dims must be positive");
  if (h % kPatch != 0 || w % kPatch != 0) {
    throw ValidationError("grid height and width must be divisible by the patch size");
  }
}

void RmaConfig::validate() const {
  if (mask_ratio < 0.0 || mask_ratio > 1.0) {
    throw ValidationError("mask_ratio must lie in [0, 1]");
  }
}

namespace {

void check_grid_input(const Vec& x, const GridShape& shape) {
  shape.validate();
  if (x.size() != shape.pixel_count()) {
    throw ShapeError("grid input length does not match shape");
  }
}

}  // namespace

int rma_mask_count(const GridShape& shape, const RmaConfig& cfg) {
  cfg.validate();
  return static_cast<int>(std::lround(cfg.mask_ratio * shape.patch_count()));
}

std::vector<std::size_t> rma_sample_mask(const GridShape& shape, const RmaConfig& cfg,
                                         Rng& rng) {
  const int m = rma_mask_count(shape, cfg);
  return rng.sample_without_replacement(
      static_cast<std::size_t>(shape.patch_count()), static_cast<std::size_t>(m));
}

Vec rma_apply_mask(const Vec& x, const GridShape& shape,
                   const std::vector<std::size_t>& patches) {
  check_grid_input(x, shape);
  const int patches_per_row = shape.w / GridShape::kPatch;
  Vec out = x;
  for (std::size_t p : patches) {
    const int pr = static_cast<int>(p) / patches_per_row;
    const int pc = static_cast<int>(p) % patches_per_row;
    for (int ch = 0; ch < shape.c; ++ch) {
      for (int dr = 0; dr < GridShape::kPatch; ++dr) {
        for (int dc = 0; dc < GridShape::kPatch; ++dc) {
          out[shape.index(ch, pr * GridShape::kPatch + dr,
                          pc * GridShape::kPatch + dc)] = 0.0;
        }
      }
    }
  }
  return out;
}

Vec rma(const Vec& x, const GridShape& shape, const RmaConfig& cfg, Rng& rng) {
  check_grid_input(x, shape);
  return rma_apply_mask(x, shape, rma_sample_mask(shape, cfg, rng));
}

Vec hflip(const Vec& x, const GridShape& shape) {
  check_grid_input(x, shape);
  Vec out(x.size());
  for (int ch = 0; ch < shape.c; ++ch) {
    for (int r = 0; r < shape.h; ++r) {
      for (int col = 0; col < shape.w; ++col) {
        out[shape.index(ch, r, col)] = x[shape.index(ch, r, shape.w - 1 - col)];
      }
    }
  }
  return out;
}

Vec rot90(const Vec& x, const GridShape& shape, int quarter_turns) {
  check_grid_input(x, shape);
  int k = ((quarter_turns % 4) + 4) % 4;
  if (k == 0) return x;
  if (shape.h != shape.w) {
    throw ValidationError("rot90 requires a square grid for non-zero turns");
  }
  Vec cur = x;
  for (int turn = 0; turn < k; ++turn) {
    Vec next(cur.size());
    // (r, c) <- (c, n-1-r): one counter-clockwise quarter turn
    for (int ch = 0; ch < shape.c; ++ch) {
      for (int r = 0; r < shape.h; ++r) {
        for (int col = 0; col < shape.w; ++col) {
          next[shape.index(ch, r, col)] = cur[shape.index(ch, col, shape.w - 1 - r)];
        }
      }
    }
    cur = std::move(next);
  }
  return cur;
}

Vec standard_aug(const Vec& x, const GridShape& shape, Rng& rng) {
  check_grid_input(x, shape);
  Vec out = x;
  if (rng.bernoulli(0.5)) out = hflip(out, shape);
  const int turns = static_cast<int>(rng.uniform_index(4));
  return rot90(out, shape, turns);
}

Vec coordinate_dropout(const Vec& x, double mask_ratio, Rng& rng) {
  RmaConfig{mask_ratio}.validate();
  Vec out = x;
  const bool drop = rng.bernoulli(mask_ratio);
  const std::size_t coord = rng.uniform_index(static_cast<std::size_t>(x.size()));
  if (drop) out[static_cast<Eigen::Index>(coord)] = 0.0;
  return out;
}

}  // namespace srouda
