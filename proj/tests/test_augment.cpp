#include <doctest.h>

#include <set>

#include "srouda/augment.hpp"

using namespace srouda;

namespace {

Vec random_image(const GridShape& shape, Rng& rng) {
  Vec x(shape.pixel_count());
  for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = rng.uniform(0.05, 1.0);
  return x;
}

// independent counting oracle: zero 2x2 blocks of the output
std::set<int> zero_patches(const Vec& x, const GridShape& shape) {
  std::set<int> zeroed;
  const int per_row = shape.w / GridShape::kPatch;
  for (int p = 0; p < shape.patch_count(); ++p) {
    const int pr = p / per_row;
    const int pc = p % per_row;
    bool all_zero = true;
    for (int ch = 0; ch < shape.c && all_zero; ++ch) {
      for (int dr = 0; dr < 2 && all_zero; ++dr) {
        for (int dc = 0; dc < 2; ++dc) {
          if (x[shape.index(ch, pr * 2 + dr, pc * 2 + dc)] != 0.0) {
            all_zero = false;
            break;
          }
        }
      }
    }
    if (all_zero) zeroed.insert(p);
  }
  return zeroed;
}

}  // namespace

TEST_CASE("mask_ratio zero keeps the image bit-identical") {
  const GridShape shape{8, 8, 1};
  Rng rng(1, "rma");
  const Vec x = random_image(shape, rng);
  CHECK(rma(x, shape, RmaConfig{0.0}, rng) == x);
}

TEST_CASE("mask_ratio one blanks the image") {
  const GridShape shape{8, 8, 2};
  Rng rng(2, "rma");
  const Vec x = random_image(shape, rng);
  CHECK(rma(x, shape, RmaConfig{1.0}, rng).isZero(0.0));
}

TEST_CASE("8x8 image at ratio 0.25 zeroes exactly 4 patches") {
  const GridShape shape{8, 8, 1};
  REQUIRE(shape.patch_count() == 16);
  Rng rng(3, "rma");
  const Vec x = random_image(shape, rng);

  Rng draw = rng.substream("draw");
  Rng replay = rng.substream("draw");
  const auto mask = rma_sample_mask(shape, RmaConfig{0.25}, draw);
  const Vec out = rma(x, shape, RmaConfig{0.25}, replay);

  const auto zeroed = zero_patches(out, shape);
  CHECK(zeroed.size() == 4);
  CHECK(zeroed == std::set<int>(mask.begin(), mask.end()));
}

TEST_CASE("mask count is exact and the complement untouched") {
  Rng rng(4, "rma-prop");
  for (int trial = 0; trial < 200; ++trial) {
    GridShape shape;
    shape.h = 2 * (1 + static_cast<int>(rng.uniform_index(5)));
    shape.w = 2 * (1 + static_cast<int>(rng.uniform_index(5)));
    shape.c = 1 + static_cast<int>(rng.uniform_index(3));
    const double ratio = rng.uniform(0.0, 1.0);
    const Vec x = random_image(shape, rng);

    Rng draw = rng.substream("d" + std::to_string(trial));
    Rng replay = rng.substream("d" + std::to_string(trial));
    const auto mask = rma_sample_mask(shape, RmaConfig{ratio}, draw);
    const Vec out = rma(x, shape, RmaConfig{ratio}, replay);

    CHECK(static_cast<int>(mask.size()) ==
          static_cast<int>(std::lround(ratio * shape.patch_count())));
    const std::set<std::size_t> masked(mask.begin(), mask.end());
    const int per_row = shape.w / 2;
    for (int p = 0; p < shape.patch_count(); ++p) {
      const int pr = p / per_row;
      const int pc = p % per_row;
      const bool is_masked = masked.count(static_cast<std::size_t>(p)) > 0;
      for (int ch = 0; ch < shape.c; ++ch) {
        for (int dr = 0; dr < 2; ++dr) {
          for (int dc = 0; dc < 2; ++dc) {
            const auto idx = shape.index(ch, pr * 2 + dr, pc * 2 + dc);
            if (is_masked) {
              CHECK(out[idx] == 0.0);
            } else {
              CHECK(out[idx] == x[idx]);
            }
          }
        }
      }
    }
  }
}

TEST_CASE("same stream and draw index give the same mask") {
  const GridShape shape{8, 8, 1};
  Rng a(77, "rma");
  Rng b(77, "rma");
  const Vec x = random_image(shape, a);
  const Vec y = random_image(shape, b);  // advance b identically
  CHECK(x == y);
  CHECK(rma(x, shape, RmaConfig{0.5}, a) == rma(x, shape, RmaConfig{0.5}, b));
}

TEST_CASE("double horizontal flip is the identity") {
  const GridShape shape{6, 8, 2};
  Rng rng(5, "flip");
  const Vec x = random_image(shape, rng);
  CHECK(hflip(hflip(x, shape), shape) == x);
}

TEST_CASE("rotation by zero turns is the identity") {
  const GridShape shape{8, 8, 1};
  Rng rng(6, "rot");
  const Vec x = random_image(shape, rng);
  CHECK(rot90(x, shape, 0) == x);
  CHECK(rot90(x, shape, 4) == x);
}

TEST_CASE("four quarter turns restore the image") {
  const GridShape shape{8, 8, 3};
  Rng rng(7, "rot");
  const Vec x = random_image(shape, rng);
  Vec y = x;
  for (int i = 0; i < 4; ++i) y = rot90(y, shape, 1);
  CHECK(y == x);
}

TEST_CASE("standard augmentation preserves the pixel sum") {
  const GridShape shape{8, 8, 1};
  Rng rng(8, "aug");
  for (int i = 0; i < 100; ++i) {
    const Vec x = random_image(shape, rng);
    const Vec y = standard_aug(x, shape, rng);
    CHECK(y.sum() == doctest::Approx(x.sum()).epsilon(1e-12));
  }
}

TEST_CASE("non-square rotation by a quarter turn is rejected") {
  const GridShape shape{6, 8, 1};
  Rng rng(9, "rot");
  const Vec x = random_image(shape, rng);
  CHECK_THROWS_AS(rot90(x, shape, 1), ValidationError);
}

TEST_CASE("shape mismatch is rejected") {
  const GridShape shape{8, 8, 1};
  Rng rng(10, "bad");
  CHECK_THROWS_AS(rma(Vec::Zero(63), shape, RmaConfig{0.25}, rng), ShapeError);
  CHECK_THROWS_AS(hflip(Vec::Zero(10), shape), ShapeError);
  GridShape odd{7, 8, 1};
  CHECK_THROWS_AS(rma(Vec::Zero(56), odd, RmaConfig{0.25}, rng), ValidationError);
}

TEST_CASE("coordinate dropout zeroes at most one coordinate") {
  Rng rng(11, "drop");
  int dropped = 0;
  const int trials = 2000;
  for (int i = 0; i < trials; ++i) {
    Vec x(4);
    for (int j = 0; j < 4; ++j) x[j] = rng.uniform(0.5, 1.0);
    const Vec y = coordinate_dropout(x, 0.25, rng);
    int zeros = 0;
    for (int j = 0; j < 4; ++j) {
      if (y[j] == 0.0) {
        ++zeros;
      } else {
        CHECK(y[j] == x[j]);
      }
    }
    CHECK(zeros <= 1);
    dropped += zeros;
  }
  // drop frequency ~ Binomial(trials, 0.25)
  CHECK(dropped > trials / 4 - 60);
  CHECK(dropped < trials / 4 + 60);
}
