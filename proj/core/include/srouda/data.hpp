#pragma once

#include <optional>
#include <string>
#include <vector>

#include "srouda/augment.hpp"
#include "srouda/model.hpp"
#include "srouda/rng.hpp"

namespace srouda {

/// Raised on malformed dataset files.
struct SchemaError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct LabeledSet {
  Mat X;                   // rows are examples
  Eigen::VectorXi y;       // true labels
  Eigen::Index size() const { return X.rows(); }
};

struct DatasetMeta {
  int dim = 0;
  int num_classes = 0;
  std::optional<GridShape> grid;
  std::optional<std::pair<double, double>> clip_range;
  /// Pooled per-coordinate standard deviation of the source inputs;
  /// 1.0 for grid data (pixel units are already normalized).
  double input_scale = 1.0;
};

/// A source/target task. Target training rows carry no labels anywhere —
/// evaluation labels exist only in target_eval, which is reserved for the
/// evaluator.
struct DomainPair {
  LabeledSet source;
  Mat target_train;        // unlabeled by construction
  LabeledSet target_eval;
  DatasetMeta meta;
};

double compute_input_scale(const Mat& X);

/// Rotates 2-D row-points counter-clockwise about the origin.
Mat rotate_2d(const Mat& points, double degrees);

/// Two interleaved arcs, n/2 per class, with isotropic Gaussian noise;
/// target is the same generator rotated about the origin. 70/30 target
/// train/eval split.
DomainPair gen_two_moons_shift(int n, double rotation_deg, double noise_sd, Rng& rng);

/// Two-class isotropic Gaussians in d dimensions (means at -1/+1 on the
/// first coordinate, unit variance); the target distribution is the source
/// translated by mean_shift along the first coordinate.
DomainPair gen_gaussian_shift(int n, int d, double mean_shift, Rng& rng);

/// Four template patterns (stripes and corner blocks) on a pixel grid in
/// [0,1]; the target domain applies an intensity inversion of strength
/// style_shift plus noise.
DomainPair gen_grid_shift(int n, const GridShape& shape, double style_shift, Rng& rng);

/// The noiseless class templates used by gen_grid_shift.
std::vector<Vec> grid_templates(const GridShape& shape);

void save_dataset(const DomainPair& pair, const std::string& path);
DomainPair load_dataset(const std::string& path);

}  // namespace srouda
