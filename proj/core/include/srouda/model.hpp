#pragma once

#include <Eigen/Core>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "srouda/rng.hpp"

namespace srouda {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;  // batches are row-per-example

/// Raised on input/parameter dimension mismatches.
struct ShapeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Raised on invalid targets, configs and other contract violations.
struct ValidationError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Raised when a training loop produces non-finite values; carries the
/// epoch where it happened.
struct DivergenceError : std::runtime_error {
  int epoch;
  DivergenceError(const std::string& what, int epoch_)
      : std::runtime_error(what), epoch(epoch_) {}
};

/// Raised when a requested mode is not supported by the given inputs.
struct CapabilityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Activation { Tanh, Softplus, Relu, Identity };

Activation activation_from_string(const std::string& s);
std::string to_string(Activation a);
bool is_smooth(Activation a);

/// Feed-forward classifier family: input -> hidden... -> logits.
/// The feature extractor is everything up to (and including) the last
/// hidden activation; the classifier head is the final linear layer.
struct Architecture {
  int input_dim = 0;
  std::vector<int> hidden;
  int num_classes = 0;
  Activation act = Activation::Tanh;

  int num_layers() const { return static_cast<int>(hidden.size()) + 1; }
  int feature_dim() const { return hidden.empty() ? input_dim : hidden.back(); }
  int layer_in(int l) const;
  int layer_out(int l) const;
  Eigen::Index param_count() const;
  /// Offset of the classifier-head parameters in the flat vector.
  Eigen::Index split_index() const;
  void validate() const;

  bool operator==(const Architecture&) const = default;
};

/// A classifier with a flat parameter vector. Two models with equal arch
/// and equal params produce bit-identical outputs on identical inputs.
struct Model {
  Architecture arch;
  Vec params;           // layer-by-layer: row-major W, then b
  Eigen::Index split_index = 0;

  void validate() const;
};

Model make_model(const Architecture& arch);  // zero parameters
/// Xavier-uniform weight init, zero biases; deterministic draw order.
Model init_model(const Architecture& arch, Rng& rng);
Model clone_model(const Model& src);

struct Batch {
  Mat inputs;                 // B x d
  Eigen::VectorXi labels;     // length B; kUnlabeled marks target rows
  enum class Domain { Source, Target } domain = Domain::Source;

  static constexpr int kUnlabeled = -1;
  void validate(int num_classes) const;
};

/// A training target: exactly one of a hard class index or a soft
/// distribution over classes.
struct Target {
  int hard = -1;
  std::optional<Vec> soft;

  static Target hard_label(int label) { return Target{label, std::nullopt}; }
  static Target soft_dist(Vec probs) { return Target{-1, std::move(probs)}; }
  bool is_soft() const { return soft.has_value(); }
};

/// Per-batch targets: hard labels or a row-stochastic soft matrix.
struct BatchTarget {
  std::optional<Eigen::VectorXi> hard;
  std::optional<Mat> soft;  // B x C

  static BatchTarget from_hard(Eigen::VectorXi labels);
  static BatchTarget from_soft(Mat probs);
  Eigen::Index size() const;
  Target row(Eigen::Index i) const;
};

enum class LossKind { CrossEntropy, Margin };

struct LossSpec {
  LossKind kind = LossKind::CrossEntropy;
  double scale = 1.0;  // grad(c * L) == c * grad(L) exactly
};

// ---------------------------------------------------------------------------
// Forward / backward
// ---------------------------------------------------------------------------

/// Cached activations of one forward pass, consumed by the backward pass.
struct ForwardTrace {
  std::vector<Vec> acts;  // acts[0] = x, acts[l] = activation after layer l-1
  std::vector<Vec> pres;  // pre-activation of each layer; pres.back() = logits
  const Vec& logits() const { return pres.back(); }
  const Vec& features() const { return acts.back(); }
};

ForwardTrace forward_trace(const Model& m, const Vec& x);
Vec forward_features(const Model& m, const Vec& x);
Vec forward_logits(const Model& m, const Vec& x);
/// Applies only the classifier head to a feature vector.
Vec forward_head(const Model& m, const Vec& f);

Mat forward_logits_batch(const Model& m, const Mat& X);

Vec softmax(const Vec& logits);
Vec log_softmax(const Vec& logits);
/// Rowwise argmax; ties break toward the lowest class index.
int argmax_lowest(const Vec& v);

double loss_ce(const Vec& logits, const Target& target);
/// Attack-side margin loss: -max(z_true - max_{c != true} z_c, -kappa),
/// kappa = 0. Ascending it drives the example toward misclassification;
/// it is flat (zero gradient) once the example is misclassified.
double loss_margin(const Vec& logits, int true_label);

double loss_value(const Vec& logits, const Target& target, const LossSpec& spec);
/// d loss / d logits for the given spec.
Vec loss_grad_logits(const Vec& logits, const Target& target, const LossSpec& spec);

/// Mean per-example loss over a batch (64-bit accumulation, fixed order).
double loss_batch(const Model& m, const Mat& X, const BatchTarget& targets,
                  const LossSpec& spec = {});

struct BackpropResult {
  Vec grad_params;
  Vec grad_input;
};

/// Reverse pass from an upstream gradient at the logits.
BackpropResult backward_from_logits(const Model& m, const ForwardTrace& t,
                                    const Vec& dloss_dlogits);
/// Reverse pass from an upstream gradient at the feature vector; the
/// classifier-head slice of grad_params stays zero.
BackpropResult backward_from_features(const Model& m, const ForwardTrace& t,
                                      const Vec& dloss_dfeatures);

/// Gradient of the mean batch loss with respect to params.
Vec grad_params(const Model& m, const Mat& X, const BatchTarget& targets,
                const LossSpec& spec = {});
Vec grad_params(const Model& m, const Batch& batch, const LossSpec& spec = {});

/// Gradient of the per-example loss with respect to the input.
Vec grad_input(const Model& m, const Vec& x, const Target& target,
               const LossSpec& spec = {});

/// Gradient of mean_i <dloss_dfeatures[i], F(x_i)> with respect to params
/// (feature-extractor slice only). dLdF holds one row per example.
Vec grad_params_via_features(const Model& m, const Mat& X, const Mat& dLdF);

/// Forward-mode directional derivative of the logits with respect to the
/// parameters: returns J_params(logits)(x) * v.
Vec jvp_logits(const Model& m, const Vec& x, const Vec& v);

}  // namespace srouda
