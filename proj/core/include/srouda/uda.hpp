#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "srouda/augment.hpp"
#include "srouda/data.hpp"
#include "srouda/model.hpp"
#include "srouda/rng.hpp"

namespace srouda {

/// Margin-disparity-discrepancy pre-training configuration. The auxiliary
/// head shares the main model's feature extractor and is trained
/// adversarially against it.
struct MddConfig {
  double gamma = 4.0;   // margin factor
  double eta = 0.1;     // regularization factor
  int epochs = 20;
  double lr = 0.004;
  double aux_lr = 0.004;
  double momentum = 0.0;
  int batch_size = 64;

  std::vector<int> hidden = {32, 32};
  Activation act = Activation::Tanh;

  bool rma_enabled = true;
  RmaConfig rma;
  std::optional<GridShape> grid;  // grid layout of target rows, when any
  std::optional<std::pair<double, double>> clip_range;

  void validate() const;
};

/// Head-only classifier on the main model's feature space.
Model make_aux_head(const Model& main, Rng& rng);

/// Disparity discrepancy between domains: the auxiliary head's
/// cross-entropy against the main head's argmax on target features minus
/// gamma times the same on source features, each batch-averaged.
double dd_loss(const Mat& features_s, const Mat& features_t, const Model& main,
               const Model& aux, double gamma);

/// Supervised source cross-entropy plus eta * dd_loss.
double mdd_objective(const Batch& batch_s, const Mat& batch_t, const Model& model,
                     const Model& aux, const MddConfig& cfg);

/// One ascent step on the auxiliary head, maximizing dd_loss. Never
/// touches the main model's parameters.
void mdd_aux_ascent_step(const Model& model, Model& aux, const Mat& Xs, const Mat& Xt,
                         double gamma, double aux_lr);

/// Gradient of mdd_objective with respect to the main model's parameters
/// (auxiliary head and argmax targets held constant).
Vec mdd_model_grad(const Model& model, const Model& aux, const Batch& batch_s,
                   const Mat& batch_t, const MddConfig& cfg);

struct PretrainRecord {
  int epoch = 0;
  double probe_mdd = 0.0;
  double probe_dd = 0.0;
  double probe_source_ce = 0.0;
  double source_train_acc = 0.0;
};

struct PretrainResult {
  Model model;
  Model aux;
  std::vector<PretrainRecord> curve;
};

using EpochObserver = std::function<void(int epoch, const Model&)>;

/// Phase (a): alternating aux-ascent / model-descent over mini-batches,
/// with the target stream doubled by masked augmentation. The observer,
/// when set, sees the model after every epoch.
PretrainResult pretrain_source(const LabeledSet& S, const Mat& T, const MddConfig& cfg,
                               Rng& rng, const EpochObserver& observer = {});

}  // namespace srouda
