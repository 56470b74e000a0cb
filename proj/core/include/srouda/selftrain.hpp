#pragma once

#include <optional>
#include <string>
#include <vector>

#include "srouda/attacks.hpp"
#include "srouda/data.hpp"
#include "srouda/eval.hpp"
#include "srouda/model.hpp"
#include "srouda/rng.hpp"
#include "srouda/uda.hpp"

namespace srouda {

/// Teacher predictions on a target batch: softmax rows and their argmax
/// (lowest-index tie-break).
struct PseudoLabels {
  Mat soft;              // B x C, row-stochastic
  Eigen::VectorXi hard;  // length B
};

PseudoLabels pseudo_labels(const Model& teacher, const Mat& x_t);

enum class MetaMode { Unrolled, DotApprox };
enum class TargetMode { Soft, Hard };

MetaMode meta_mode_from_string(const std::string& s);
TargetMode target_mode_from_string(const std::string& s);
std::string to_string(MetaMode m);
std::string to_string(TargetMode m);

struct SelfTrainConfig {
  int epochs = 30;
  int batch_size = 64;
  double student_lr = 0.0015;  // Adam
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  double meta_lr = 0.05;       // teacher fine-tuning, plain gradient descent
  AttackBudget train_budget;   // PGD, k_max = 10
  MetaMode meta_mode = MetaMode::Unrolled;
  TargetMode target_mode = TargetMode::Soft;
  int teacher_period = 1;      // teacher update every this many epochs

  void validate() const;
};

struct AdamState {
  Vec m;
  Vec v;
  long t = 0;

  void step(Vec& params, const Vec& grad, const SelfTrainConfig& cfg);
};

/// One adversarial training step: attacks the batch against the
/// pseudo-label target, then applies one Adam update on the student.
/// Returns the realized adversarial training loss.
double at_step(Model& student, AdamState& opt, const Mat& x_t, const PseudoLabels& pl,
               const SelfTrainConfig& cfg, Rng* attack_rng = nullptr);

struct MetaGradient {
  Vec teacher_grad;
  double meta_loss = 0.0;
};

/// Gradient of the meta loss with respect to the teacher parameters.
/// The meta loss is the student's source cross-entropy after a virtual
/// one-step SGD update at the student lr; the adversarial example is held
/// constant. Unrolled mode differentiates the update exactly; dot-approx
/// scales the teacher's pseudo-label gradient by the alignment of the
/// student update with the post-update source gradient.
MetaGradient meta_gradient(const Model& teacher, const Model& student, const Mat& x_t,
                           const Batch& x_s_labeled, const SelfTrainConfig& cfg);

/// Applies one teacher descent step at meta_lr; returns the meta loss.
double meta_step(Model& teacher, const Model& student, const Mat& x_t,
                 const Batch& x_s_labeled, const SelfTrainConfig& cfg);

// ---------------------------------------------------------------------------
// Schemes
// ---------------------------------------------------------------------------

/// Attack suite used for per-epoch evaluation. The primary attack also
/// drives the feature-distance metric.
struct EvalSuite {
  std::vector<std::pair<std::string, AttackBudget>> attacks;
  std::string primary = "pgd20";

  const AttackBudget& primary_budget() const;
};

struct SchemeConfig {
  MddConfig mdd;
  SelfTrainConfig st;
};

struct SchemeResult {
  Model model;                    // the scheme's final target-domain model
  std::optional<Model> teacher;   // final source model, when the scheme has one
  std::vector<MetricsRecord> history;
};

/// Phase (b) engine shared by srouda and uda-at: per-epoch passes of
/// pseudo-labeling and adversarial student updates, with an optional
/// teacher meta-update after each epoch.
SchemeResult adversarial_self_train(const Model& pretrained, const DomainPair& data,
                                    const SelfTrainConfig& cfg, bool meta_enabled,
                                    Rng& rng, const EvalSuite& eval,
                                    const std::string& scheme_name);

/// Full pipeline: MDD pre-training, then meta self-training. A
/// pre-trained source model may be supplied to skip phase (a).
SchemeResult run_srouda(const DomainPair& data, const SchemeConfig& cfg, Rng& rng,
                        const EvalSuite& eval, const Model* pretrained = nullptr);

/// Naive self-training baseline: pre-train, freeze the teacher, and
/// adversarially train the student on its fixed pseudo-labels.
SchemeResult run_uda_at(const DomainPair& data, const SchemeConfig& cfg, Rng& rng,
                        const EvalSuite& eval, const Model* pretrained = nullptr);

/// Adversarialize the source set against a source-supervised model, then
/// run the UDA pre-trainer on (adversarial source, clean target).
SchemeResult run_at_uda(const DomainPair& data, const SchemeConfig& cfg, Rng& rng,
                        const EvalSuite& eval);

/// Standard adversarial training on labeled source data only.
SchemeResult run_source_only_at(const DomainPair& data, const SchemeConfig& cfg,
                                Rng& rng, const EvalSuite& eval);

/// Natural UDA baseline: MDD pre-training alone.
SchemeResult run_uda_baseline(const DomainPair& data, const SchemeConfig& cfg, Rng& rng,
                              const EvalSuite& eval);

}  // namespace srouda
