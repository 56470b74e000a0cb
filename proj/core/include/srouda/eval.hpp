#pragma once

#include <limits>
#include <map>
#include <string>
#include <vector>

#include "srouda/attacks.hpp"
#include "srouda/data.hpp"
#include "srouda/model.hpp"

namespace srouda {

/// Per-epoch metrics for one scheme. robust_acc <= clean_acc is NOT an
/// invariant (it can fail legitimately); absent quantities are NaN.
struct MetricsRecord {
  int epoch = 0;
  std::string scheme;
  double clean_acc = std::numeric_limits<double>::quiet_NaN();
  std::map<std::string, double> robust_acc;  // keyed by attack name
  double pseudo_acc = std::numeric_limits<double>::quiet_NaN();
  double at_loss = std::numeric_limits<double>::quiet_NaN();
  double meta_loss = std::numeric_limits<double>::quiet_NaN();
  double feature_distance = std::numeric_limits<double>::quiet_NaN();
};

/// Fraction of argmax-correct predictions (lowest-index tie-break).
double clean_accuracy(const Model& m, const LabeledSet& data);

/// Accuracy on per-example attacks generated against the TRUE label.
double robust_accuracy(const Model& m, const LabeledSet& data, const AttackBudget& budget);

/// Fraction of the teacher's hard pseudo-labels that match the held-out
/// true labels.
double pseudo_label_accuracy(const Model& teacher, const LabeledSet& target_eval);

/// Mean L2 distance between clean and adversarial feature vectors, attacks
/// generated per example against the true label.
double feature_distance(const Model& m, const LabeledSet& data, const AttackBudget& budget);

/// Writes rows of (feature vector, label, clean|adv flag): one clean and
/// one adversarial row per example.
void export_embeddings(const Model& m, const LabeledSet& data, const AttackBudget& budget,
                       const std::string& path);

}  // namespace srouda
