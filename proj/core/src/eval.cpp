#include "srouda/eval.hpp"

#include <cstdio>

namespace srouda {

namespace {

void check_nonempty(const LabeledSet& data) {
  if (data.size() == 0) throw ValidationError("evaluation dataset is empty");
}

Vec attack_row(const Model& m, const LabeledSet& data, Eigen::Index i,
               const AttackBudget& budget) {
  const Vec x = data.X.row(i).transpose();
  if (budget.loss_variant == LossKind::Margin) {
    return margin_pgd(m, x, data.y[i], budget);
  }
  return pgd(m, x, Target::hard_label(data.y[i]), budget);
}

}  // namespace

double clean_accuracy(const Model& m, const LabeledSet& data) {
  check_nonempty(data);
  long correct = 0;
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    if (argmax_lowest(forward_logits(m, data.X.row(i).transpose())) == data.y[i]) {
      ++correct;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

double robust_accuracy(const Model& m, const LabeledSet& data,
                       const AttackBudget& budget) {
  check_nonempty(data);
  budget.validate();
  long correct = 0;
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    const Vec x_adv = attack_row(m, data, i, budget);
    if (argmax_lowest(forward_logits(m, x_adv)) == data.y[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

double pseudo_label_accuracy(const Model& teacher, const LabeledSet& target_eval) {
  return clean_accuracy(teacher, target_eval);
}

double feature_distance(const Model& m, const LabeledSet& data,
                        const AttackBudget& budget) {
  check_nonempty(data);
  budget.validate();
  double acc = 0.0;
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    const Vec f_clean = forward_features(m, data.X.row(i).transpose());
    const Vec f_adv = forward_features(m, attack_row(m, data, i, budget));
    acc += (f_clean - f_adv).norm();
  }
  return acc / static_cast<double>(data.size());
}

void export_embeddings(const Model& m, const LabeledSet& data,
                       const AttackBudget& budget, const std::string& path) {
  check_nonempty(data);
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (f == nullptr) throw std::runtime_error("cannot write embedding file: " + path);
  const int k = m.arch.feature_dim();
  for (int j = 0; j < k; ++j) std::fprintf(f, "f_%d,", j);
  std::fprintf(f, "label,kind\n");
  auto write = [&](const Vec& feat, int label, const char* kind) {
    for (Eigen::Index j = 0; j < feat.size(); ++j) {
      std::fprintf(f, "%.17g,", feat[j]);
    }
    std::fprintf(f, "%d,%s\n", label, kind);
  };
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    write(forward_features(m, data.X.row(i).transpose()), data.y[i], "clean");
    write(forward_features(m, attack_row(m, data, i, budget)), data.y[i], "adv");
  }
  std::fclose(f);
}

}  // namespace srouda
