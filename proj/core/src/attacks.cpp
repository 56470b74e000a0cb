#include "srouda/attacks.hpp"

#include <cmath>

namespace srouda {

namespace {

double sign0(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

Vec clamp_clip(Vec v, const AttackBudget& budget) {
  if (budget.clip_range) {
    const auto [lo, hi] = *budget.clip_range;
    v = v.cwiseMax(lo).cwiseMin(hi);
  }
  return v;
}

}  // namespace

void AttackBudget::validate() const {
  if (epsilon < 0.0) throw ValidationError("attack epsilon must be >= 0");
  if (alpha <= 0.0) throw ValidationError("attack alpha must be > 0");
  if (k_max < 1) throw ValidationError("attack k_max must be >= 1");
  if (clip_range && clip_range->first >= clip_range->second) {
    throw ValidationError("clip_range lo must be < hi");
  }
}

AttackBudget AttackBudget::fgsm_budget(double eps) {
  AttackBudget b;
  b.epsilon = eps;
  b.alpha = eps > 0.0 ? eps : 1.0;
  b.k_max = 1;
  return b;
}

AttackBudget AttackBudget::pgd_budget(double eps, int k, double alpha_ratio) {
  AttackBudget b;
  b.epsilon = eps;
  b.alpha = eps > 0.0 ? eps * alpha_ratio : 1.0;
  b.k_max = k;
  return b;
}

AttackBudget AttackBudget::margin_budget(double eps, int k, double alpha_ratio) {
  AttackBudget b = pgd_budget(eps, k, alpha_ratio);
  b.loss_variant = LossKind::Margin;
  return b;
}

AttackBudget budget_from_name(const std::string& name, double eps,
                              std::optional<std::pair<double, double>> clip,
                              double alpha_ratio) {
  AttackBudget b;
  if (name == "fgsm") {
    b = AttackBudget::fgsm_budget(eps);
  } else if (name == "pgd10") {
    b = AttackBudget::pgd_budget(eps, 10, alpha_ratio);
  } else if (name == "pgd20") {
    b = AttackBudget::pgd_budget(eps, 20, alpha_ratio);
  } else if (name == "cwinf") {
    b = AttackBudget::margin_budget(eps, 20, alpha_ratio);
  } else {
    throw ValidationError("unknown attack name: " + name);
  }
  b.clip_range = clip;
  return b;
}

bool is_known_attack_name(const std::string& name) {
  return name == "fgsm" || name == "pgd10" || name == "pgd20" || name == "cwinf";
}

Vec project_linf(const Vec& x_adv, const Vec& x, const AttackBudget& budget) {
  if (x_adv.size() != x.size()) {
    throw ShapeError("project_linf: dimension mismatch");
  }
  Vec out = x_adv.array()
                .max(x.array() - budget.epsilon)
                .min(x.array() + budget.epsilon)
                .matrix();
  return clamp_clip(std::move(out), budget);
}

Vec pgd(const Model& m, const Vec& x, const Target& target, const AttackBudget& budget,
        Rng* rng) {
  budget.validate();
  const LossSpec spec{budget.loss_variant, 1.0};
  if (budget.loss_variant == LossKind::Margin && target.is_soft()) {
    throw ValidationError("margin attack requires a hard true label");
  }
  Vec x_adv = x;
  if (budget.random_start) {
    if (rng == nullptr) {
      throw ValidationError("random_start attack needs an rng");
    }
    for (Eigen::Index i = 0; i < x_adv.size(); ++i) {
      x_adv[i] += rng->uniform(-budget.epsilon, budget.epsilon);
    }
    x_adv = project_linf(x_adv, x, budget);
  }
  for (int k = 0; k < budget.k_max; ++k) {
    const Vec g = grad_input(m, x_adv, target, spec);
    for (Eigen::Index i = 0; i < x_adv.size(); ++i) {
      x_adv[i] += budget.alpha * sign0(g[i]);
    }
    x_adv = project_linf(x_adv, x, budget);
  }
  return x_adv;
}

Vec fgsm(const Model& m, const Vec& x, const Target& target, const AttackBudget& budget) {
  AttackBudget one = budget;
  one.k_max = 1;
  one.alpha = budget.epsilon > 0.0 ? budget.epsilon : budget.alpha;
  one.random_start = false;
  return pgd(m, x, target, one);
}

Vec margin_pgd(const Model& m, const Vec& x, int true_label, const AttackBudget& budget,
               Rng* rng) {
  AttackBudget b = budget;
  b.loss_variant = LossKind::Margin;
  return pgd(m, x, Target::hard_label(true_label), b, rng);
}

Mat attack_batch(const Model& m, const Mat& X, const BatchTarget& targets,
                 const AttackBudget& budget, Rng* rng) {
  if (targets.size() != X.rows()) {
    throw ShapeError("attack_batch: targets length does not match rows");
  }
  Mat out(X.rows(), X.cols());
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    out.row(i) =
        pgd(m, X.row(i).transpose(), targets.row(i), budget, rng).transpose();
  }
  return out;
}

}  // namespace srouda
