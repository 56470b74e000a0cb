#pragma once

#include <optional>
#include <string>

#include "srouda/model.hpp"
#include "srouda/rng.hpp"

namespace srouda {

/// L-infinity attack budget. epsilon == 0 is the degenerate null attack:
/// every attack returns the clean input exactly, which is what the
/// epsilon-zero reduction identities rely on.
struct AttackBudget {
  double epsilon = 0.0;   // ball radius, input units
  double alpha = 0.0;     // per-step size, input units
  int k_max = 1;
  LossKind loss_variant = LossKind::CrossEntropy;
  bool random_start = false;
  std::optional<std::pair<double, double>> clip_range;  // (lo, hi)

  void validate() const;

  static AttackBudget fgsm_budget(double eps);
  static AttackBudget pgd_budget(double eps, int k, double alpha_ratio = 0.25);
  static AttackBudget margin_budget(double eps, int k, double alpha_ratio = 0.25);
};

/// Parses the attack names accepted by the CLI: fgsm, pgd10, pgd20, cwinf.
AttackBudget budget_from_name(const std::string& name, double eps,
                              std::optional<std::pair<double, double>> clip,
                              double alpha_ratio = 0.25);
bool is_known_attack_name(const std::string& name);

/// Coordinate-wise projection into the epsilon-ball around x, then into
/// clip_range when present.
Vec project_linf(const Vec& x_adv, const Vec& x, const AttackBudget& budget);

/// Single signed-gradient step of size epsilon; identical to pgd with
/// k_max = 1 and alpha = epsilon.
Vec fgsm(const Model& m, const Vec& x, const Target& target, const AttackBudget& budget);

/// Iterative projected signed-gradient ascent on the attack loss, gradient
/// taken at the current iterate. random_start draws require an rng.
Vec pgd(const Model& m, const Vec& x, const Target& target, const AttackBudget& budget,
        Rng* rng = nullptr);

/// PGD on the clamped margin loss (CW-infinity surrogate). Requires the
/// true hard label.
Vec margin_pgd(const Model& m, const Vec& x, int true_label, const AttackBudget& budget,
               Rng* rng = nullptr);

/// Row-per-example batch attack; each row is attacked independently.
Mat attack_batch(const Model& m, const Mat& X, const BatchTarget& targets,
                 const AttackBudget& budget, Rng* rng = nullptr);

}  // namespace srouda
