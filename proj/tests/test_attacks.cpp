#include <doctest.h>

#include <cmath>
#include <cstring>

#include "srouda/attacks.hpp"
#include "srouda/data.hpp"

using namespace srouda;

namespace {

Model random_tiny_model(Rng& rng, int d, int classes) {
  Architecture a;
  a.input_dim = d;
  a.hidden = {4};
  a.num_classes = classes;
  return init_model(a, rng);
}

Model logistic_1d() {
  Architecture a;
  a.input_dim = 1;
  a.num_classes = 2;
  Model m = make_model(a);
  m.params[0] = 0.0;  // row 0 of W
  m.params[1] = 1.0;  // row 1 of W: z = (0, x)
  return m;
}

double mean_loss(const Model& m, const Mat& X, const Eigen::VectorXi& y) {
  return loss_batch(m, X, BatchTarget::from_hard(y));
}

}  // namespace

TEST_CASE("projection leaves in-ball points unchanged") {
  AttackBudget b;
  b.epsilon = 0.5;
  b.alpha = 0.1;
  const Vec x = (Vec(3) << 0.0, 1.0, -1.0).finished();
  const Vec inside = (Vec(3) << 0.3, 0.8, -1.4).finished();
  CHECK(project_linf(inside, x, b) == inside);
}

TEST_CASE("projection clamps coordinate-wise: 0.3 at eps 0.1 becomes 0.1") {
  AttackBudget b;
  b.epsilon = 0.1;
  b.alpha = 0.1;
  const Vec out = project_linf((Vec(1) << 0.3).finished(), Vec::Zero(1), b);
  CHECK(out[0] == doctest::Approx(0.1).epsilon(1e-15));
}

TEST_CASE("projection is idempotent") {
  Rng rng(21, "proj");
  AttackBudget b;
  b.epsilon = 0.25;
  b.alpha = 0.1;
  b.clip_range = std::make_pair(-1.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    Vec x(4), v(4);
    for (int j = 0; j < 4; ++j) {
      x[j] = rng.uniform(-1, 1);
      v[j] = rng.uniform(-3, 3);
    }
    const Vec once = project_linf(v, x, b);
    const Vec twice = project_linf(once, x, b);
    CHECK(once == twice);
  }
}

TEST_CASE("projection respects mismatched dimensions") {
  AttackBudget b;
  b.epsilon = 0.1;
  b.alpha = 0.1;
  CHECK_THROWS_AS(project_linf(Vec::Zero(2), Vec::Zero(3), b), ShapeError);
}

TEST_CASE("fgsm on a zero-gradient model returns the input") {
  Architecture a;
  a.input_dim = 2;
  a.hidden = {3};
  a.num_classes = 2;
  const Model m = make_model(a);  // all-zero params, constant logits
  const Vec x = (Vec(2) << 0.4, -0.6).finished();
  const AttackBudget b = AttackBudget::fgsm_budget(0.2);
  CHECK(fgsm(m, x, Target::hard_label(0), b) == x);
}

TEST_CASE("fgsm on the 1-D logistic model steps opposite the margin") {
  const Model m = logistic_1d();
  AttackBudget b = AttackBudget::fgsm_budget(0.1);
  const Vec out = fgsm(m, (Vec(1) << 0.5).finished(), Target::hard_label(1), b);
  CHECK(out[0] == doctest::Approx(0.4).epsilon(1e-15));
}

TEST_CASE("fgsm equals pgd with one full-size step") {
  Rng rng(33, "fgsm-eq");
  for (int trial = 0; trial < 50; ++trial) {
    const Model m = random_tiny_model(rng, 3, 2);
    Vec x(3);
    for (int j = 0; j < 3; ++j) x[j] = rng.uniform(-1, 1);
    const Target t = Target::hard_label(static_cast<int>(rng.uniform_index(2)));
    AttackBudget b;
    b.epsilon = 0.15;
    b.alpha = 0.15;
    b.k_max = 1;
    const Vec a1 = fgsm(m, x, t, b);
    const Vec a2 = pgd(m, x, t, b);
    CHECK(std::memcmp(a1.data(), a2.data(), sizeof(double) * 3) == 0);
  }
}

TEST_CASE("pgd with constant logits returns the input for any k_max") {
  Architecture a;
  a.input_dim = 2;
  a.hidden = {3};
  a.num_classes = 2;
  const Model m = make_model(a);
  const Vec x = (Vec(2) << 0.1, 0.9).finished();
  const AttackBudget b = AttackBudget::pgd_budget(0.3, 17);
  CHECK(pgd(m, x, Target::hard_label(1), b) == x);
}

TEST_CASE("pgd saturates at the ball boundary on the 1-D logistic model") {
  const Model m = logistic_1d();
  AttackBudget b;
  b.epsilon = 0.1;
  b.alpha = 0.05;
  b.k_max = 10;
  const Vec out = pgd(m, (Vec(1) << 0.5).finished(), Target::hard_label(1), b);
  CHECK(out[0] == doctest::Approx(0.4).epsilon(1e-15));
}

TEST_CASE("epsilon zero is the null attack") {
  Rng rng(44, "eps0");
  const Model m = random_tiny_model(rng, 2, 2);
  const Vec x = (Vec(2) << 0.2, -0.4).finished();
  AttackBudget b;
  b.epsilon = 0.0;
  b.alpha = 1.0;
  b.k_max = 5;
  CHECK(pgd(m, x, Target::hard_label(0), b) == x);
}

TEST_CASE("loss ordering pgd >= fgsm >= clean on a trained two-moons model") {
  Rng rng(7, "moons-order");
  DomainPair pair = gen_two_moons_shift(1200, 0.0, 0.1, rng);

  Architecture a;
  a.input_dim = 2;
  a.hidden = {16, 16};
  a.num_classes = 2;
  Rng init = rng.substream("init");
  Model m = init_model(a, init);
  const BatchTarget t = BatchTarget::from_hard(pair.source.y);
  for (int step = 0; step < 250; ++step) {
    m.params -= 0.5 * grad_params(m, pair.source.X, t);
  }
  REQUIRE(mean_loss(m, pair.source.X, pair.source.y) < 0.3);

  const int n_eval = 500;
  const Mat X = pair.source.X.topRows(n_eval);
  const Eigen::VectorXi y = pair.source.y.head(n_eval);
  const AttackBudget bf = AttackBudget::fgsm_budget(0.1);
  const AttackBudget bp = AttackBudget::pgd_budget(0.1, 10);
  Mat X_f(n_eval, 2), X_p(n_eval, 2);
  for (int i = 0; i < n_eval; ++i) {
    X_f.row(i) = fgsm(m, X.row(i).transpose(), Target::hard_label(y[i]), bf).transpose();
    X_p.row(i) = pgd(m, X.row(i).transpose(), Target::hard_label(y[i]), bp).transpose();
  }
  const double l_clean = mean_loss(m, X, y);
  const double l_fgsm = mean_loss(m, X_f, y);
  const double l_pgd = mean_loss(m, X_p, y);
  CHECK(l_fgsm > l_clean);
  CHECK(l_pgd >= l_fgsm);
}

TEST_CASE("mean adversarial loss grows with the budget") {
  Rng rng(8, "monotone");
  DomainPair pair = gen_two_moons_shift(600, 0.0, 0.1, rng);
  Architecture a;
  a.input_dim = 2;
  a.hidden = {8};
  a.num_classes = 2;
  Rng init = rng.substream("init");
  Model m = init_model(a, init);
  const BatchTarget t = BatchTarget::from_hard(pair.source.y);
  for (int step = 0; step < 150; ++step) {
    m.params -= 0.5 * grad_params(m, pair.source.X, t);
  }
  const int n_eval = 300;
  auto attacked_loss = [&](double eps) {
    const AttackBudget b = AttackBudget::pgd_budget(eps, 10);
    Mat Xa(n_eval, 2);
    for (int i = 0; i < n_eval; ++i) {
      Xa.row(i) = pgd(m, pair.source.X.row(i).transpose(),
                      Target::hard_label(pair.source.y[i]), b)
                      .transpose();
    }
    return mean_loss(m, Xa, pair.source.y.head(n_eval));
  };
  CHECK(attacked_loss(0.1) >= attacked_loss(0.05));
}

TEST_CASE("margin attack leaves misclassified points unchanged") {
  Architecture a;
  a.input_dim = 2;
  a.num_classes = 2;
  Model m = make_model(a);
  // z = W x with rows w_0 = (1, 0.5), w_1 = (-0.3, 0.2)
  m.params[0] = 1.0;
  m.params[1] = 0.5;
  m.params[2] = -0.3;
  m.params[3] = 0.2;

  const AttackBudget b = AttackBudget::margin_budget(0.1, 10);
  const Vec x_wrong = (Vec(2) << -1.0, 0.0).finished();  // margin < 0 for label 0
  CHECK(margin_pgd(m, x_wrong, 0, b) == x_wrong);
}

TEST_CASE("two-class margin gradient moves against w_true - w_other") {
  Architecture a;
  a.input_dim = 2;
  a.num_classes = 2;
  Model m = make_model(a);
  m.params[0] = 1.0;
  m.params[1] = 0.5;
  m.params[2] = -0.3;
  m.params[3] = 0.2;

  AttackBudget b;
  b.epsilon = 0.1;
  b.alpha = 0.02;
  b.k_max = 1;
  b.loss_variant = LossKind::Margin;
  const Vec x = (Vec(2) << 1.0, 0.0).finished();  // margin = 1.3 > 0 for label 0
  const Vec out = margin_pgd(m, x, 0, b);
  // one step: x - alpha * sign(w_0 - w_1) = (1 - 0.02, 0 - 0.02)
  CHECK(out[0] == doctest::Approx(0.98).epsilon(1e-15));
  CHECK(out[1] == doctest::Approx(-0.02).epsilon(1e-15));
}

TEST_CASE("ball containment and clip hold for randomized attacks") {
  Rng rng(99, "ball");
  int checked = 0;
  for (int trial = 0; trial < 250; ++trial) {
    const int d = 2 + static_cast<int>(rng.uniform_index(3));
    const int classes = 2 + static_cast<int>(rng.uniform_index(2));
    const Model m = random_tiny_model(rng, d, classes);
    Vec x(d);
    for (int j = 0; j < d; ++j) x[j] = rng.uniform(0.05, 0.95);
    AttackBudget b;
    b.epsilon = rng.uniform(0.01, 0.3);
    b.alpha = b.epsilon * rng.uniform(0.1, 1.0);
    b.k_max = 1 + static_cast<int>(rng.uniform_index(10));
    if (rng.bernoulli(0.5)) b.clip_range = std::make_pair(0.0, 1.0);
    const int label = static_cast<int>(rng.uniform_index(classes));

    for (int kind = 0; kind < 3; ++kind) {
      Vec out;
      if (kind == 0) {
        out = fgsm(m, x, Target::hard_label(label), b);
      } else if (kind == 1) {
        out = pgd(m, x, Target::hard_label(label), b);
      } else {
        out = margin_pgd(m, x, label, b);
      }
      CHECK((out - x).lpNorm<Eigen::Infinity>() <= b.epsilon + 1e-9);
      if (b.clip_range) {
        CHECK(out.minCoeff() >= b.clip_range->first);
        CHECK(out.maxCoeff() <= b.clip_range->second);
      }
      ++checked;
    }
  }
  CHECK(checked == 750);
}

TEST_CASE("attacks are pure functions without random start") {
  Rng rng(123, "pure");
  const Model m = random_tiny_model(rng, 3, 2);
  Vec x(3);
  for (int j = 0; j < 3; ++j) x[j] = rng.uniform(-1, 1);
  const AttackBudget b = AttackBudget::pgd_budget(0.2, 10);
  const Vec a1 = pgd(m, x, Target::hard_label(1), b);
  const Vec a2 = pgd(m, x, Target::hard_label(1), b);
  CHECK(std::memcmp(a1.data(), a2.data(), sizeof(double) * 3) == 0);
}

TEST_CASE("random start requires an rng and stays in the ball") {
  Rng rng(124, "rs");
  const Model m = random_tiny_model(rng, 3, 2);
  const Vec x = Vec::Zero(3);
  AttackBudget b = AttackBudget::pgd_budget(0.2, 5);
  b.random_start = true;
  CHECK_THROWS_AS(pgd(m, x, Target::hard_label(0), b), ValidationError);
  Rng att(5, "attack");
  const Vec out = pgd(m, x, Target::hard_label(0), b, &att);
  CHECK((out - x).lpNorm<Eigen::Infinity>() <= b.epsilon + 1e-9);
}

TEST_CASE("budget validation rejects bad parameters") {
  AttackBudget b;
  b.epsilon = -0.1;
  b.alpha = 0.1;
  CHECK_THROWS_AS(b.validate(), ValidationError);
  b.epsilon = 0.1;
  b.alpha = 0.0;
  CHECK_THROWS_AS(b.validate(), ValidationError);
  b.alpha = 0.1;
  b.k_max = 0;
  CHECK_THROWS_AS(b.validate(), ValidationError);
  b.k_max = 1;
  b.clip_range = std::make_pair(1.0, 0.0);
  CHECK_THROWS_AS(b.validate(), ValidationError);
}

TEST_CASE("attack names map to the documented budgets") {
  const auto p10 = budget_from_name("pgd10", 0.1, std::nullopt);
  CHECK(p10.k_max == 10);
  CHECK(p10.alpha == doctest::Approx(0.025));
  const auto p20 = budget_from_name("pgd20", 0.1, std::nullopt);
  CHECK(p20.k_max == 20);
  const auto f = budget_from_name("fgsm", 0.1, std::nullopt);
  CHECK(f.k_max == 1);
  CHECK(f.alpha == doctest::Approx(0.1));
  const auto cw = budget_from_name("cwinf", 0.1, std::nullopt);
  CHECK(cw.loss_variant == LossKind::Margin);
  CHECK_THROWS_AS(budget_from_name("pgd5", 0.1, std::nullopt), ValidationError);
}
