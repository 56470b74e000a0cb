#include "srouda/selftrain.hpp"

#include <cmath>

namespace srouda {

MetaMode meta_mode_from_string(const std::string& s) {
  if (s == "unrolled") return MetaMode::Unrolled;
  if (s == "dot-approx") return MetaMode::DotApprox;
  throw ValidationError("unknown meta_mode: " + s);
}

TargetMode target_mode_from_string(const std::string& s) {
  if (s == "soft") return TargetMode::Soft;
  if (s == "hard") return TargetMode::Hard;
  throw ValidationError("unknown target_mode: " + s);
}

std::string to_string(MetaMode m) {
  return m == MetaMode::Unrolled ? "unrolled" : "dot-approx";
}

std::string to_string(TargetMode m) {
  return m == TargetMode::Soft ? "soft" : "hard";
}

void SelfTrainConfig::validate() const {
  if (epochs < 1) throw ValidationError("selftrain epochs must be >= 1");
  if (batch_size < 1) throw ValidationError("batch size must be >= 1");
  if (student_lr < 0.0 || meta_lr < 0.0) {
    throw ValidationError("learning rates must be >= 0");
  }
  if (teacher_period < 1) throw ValidationError("teacher period must be >= 1");
  train_budget.validate();
}

PseudoLabels pseudo_labels(const Model& teacher, const Mat& x_t) {
  PseudoLabels pl;
  pl.soft.resize(x_t.rows(), teacher.arch.num_classes);
  pl.hard.resize(x_t.rows());
  for (Eigen::Index i = 0; i < x_t.rows(); ++i) {
    const Vec p = softmax(forward_logits(teacher, x_t.row(i).transpose()));
    pl.soft.row(i) = p.transpose();
    pl.hard[i] = argmax_lowest(p);
  }
  return pl;
}

void AdamState::step(Vec& params, const Vec& grad, const SelfTrainConfig& cfg) {
  if (m.size() == 0) {
    m = Vec::Zero(params.size());
    v = Vec::Zero(params.size());
  }
  ++t;
  m = cfg.adam_beta1 * m + (1.0 - cfg.adam_beta1) * grad;
  v = cfg.adam_beta2 * v + (1.0 - cfg.adam_beta2) * grad.cwiseProduct(grad);
  const double bc1 = 1.0 - std::pow(cfg.adam_beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(cfg.adam_beta2, static_cast<double>(t));
  const Vec mhat = m / bc1;
  const Vec vhat = v / bc2;
  params -= cfg.student_lr *
            (mhat.array() / (vhat.array().sqrt() + cfg.adam_eps)).matrix();
}

namespace {

BatchTarget pl_target(const PseudoLabels& pl, TargetMode mode) {
  return mode == TargetMode::Soft ? BatchTarget::from_soft(pl.soft)
                                  : BatchTarget::from_hard(pl.hard);
}

}  // namespace

double at_step(Model& student, AdamState& opt, const Mat& x_t, const PseudoLabels& pl,
               const SelfTrainConfig& cfg, Rng* attack_rng) {
  const BatchTarget target = pl_target(pl, cfg.target_mode);
  const Mat x_adv = attack_batch(student, x_t, target, cfg.train_budget, attack_rng);
  const double loss = loss_batch(student, x_adv, target);
  if (!std::isfinite(loss)) {
    throw DivergenceError("at_step produced a non-finite loss", 0);
  }
  const Vec g = grad_params(student, x_adv, target);
  opt.step(student.params, g, cfg);
  return loss;
}

MetaGradient meta_gradient(const Model& teacher, const Model& student, const Mat& x_t,
                           const Batch& x_s_labeled, const SelfTrainConfig& cfg) {
  x_s_labeled.validate(teacher.arch.num_classes);
  if (x_s_labeled.domain != Batch::Domain::Source) {
    throw ValidationError("meta step requires a labeled source batch");
  }
  if (cfg.meta_mode == MetaMode::Unrolled && !is_smooth(teacher.arch.act)) {
    throw CapabilityError(
        "meta_mode=unrolled requires smooth activations; use meta_mode=dot-approx");
  }

  const PseudoLabels pl = pseudo_labels(teacher, x_t);
  const BatchTarget inner_target = pl_target(pl, cfg.target_mode);

  // the attack is a constant of the meta differentiation
  AttackBudget budget = cfg.train_budget;
  budget.random_start = false;
  const Mat x_adv = attack_batch(student, x_t, inner_target, budget);

  // virtual one-step SGD update of the student at the student lr
  const Vec g_at = grad_params(student, x_adv, inner_target);
  Model virtual_student = student;
  virtual_student.params -= cfg.student_lr * g_at;

  const BatchTarget source_target = BatchTarget::from_hard(x_s_labeled.labels);
  const Vec v = grad_params(virtual_student, x_s_labeled.inputs, source_target);

  MetaGradient out;
  out.meta_loss = loss_batch(virtual_student, x_s_labeled.inputs, source_target);
  out.teacher_grad = Vec::Zero(teacher.params.size());

  if (cfg.meta_mode == MetaMode::DotApprox) {
    const double h = cfg.student_lr * v.dot(g_at);
    out.teacher_grad =
        h * grad_params(teacher, x_t, BatchTarget::from_hard(pl.hard));
    return out;
  }

  // Unrolled: d L_meta / d theta_s = lr * mean_i J_s_i^T S_i w_i, with
  // w_i the student-logit JVP in direction v and S_i the softmax Jacobian
  // of the teacher distribution. Hard inner targets sever the path.
  if (cfg.target_mode == TargetMode::Hard || cfg.student_lr == 0.0) {
    return out;
  }
  const Eigen::Index mrows = x_t.rows();
  for (Eigen::Index i = 0; i < mrows; ++i) {
    const Vec w = jvp_logits(student, x_adv.row(i).transpose(), v);
    const Vec q = pl.soft.row(i).transpose();
    const Vec u = q.cwiseProduct(w) - q * q.dot(w);  // (diag(q) - qq^T) w
    const ForwardTrace t = forward_trace(teacher, x_t.row(i).transpose());
    out.teacher_grad += backward_from_logits(teacher, t, u).grad_params;
  }
  out.teacher_grad *= cfg.student_lr / static_cast<double>(mrows);
  return out;
}

double meta_step(Model& teacher, const Model& student, const Mat& x_t,
                 const Batch& x_s_labeled, const SelfTrainConfig& cfg) {
  const MetaGradient mg = meta_gradient(teacher, student, x_t, x_s_labeled, cfg);
  teacher.params -= cfg.meta_lr * mg.teacher_grad;
  return mg.meta_loss;
}

// ---------------------------------------------------------------------------
// Schemes
// ---------------------------------------------------------------------------

const AttackBudget& EvalSuite::primary_budget() const {
  for (const auto& [name, budget] : attacks) {
    if (name == primary) return budget;
  }
  if (attacks.empty()) throw ValidationError("evaluation attack suite is empty");
  return attacks.front().second;
}

namespace {

MetricsRecord evaluate_epoch(const std::string& scheme, int epoch, const Model& model,
                             const Model* teacher, const DomainPair& data,
                             const EvalSuite& suite, double at_loss, double meta_loss) {
  MetricsRecord rec;
  rec.epoch = epoch;
  rec.scheme = scheme;
  rec.clean_acc = clean_accuracy(model, data.target_eval);
  for (const auto& [name, budget] : suite.attacks) {
    rec.robust_acc[name] = robust_accuracy(model, data.target_eval, budget);
  }
  if (teacher != nullptr) {
    rec.pseudo_acc = pseudo_label_accuracy(*teacher, data.target_eval);
  }
  rec.at_loss = at_loss;
  rec.meta_loss = meta_loss;
  rec.feature_distance =
      feature_distance(model, data.target_eval, suite.primary_budget());
  return rec;
}

Batch take_source_batch(const LabeledSet& S, const std::vector<std::size_t>& perm,
                        Eigen::Index start, Eigen::Index count) {
  Batch b;
  b.domain = Batch::Domain::Source;
  b.inputs.resize(count, S.X.cols());
  b.labels.resize(count);
  for (Eigen::Index i = 0; i < count; ++i) {
    const auto r = static_cast<Eigen::Index>(
        perm[static_cast<std::size_t>((start + i) % static_cast<Eigen::Index>(perm.size()))]);
    b.inputs.row(i) = S.X.row(r);
    b.labels[i] = S.y[r];
  }
  return b;
}

}  // namespace

SchemeResult adversarial_self_train(const Model& pretrained, const DomainPair& data,
                                    const SelfTrainConfig& cfg, bool meta_enabled,
                                    Rng& rng, const EvalSuite& eval,
                                    const std::string& scheme_name) {
  cfg.validate();
  if (data.target_train.rows() == 0) {
    throw ValidationError("self-training requires target training data");
  }

  Rng rng_data = rng.substream("data");
  Rng rng_attack = rng.substream("attack");

  SchemeResult result;
  Model teacher = clone_model(pretrained);
  Model student = clone_model(pretrained);
  AdamState opt;

  const Eigen::Index m = data.target_train.rows();
  const Eigen::Index B = std::min<Eigen::Index>(cfg.batch_size, m);

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto perm_t = rng_data.permutation(static_cast<std::size_t>(m));
    const auto perm_s = rng_data.permutation(static_cast<std::size_t>(data.source.size()));

    double at_loss_sum = 0.0;
    long steps = 0;
    Mat last_bt;
    Eigen::Index s_cursor = 0;
    Batch last_bs;

    for (Eigen::Index start = 0; start < m; start += B) {
      const Eigen::Index bs = std::min(B, m - start);
      Mat bx_t(bs, data.target_train.cols());
      for (Eigen::Index i = 0; i < bs; ++i) {
        bx_t.row(i) = data.target_train.row(
            static_cast<Eigen::Index>(perm_t[static_cast<std::size_t>(start + i)]));
      }
      last_bs = take_source_batch(data.source, perm_s, s_cursor, bs);
      s_cursor += bs;

      const PseudoLabels pl = pseudo_labels(teacher, bx_t);
      try {
        at_loss_sum += at_step(student, opt, bx_t, pl, cfg, &rng_attack);
      } catch (const DivergenceError& e) {
        throw DivergenceError(std::string(e.what()) + " at epoch " +
                                  std::to_string(epoch),
                              epoch);
      }
      ++steps;
      last_bt = std::move(bx_t);
    }

    double meta_loss = std::numeric_limits<double>::quiet_NaN();
    if (meta_enabled && epoch % cfg.teacher_period == 0) {
      meta_loss = meta_step(teacher, student, last_bt, last_bs, cfg);
      if (!teacher.params.allFinite()) {
        throw DivergenceError("teacher diverged at epoch " + std::to_string(epoch),
                              epoch);
      }
    }
    if (!student.params.allFinite()) {
      throw DivergenceError("student diverged at epoch " + std::to_string(epoch),
                            epoch);
    }

    result.history.push_back(evaluate_epoch(
        scheme_name, epoch, student, &teacher, data, eval,
        at_loss_sum / static_cast<double>(steps), meta_loss));
  }

  result.model = std::move(student);
  result.teacher = std::move(teacher);
  return result;
}

namespace {

Model pretrain_or_reuse(const DomainPair& data, const SchemeConfig& cfg, Rng& rng,
                        const Model* pretrained) {
  if (pretrained != nullptr) return clone_model(*pretrained);
  Rng pre_rng = rng.substream("pretrain");
  return pretrain_source(data.source, data.target_train, cfg.mdd, pre_rng).model;
}

}  // namespace

SchemeResult run_srouda(const DomainPair& data, const SchemeConfig& cfg, Rng& rng,
                        const EvalSuite& eval, const Model* pretrained) {
  const Model teacher = pretrain_or_reuse(data, cfg, rng, pretrained);
  Rng st_rng = rng.substream("selftrain");
  return adversarial_self_train(teacher, data, cfg.st, /*meta_enabled=*/true, st_rng,
                                eval, "srouda");
}

SchemeResult run_uda_at(const DomainPair& data, const SchemeConfig& cfg, Rng& rng,
                        const EvalSuite& eval, const Model* pretrained) {
  const Model teacher = pretrain_or_reuse(data, cfg, rng, pretrained);
  Rng st_rng = rng.substream("selftrain");
  return adversarial_self_train(teacher, data, cfg.st, /*meta_enabled=*/false, st_rng,
                                eval, "uda-at");
}

SchemeResult run_at_uda(const DomainPair& data, const SchemeConfig& cfg, Rng& rng,
                        const EvalSuite& eval) {
  // phase A: plain supervised source model (MDD with the regularizer off)
  MddConfig sup_cfg = cfg.mdd;
  sup_cfg.eta = 0.0;
  sup_cfg.rma_enabled = false;
  Rng rng_a = rng.substream("phaseA");
  const Mat empty_target(0, data.source.X.cols());
  Model sup = pretrain_source(data.source, empty_target, sup_cfg, rng_a).model;

  // phase B: replace the source set by adversarial examples against it
  LabeledSet adv_source;
  adv_source.y = data.source.y;
  adv_source.X = attack_batch(sup, data.source.X,
                              BatchTarget::from_hard(data.source.y),
                              cfg.st.train_budget);

  // phase C: UDA pre-training on (adversarial source, clean target)
  SchemeResult result;
  Rng rng_c = rng.substream("phaseC");
  auto observer = [&](int epoch, const Model& model) {
    result.history.push_back(evaluate_epoch("at-uda", epoch, model, nullptr, data,
                                            eval,
                                            std::numeric_limits<double>::quiet_NaN(),
                                            std::numeric_limits<double>::quiet_NaN()));
  };
  result.model =
      pretrain_source(adv_source, data.target_train, cfg.mdd, rng_c, observer).model;
  return result;
}

SchemeResult run_source_only_at(const DomainPair& data, const SchemeConfig& cfg,
                                Rng& rng, const EvalSuite& eval) {
  cfg.st.validate();
  Rng rng_init = rng.substream("init");
  Rng rng_data = rng.substream("data");
  Rng rng_attack = rng.substream("attack");

  Architecture arch;
  arch.input_dim = static_cast<int>(data.source.X.cols());
  arch.hidden = cfg.mdd.hidden;
  arch.num_classes = data.meta.num_classes;
  arch.act = cfg.mdd.act;

  SchemeResult result;
  Model model = init_model(arch, rng_init);
  AdamState opt;
  const Eigen::Index n = data.source.size();
  const Eigen::Index B = std::min<Eigen::Index>(cfg.st.batch_size, n);

  for (int epoch = 1; epoch <= cfg.st.epochs; ++epoch) {
    const auto perm = rng_data.permutation(static_cast<std::size_t>(n));
    double at_loss_sum = 0.0;
    long steps = 0;
    for (Eigen::Index start = 0; start < n; start += B) {
      const Eigen::Index bs = std::min(B, n - start);
      Batch b = take_source_batch(data.source, perm, start, bs);
      const BatchTarget target = BatchTarget::from_hard(b.labels);
      const Mat x_adv =
          attack_batch(model, b.inputs, target, cfg.st.train_budget, &rng_attack);
      const double loss = loss_batch(model, x_adv, target);
      if (!std::isfinite(loss)) {
        throw DivergenceError("source-at diverged at epoch " + std::to_string(epoch),
                              epoch);
      }
      opt.step(model.params, grad_params(model, x_adv, target), cfg.st);
      at_loss_sum += loss;
      ++steps;
    }
    result.history.push_back(evaluate_epoch(
        "source-at", epoch, model, nullptr, data, eval,
        at_loss_sum / static_cast<double>(steps),
        std::numeric_limits<double>::quiet_NaN()));
  }
  result.model = std::move(model);
  return result;
}

SchemeResult run_uda_baseline(const DomainPair& data, const SchemeConfig& cfg, Rng& rng,
                              const EvalSuite& eval) {
  SchemeResult result;
  Rng pre_rng = rng.substream("pretrain");
  auto observer = [&](int epoch, const Model& model) {
    MetricsRecord rec = evaluate_epoch("uda", epoch, model, &model, data, eval,
                                       std::numeric_limits<double>::quiet_NaN(),
                                       std::numeric_limits<double>::quiet_NaN());
    result.history.push_back(std::move(rec));
  };
  auto pre = pretrain_source(data.source, data.target_train, cfg.mdd, pre_rng, observer);
  result.model = std::move(pre.model);
  return result;
}

}  // namespace srouda
