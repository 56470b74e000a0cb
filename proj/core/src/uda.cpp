#include "srouda/uda.hpp"

#include <cmath>

namespace srouda {

void MddConfig::validate() const {
  if (gamma < 1.0) throw ValidationError("mdd gamma must be >= 1");
  if (eta < 0.0) throw ValidationError("mdd eta must be >= 0");
  if (epochs < 1) throw ValidationError("pretrain epochs must be >= 1");
  if (lr <= 0.0 || aux_lr <= 0.0) throw ValidationError("pretrain lrs must be > 0");
  if (batch_size < 1) throw ValidationError("batch size must be >= 1");
  rma.validate();
}

Model make_aux_head(const Model& main, Rng& rng) {
  Architecture arch;
  arch.input_dim = main.arch.feature_dim();
  arch.num_classes = main.arch.num_classes;
  arch.act = main.arch.act;
  return init_model(arch, rng);
}

namespace {

Mat features_batch(const Model& m, const Mat& X) {
  Mat F(X.rows(), m.arch.feature_dim());
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    F.row(i) = forward_features(m, X.row(i).transpose()).transpose();
  }
  return F;
}

/// Hard argmax of the main head over each feature row.
Eigen::VectorXi main_argmax(const Model& main, const Mat& F) {
  Eigen::VectorXi y(F.rows());
  for (Eigen::Index i = 0; i < F.rows(); ++i) {
    y[i] = argmax_lowest(forward_head(main, F.row(i).transpose()));
  }
  return y;
}

double mean_aux_ce(const Model& aux, const Mat& F, const Eigen::VectorXi& y) {
  if (F.rows() == 0) return 0.0;
  double acc = 0.0;
  for (Eigen::Index i = 0; i < F.rows(); ++i) {
    acc += loss_ce(forward_logits(aux, F.row(i).transpose()),
                   Target::hard_label(y[i]));
  }
  return acc / static_cast<double>(F.rows());
}

struct Sgd {
  double lr;
  double momentum;
  Vec velocity;

  void step(Vec& params, const Vec& grad) {
    if (momentum == 0.0) {
      params -= lr * grad;
      return;
    }
    if (velocity.size() == 0) velocity = Vec::Zero(params.size());
    velocity = momentum * velocity + grad;
    params -= lr * velocity;
  }
};

}  // namespace

double dd_loss(const Mat& features_s, const Mat& features_t, const Model& main,
               const Model& aux, double gamma) {
  if (aux.arch.input_dim != main.arch.feature_dim() ||
      aux.arch.num_classes != main.arch.num_classes) {
    throw ShapeError("auxiliary head does not match the main head's dimensions");
  }
  const double ce_t = mean_aux_ce(aux, features_t, main_argmax(main, features_t));
  const double ce_s = mean_aux_ce(aux, features_s, main_argmax(main, features_s));
  return ce_t - gamma * ce_s;
}

double mdd_objective(const Batch& batch_s, const Mat& batch_t, const Model& model,
                     const Model& aux, const MddConfig& cfg) {
  batch_s.validate(model.arch.num_classes);
  if (batch_s.domain != Batch::Domain::Source) {
    throw ValidationError("mdd_objective requires a labeled source batch");
  }
  const double ce = loss_batch(model, batch_s.inputs,
                               BatchTarget::from_hard(batch_s.labels));
  if (cfg.eta == 0.0 || batch_t.rows() == 0) return ce;
  const Mat fs = features_batch(model, batch_s.inputs);
  const Mat ft = features_batch(model, batch_t);
  return ce + cfg.eta * dd_loss(fs, ft, model, aux, cfg.gamma);
}

void mdd_aux_ascent_step(const Model& model, Model& aux, const Mat& Xs, const Mat& Xt,
                         double gamma, double aux_lr) {
  const Mat fs = features_batch(model, Xs);
  const Mat ft = features_batch(model, Xt);
  Vec g = grad_params(aux, ft, BatchTarget::from_hard(main_argmax(model, ft)));
  g -= gamma * grad_params(aux, fs, BatchTarget::from_hard(main_argmax(model, fs)));
  aux.params += aux_lr * g;  // ascent: aux maximizes dd_loss
}

Vec mdd_model_grad(const Model& model, const Model& aux, const Batch& batch_s,
                   const Mat& batch_t, const MddConfig& cfg) {
  Vec g = grad_params(model, batch_s);
  if (cfg.eta == 0.0 || batch_t.rows() == 0) return g;

  // dd reaches the model only through the features fed to the aux head;
  // the argmax targets are constants.
  auto dd_route = [&](const Mat& X) {
    const Mat F = features_batch(model, X);
    const Eigen::VectorXi yhat = main_argmax(model, F);
    Mat dLdF(F.rows(), F.cols());
    for (Eigen::Index i = 0; i < F.rows(); ++i) {
      dLdF.row(i) = grad_input(aux, F.row(i).transpose(),
                               Target::hard_label(yhat[i]))
                        .transpose();
    }
    return grad_params_via_features(model, X, dLdF);
  };
  g += cfg.eta * dd_route(batch_t);
  g -= cfg.eta * cfg.gamma * dd_route(batch_s.inputs);
  return g;
}

PretrainResult pretrain_source(const LabeledSet& S, const Mat& T, const MddConfig& cfg,
                               Rng& rng, const EpochObserver& observer) {
  cfg.validate();
  if (S.size() == 0) throw ValidationError("pretrain_source: empty source dataset");

  Rng rng_init = rng.substream("init");
  Rng rng_data = rng.substream("data");
  Rng rng_rma = rng.substream("rma");

  Architecture arch;
  arch.input_dim = static_cast<int>(S.X.cols());
  arch.hidden = cfg.hidden;
  arch.num_classes = 1 + S.y.maxCoeff();
  arch.act = cfg.act;
  if (arch.num_classes < 2) arch.num_classes = 2;

  PretrainResult result;
  result.model = init_model(arch, rng_init);
  result.aux = make_aux_head(result.model, rng_init);

  const Eigen::Index n = S.size();
  const Eigen::Index B = cfg.batch_size;
  const Eigen::Index probe_n = std::min<Eigen::Index>(128, n);
  const Eigen::Index probe_m = std::min<Eigen::Index>(128, T.rows());

  Sgd opt_model{cfg.lr, cfg.momentum, {}};

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    // target stream: originals plus one augmented copy of each row
    Mat stream;
    if (T.rows() > 0 && cfg.rma_enabled) {
      stream.resize(2 * T.rows(), T.cols());
      stream.topRows(T.rows()) = T;
      for (Eigen::Index i = 0; i < T.rows(); ++i) {
        const Vec x = T.row(i).transpose();
        stream.row(T.rows() + i) =
            cfg.grid ? rma(x, *cfg.grid, cfg.rma, rng_rma).transpose()
                     : coordinate_dropout(x, cfg.rma.mask_ratio, rng_rma).transpose();
      }
    } else {
      stream = T;
    }

    const auto perm_s = rng_data.permutation(static_cast<std::size_t>(n));
    std::vector<std::size_t> perm_t;
    if (stream.rows() > 0) {
      perm_t = rng_data.permutation(static_cast<std::size_t>(stream.rows()));
    }

    Eigen::Index t_cursor = 0;
    for (Eigen::Index start = 0; start < n; start += B) {
      const Eigen::Index bs = std::min(B, n - start);
      Batch batch_s;
      batch_s.inputs.resize(bs, S.X.cols());
      batch_s.labels.resize(bs);
      batch_s.domain = Batch::Domain::Source;
      for (Eigen::Index i = 0; i < bs; ++i) {
        const auto r = static_cast<Eigen::Index>(perm_s[static_cast<std::size_t>(start + i)]);
        batch_s.inputs.row(i) = S.X.row(r);
        batch_s.labels[i] = S.y[r];
      }

      Mat batch_t(0, T.cols());
      if (stream.rows() > 0) {
        const Eigen::Index bt = std::min<Eigen::Index>(B, stream.rows());
        batch_t.resize(bt, stream.cols());
        for (Eigen::Index i = 0; i < bt; ++i) {
          batch_t.row(i) = stream.row(static_cast<Eigen::Index>(
              perm_t[static_cast<std::size_t>((t_cursor + i) % stream.rows())]));
        }
        t_cursor = (t_cursor + bt) % stream.rows();
      }

      if (stream.rows() > 0) {
        mdd_aux_ascent_step(result.model, result.aux, batch_s.inputs, batch_t,
                            cfg.gamma, cfg.aux_lr);
      }
      const Vec g = mdd_model_grad(result.model, result.aux, batch_s, batch_t, cfg);
      opt_model.step(result.model.params, g);

      if (!result.model.params.allFinite()) {
        throw DivergenceError(
            "pretrain_source diverged at epoch " + std::to_string(epoch), epoch);
      }
    }

    PretrainRecord rec;
    rec.epoch = epoch;
    {
      Batch probe_s;
      probe_s.inputs = S.X.topRows(probe_n);
      probe_s.labels = S.y.head(probe_n);
      probe_s.domain = Batch::Domain::Source;
      const Mat probe_t = T.topRows(probe_m);
      rec.probe_source_ce = loss_batch(result.model, probe_s.inputs,
                                       BatchTarget::from_hard(probe_s.labels));
      rec.probe_mdd =
          mdd_objective(probe_s, probe_t, result.model, result.aux, cfg);
      if (probe_m > 0) {
        rec.probe_dd =
            dd_loss(features_batch(result.model, probe_s.inputs),
                    features_batch(result.model, probe_t), result.model,
                    result.aux, cfg.gamma);
      }
      long correct = 0;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (argmax_lowest(forward_logits(result.model, S.X.row(i).transpose())) ==
            S.y[i]) {
          ++correct;
        }
      }
      rec.source_train_acc = static_cast<double>(correct) / static_cast<double>(n);
    }
    result.curve.push_back(rec);
    if (observer) observer(epoch, result.model);
  }
  return result;
}

}  // namespace srouda
