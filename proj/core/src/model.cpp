#include "srouda/model.hpp"

#include <cmath>
#include <limits>
#include <utility>

namespace srouda {

namespace {

using RowMajorMat =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using WMap = Eigen::Map<const RowMajorMat>;
using WMutMap = Eigen::Map<RowMajorMat>;
using VMap = Eigen::Map<const Vec>;
using VMutMap = Eigen::Map<Vec>;

double act_apply(Activation a, double z) {
  switch (a) {
    case Activation::Tanh: return std::tanh(z);
    case Activation::Softplus:
      return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
    case Activation::Relu: return z > 0.0 ? z : 0.0;
    case Activation::Identity: return z;
  }
  return z;
}

double act_deriv(Activation a, double z) {
  switch (a) {
    case Activation::Tanh: {
      const double t = std::tanh(z);
      return 1.0 - t * t;
    }
    case Activation::Softplus: return 1.0 / (1.0 + std::exp(-z));
    case Activation::Relu: return z > 0.0 ? 1.0 : 0.0;
    case Activation::Identity: return 1.0;
  }
  return 1.0;
}

Vec act_apply_vec(Activation a, const Vec& z) {
  Vec out(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) out[i] = act_apply(a, z[i]);
  return out;
}

Vec act_deriv_vec(Activation a, const Vec& z) {
  Vec out(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) out[i] = act_deriv(a, z[i]);
  return out;
}

Eigen::Index layer_offset(const Architecture& arch, int l) {
  Eigen::Index off = 0;
  for (int k = 0; k < l; ++k) {
    off += static_cast<Eigen::Index>(arch.layer_out(k)) *
               static_cast<Eigen::Index>(arch.layer_in(k)) +
           arch.layer_out(k);
  }
  return off;
}

WMap weight_map(const Model& m, int l) {
  const Eigen::Index off = layer_offset(m.arch, l);
  return WMap(m.params.data() + off, m.arch.layer_out(l), m.arch.layer_in(l));
}

VMap bias_map(const Model& m, int l) {
  const Eigen::Index off =
      layer_offset(m.arch, l) + static_cast<Eigen::Index>(m.arch.layer_out(l)) *
                                    static_cast<Eigen::Index>(m.arch.layer_in(l));
  return VMap(m.params.data() + off, m.arch.layer_out(l));
}

void check_input(const Model& m, const Vec& x) {
  if (x.size() != m.arch.input_dim) {
    throw ShapeError("input has dimension " + std::to_string(x.size()) +
                     ", model expects " + std::to_string(m.arch.input_dim));
  }
}

void check_target(const Vec& logits, const Target& target) {
  const Eigen::Index C = logits.size();
  if (target.is_soft()) {
    if (target.soft->size() != C) {
      throw ValidationError("soft target has wrong length");
    }
    const double s = target.soft->sum();
    if (std::abs(s - 1.0) > 1e-9 || !std::isfinite(s)) {
      throw ValidationError("soft target does not sum to 1");
    }
  } else {
    if (target.hard < 0 || target.hard >= C) {
      throw ValidationError("hard label out of range");
    }
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Architecture / Model
// ---------------------------------------------------------------------------

Activation activation_from_string(const std::string& s) {
  if (s == "tanh") return Activation::Tanh;
  if (s == "softplus") return Activation::Softplus;
  if (s == "relu") return Activation::Relu;
  if (s == "identity" || s == "linear") return Activation::Identity;
  throw ValidationError("unknown activation: " + s);
}

std::string to_string(Activation a) {
  switch (a) {
    case Activation::Tanh: return "tanh";
    case Activation::Softplus: return "softplus";
    case Activation::Relu: return "relu";
    case Activation::Identity: return "identity";
  }
  return "tanh";
}

bool is_smooth(Activation a) { return a != Activation::Relu; }

int Architecture::layer_in(int l) const {
  return l == 0 ? input_dim : hidden[static_cast<std::size_t>(l) - 1];
}

int Architecture::layer_out(int l) const {
  return l == num_layers() - 1 ? num_classes : hidden[static_cast<std::size_t>(l)];
}

Eigen::Index Architecture::param_count() const {
  Eigen::Index n = 0;
  for (int l = 0; l < num_layers(); ++l) {
    n += static_cast<Eigen::Index>(layer_out(l)) * layer_in(l) + layer_out(l);
  }
  return n;
}

Eigen::Index Architecture::split_index() const {
  // head = final linear layer; everything before it is the feature extractor
  return param_count() -
         (static_cast<Eigen::Index>(num_classes) * feature_dim() + num_classes);
}

void Architecture::validate() const {
  if (input_dim <= 0) throw ValidationError("input_dim must be positive");
  if (num_classes < 2) throw ValidationError("num_classes must be >= 2");
  for (int h : hidden) {
    if (h <= 0) throw ValidationError("hidden widths must be positive");
  }
}

void Model::validate() const {
  arch.validate();
  if (params.size() != arch.param_count()) {
    throw ShapeError("params length does not match architecture");
  }
  if (split_index != arch.split_index()) {
    throw ValidationError("split_index does not partition params");
  }
}

Model make_model(const Architecture& arch) {
  arch.validate();
  Model m;
  m.arch = arch;
  m.params = Vec::Zero(arch.param_count());
  m.split_index = arch.split_index();
  return m;
}

Model init_model(const Architecture& arch, Rng& rng) {
  Model m = make_model(arch);
  Eigen::Index off = 0;
  for (int l = 0; l < arch.num_layers(); ++l) {
    const int in = arch.layer_in(l);
    const int out = arch.layer_out(l);
    const double limit = std::sqrt(6.0 / (in + out));
    for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(out) * in; ++i) {
      m.params[off + i] = rng.uniform(-limit, limit);
    }
    off += static_cast<Eigen::Index>(out) * in + out;  // biases stay zero
  }
  return m;
}

Model clone_model(const Model& src) { return src; }

void Batch::validate(int num_classes) const {
  if (labels.size() != inputs.rows()) {
    throw ShapeError("batch labels length does not match row count");
  }
  for (Eigen::Index i = 0; i < labels.size(); ++i) {
    if (domain == Domain::Source) {
      if (labels[i] < 0 || labels[i] >= num_classes) {
        throw ValidationError("source batch must be fully labeled");
      }
    } else if (labels[i] != kUnlabeled) {
      throw ValidationError("target batch must carry the unlabeled sentinel");
    }
  }
}

BatchTarget BatchTarget::from_hard(Eigen::VectorXi labels) {
  BatchTarget t;
  t.hard = std::move(labels);
  return t;
}

BatchTarget BatchTarget::from_soft(Mat probs) {
  BatchTarget t;
  t.soft = std::move(probs);
  return t;
}

Eigen::Index BatchTarget::size() const {
  return hard ? hard->size() : (soft ? soft->rows() : 0);
}

Target BatchTarget::row(Eigen::Index i) const {
  if (hard) return Target::hard_label((*hard)[i]);
  return Target::soft_dist(soft->row(i).transpose());
}

// ---------------------------------------------------------------------------
// Forward
// ---------------------------------------------------------------------------

ForwardTrace forward_trace(const Model& m, const Vec& x) {
  check_input(m, x);
  const int L = m.arch.num_layers();
  ForwardTrace t;
  t.acts.reserve(static_cast<std::size_t>(L));
  t.pres.reserve(static_cast<std::size_t>(L));
  t.acts.push_back(x);
  for (int l = 0; l < L; ++l) {
    Vec pre = weight_map(m, l) * t.acts.back() + bias_map(m, l);
    if (l < L - 1) t.acts.push_back(act_apply_vec(m.arch.act, pre));
    t.pres.push_back(std::move(pre));
  }
  return t;
}

Vec forward_features(const Model& m, const Vec& x) {
  check_input(m, x);
  if (m.arch.hidden.empty()) return x;
  Vec a = x;
  const int H = static_cast<int>(m.arch.hidden.size());
  for (int l = 0; l < H; ++l) {
    a = act_apply_vec(m.arch.act, weight_map(m, l) * a + bias_map(m, l));
  }
  return a;
}

Vec forward_logits(const Model& m, const Vec& x) {
  return forward_head(m, forward_features(m, x));
}

Vec forward_head(const Model& m, const Vec& f) {
  if (f.size() != m.arch.feature_dim()) {
    throw ShapeError("feature vector has dimension " + std::to_string(f.size()) +
                     ", head expects " + std::to_string(m.arch.feature_dim()));
  }
  const int l = m.arch.num_layers() - 1;
  return weight_map(m, l) * f + bias_map(m, l);
}

Mat forward_logits_batch(const Model& m, const Mat& X) {
  Mat Z(X.rows(), m.arch.num_classes);
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    Z.row(i) = forward_logits(m, X.row(i).transpose()).transpose();
  }
  return Z;
}

// ---------------------------------------------------------------------------
// Losses
// ---------------------------------------------------------------------------

Vec softmax(const Vec& logits) {
  const double zmax = logits.maxCoeff();
  Vec e = (logits.array() - zmax).exp();
  return e / e.sum();
}

Vec log_softmax(const Vec& logits) {
  const double zmax = logits.maxCoeff();
  const double lse = std::log((logits.array() - zmax).exp().sum()) + zmax;
  return logits.array() - lse;
}

int argmax_lowest(const Vec& v) {
  int best = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) best = static_cast<int>(i);
  }
  return best;
}

double loss_ce(const Vec& logits, const Target& target) {
  check_target(logits, target);
  const Vec lsm = log_softmax(logits);
  if (target.is_soft()) return -target.soft->dot(lsm);
  return -lsm[target.hard];
}

double loss_margin(const Vec& logits, int true_label) {
  if (true_label < 0 || true_label >= logits.size()) {
    throw ValidationError("margin loss requires a valid hard label");
  }
  double other = -std::numeric_limits<double>::infinity();
  for (Eigen::Index c = 0; c < logits.size(); ++c) {
    if (c != true_label && logits[c] > other) other = logits[c];
  }
  const double margin = logits[true_label] - other;
  return -std::max(margin, 0.0);
}

double loss_value(const Vec& logits, const Target& target, const LossSpec& spec) {
  const double raw = spec.kind == LossKind::CrossEntropy
                         ? loss_ce(logits, target)
                         : loss_margin(logits, target.hard);
  return spec.scale * raw;
}

Vec loss_grad_logits(const Vec& logits, const Target& target, const LossSpec& spec) {
  if (spec.kind == LossKind::CrossEntropy) {
    check_target(logits, target);
    Vec g = softmax(logits);
    if (target.is_soft()) {
      g -= *target.soft;
    } else {
      g[target.hard] -= 1.0;
    }
    return spec.scale * g;
  }
  // margin: flat once the example is misclassified (margin <= 0)
  const int t = target.hard;
  if (t < 0 || t >= logits.size()) {
    throw ValidationError("margin loss requires a valid hard label");
  }
  Vec g = Vec::Zero(logits.size());
  int other = -1;
  double best = -std::numeric_limits<double>::infinity();
  for (Eigen::Index c = 0; c < logits.size(); ++c) {
    if (c != t && logits[c] > best) {
      best = logits[c];
      other = static_cast<int>(c);
    }
  }
  if (logits[t] - best > 0.0) {
    g[t] = -1.0;
    g[other] = 1.0;
  }
  return spec.scale * g;
}

double loss_batch(const Model& m, const Mat& X, const BatchTarget& targets,
                  const LossSpec& spec) {
  if (targets.size() != X.rows()) {
    throw ShapeError("targets length does not match batch rows");
  }
  const LossSpec unit{spec.kind, 1.0};
  double acc = 0.0;
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    acc += loss_value(forward_logits(m, X.row(i).transpose()), targets.row(i), unit);
  }
  // scale applied once so that scaling the loss scales the result exactly
  return X.rows() == 0 ? 0.0 : spec.scale * (acc / static_cast<double>(X.rows()));
}

// ---------------------------------------------------------------------------
// Backward
// ---------------------------------------------------------------------------

BackpropResult backward_from_logits(const Model& m, const ForwardTrace& t,
                                    const Vec& dloss_dlogits) {
  const int L = m.arch.num_layers();
  BackpropResult r;
  r.grad_params = Vec::Zero(m.params.size());
  Vec delta = dloss_dlogits;
  for (int l = L - 1; l >= 0; --l) {
    const Eigen::Index off = layer_offset(m.arch, l);
    const int out = m.arch.layer_out(l);
    const int in = m.arch.layer_in(l);
    WMutMap gW(r.grad_params.data() + off, out, in);
    VMutMap gb(r.grad_params.data() + off + static_cast<Eigen::Index>(out) * in, out);
    gW = delta * t.acts[static_cast<std::size_t>(l)].transpose();
    gb = delta;
    Vec back = weight_map(m, l).transpose() * delta;
    if (l > 0) {
      delta = back.cwiseProduct(
          act_deriv_vec(m.arch.act, t.pres[static_cast<std::size_t>(l) - 1]));
    } else {
      r.grad_input = std::move(back);
    }
  }
  return r;
}

BackpropResult backward_from_features(const Model& m, const ForwardTrace& t,
                                      const Vec& dloss_dfeatures) {
  BackpropResult r;
  r.grad_params = Vec::Zero(m.params.size());
  const int H = static_cast<int>(m.arch.hidden.size());
  if (H == 0) {
    r.grad_input = dloss_dfeatures;  // features are the input itself
    return r;
  }
  // seed the reverse pass at the last hidden activation
  Vec delta = dloss_dfeatures.cwiseProduct(
      act_deriv_vec(m.arch.act, t.pres[static_cast<std::size_t>(H) - 1]));
  for (int l = H - 1; l >= 0; --l) {
    const Eigen::Index off = layer_offset(m.arch, l);
    const int out = m.arch.layer_out(l);
    const int in = m.arch.layer_in(l);
    WMutMap gW(r.grad_params.data() + off, out, in);
    VMutMap gb(r.grad_params.data() + off + static_cast<Eigen::Index>(out) * in, out);
    gW = delta * t.acts[static_cast<std::size_t>(l)].transpose();
    gb = delta;
    Vec back = weight_map(m, l).transpose() * delta;
    if (l > 0) {
      delta = back.cwiseProduct(
          act_deriv_vec(m.arch.act, t.pres[static_cast<std::size_t>(l) - 1]));
    } else {
      r.grad_input = std::move(back);
    }
  }
  return r;
}

Vec grad_params(const Model& m, const Mat& X, const BatchTarget& targets,
                const LossSpec& spec) {
  if (targets.size() != X.rows()) {
    throw ShapeError("targets length does not match batch rows");
  }
  const LossSpec unit{spec.kind, 1.0};
  Vec g = Vec::Zero(m.params.size());
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    const ForwardTrace t = forward_trace(m, X.row(i).transpose());
    const Vec dz = loss_grad_logits(t.logits(), targets.row(i), unit);
    g += backward_from_logits(m, t, dz).grad_params;
  }
  if (X.rows() > 0) g /= static_cast<double>(X.rows());
  if (spec.scale != 1.0) g *= spec.scale;
  return g;
}

Vec grad_params(const Model& m, const Batch& batch, const LossSpec& spec) {
  batch.validate(m.arch.num_classes);
  if (batch.domain != Batch::Domain::Source) {
    throw ValidationError("grad_params over a labeled batch requires source labels");
  }
  return grad_params(m, batch.inputs, BatchTarget::from_hard(batch.labels), spec);
}

Vec grad_input(const Model& m, const Vec& x, const Target& target,
               const LossSpec& spec) {
  const ForwardTrace t = forward_trace(m, x);
  const Vec dz = loss_grad_logits(t.logits(), target, spec);
  return backward_from_logits(m, t, dz).grad_input;
}

Vec grad_params_via_features(const Model& m, const Mat& X, const Mat& dLdF) {
  if (dLdF.rows() != X.rows() || dLdF.cols() != m.arch.feature_dim()) {
    throw ShapeError("feature-gradient matrix has unexpected shape");
  }
  Vec g = Vec::Zero(m.params.size());
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    const ForwardTrace t = forward_trace(m, X.row(i).transpose());
    g += backward_from_features(m, t, dLdF.row(i).transpose()).grad_params;
  }
  if (X.rows() > 0) g /= static_cast<double>(X.rows());
  return g;
}

Vec jvp_logits(const Model& m, const Vec& x, const Vec& v) {
  check_input(m, x);
  if (v.size() != m.params.size()) {
    throw ShapeError("tangent vector length does not match params");
  }
  const int L = m.arch.num_layers();
  Vec a = x;
  Vec ta = Vec::Zero(x.size());
  Vec tpre;
  for (int l = 0; l < L; ++l) {
    const Eigen::Index off = layer_offset(m.arch, l);
    const int out = m.arch.layer_out(l);
    const int in = m.arch.layer_in(l);
    WMap vW(v.data() + off, out, in);
    VMap vb(v.data() + off + static_cast<Eigen::Index>(out) * in, out);
    Vec pre = weight_map(m, l) * a + bias_map(m, l);
    tpre = weight_map(m, l) * ta + vW * a + vb;
    if (l < L - 1) {
      ta = act_deriv_vec(m.arch.act, pre).cwiseProduct(tpre);
      a = act_apply_vec(m.arch.act, pre);
    }
  }
  return tpre;
}

}  // namespace srouda
