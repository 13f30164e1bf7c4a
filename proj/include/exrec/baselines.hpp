#pragma once

// Frame-level classifiers whose per-frame probabilities are aggregated over
// windows by voting: an MLP (majority vote) and a 1-D CNN (soft vote).

#include <Eigen/Core>

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "exrec/error.hpp"
#include "exrec/evaluator.hpp"
#include "exrec/features.hpp"
#include "exrec/rng.hpp"
#include "exrec/seqnet/network.hpp"
#include "exrec/trainer.hpp"
#include "exrec/voting.hpp"

namespace exrec::baseline {

enum class FrameArch : std::uint8_t { Dnn, Cnn };

inline std::string_view to_string(FrameArch a) { return a == FrameArch::Dnn ? "dnn" : "cnn"; }

inline FrameArch parse_frame_arch(std::string_view text) {
  if (text == "dnn") return FrameArch::Dnn;
  if (text == "cnn") return FrameArch::Cnn;
  throw Error(ErrorKind::Usage, "unknown baseline architecture '" + std::string(text) + "'");
}

inline constexpr Eigen::Index kKernel = 3;
inline constexpr Eigen::Index kPool = 2;

struct FrameNetShape {
  FrameArch arch = FrameArch::Dnn;
  Eigen::Index input_dim = 78;
  Eigen::Index classes = 4;
  std::vector<Eigen::Index> hidden{128, 64, 32};  // dnn
  Eigen::Index filters1 = 32;                     // cnn
  Eigen::Index filters2 = 64;

  // cnn lengths: conv (valid) -> pool -> conv -> pool
  Eigen::Index conv1_len() const { return input_dim - kKernel + 1; }
  Eigen::Index pool1_len() const { return conv1_len() / kPool; }
  Eigen::Index conv2_len() const { return pool1_len() - kKernel + 1; }
  Eigen::Index pool2_len() const { return conv2_len() / kPool; }
  Eigen::Index flat_dim() const { return filters2 * pool2_len(); }

  void validate() const {
    if (classes < 1 || input_dim < 1) throw Error(ErrorKind::ShapeMismatch, "frame network needs inputs and classes");
    if (arch == FrameArch::Dnn) {
      for (auto h : hidden)
        if (h < 1) throw Error(ErrorKind::ShapeMismatch, "hidden width must be positive");
    } else if (filters1 < 1 || filters2 < 1 || pool1_len() < kKernel || pool2_len() < 1) {
      throw Error(ErrorKind::ShapeMismatch, "input of " + std::to_string(input_dim) + " features is too short for the cnn");
    }
  }
};

inline FrameNetShape default_shape(FrameArch arch, Eigen::Index input_dim, Eigen::Index classes) {
  FrameNetShape s;
  s.arch = arch;
  s.input_dim = input_dim;
  s.classes = classes;
  return s;
}

/// dnn: (W, b) per layer. cnn: conv1 (W, b), conv2 (W, b), dense (W, b).
/// Conv weights are filters x (in_channels * kernel), tap-minor.
struct FrameParams {
  std::vector<Eigen::MatrixXd> tensors;

  std::vector<std::span<double>> views() {
    std::vector<std::span<double>> out;
    for (auto& t : tensors) out.emplace_back(t.data(), static_cast<std::size_t>(t.size()));
    return out;
  }
  std::vector<std::span<const double>> views() const {
    std::vector<std::span<const double>> out;
    for (const auto& t : tensors) out.emplace_back(t.data(), static_cast<std::size_t>(t.size()));
    return out;
  }
  FrameParams zeros_like() const {
    FrameParams z;
    for (const auto& t : tensors) z.tensors.push_back(Eigen::MatrixXd::Zero(t.rows(), t.cols()));
    return z;
  }
};

inline std::vector<std::string> tensor_names(const FrameNetShape& shape) {
  std::vector<std::string> names;
  if (shape.arch == FrameArch::Dnn) {
    for (std::size_t l = 0; l <= shape.hidden.size(); ++l) {
      names.push_back("dense" + std::to_string(l) + ".weights");
      names.push_back("dense" + std::to_string(l) + ".bias");
    }
  } else {
    names = {"conv1.weights", "conv1.bias", "conv2.weights", "conv2.bias", "dense.weights", "dense.bias"};
  }
  return names;
}

inline FrameParams init_frame_params(const FrameNetShape& shape, std::uint64_t seed) {
  shape.validate();
  Rng rng(seed);
  FrameParams p;
  auto layer = [&](Eigen::Index out, Eigen::Index in, double fan_in, double fan_out) {
    p.tensors.push_back(seqnet::detail::glorot_uniform(out, in, fan_in, fan_out, rng));
    p.tensors.push_back(Eigen::MatrixXd::Zero(out, 1));
  };
  if (shape.arch == FrameArch::Dnn) {
    Eigen::Index width = shape.input_dim;
    for (auto h : shape.hidden) {
      layer(h, width, static_cast<double>(width), static_cast<double>(h));
      width = h;
    }
    layer(shape.classes, width, static_cast<double>(width), static_cast<double>(shape.classes));
  } else {
    const auto k = static_cast<double>(kKernel);
    layer(shape.filters1, kKernel, k, k * static_cast<double>(shape.filters1));
    layer(shape.filters2, shape.filters1 * kKernel, k * static_cast<double>(shape.filters1), k * static_cast<double>(shape.filters2));
    layer(shape.classes, shape.flat_dim(), static_cast<double>(shape.flat_dim()), static_cast<double>(shape.classes));
  }
  return p;
}

namespace detail {

inline Eigen::MatrixXd relu(const Eigen::MatrixXd& z) { return z.cwiseMax(0.0); }

/// in: channels x length -> (channels * kKernel) x (length - kKernel + 1).
inline Eigen::MatrixXd im2col(const Eigen::MatrixXd& in) {
  const Eigen::Index len = in.cols() - kKernel + 1;
  Eigen::MatrixXd out(in.rows() * kKernel, len);
  for (Eigen::Index c = 0; c < in.rows(); ++c)
    for (Eigen::Index k = 0; k < kKernel; ++k) out.row(c * kKernel + k) = in.row(c).segment(k, len);
  return out;
}

inline Eigen::MatrixXd col2im(const Eigen::MatrixXd& cols, Eigen::Index channels, Eigen::Index length) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(channels, length);
  const Eigen::Index len = cols.cols();
  for (Eigen::Index c = 0; c < channels; ++c)
    for (Eigen::Index k = 0; k < kKernel; ++k) out.row(c).segment(k, len) += cols.row(c * kKernel + k);
  return out;
}

struct Pooled {
  Eigen::MatrixXd values;
  Eigen::MatrixXi source;  // column of the winning input; first on ties
};

inline Pooled max_pool(const Eigen::MatrixXd& in) {
  const Eigen::Index len = in.cols() / kPool;
  Pooled p{Eigen::MatrixXd(in.rows(), len), Eigen::MatrixXi(in.rows(), len)};
  for (Eigen::Index c = 0; c < in.rows(); ++c) {
    for (Eigen::Index t = 0; t < len; ++t) {
      Eigen::Index best = t * kPool;
      for (Eigen::Index j = best + 1; j < (t + 1) * kPool; ++j)
        if (in(c, j) > in(c, best)) best = j;
      p.values(c, t) = in(c, best);
      p.source(c, t) = static_cast<int>(best);
    }
  }
  return p;
}

inline Eigen::MatrixXd unpool(const Eigen::MatrixXd& grad, const Eigen::MatrixXi& source, Eigen::Index length) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(grad.rows(), length);
  for (Eigen::Index c = 0; c < grad.rows(); ++c)
    for (Eigen::Index t = 0; t < grad.cols(); ++t) out(c, source(c, t)) += grad(c, t);
  return out;
}

struct CnnSampleCache {
  Eigen::MatrixXd patches1, act1, patches2, act2;
  Pooled pool1, pool2;
};

}  // namespace detail

struct FrameForward {
  Eigen::MatrixXd probabilities;  // K x N
  // dnn: activations per layer, input first. cnn: per-sample caches and the flat features.
  std::vector<Eigen::MatrixXd> activations;
  std::vector<detail::CnnSampleCache> samples;
};

/// `inputs` is D x N, one column per frame.
inline FrameForward frame_forward(const FrameNetShape& shape, const FrameParams& params, const Eigen::MatrixXd& inputs) {
  if (inputs.rows() != shape.input_dim) throw Error(ErrorKind::ShapeMismatch, "frame width differs from the network input");
  const auto& t = params.tensors;
  FrameForward f;
  Eigen::MatrixXd x;
  if (shape.arch == FrameArch::Dnn) {
    f.activations.push_back(inputs);
    const std::size_t layers = shape.hidden.size();
    for (std::size_t l = 0; l < layers; ++l) {
      Eigen::MatrixXd z = t[2 * l] * f.activations.back();
      z.colwise() += t[2 * l + 1].col(0);
      f.activations.push_back(detail::relu(z));
    }
    x = f.activations.back();
  } else {
    x.resize(shape.flat_dim(), inputs.cols());
    f.samples.resize(static_cast<std::size_t>(inputs.cols()));
    for (Eigen::Index n = 0; n < inputs.cols(); ++n) {
      auto& c = f.samples[static_cast<std::size_t>(n)];
      c.patches1 = detail::im2col(inputs.col(n).transpose());
      Eigen::MatrixXd z1 = t[0] * c.patches1;
      z1.colwise() += t[1].col(0);
      c.act1 = detail::relu(z1);
      c.pool1 = detail::max_pool(c.act1);
      c.patches2 = detail::im2col(c.pool1.values);
      Eigen::MatrixXd z2 = t[2] * c.patches2;
      z2.colwise() += t[3].col(0);
      c.act2 = detail::relu(z2);
      c.pool2 = detail::max_pool(c.act2);
      const Eigen::Index p2 = shape.pool2_len();
      for (Eigen::Index ch = 0; ch < shape.filters2; ++ch) x.col(n).segment(ch * p2, p2) = c.pool2.values.row(ch).transpose();
    }
    f.activations.push_back(x);
  }
  const auto& w = t[t.size() - 2];
  const auto& b = t[t.size() - 1];
  Eigen::MatrixXd logits = w * x;
  logits.colwise() += b.col(0);
  f.probabilities = seqnet::softmax_columns(logits);
  return f;
}

struct FrameLossAndGrads {
  double loss = 0.0;
  Eigen::MatrixXd probabilities;
  FrameParams grads;
};

inline FrameLossAndGrads frame_loss_and_grads(const FrameNetShape& shape, const FrameParams& params,
                                              const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& targets) {
  auto f = frame_forward(shape, params, inputs);
  if (targets.rows() != f.probabilities.rows() || targets.cols() != f.probabilities.cols()) {
    throw Error(ErrorKind::ShapeMismatch, "targets must be K x N to match the batch");
  }
  FrameLossAndGrads out;
  out.loss = seqnet::cross_entropy(f.probabilities, targets);
  out.grads = params.zeros_like();
  const auto& t = params.tensors;
  auto& g = out.grads.tensors;
  const std::size_t last = t.size() - 2;

  Eigen::MatrixXd delta = seqnet::cross_entropy_logit_grad(f.probabilities, targets);
  g[last] = delta * f.activations.back().transpose();
  g[last + 1] = delta.rowwise().sum();
  Eigen::MatrixXd d_x = t[last].transpose() * delta;

  if (shape.arch == FrameArch::Dnn) {
    for (std::size_t l = shape.hidden.size(); l-- > 0;) {
      const Eigen::MatrixXd d_z = (f.activations[l + 1].array() > 0.0).cast<double>().cwiseProduct(d_x.array()).matrix();
      g[2 * l] = d_z * f.activations[l].transpose();
      g[2 * l + 1] = d_z.rowwise().sum();
      if (l > 0) d_x = t[2 * l].transpose() * d_z;
    }
    out.probabilities = std::move(f.probabilities);
    return out;
  }

  const Eigen::Index p2 = shape.pool2_len();
  for (Eigen::Index n = 0; n < inputs.cols(); ++n) {
    const auto& c = f.samples[static_cast<std::size_t>(n)];
    Eigen::MatrixXd d_pool2(shape.filters2, p2);
    for (Eigen::Index ch = 0; ch < shape.filters2; ++ch) d_pool2.row(ch) = d_x.col(n).segment(ch * p2, p2).transpose();
    Eigen::MatrixXd d_z2 = detail::unpool(d_pool2, c.pool2.source, c.act2.cols());
    d_z2.array() *= (c.act2.array() > 0.0).cast<double>();
    g[2] += d_z2 * c.patches2.transpose();
    g[3] += d_z2.rowwise().sum();
    const Eigen::MatrixXd d_pool1 = detail::col2im(t[2].transpose() * d_z2, shape.filters1, c.pool1.values.cols());
    Eigen::MatrixXd d_z1 = detail::unpool(d_pool1, c.pool1.source, c.act1.cols());
    d_z1.array() *= (c.act1.array() > 0.0).cast<double>();
    g[0] += d_z1 * c.patches1.transpose();
    g[1] += d_z1.rowwise().sum();
  }
  out.probabilities = std::move(f.probabilities);
  return out;
}

// Model and training -------------------------------------------------------

/// Frames as a D x N matrix, one column per frame.
inline Eigen::MatrixXd frame_columns(const std::vector<FeatureFrame>& frames) {
  if (frames.empty()) return {};
  const auto dim = static_cast<Eigen::Index>(frames.front().values.size());
  Eigen::MatrixXd x(dim, static_cast<Eigen::Index>(frames.size()));
  for (std::size_t n = 0; n < frames.size(); ++n) {
    if (static_cast<Eigen::Index>(frames[n].values.size()) != dim) throw Error(ErrorKind::ShapeMismatch, "ragged feature frames");
    x.col(static_cast<Eigen::Index>(n)) = Eigen::Map<const Eigen::VectorXd>(frames[n].values.data(), dim);
  }
  return x;
}

struct FrameModel {
  FrameNetShape shape;
  FrameParams params;
  StandardScaler scaler;
  LabelTable labels;

  /// Raw D x N frames in, K x N probabilities out.
  Eigen::MatrixXd predict_proba(const Eigen::MatrixXd& frames, Eigen::Index chunk = 1024) const {
    if (frames.rows() != shape.input_dim) throw Error(ErrorKind::FeatureConfigMismatch, "frame width differs from the model");
    Eigen::MatrixXd out(shape.classes, frames.cols());
    for (Eigen::Index begin = 0; begin < frames.cols(); begin += chunk) {
      const Eigen::Index n = std::min(chunk, frames.cols() - begin);
      Eigen::MatrixXd rows = frames.middleCols(begin, n).transpose();
      scaler.transform_in_place(rows);
      out.middleCols(begin, n) = frame_forward(shape, params, rows.transpose()).probabilities;
    }
    return out;
  }
};

struct FrameHyperParams {
  double learning_rate = 1e-3;
  int batch_size = 32;
  int epochs = 50;
};

struct FrameSet {
  Eigen::MatrixXd inputs;  // scaled, D x N
  std::vector<std::size_t> targets;
};

inline FrameSet encode_frames(const std::vector<FeatureFrame>& frames, const StandardScaler& scaler, const LabelTable& labels) {
  FrameSet s;
  if (frames.empty()) return s;
  Eigen::MatrixXd rows = frame_columns(frames).transpose();
  scaler.transform_in_place(rows);
  s.inputs = rows.transpose();
  for (const auto& f : frames) s.targets.push_back(labels.index(f.label));
  return s;
}

class FrameTrainee {
 public:
  using Snapshot = FrameParams;

  FrameTrainee(FrameNetShape shape, FrameParams params, const FrameSet& train, const FrameSet& val)
      : shape_(std::move(shape)), params_(std::move(params)), train_(train), val_(val) {}

  std::vector<std::span<double>> parameters() { return params_.views(); }

  training::BatchOutcome train_batch(std::span<const std::size_t> indices, std::uint64_t) {
    Eigen::MatrixXd x(shape_.input_dim, static_cast<Eigen::Index>(indices.size()));
    std::vector<std::size_t> targets;
    for (std::size_t n = 0; n < indices.size(); ++n) {
      x.col(static_cast<Eigen::Index>(n)) = train_.inputs.col(static_cast<Eigen::Index>(indices[n]));
      targets.push_back(train_.targets[indices[n]]);
    }
    last_ = frame_loss_and_grads(shape_, params_, x, training::one_hot_columns(targets, static_cast<std::size_t>(shape_.classes)));
    training::BatchOutcome out;
    out.loss = last_.loss;
    const auto predicted = eval::argmax_columns(last_.probabilities);
    for (std::size_t n = 0; n < targets.size(); ++n) out.correct += predicted[n] == targets[n];
    out.grads = std::as_const(last_.grads).views();
    return out;
  }

  training::EvalOutcome evaluate_val() const { return evaluate(val_); }

  training::EvalOutcome evaluate(const FrameSet& set) const {
    training::EvalOutcome out;
    if (set.targets.empty()) return out;
    const auto p = frame_forward(shape_, params_, set.inputs).probabilities;
    out.loss = seqnet::cross_entropy(p, training::one_hot_columns(set.targets, static_cast<std::size_t>(shape_.classes)));
    const auto predicted = eval::argmax_columns(p);
    std::size_t correct = 0;
    for (std::size_t n = 0; n < predicted.size(); ++n) correct += predicted[n] == set.targets[n];
    out.accuracy = static_cast<double>(correct) / static_cast<double>(predicted.size());
    return out;
  }

  Snapshot snapshot() const { return params_; }
  void restore(const Snapshot& s) { params_ = s; }
  const FrameParams& params() const { return params_; }

 private:
  FrameNetShape shape_;
  FrameParams params_;
  const FrameSet& train_;
  const FrameSet& val_;
  FrameLossAndGrads last_;
};

struct FrameTrainResult {
  FrameModel model;
  training::TrainRecord record;
};

/// Same optimizer, early stopping and plateau schedule as the sequence
/// models. The scaler is fit on the training frames.
inline FrameTrainResult train_frame_model(const std::vector<FeatureFrame>& train_frames,
                                          const std::vector<FeatureFrame>& val_frames, FrameArch arch,
                                          const FrameHyperParams& hp, std::uint64_t seed,
                                          const training::TrainOptions& opt = {}) {
  if (train_frames.empty()) throw Error(ErrorKind::EmptyTrainingSet, "no training frames");
  if (hp.batch_size < 1 || hp.epochs < 1 || !(hp.learning_rate > 0.0)) {
    throw Error(ErrorKind::InvalidField, "hyperparameters out of domain");
  }
  std::vector<ExerciseLabel> all_labels;
  for (const auto* set : {&train_frames, &val_frames})
    for (const auto& f : *set) all_labels.push_back(f.label);

  FrameModel model;
  model.labels = encode_labels(all_labels);
  WindowSample all;
  all.matrix = frame_columns(train_frames).transpose();
  model.scaler = fit_scaler({all});
  model.shape = default_shape(arch, all.matrix.cols(), static_cast<Eigen::Index>(model.labels.size()));
  if (!val_frames.empty() && static_cast<Eigen::Index>(val_frames.front().values.size()) != model.shape.input_dim) {
    throw Error(ErrorKind::ShapeMismatch, "validation frames differ in width");
  }

  const auto train_set = encode_frames(train_frames, model.scaler, model.labels);
  const auto val_set = encode_frames(val_frames, model.scaler, model.labels);
  FrameTrainee net(model.shape, init_frame_params(model.shape, derive_seed(seed, training::kInitStream)), train_set, val_set);

  training::FitOptions fo;
  fo.epochs = opt.epoch_cap > 0 ? std::min(hp.epochs, opt.epoch_cap) : hp.epochs;
  fo.batch_size = static_cast<std::size_t>(hp.batch_size);
  fo.learning_rate = hp.learning_rate;
  fo.early_stop_patience = opt.early_stop_patience;
  fo.lr_patience = opt.lr_patience;
  fo.lr_factor = opt.lr_factor;
  fo.lr_floor = opt.lr_floor;
  fo.seed = seed;

  FrameTrainResult result;
  result.record = training::fit(net, train_set.targets.size(), !val_set.targets.empty(), fo);
  model.params = net.params();
  result.model = std::move(model);
  return result;
}

// Window-level predictions -------------------------------------------------

struct VotedPredictions {
  std::vector<std::size_t> truth;
  std::vector<std::size_t> predicted;
  std::size_t short_videos = 0;  // videos with fewer frames than one window
};

/// Votes inside each video (consecutive frames sharing source_video); the
/// window's truth is the video's label.
inline VotedPredictions vote_by_video(const FrameModel& model, const std::vector<FeatureFrame>& frames,
                                      const eval::FrameVoter& voter) {
  VotedPredictions out;
  std::size_t begin = 0;
  while (begin < frames.size()) {
    std::size_t end = begin;
    while (end < frames.size() && frames[end].source_video == frames[begin].source_video) ++end;
    if (end - begin < voter.window_len) {
      ++out.short_videos;
    } else {
      const std::vector<FeatureFrame> video(frames.begin() + static_cast<std::ptrdiff_t>(begin),
                                            frames.begin() + static_cast<std::ptrdiff_t>(end));
      const auto labels = eval::vote(model.predict_proba(frame_columns(video)), voter);
      const auto truth = model.labels.index(frames[begin].label);
      for (auto l : labels) {
        out.truth.push_back(truth);
        out.predicted.push_back(l);
      }
    }
    begin = end;
  }
  return out;
}

inline eval::FrameVoter default_voter(FrameArch arch) { return arch == FrameArch::Dnn ? eval::kDnnVoter : eval::kCnnVoter; }

}  // namespace exrec::baseline
