#pragma once

#include <Eigen/Core>
#include <Eigen/QR>

#include <cmath>
#include <algorithm>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "exrec/error.hpp"
#include "exrec/rng.hpp"
#include "exrec/seqnet/lstm.hpp"

namespace exrec::seqnet {

// Architecture -----------------------------------------------------------

struct LstmLayerSpec {
  int units = 0;
  bool return_sequences = false;
  bool bidirectional = false;
  bool operator==(const LstmLayerSpec&) const = default;
};

struct DropoutSpec {
  double rate = 0.0;
  bool operator==(const DropoutSpec&) const = default;
};

struct DenseSoftmaxSpec {
  int classes = 0;
  bool operator==(const DenseSoftmaxSpec&) const = default;
};

using LayerSpec = std::variant<LstmLayerSpec, DropoutSpec, DenseSoftmaxSpec>;

struct NetworkSpec {
  int window_len = 30;
  int feature_dim = 0;
  std::vector<LayerSpec> layers;

  bool operator==(const NetworkSpec&) const = default;

  int classes() const {
    if (layers.empty()) return 0;
    if (const auto* d = std::get_if<DenseSoftmaxSpec>(&layers.back())) return d->classes;
    return 0;
  }

  /// Throws ShapeMismatch unless the stack is recurrent layers and dropout
  /// ending in exactly one dense softmax fed by a non-sequence output.
  void validate() const {
    if (window_len < 1 || feature_dim < 1) throw Error(ErrorKind::ShapeMismatch, "input shape must be positive");
    if (layers.empty() || !std::holds_alternative<DenseSoftmaxSpec>(layers.back())) {
      throw Error(ErrorKind::ShapeMismatch, "network must end in a dense softmax layer");
    }
    bool sequence_output = true;
    bool seen_recurrent = false;
    for (std::size_t i = 0; i + 1 < layers.size(); ++i) {
      if (const auto* l = std::get_if<LstmLayerSpec>(&layers[i])) {
        if (!sequence_output) throw Error(ErrorKind::ShapeMismatch, "recurrent layer after a non-sequence output");
        if (l->units < 1) throw Error(ErrorKind::ShapeMismatch, "recurrent layer needs units >= 1");
        sequence_output = l->return_sequences;
        seen_recurrent = true;
      } else if (const auto* d = std::get_if<DropoutSpec>(&layers[i])) {
        if (!(d->rate >= 0.0 && d->rate < 1.0)) throw Error(ErrorKind::ShapeMismatch, "dropout rate must be in [0, 1)");
      } else {
        throw Error(ErrorKind::ShapeMismatch, "only one dense softmax layer is allowed, at the end");
      }
    }
    if (!seen_recurrent || sequence_output) {
      throw Error(ErrorKind::ShapeMismatch, "last recurrent layer must have return_sequences = false");
    }
    if (classes() < 1) throw Error(ErrorKind::ShapeMismatch, "softmax needs at least one class");
  }
};

enum class Arch { Lstm, Bilstm };

inline std::string_view to_string(Arch arch) { return arch == Arch::Lstm ? "lstm" : "bilstm"; }

inline Arch parse_arch(std::string_view text) {
  if (text == "lstm") return Arch::Lstm;
  if (text == "bilstm") return Arch::Bilstm;
  throw Error(ErrorKind::Usage, "unknown architecture '" + std::string(text) + "'");
}

/// Two stacked (Bi)LSTM layers sharing one unit count, dropout after each,
/// then a dense softmax. `bidirectional_second` selects bi -> bi or bi -> uni
/// for the bidirectional variant.
inline NetworkSpec make_architecture(Arch arch, int window_len, int feature_dim, int units, double dropout, int classes,
                                     bool bidirectional_second = true) {
  const bool bi = arch == Arch::Bilstm;
  NetworkSpec spec;
  spec.window_len = window_len;
  spec.feature_dim = feature_dim;
  spec.layers = {
      LstmLayerSpec{units, true, bi},
      DropoutSpec{dropout},
      LstmLayerSpec{units, false, bi && bidirectional_second},
      DropoutSpec{dropout},
      DenseSoftmaxSpec{classes},
  };
  spec.validate();
  return spec;
}

// Parameters -------------------------------------------------------------

struct RecurrentParams {
  LstmLayerParams forward;
  std::optional<LstmLayerParams> backward;
};

struct DenseParams {
  Eigen::MatrixXd weights;  // K x H
  Eigen::VectorXd bias;     // K
};

using LayerParams = std::variant<std::monostate, RecurrentParams, DenseParams>;

struct NetworkParams {
  std::vector<LayerParams> layers;

  /// Visits every parameter tensor in a fixed order as (name, matrix).
  template <typename F>
  void for_each_tensor(F&& f) {
    for (std::size_t i = 0; i < layers.size(); ++i) {
      const std::string prefix = "layer" + std::to_string(i);
      if (auto* r = std::get_if<RecurrentParams>(&layers[i])) {
        for (LstmLayerParams* p : {&r->forward, r->backward ? &*r->backward : nullptr}) {
          if (!p) continue;
          const std::string dir = prefix + (p == &r->forward ? ".fwd" : ".bwd");
          f(dir + ".input_weights", p->input_weights);
          f(dir + ".recurrent_weights", p->recurrent_weights);
          f(dir + ".bias", p->bias);
        }
      } else if (auto* d = std::get_if<DenseParams>(&layers[i])) {
        f(prefix + ".dense.weights", d->weights);
        f(prefix + ".dense.bias", d->bias);
      }
    }
  }

  template <typename F>
  void for_each_tensor(F&& f) const {
    const_cast<NetworkParams*>(this)->for_each_tensor(
        [&](const std::string& name, auto& m) { f(name, static_cast<const std::remove_reference_t<decltype(m)>&>(m)); });
  }

  /// Every parameter tensor as a flat view, in for_each_tensor order.
  std::vector<std::span<double>> views() {
    std::vector<std::span<double>> out;
    for_each_tensor([&](const std::string&, auto& m) { out.emplace_back(m.data(), static_cast<std::size_t>(m.size())); });
    return out;
  }

  std::vector<std::span<const double>> views() const {
    auto spans = const_cast<NetworkParams*>(this)->views();
    return {spans.begin(), spans.end()};
  }

  std::vector<std::string> names() const {
    std::vector<std::string> out;
    for_each_tensor([&](const std::string& name, const auto&) { out.push_back(name); });
    return out;
  }

  NetworkParams zeros_like() const {
    NetworkParams z = *this;
    for (auto view : z.views()) std::fill(view.begin(), view.end(), 0.0);
    return z;
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (auto v : views()) n += v.size();
    return n;
  }
};

namespace detail {

inline Eigen::MatrixXd glorot_uniform(Eigen::Index rows, Eigen::Index cols, double fan_in, double fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / (fan_in + fan_out));
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = rng.uniform(-limit, limit);
  return m;
}

/// rows x cols (rows >= cols) with orthonormal columns.
inline Eigen::MatrixXd orthogonal(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  Eigen::MatrixXd a(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) a(i, j) = rng.normal();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(rows, cols);
  const Eigen::MatrixXd r = qr.matrixQR().topRows(cols).triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < cols; ++j)
    if (r(j, j) < 0) q.col(j) = -q.col(j);
  return q;
}

inline LstmLayerParams init_lstm(Eigen::Index units, Eigen::Index input_dim, Rng& rng) {
  LstmLayerParams p;
  p.input_weights = glorot_uniform(4 * units, input_dim, static_cast<double>(input_dim), static_cast<double>(4 * units), rng);
  p.recurrent_weights = orthogonal(4 * units, units, rng);
  p.bias = Eigen::VectorXd::Zero(4 * units);
  p.bias.segment(units, units).setOnes();
  return p;
}

}  // namespace detail

/// Glorot-uniform input and dense weights, orthogonal recurrent weights,
/// zero biases except the forget-gate slice which starts at 1.
inline NetworkParams init_params(const NetworkSpec& spec, std::uint64_t seed) {
  spec.validate();
  Rng rng(seed);
  NetworkParams params;
  Eigen::Index width = spec.feature_dim;
  for (const auto& layer : spec.layers) {
    if (const auto* l = std::get_if<LstmLayerSpec>(&layer)) {
      auto& r = params.layers.emplace_back(std::in_place_type<RecurrentParams>);
      auto& rp = std::get<RecurrentParams>(r);
      rp.forward = detail::init_lstm(l->units, width, rng);
      if (l->bidirectional) rp.backward.emplace(detail::init_lstm(l->units, width, rng));
      width = l->units * (l->bidirectional ? 2 : 1);
    } else if (std::holds_alternative<DropoutSpec>(layer)) {
      params.layers.emplace_back(std::monostate{});
    } else {
      const auto k = std::get<DenseSoftmaxSpec>(layer).classes;
      DenseParams d;
      d.weights = detail::glorot_uniform(k, width, static_cast<double>(width), static_cast<double>(k), rng);
      d.bias = Eigen::VectorXd::Zero(k);
      params.layers.emplace_back(std::move(d));
    }
  }
  return params;
}

inline void check_params(const NetworkSpec& spec, const NetworkParams& params) {
  if (params.layers.size() != spec.layers.size()) throw Error(ErrorKind::ShapeMismatch, "parameter/layer count differs");
  Eigen::Index width = spec.feature_dim;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    if (const auto* l = std::get_if<LstmLayerSpec>(&spec.layers[i])) {
      const auto* r = std::get_if<RecurrentParams>(&params.layers[i]);
      if (!r || r->backward.has_value() != l->bidirectional) throw Error(ErrorKind::ShapeMismatch, "layer " + std::to_string(i));
      for (const LstmLayerParams* p : {&r->forward, r->backward ? &*r->backward : nullptr}) {
        if (!p) continue;
        p->check();
        if (p->units() != l->units || p->input_dim() != width) throw Error(ErrorKind::ShapeMismatch, "layer " + std::to_string(i));
      }
      width = l->units * (l->bidirectional ? 2 : 1);
    } else if (const auto* d = std::get_if<DenseSoftmaxSpec>(&spec.layers[i])) {
      const auto* p = std::get_if<DenseParams>(&params.layers[i]);
      if (!p || p->weights.rows() != d->classes || p->weights.cols() != width || p->bias.size() != d->classes) {
        throw Error(ErrorKind::ShapeMismatch, "dense layer " + std::to_string(i));
      }
    } else if (!std::holds_alternative<std::monostate>(params.layers[i])) {
      throw Error(ErrorKind::ShapeMismatch, "layer " + std::to_string(i));
    }
  }
}

// Forward / backward -----------------------------------------------------

inline Eigen::MatrixXd softmax_columns(const Eigen::MatrixXd& logits) {
  Eigen::MatrixXd p = logits;
  for (Eigen::Index n = 0; n < p.cols(); ++n) {
    p.col(n).array() -= p.col(n).maxCoeff();
    p.col(n) = p.col(n).array().exp().matrix();
    p.col(n) /= p.col(n).sum();
  }
  return p;
}

/// Inverted-dropout mask: 0 with probability `rate`, else 1 / (1 - rate).
inline Eigen::MatrixXd dropout_mask(Eigen::Index rows, Eigen::Index cols, double rate, Rng& rng) {
  const double keep = 1.0 - rate;
  Eigen::MatrixXd mask(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c)
    for (Eigen::Index r = 0; r < rows; ++r) mask(r, c) = rng.uniform() < keep ? 1.0 / keep : 0.0;
  return mask;
}

struct RecurrentCache {
  LstmCache forward;
  std::optional<LstmCache> backward;
  bool return_sequences = false;
  Eigen::Index units = 0;
};

struct DropoutCache {
  Sequence masks;  // empty when dropout was inactive
};

struct DenseCache {
  Eigen::MatrixXd input;
};

using LayerCache = std::variant<RecurrentCache, DropoutCache, DenseCache>;

struct ForwardResult {
  Eigen::MatrixXd probabilities;  // K x N, one column per sample
  std::vector<LayerCache> caches;
};

/// Runs the stack. Dropout is active only in train mode, with inverted
/// scaling; its masks are drawn from `seed` in layer, step, element order.
inline ForwardResult forward(const NetworkSpec& spec, const NetworkParams& params, const Sequence& batch, bool train_mode,
                             std::uint64_t seed) {
  if (static_cast<int>(batch.size()) != spec.window_len) {
    throw Error(ErrorKind::ShapeMismatch, "batch has " + std::to_string(batch.size()) + " steps, model expects " +
                                              std::to_string(spec.window_len));
  }
  for (const auto& x : batch) {
    if (x.rows() != spec.feature_dim) throw Error(ErrorKind::ShapeMismatch, "feature dimension differs from model");
  }
  Rng rng(seed);
  ForwardResult result;
  Sequence current = batch;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    if (const auto* l = std::get_if<LstmLayerSpec>(&spec.layers[i])) {
      const auto& p = std::get<RecurrentParams>(params.layers[i]);
      RecurrentCache cache;
      cache.return_sequences = l->return_sequences;
      cache.units = l->units;
      auto fwd = lstm_forward(p.forward, current, false);
      std::optional<LstmResult> bwd;
      if (p.backward) bwd = lstm_forward(*p.backward, current, true);
      const std::size_t steps = current.size();
      Sequence out;
      auto stack = [&](const Eigen::MatrixXd& hf, const Eigen::MatrixXd* hb) {
        if (!hb) return hf;
        Eigen::MatrixXd m(hf.rows() + hb->rows(), hf.cols());
        m << hf, *hb;
        return m;
      };
      if (l->return_sequences) {
        out.reserve(steps);
        for (std::size_t t = 0; t < steps; ++t) out.push_back(stack(fwd.hidden[t], bwd ? &bwd->hidden[t] : nullptr));
      } else {
        out.push_back(stack(fwd.hidden[steps - 1], bwd ? &bwd->hidden[0] : nullptr));
      }
      cache.forward = std::move(fwd.cache);
      if (bwd) cache.backward = std::move(bwd->cache);
      result.caches.emplace_back(std::move(cache));
      current = std::move(out);
    } else if (const auto* d = std::get_if<DropoutSpec>(&spec.layers[i])) {
      DropoutCache cache;
      if (train_mode && d->rate > 0.0) {
        for (auto& x : current) {
          Eigen::MatrixXd mask = dropout_mask(x.rows(), x.cols(), d->rate, rng);
          x = x.cwiseProduct(mask);
          cache.masks.push_back(std::move(mask));
        }
      }
      result.caches.emplace_back(std::move(cache));
    } else {
      const auto& p = std::get<DenseParams>(params.layers[i]);
      const Eigen::MatrixXd& h = current.front();
      Eigen::MatrixXd logits = p.weights * h;
      logits.colwise() += p.bias;
      result.probabilities = softmax_columns(logits);
      result.caches.emplace_back(DenseCache{h});
    }
  }
  return result;
}

inline constexpr double kLogEpsilon = 1e-12;

/// Mean categorical cross-entropy, -sum y log(p + 1e-12), over the batch.
inline double cross_entropy(const Eigen::MatrixXd& probabilities, const Eigen::MatrixXd& targets) {
  const double n = static_cast<double>(probabilities.cols());
  return -(targets.array() * (probabilities.array() + kLogEpsilon).log()).sum() / n;
}

/// d cross_entropy / d logits for softmax outputs `probabilities`. Goes
/// through dL/dp and the softmax Jacobian so the log epsilon stays exact.
inline Eigen::MatrixXd cross_entropy_logit_grad(const Eigen::MatrixXd& probabilities, const Eigen::MatrixXd& targets) {
  const auto& p = probabilities;
  const double n = static_cast<double>(p.cols());
  const Eigen::ArrayXXd dp = -targets.array() / (p.array() + kLogEpsilon) / n;
  const Eigen::RowVectorXd inner = (dp * p.array()).colwise().sum().matrix();
  return (p.array() * (dp.rowwise() - inner.array())).matrix();
}

struct LossAndGrads {
  double loss = 0.0;
  Eigen::MatrixXd probabilities;
  NetworkParams grads;
};

/// Loss plus exact gradients of every parameter, by full backpropagation
/// through time in both directions. Dropout masks are replayed from `seed`.
inline LossAndGrads loss_and_grads(const NetworkSpec& spec, const NetworkParams& params, const Sequence& batch,
                                   const Eigen::MatrixXd& targets, bool train_mode, std::uint64_t seed) {
  auto fwd = forward(spec, params, batch, train_mode, seed);
  const auto& p = fwd.probabilities;
  if (targets.rows() != p.rows() || targets.cols() != p.cols()) {
    throw Error(ErrorKind::ShapeMismatch, "targets must be K x N to match the batch");
  }
  LossAndGrads out;
  out.loss = cross_entropy(p, targets);
  out.grads = params.zeros_like();

  const Eigen::MatrixXd d_logits = cross_entropy_logit_grad(p, targets);

  Sequence grad;
  for (std::size_t i = spec.layers.size(); i-- > 0;) {
    if (std::holds_alternative<DenseSoftmaxSpec>(spec.layers[i])) {
      const auto& cache = std::get<DenseCache>(fwd.caches[i]);
      const auto& w = std::get<DenseParams>(params.layers[i]);
      auto& g = std::get<DenseParams>(out.grads.layers[i]);
      g.weights.noalias() += d_logits * cache.input.transpose();
      g.bias += d_logits.rowwise().sum();
      grad = {w.weights.transpose() * d_logits};
    } else if (std::holds_alternative<DropoutSpec>(spec.layers[i])) {
      const auto& cache = std::get<DropoutCache>(fwd.caches[i]);
      for (std::size_t t = 0; t < cache.masks.size(); ++t) grad[t] = grad[t].cwiseProduct(cache.masks[t]);
    } else {
      const auto& cache = std::get<RecurrentCache>(fwd.caches[i]);
      const auto& w = std::get<RecurrentParams>(params.layers[i]);
      auto& g = std::get<RecurrentParams>(out.grads.layers[i]);
      const std::size_t steps = cache.forward.inputs.size();
      const Eigen::Index u = cache.units;
      Sequence d_fwd(steps), d_bwd(steps);
      if (cache.return_sequences) {
        for (std::size_t t = 0; t < steps; ++t) {
          d_fwd[t] = grad[t].topRows(u);
          if (cache.backward) d_bwd[t] = grad[t].bottomRows(u);
        }
      } else {
        d_fwd[steps - 1] = grad.front().topRows(u);
        if (cache.backward) d_bwd[0] = grad.front().bottomRows(u);
      }
      Sequence dx = lstm_backward(w.forward, cache.forward, d_fwd, g.forward);
      if (cache.backward) {
        const Sequence dxb = lstm_backward(*w.backward, *cache.backward, d_bwd, *g.backward);
        for (std::size_t t = 0; t < steps; ++t) dx[t] += dxb[t];
      }
      grad = std::move(dx);
    }
  }
  out.probabilities = std::move(fwd.probabilities);
  return out;
}

/// Gathers sample matrices (each T x D) into a batch sequence.
template <typename Range, typename Proj>
Sequence make_batch(const Range& samples, Proj&& matrix_of) {
  Sequence seq;
  const auto n = static_cast<Eigen::Index>(std::size(samples));
  if (n == 0) return seq;
  const Eigen::MatrixXd& first = matrix_of(*std::begin(samples));
  seq.assign(static_cast<std::size_t>(first.rows()), Eigen::MatrixXd(first.cols(), n));
  Eigen::Index col = 0;
  for (const auto& s : samples) {
    const Eigen::MatrixXd& m = matrix_of(s);
    if (m.rows() != first.rows() || m.cols() != first.cols()) throw Error(ErrorKind::ShapeMismatch, "ragged batch");
    for (Eigen::Index t = 0; t < m.rows(); ++t) seq[static_cast<std::size_t>(t)].col(col) = m.row(t).transpose();
    ++col;
  }
  return seq;
}

}  // namespace exrec::seqnet
