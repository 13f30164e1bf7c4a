#pragma once

#include <Eigen/Core>

#include <cmath>
#include <string>
#include <vector>

#include "exrec/error.hpp"

namespace exrec::seqnet {

/// A batch of sequences: one matrix per time step, features x batch (one
/// column per sample).
using Sequence = std::vector<Eigen::MatrixXd>;

inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

/// Weights of one LSTM direction. Gate blocks are stacked in the order
/// input, forget, cell, output.
struct LstmLayerParams {
  Eigen::MatrixXd input_weights;      // 4U x D
  Eigen::MatrixXd recurrent_weights;  // 4U x U
  Eigen::VectorXd bias;               // 4U

  Eigen::Index units() const { return recurrent_weights.cols(); }
  Eigen::Index input_dim() const { return input_weights.cols(); }

  static LstmLayerParams zeros(Eigen::Index units, Eigen::Index input_dim) {
    return {Eigen::MatrixXd::Zero(4 * units, input_dim), Eigen::MatrixXd::Zero(4 * units, units),
            Eigen::VectorXd::Zero(4 * units)};
  }

  void check() const {
    const auto u = units();
    if (recurrent_weights.rows() != 4 * u || input_weights.rows() != 4 * u || bias.size() != 4 * u) {
      throw Error(ErrorKind::ShapeMismatch, "LSTM parameters disagree on unit count");
    }
  }
};

struct LstmCache {
  bool reverse = false;
  Sequence inputs;
  Sequence gates;  // activated [i; f; g; o], indexed by time
  Sequence cells;
  Sequence cell_tanh;
  Sequence hidden;
};

struct LstmResult {
  Sequence hidden;  // U x N per step, in forward time order
  LstmCache cache;
};

/// Runs one LSTM direction from a zero state. With `reverse` the sequence is
/// consumed from the last step to the first; outputs stay time-aligned.
inline LstmResult lstm_forward(const LstmLayerParams& params, const Sequence& inputs, bool reverse) {
  params.check();
  if (inputs.empty()) throw Error(ErrorKind::ShapeMismatch, "empty sequence");
  const auto steps = inputs.size();
  const auto units = params.units();
  const auto batch = inputs.front().cols();

  LstmResult result;
  auto& cache = result.cache;
  cache.reverse = reverse;
  cache.inputs = inputs;
  cache.gates.resize(steps);
  cache.cells.resize(steps);
  cache.cell_tanh.resize(steps);
  cache.hidden.resize(steps);

  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(units, batch);
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(units, batch);
  for (std::size_t s = 0; s < steps; ++s) {
    const std::size_t t = reverse ? steps - 1 - s : s;
    const auto& x = inputs[t];
    if (x.rows() != params.input_dim() || x.cols() != batch) {
      throw Error(ErrorKind::ShapeMismatch, "LSTM input is " + std::to_string(x.rows()) + "x" + std::to_string(x.cols()) +
                                                ", expected " + std::to_string(params.input_dim()) + " rows");
    }
    Eigen::MatrixXd z = params.input_weights * x;
    z.noalias() += params.recurrent_weights * h;
    z.colwise() += params.bias;

    z.topRows(2 * units) = z.topRows(2 * units).unaryExpr(&sigmoid);
    z.middleRows(2 * units, units) = z.middleRows(2 * units, units).array().tanh();
    z.bottomRows(units) = z.bottomRows(units).unaryExpr(&sigmoid);

    const auto i = z.topRows(units).array();
    const auto f = z.middleRows(units, units).array();
    const auto g = z.middleRows(2 * units, units).array();
    const auto o = z.bottomRows(units).array();
    c = (f * c.array() + i * g).matrix();
    Eigen::MatrixXd tc = c.array().tanh().matrix();
    h = (o * tc.array()).matrix();

    cache.gates[t] = std::move(z);
    cache.cells[t] = c;
    cache.cell_tanh[t] = std::move(tc);
    cache.hidden[t] = h;
  }
  result.hidden = cache.hidden;
  return result;
}

/// Backpropagation through time for one direction. `d_hidden` holds the
/// loss gradient w.r.t. each step's output (empty entries mean zero).
/// Parameter gradients are accumulated into `grads`; returns d inputs.
inline Sequence lstm_backward(const LstmLayerParams& params, const LstmCache& cache, const Sequence& d_hidden,
                              LstmLayerParams& grads) {
  const auto steps = cache.inputs.size();
  if (d_hidden.size() != steps) throw Error(ErrorKind::ShapeMismatch, "gradient sequence length differs from input");
  const auto units = params.units();
  const auto batch = cache.inputs.front().cols();

  Sequence d_inputs(steps);
  Eigen::MatrixXd dh_next = Eigen::MatrixXd::Zero(units, batch);
  Eigen::MatrixXd dc_next = Eigen::MatrixXd::Zero(units, batch);
  Eigen::MatrixXd dz(4 * units, batch);

  for (std::size_t s = steps; s-- > 0;) {
    const std::size_t t = cache.reverse ? steps - 1 - s : s;
    const bool has_prev = s > 0;
    const std::size_t tp = cache.reverse ? t + 1 : t - 1;

    Eigen::MatrixXd dh = dh_next;
    if (d_hidden[t].size() != 0) dh += d_hidden[t];

    const auto& z = cache.gates[t];
    const auto i = z.topRows(units).array();
    const auto f = z.middleRows(units, units).array();
    const auto g = z.middleRows(2 * units, units).array();
    const auto o = z.bottomRows(units).array();
    const auto tc = cache.cell_tanh[t].array();

    const Eigen::ArrayXXd d_o = dh.array() * tc;
    const Eigen::ArrayXXd dc = dh.array() * o * (1.0 - tc.square()) + dc_next.array();

    dz.topRows(units) = (dc * g * i * (1.0 - i)).matrix();
    if (has_prev) {
      dz.middleRows(units, units) = (dc * cache.cells[tp].array() * f * (1.0 - f)).matrix();
    } else {
      dz.middleRows(units, units).setZero();
    }
    dz.middleRows(2 * units, units) = (dc * i * (1.0 - g.square())).matrix();
    dz.bottomRows(units) = (d_o * o * (1.0 - o)).matrix();

    grads.input_weights.noalias() += dz * cache.inputs[t].transpose();
    if (has_prev) grads.recurrent_weights.noalias() += dz * cache.hidden[tp].transpose();
    grads.bias += dz.rowwise().sum();

    d_inputs[t].noalias() = params.input_weights.transpose() * dz;
    dh_next.noalias() = params.recurrent_weights.transpose() * dz;
    dc_next = (dc * f).matrix();
  }
  return d_inputs;
}

/// T x D sample matrix -> single-column sequence.
inline Sequence as_sequence(const Eigen::MatrixXd& sample) {
  Sequence seq(static_cast<std::size_t>(sample.rows()));
  for (Eigen::Index t = 0; t < sample.rows(); ++t) seq[static_cast<std::size_t>(t)] = sample.row(t).transpose();
  return seq;
}

/// Single-column sequence -> T x U matrix.
inline Eigen::MatrixXd as_matrix(const Sequence& seq) {
  if (seq.empty()) return {};
  Eigen::MatrixXd out(static_cast<Eigen::Index>(seq.size()), seq.front().rows());
  for (std::size_t t = 0; t < seq.size(); ++t) out.row(static_cast<Eigen::Index>(t)) = seq[t].col(0).transpose();
  return out;
}

/// Single-sample form: inputs is T x D, returns T x U.
inline Eigen::MatrixXd lstm_forward(const LstmLayerParams& params, const Eigen::MatrixXd& inputs, bool reverse) {
  if (inputs.rows() < 1) throw Error(ErrorKind::ShapeMismatch, "sequence needs at least one step");
  return as_matrix(lstm_forward(params, as_sequence(inputs), reverse).hidden);
}

/// Per-step concatenation [forward_h; backward_h]; T x 2U.
inline Eigen::MatrixXd bilstm_forward(const LstmLayerParams& fwd, const LstmLayerParams& bwd, const Eigen::MatrixXd& inputs) {
  if (fwd.units() != bwd.units()) throw Error(ErrorKind::ShapeMismatch, "bidirectional halves differ in units");
  const Eigen::MatrixXd hf = lstm_forward(fwd, inputs, false);
  const Eigen::MatrixXd hb = lstm_forward(bwd, inputs, true);
  Eigen::MatrixXd out(inputs.rows(), 2 * fwd.units());
  out << hf, hb;
  return out;
}

}  // namespace exrec::seqnet
