#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "exrec/error.hpp"

namespace exrec::seqnet {

/// Adam with bias correction folded into the step size:
///   lr_t  = lr * sqrt(1 - beta2^t) / (1 - beta1^t)
///   theta -= lr_t * m / (sqrt(v) + epsilon)
struct AdamState {
  std::vector<std::vector<double>> first_moment;
  std::vector<std::vector<double>> second_moment;
  std::uint64_t step = 0;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  AdamState() = default;

  template <typename Span>
  AdamState(const std::vector<Span>& params, double lr) : learning_rate(lr) {
    for (const auto& p : params) {
      first_moment.emplace_back(p.size(), 0.0);
      second_moment.emplace_back(p.size(), 0.0);
    }
  }
};

inline void adam_step(AdamState& state, const std::vector<std::span<double>>& params,
                      const std::vector<std::span<const double>>& grads) {
  if (params.size() != grads.size() || params.size() != state.first_moment.size()) {
    throw Error(ErrorKind::ShapeMismatch, "optimizer state, parameters and gradients differ in tensor count");
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (params[k].size() != grads[k].size() || params[k].size() != state.first_moment[k].size()) {
      throw Error(ErrorKind::ShapeMismatch, "tensor " + std::to_string(k) + " size differs");
    }
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double step_size =
      state.learning_rate * std::sqrt(1.0 - std::pow(state.beta2, t)) / (1.0 - std::pow(state.beta1, t));
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto& m = state.first_moment[k];
    auto& v = state.second_moment[k];
    const auto g = grads[k];
    const auto p = params[k];
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g[i];
      v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g[i] * g[i];
      p[i] -= step_size * m[i] / (std::sqrt(v[i]) + state.epsilon);
    }
  }
}

}  // namespace exrec::seqnet
