#include <catch_amalgamated.hpp>

#include <cmath>

#include "exrec/rng.hpp"
#include "exrec/seqnet/lstm.hpp"

using namespace exrec;
using namespace exrec::seqnet;

namespace {

LstmLayerParams random_params(Eigen::Index units, Eigen::Index dim, Rng& rng, double scale = 0.5) {
  auto p = LstmLayerParams::zeros(units, dim);
  for (auto* m : {&p.input_weights, &p.recurrent_weights})
    for (Eigen::Index i = 0; i < m->size(); ++i) m->data()[i] = rng.uniform(-scale, scale);
  for (Eigen::Index i = 0; i < p.bias.size(); ++i) p.bias(i) = rng.uniform(-scale, scale);
  return p;
}

Eigen::MatrixXd random_inputs(Eigen::Index steps, Eigen::Index dim, Rng& rng) {
  Eigen::MatrixXd x(steps, dim);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.uniform(-1, 1);
  return x;
}

double sig(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

TEST_CASE("zero weights and inputs give zero hidden states", "[lstm]") {
  const auto p = LstmLayerParams::zeros(3, 2);
  const Eigen::MatrixXd h = lstm_forward(p, Eigen::MatrixXd::Zero(4, 2), false);
  REQUIRE(h.rows() == 4);
  REQUIRE(h.cols() == 3);
  CHECK(h.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("matches a straight-line scalar recurrence", "[lstm][oracle]") {
  // U = 2, D = 1, T = 3 with hand-set weights
  LstmLayerParams p = LstmLayerParams::zeros(2, 1);
  p.input_weights << 0.5, -0.3, 0.8, 0.1, -0.6, 0.4, 0.2, -0.9;
  p.recurrent_weights << 0.1, 0.2, -0.3, 0.4, 0.5, -0.6, 0.7, 0.8, -0.1, 0.3, 0.2, -0.2, 0.6, 0.05, -0.4, 0.9;
  p.bias << 0.01, -0.02, 1.0, 1.0, 0.0, 0.1, -0.1, 0.2;
  const double xs[3] = {0.7, -1.2, 0.3};

  double h[2] = {0, 0}, c[2] = {0, 0};
  double expected[3][2];
  for (int t = 0; t < 3; ++t) {
    double z[8];
    for (int r = 0; r < 8; ++r) z[r] = p.input_weights(r, 0) * xs[t] + p.recurrent_weights(r, 0) * h[0] + p.recurrent_weights(r, 1) * h[1] + p.bias(r);
    double nh[2];
    for (int u = 0; u < 2; ++u) {
      const double ig = sig(z[u]), fg = sig(z[2 + u]), gg = std::tanh(z[4 + u]), og = sig(z[6 + u]);
      c[u] = fg * c[u] + ig * gg;
      nh[u] = og * std::tanh(c[u]);
    }
    h[0] = nh[0];
    h[1] = nh[1];
    expected[t][0] = h[0];
    expected[t][1] = h[1];
  }

  Eigen::MatrixXd x(3, 1);
  x << xs[0], xs[1], xs[2];
  const Eigen::MatrixXd got = lstm_forward(p, x, false);
  for (int t = 0; t < 3; ++t)
    for (int u = 0; u < 2; ++u) CHECK(std::abs(got(t, u) - expected[t][u]) < 1e-12);
}

TEST_CASE("reverse pass on a palindrome is the time reversal of the forward pass", "[lstm]") {
  Rng rng(2);
  const auto p = random_params(3, 2, rng);
  Eigen::MatrixXd x(5, 2);
  x << 0.1, 0.2, -0.5, 0.3, 0.9, -0.7, -0.5, 0.3, 0.1, 0.2;
  const Eigen::MatrixXd f = lstm_forward(p, x, false);
  const Eigen::MatrixXd r = lstm_forward(p, x, true);
  CHECK((r - f.colwise().reverse()).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("bidirectional composition", "[lstm][bilstm]") {
  Rng rng(7);
  const auto fwd = random_params(3, 4, rng);
  const auto bwd = random_params(3, 4, rng);
  const auto x = random_inputs(6, 4, rng);
  const Eigen::MatrixXd out = bilstm_forward(fwd, bwd, x);
  REQUIRE(out.cols() == 6);

  SECTION("equals forward LSTM and LSTM over the reversed input, re-reversed") {
    const Eigen::MatrixXd hf = lstm_forward(fwd, x, false);
    const Eigen::MatrixXd reversed_input = x.colwise().reverse();
    const Eigen::MatrixXd hb = lstm_forward(bwd, reversed_input, false).colwise().reverse();
    CHECK(out.leftCols(3) == hf);
    CHECK(out.rightCols(3) == hb);
  }
  SECTION("zeroed backward weights") {
    const Eigen::MatrixXd z = bilstm_forward(fwd, LstmLayerParams::zeros(3, 4), x);
    CHECK(z.leftCols(3) == lstm_forward(fwd, x, false));
    CHECK(z.rightCols(3).cwiseAbs().maxCoeff() == 0.0);
  }
  SECTION("unit mismatch") { CHECK_THROWS_AS(bilstm_forward(fwd, LstmLayerParams::zeros(2, 4), x), Error); }
}

TEST_CASE("shape errors", "[lstm]") {
  const auto p = LstmLayerParams::zeros(2, 3);
  CHECK_THROWS_AS(lstm_forward(p, Eigen::MatrixXd::Zero(4, 2), false), Error);
  CHECK_THROWS_AS(lstm_forward(p, Eigen::MatrixXd::Zero(0, 3), false), Error);
}

TEST_CASE("batched forward equals per-sample forward", "[lstm]") {
  Rng rng(9);
  const auto p = random_params(4, 3, rng);
  std::vector<Eigen::MatrixXd> samples;
  for (int n = 0; n < 3; ++n) samples.push_back(random_inputs(5, 3, rng));
  Sequence batch(5, Eigen::MatrixXd(3, 3));
  for (int n = 0; n < 3; ++n)
    for (int t = 0; t < 5; ++t) batch[t].col(n) = samples[n].row(t).transpose();
  for (bool reverse : {false, true}) {
    const auto out = lstm_forward(p, batch, reverse).hidden;
    for (int n = 0; n < 3; ++n) {
      const Eigen::MatrixXd single = lstm_forward(p, samples[n], reverse);
      for (int t = 0; t < 5; ++t) CHECK((out[t].col(n) - single.row(t).transpose()).cwiseAbs().maxCoeff() < 1e-14);
    }
  }
}
