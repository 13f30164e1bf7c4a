#include <catch_amalgamated.hpp>

#include <cmath>

#include "exrec/rng.hpp"
#include "exrec/seqnet/adam.hpp"

using namespace exrec;
using namespace exrec::seqnet;

namespace {

std::vector<std::span<const double>> const_views(const std::vector<std::vector<double>>& grads) {
  std::vector<std::span<const double>> out;
  for (const auto& g : grads) out.emplace_back(g);
  return out;
}

}  // namespace

TEST_CASE("zero gradients leave parameters unchanged", "[adam]") {
  std::vector<double> a{0.5, -1.0, 2.0}, b{3.0};
  std::vector<std::span<double>> params{a, b};
  AdamState state(params, 1e-3);
  const std::vector<std::vector<double>> grads{{0, 0, 0}, {0}};
  adam_step(state, params, const_views(grads));
  CHECK(state.step == 1);
  CHECK(a == std::vector<double>{0.5, -1.0, 2.0});
  CHECK(b[0] == 3.0);
}

TEST_CASE("first step matches the closed form", "[adam]") {
  Rng rng(4);
  std::vector<double> theta(50), start;
  for (double& t : theta) t = rng.uniform(-1, 1);
  start = theta;
  std::vector<std::vector<double>> grads(1, std::vector<double>(50));
  for (double& g : grads[0]) g = rng.uniform(-2, 2) * std::pow(10.0, rng.uniform(-9, 0));
  std::vector<std::span<double>> params{theta};
  AdamState state(params, 4e-4);
  adam_step(state, params, const_views(grads));
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double g = grads[0][i];
    const double expected = -4e-4 * g / (std::abs(g) + 1e-8 / std::sqrt(1.0 - 0.999));
    CHECK(std::abs((theta[i] - start[i]) - expected) <= 1e-15 + 1e-10 * std::abs(expected));
  }
}

TEST_CASE("constant gradient drives the step size to the learning rate", "[adam]") {
  for (double g : {0.37, -5.0, 1e-3}) {
    std::vector<double> theta{0.0};
    std::vector<std::span<double>> params{theta};
    AdamState state(params, 1e-3);
    const std::vector<std::vector<double>> grads{{g}};
    double last = 0.0;
    for (int t = 0; t < 10000; ++t) {
      const double before = theta[0];
      adam_step(state, params, const_views(grads));
      last = theta[0] - before;
    }
    CHECK(std::abs(std::abs(last) - 1e-3) < 1e-3 * 1e-3);
    CHECK((last < 0) == (g > 0));
  }
}

TEST_CASE("shape mismatch", "[adam]") {
  std::vector<double> a(3), b(2);
  std::vector<std::span<double>> params{a};
  AdamState state(params, 1e-3);
  const std::vector<std::vector<double>> wrong_size{{0, 0}};
  CHECK_THROWS_AS(adam_step(state, params, const_views(wrong_size)), Error);
  std::vector<std::span<double>> two{a, b};
  const std::vector<std::vector<double>> grads2{{0, 0, 0}, {0, 0}};
  CHECK_THROWS_AS(adam_step(state, two, const_views(grads2)), Error);
  CHECK(state.step == 0);
}
