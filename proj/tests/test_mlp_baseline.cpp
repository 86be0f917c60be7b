#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "sympflow/mlp_baseline.hpp"

using namespace sympflow;

namespace {

// Straight re-evaluation of x + tanh(t) N([x; t]) from the flat layout.
std::vector<double> unrolled(const MlpFlowModel& m, double t, const PhasePoint& x) {
  const auto& w = m.widths();
  const auto p = m.flat_params();
  std::vector<double> z = flatten(x);
  z.push_back(t);
  std::size_t at = 0;
  for (std::size_t l = 0; l + 1 < w.size(); ++l) {
    std::vector<double> u(static_cast<std::size_t>(w[l + 1]));
    const std::size_t bias = at + static_cast<std::size_t>(w[l] * w[l + 1]);
    for (int i = 0; i < w[l + 1]; ++i) {
      double s = p[bias + static_cast<std::size_t>(i)];
      for (int j = 0; j < w[l]; ++j) s += p[at + static_cast<std::size_t>(i * w[l] + j)] * z[static_cast<std::size_t>(j)];
      u[static_cast<std::size_t>(i)] = l + 2 < w.size() ? std::tanh(s) : s;
    }
    at = bias + static_cast<std::size_t>(w[l + 1]);
    z = u;
  }
  auto y = flatten(x);
  for (std::size_t k = 0; k < y.size(); ++k) y[k] += std::tanh(t) * z[k];
  return y;
}

}  // namespace

TEST_SUITE("mlp baseline") {
  TEST_CASE("parameter counts") {
    CHECK(MlpFlowModel(1, 5).param_count() == 392);
    CHECK(param_count(MlpFlowModel(2, 5)) == 434);
    CHECK(MlpFlowModel(1, 2).param_count() == 62);
    CHECK(MlpFlowModel(1, 5).widths() == std::vector<int>{3, 10, 10, 10, 10, 2});
  }

  TEST_CASE("identity at t = 0 and for zero weights") {
    const auto m = MlpFlowModel::random(2, 5, 10, 1);
    const PhasePoint x{{0.3, -0.1}, {0.7, 0.2}};
    CHECK(forward(m, 0.0, x) == x);
    const MlpFlowModel zero(1, 5);
    for (double t : {-1.0, 0.5, 4.0}) {
      const PhasePoint y{{t}, {0.25}};
      CHECK(forward(zero, t, y) == y);
      const auto v = time_derivative(zero, t, y);
      CHECK(v.q[0] == 0.0);
      CHECK(v.p[0] == 0.0);
    }
  }

  TEST_CASE("forward matches an unrolled re-evaluation") {
    for (int d : {1, 2}) {
      const auto m = MlpFlowModel::random(d, 5, 10, 2 + d);
      std::mt19937_64 rng(d);
      std::uniform_real_distribution<double> u(-1.2, 1.2);
      for (int n = 0; n < 10; ++n) {
        PhasePoint x{std::vector<double>(d), std::vector<double>(d)};
        for (auto& v : x.q) v = u(rng);
        for (auto& v : x.p) v = u(rng);
        const double t = u(rng);
        CHECK(oracle::close(flatten(forward(m, t, x)), unrolled(m, t, x), 1e-13, 1e-15));
      }
    }
  }

  TEST_CASE("time derivative matches central differences including large t") {
    const auto m = MlpFlowModel::random(2, 5, 10, 7);
    const PhasePoint x{{0.3, -0.1}, {0.7, 0.2}};
    for (double t : {0.2, 0.9, -0.6, 10.0}) {
      const double e = 1e-5;
      const auto a = unrolled(m, t + e, x);
      const auto b = unrolled(m, t - e, x);
      std::vector<double> fd(a.size());
      for (std::size_t k = 0; k < a.size(); ++k) fd[k] = (a[k] - b[k]) / (2 * e);
      CHECK(oracle::close(flatten(time_derivative(m, t, x)), fd, 1e-5, 1e-8));
      CHECK(oracle::close(flatten(time_derivative(m, t, x, DerivativeMode::FiniteDifference)), fd, 1e-5,
                          1e-7));
    }
  }

  TEST_CASE("dimension mismatch and bad parameter length are rejected") {
    auto m = MlpFlowModel::random(1, 3, 10, 8);
    CHECK_THROWS_AS(forward(m, 0.5, PhasePoint{{1.0, 2.0}, {0.0, 0.0}}), InvalidInput);
    CHECK_THROWS_AS(m.set_flat_params(std::vector<double>(5)), InvalidInput);
  }
}
