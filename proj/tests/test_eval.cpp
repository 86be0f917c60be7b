#include <cmath>
#include <numbers>

#include "doctest.h"
#include "oracles.hpp"
#include "sympflow/eval.hpp"

using namespace sympflow;

namespace {

const SystemSpec kSho(HarmonicOscillator{1.0, 1.0});

FlowMap exact_sho() {
  return [](double t, const PhasePoint& x) { return analytic_solution(kSho, x, t); };
}

// Exact damped flow acting on augmented points through the physical limit.
FlowMap exact_damped(const SystemSpec& sys) {
  return [sys](double t, const PhasePoint& x) {
    const auto p = physical_limit_project(x);
    const auto y = analytic_solution(sys, PhasePoint{{p.q[0]}, {p.p[0]}}, t);
    return embed_physical(y.q[0], y.p[0]);
  };
}

std::vector<DriftSample> synthetic_series(const std::function<double(double)>& drift) {
  std::vector<DriftSample> s;
  for (int i = 0; i <= 1000; ++i) {
    const double t = i;
    s.push_back({t, drift(t), t > 0 ? drift(t) / t : 0.0});
  }
  return s;
}

std::vector<TimedState> synthetic_section_path(double horizon, double step) {
  std::vector<TimedState> path;
  for (double t : time_grid(horizon, step)) path.push_back({t, PhasePoint{{std::sin(t), 0.2}, {std::cos(t), -0.1}}});
  return path;
}

}  // namespace

TEST_SUITE("rollout") {
  TEST_CASE("rollout composes window maps") {
    const auto m = SympFlowModel::random(1, 3, 10, 1);
    const PhasePoint x0{{0.6}, {-0.3}};
    CHECK(rollout(m, 1.0, 0.0, x0) == x0);
    CHECK(rollout(m, 1.0, 2.5, x0) == forward(m, 0.5, forward(m, 1.0, forward(m, 1.0, x0))));
    CHECK(rollout(m, 1.0, 3.0, x0) == forward(m, 1.0, forward(m, 1.0, forward(m, 1.0, x0))));
    for (double t : {0.1, 0.5, 0.99}) CHECK(rollout(m, 1.0, t, x0) == forward(m, t, x0));
    const auto mlp = MlpFlowModel::random(1, 3, 10, 1);
    CHECK(rollout(mlp, 0.5, 1.25, x0) == forward(mlp, 0.25, forward(mlp, 0.5, forward(mlp, 0.5, x0))));
    CHECK_THROWS_AS(rollout(m, 0.0, 1.0, x0), InvalidInput);
    CHECK_THROWS_AS(rollout(m, 1.0, -1.0, x0), InvalidInput);
  }

  TEST_CASE("rollout path agrees with individual rollouts") {
    const auto m = SympFlowModel::random(1, 2, 10, 2);
    const RolloutSpec spec{1.0, 7.3, 0.1, PhasePoint{{1.0}, {0.0}}};
    const auto path = rollout_path(flow_of(m), spec);
    REQUIRE(path.size() == 74);
    CHECK(path.front().t == 0.0);
    CHECK(path.front().x == spec.x0);
    CHECK(path.back().t == doctest::Approx(7.3));
    bool monotone = true, consistent = true;
    for (std::size_t i = 0; i < path.size(); ++i) {
      if (i > 0) monotone = monotone && path[i].t > path[i - 1].t;
      consistent = consistent && path[i].x == rollout(m, 1.0, path[i].t, spec.x0);
    }
    CHECK(monotone);
    CHECK(consistent);
    CHECK_THROWS_AS(rollout_path(flow_of(m), RolloutSpec{1.0, 7.3, 2.0, spec.x0}), InvalidInput);
  }

  TEST_CASE("projected flows stay on the physical limit") {
    const auto m = SympFlowModel::random(2, 2, 10, 3);
    const auto f = projected(flow_of(m));
    const auto y = rollout(f, 1.0, 3.5, embed_physical(1.0, 0.0));
    CHECK(y.q[0] == y.q[1]);
    CHECK(y.p[0] == -y.p[1]);
  }
}

TEST_SUITE("metrics") {
  TEST_CASE("hand-set relative error and energy variation") {
    const auto e = relative_error_of({PhasePoint{{1.1}, {0.0}}}, {PhasePoint{{1.0}, {0.0}}});
    CHECK(e.value == doctest::Approx(0.1).epsilon(1e-14));
    CHECK(e.used == 1);
    const auto skip = relative_error_of({PhasePoint{{1.1}, {0.0}}, PhasePoint{{0.2}, {0.0}}},
                                        {PhasePoint{{1.0}, {0.0}}, PhasePoint{{0.0}, {0.0}}});
    CHECK(skip.value == doctest::Approx(0.1).epsilon(1e-14));
    CHECK(skip.skipped == 1);
    const auto h = energy_variation_of(kSho, {PhasePoint{{1.0}, {0.0}}}, {PhasePoint{{1.1}, {0.0}}});
    CHECK(h.value == doctest::Approx(0.21).epsilon(1e-13));
    const auto hs = energy_variation_of(kSho, {PhasePoint{{0.0}, {0.0}}}, {PhasePoint{{1.1}, {0.0}}});
    CHECK(hs.used == 0);
    CHECK(hs.skipped == 1);
  }

  TEST_CASE("the exact flow scores zero") {
    const auto box = Box::cube(2, -1.2, 1.2);
    const auto e = avg_relative_error(exact_sho(), kSho, box, 20, 10, 1.0, 3);
    CHECK(e.value < 1e-8);
    CHECK(e.used + e.skipped == 20);
    const auto h = avg_energy_variation(exact_sho(), kSho, box, 20, 100, 1.0, 3);
    CHECK(h.value < 1e-12);
  }

  TEST_CASE("metrics match an independent re-summation") {
    const auto m = SympFlowModel::random(1, 3, 10, 4);
    const auto box = Box::cube(2, -1.2, 1.2);
    for (int k : {1, 3}) {
      const auto xs = metric_initial_conditions(box, 15, 9);
      double err = 0, var = 0;
      for (const auto& x : xs) {
        const auto y = rollout(m, 1.0, k, x);
        const auto ref = integrate(kSho, x, k).final_state();
        const auto yf = flatten(y);
        double num = 0;
        for (std::size_t j = 0; j < ref.size(); ++j) num += std::pow(yf[j] - ref[j], 2);
        err += std::sqrt(num) / norm2(ref);
        var += std::abs(hamiltonian(kSho, y) - hamiltonian(kSho, x)) / std::abs(hamiltonian(kSho, x));
      }
      CHECK(avg_relative_error(flow_of(m), kSho, box, 15, k, 1.0, 9).value == doctest::Approx(err / 15).epsilon(1e-8));
      CHECK(avg_energy_variation(flow_of(m), kSho, box, 15, k, 1.0, 9).value ==
            doctest::Approx(var / 15).epsilon(1e-12));
    }
    CHECK(avg_relative_error(flow_of(m), kSho, box, 15, 2, 1.0, 9).value ==
          avg_relative_error(flow_of(m), kSho, box, 15, 2, 1.0, 9).value);
  }

  TEST_CASE("escaping reference orbits are skipped") {
    const SystemSpec hh(HenonHeiles{});
    const auto m = SympFlowModel::random(2, 2, 10, 6);
    const auto box = Box::cube(4, -1.0, 1.0);
    const auto e = avg_relative_error(flow_of(m), hh, box, 40, 10, 1.0, 2);
    CHECK(e.used + e.skipped == 40);
    CHECK(e.skipped > 0);
    CHECK(e.used > 0);
    int escaping = 0;
    for (const auto& x : metric_initial_conditions(box, 40, 2)) {
      try {
        static_cast<void>(integrate(hh, x, 10.0));
      } catch (const StiffnessError&) {
        ++escaping;
      }
    }
    CHECK(e.skipped == escaping);
  }

  TEST_CASE("energy drift series") {
    const auto m = SympFlowModel::random(1, 2, 10, 5);
    const PhasePoint x0{{1.0}, {0.0}};
    const auto s = energy_drift_series(flow_of(m), kSho, x0, 20.0, 0.5, 1.0);
    REQUIRE(s.size() == 41);
    CHECK(s.front().drift == 0.0);
    CHECK(s.front().drift_over_t == 0.0);
    for (const auto& d : s) {
      CHECK(d.drift == hamiltonian(kSho, rollout(m, 1.0, d.t, x0)) - 0.5);
      if (d.t > 0) CHECK(d.drift_over_t == doctest::Approx(d.drift / d.t));
    }
    const auto exact = energy_drift_series(exact_sho(), kSho, x0, 100.0, 0.1, 1.0);
    double worst = 0;
    for (const auto& d : exact) worst = std::max(worst, std::abs(d.drift));
    CHECK(worst < 1e-12);
    CHECK(max_relative_drift(exact, 0.5) == worst / 0.5);
  }

  TEST_CASE("drift slope of constructed series") {
    CHECK(drift_slope(synthetic_series([](double t) { return 1e-3 * t; })) == doctest::Approx(1.0).epsilon(0.01));
    CHECK(std::abs(drift_slope(synthetic_series([](double) { return 0.02; }))) < 0.01);
    CHECK(drift_slope(synthetic_series([](double t) { return -3e-6 * t * t; })) == doctest::Approx(2.0).epsilon(0.01));
    CHECK_THROWS_AS(drift_slope(synthetic_series([](double) { return 0.0; })), InvalidInput);
  }
}

TEST_SUITE("poincare section") {
  TEST_CASE("no crossings gives an empty section") {
    std::vector<TimedState> path;
    for (double t : time_grid(50.0, 0.01)) path.push_back({t, PhasePoint{{0.1, 0.3}, {0.2, 0.0}}});
    CHECK(poincare_section(path).empty());
  }

  TEST_CASE("constructed signal crosses once per period") {
    const auto points = poincare_section(synthetic_section_path(30.0, 0.01));
    REQUIRE(points.size() == 4);
    for (std::size_t k = 0; k < points.size(); ++k) {
      CHECK(std::abs(points[k].t - 2 * std::numbers::pi * static_cast<double>(k + 1)) < 1e-5);
      CHECK(points[k].q_y == doctest::Approx(0.2).epsilon(1e-14));
      CHECK(points[k].p_y == doctest::Approx(-0.1).epsilon(1e-14));
      CHECK(points[k].x.q[0] == 0.0);
    }
    const auto refined = poincare_section(synthetic_section_path(30.0, 0.01), [](double t) {
      return PhasePoint{{std::sin(t), 0.2}, {std::cos(t), -0.1}};
    });
    REQUIRE(refined.size() == 4);
    for (std::size_t k = 0; k < refined.size(); ++k)
      CHECK(std::abs(refined[k].t - 2 * std::numbers::pi * static_cast<double>(k + 1)) < 1e-10);
  }

  TEST_CASE("reference section conserves energy") {
    const SystemSpec hh(HenonHeiles{});
    const RolloutSpec spec{1.0, 1000.0, 0.01, PhasePoint{{0.3, -0.3}, {0.3, 0.0}}};
    const auto sol = integrate(hh, spec.x0, 1000.0);
    std::vector<TimedState> path;
    for (double t : time_grid(spec.horizon, spec.step)) path.push_back({t, split(sol.state_at(t))});
    const double h0 = hamiltonian(hh, spec.x0);
    const auto refined = poincare_section(path, [&](double t) { return split(sol.state_at(t)); });
    REQUIRE(!refined.empty());
    double worst = 0;
    for (const auto& p : refined) worst = std::max(worst, std::abs(hamiltonian(hh, p.x) - h0));
    CHECK(worst < 1e-6);
    // The path-only section is close to the refined one.
    const auto linear = poincare_section(path);
    CHECK(linear.size() == refined.size());
  }
}

TEST_SUITE("damped evaluation") {
  TEST_CASE("exact damped flow has zero trajectory error") {
    const SystemSpec sys(DampedAugmented{1.0, 1.0, 0.5});
    CHECK(damped_trajectory_error(exact_damped(sys), sys, 1.0, 0.0, 10.0, 0.1, 1.0) < 1e-13);
  }

  TEST_CASE("identity flow error equals a direct RMS") {
    const SystemSpec sys(DampedAugmented{1.0, 1.0, 0.5});
    const FlowMap identity = [](double, const PhasePoint& x) { return x; };
    double sq = 0;
    int n = 0;
    for (double t : time_grid(5.0, 0.5)) {
      const auto y = analytic_solution(sys, PhasePoint{{1.0}, {0.0}}, t);
      sq += std::pow(y.q[0] - 1.0, 2) + std::pow(y.p[0], 2);
      ++n;
    }
    CHECK(damped_trajectory_error(identity, sys, 1.0, 0.0, 5.0, 0.5, 1.0) ==
          doctest::Approx(std::sqrt(sq / n)).epsilon(1e-13));
  }
}
