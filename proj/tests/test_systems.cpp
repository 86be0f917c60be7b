#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "sympflow/systems.hpp"

using namespace sympflow;

namespace {

PhasePoint random_point(int d, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  PhasePoint x{std::vector<double>(d), std::vector<double>(d)};
  for (auto& v : x.q) v = u(rng);
  for (auto& v : x.p) v = u(rng);
  return x;
}

std::vector<SystemSpec> all_systems() {
  return {SystemSpec(HarmonicOscillator{1.0, 1.0}), SystemSpec(HarmonicOscillator{2.0, 0.5}),
          SystemSpec(HenonHeiles{}), SystemSpec(DampedAugmented{1.0, 1.0, 0.3}),
          SystemSpec(DampedAugmented{1.5, 2.0, 0.8})};
}

}  // namespace

TEST_SUITE("systems") {
  TEST_CASE("Hamiltonian values") {
    CHECK(hamiltonian(HarmonicOscillator{1.0, 1.0}, PhasePoint{{1.0}, {0.0}}) == 0.5);
    const double h0 = hamiltonian(HenonHeiles{}, PhasePoint{{0.3, -0.3}, {0.3, 0.0}});
    // 0.5 (0.09) + 0.5 (0.09 + 0.09) + 0.09 (-0.3) + 0.027 / 3
    CHECK(h0 == doctest::Approx(0.117).epsilon(1e-14));
    const SystemSpec damped(DampedAugmented{1.0, 2.0, 0.7});
    CHECK(hamiltonian(damped, embed_physical(0.8, -0.4)) == 0.0);
  }

  TEST_CASE("vector field values") {
    CHECK(vector_field(HarmonicOscillator{1.0, 1.0}, PhasePoint{{1.0}, {0.0}}) == std::vector<double>{0.0, -1.0});
    CHECK(vector_field(HenonHeiles{}, PhasePoint{{0.0, 0.0}, {0.0, 0.0}}) == std::vector<double>(4, 0.0));
  }

  TEST_CASE("vector field is J grad H for every system") {
    std::mt19937_64 rng(1);
    for (const auto& sys : all_systems()) {
      for (int n = 0; n < 20; ++n) {
        const auto x = random_point(sys.half_dim(), rng);
        const auto g = oracle::gradient(
            [&](const std::vector<double>& y) { return hamiltonian(sys, split(y)); }, flatten(x), 1e-5);
        CHECK(oracle::close(vector_field(sys, x), apply_symplectic(g), 1e-6, 1e-9));
      }
    }
  }

  TEST_CASE("physical limit projection") {
    const PhasePoint x{{1.0, 0.0}, {2.0, 0.0}};
    CHECK(physical_limit_project(x) == PhasePoint{{0.5, 0.5}, {1.0, -1.0}});
    CHECK(embed_physical(0.0, 0.0) == PhasePoint{{0.0, 0.0}, {0.0, 0.0}});
    CHECK(embed_physical(1.0, 0.5) == PhasePoint{{1.0, 1.0}, {0.5, -0.5}});
    CHECK(physical_limit_project(embed_physical(0.3, -0.9)) == embed_physical(0.3, -0.9));
    std::mt19937_64 rng(2);
    for (int n = 0; n < 100; ++n) {
      const auto once = physical_limit_project(random_point(2, rng));
      CHECK(physical_limit_project(once) == once);
    }
    CHECK_THROWS_AS(physical_limit_project(PhasePoint{{1.0}, {0.0}}), InvalidInput);
  }

  TEST_CASE("the physical limit subspace is invariant") {
    std::mt19937_64 rng(3);
    const SystemSpec sys(DampedAugmented{1.3, 0.7, 0.4});
    for (int n = 0; n < 50; ++n) {
      const auto f = vector_field(sys, physical_limit_project(random_point(2, rng)));
      CHECK(std::abs(f[0] - f[1]) < 1e-14);
      CHECK(std::abs(f[2] + f[3]) < 1e-14);
    }
  }

  TEST_CASE("analytic oscillator solutions") {
    const SystemSpec sho(HarmonicOscillator{1.0, 1.0});
    const auto period = analytic_solution(sho, PhasePoint{{1.0}, {0.0}}, 2 * std::numbers::pi);
    CHECK(std::abs(period.q[0] - 1.0) < 1e-12);
    CHECK(std::abs(period.p[0]) < 1e-12);
    const auto quarter = analytic_solution(sho, PhasePoint{{1.0}, {0.0}}, std::numbers::pi / 2);
    CHECK(std::abs(quarter.q[0]) < 1e-12);
    CHECK(std::abs(quarter.p[0] + 1.0) < 1e-12);
  }

  TEST_CASE("damped closed form satisfies the equation of motion") {
    const double lambda = 0.5;
    const SystemSpec sys(DampedAugmented{1.0, 1.0, lambda});
    const PhasePoint x0{{1.0}, {0.0}};
    auto q = [&](double t) { return analytic_solution(sys, x0, t).q[0]; };
    const double e = 1e-4;
    for (double t : {0.3, 1.0, 2.7, 6.0}) {
      const double qdot = (q(t + e) - q(t - e)) / (2 * e);
      const double qddot = (q(t + e) - 2 * q(t) + q(t - e)) / (e * e);
      CHECK(std::abs(qddot + lambda * qdot + q(t)) < 1e-6);
      const auto s = analytic_solution(sys, x0, t);
      CHECK(std::abs(s.p[0] - qdot) < 1e-8);
    }
    CHECK(analytic_solution(sys, x0, 0.0) == x0);
    const auto later = analytic_solution(sys, PhasePoint{{0.7}, {-0.2}}, 0.0);
    CHECK(later.q[0] == doctest::Approx(0.7).epsilon(1e-15));
    CHECK(later.p[0] == doctest::Approx(-0.2).epsilon(1e-15));
  }

  TEST_CASE("unsupported analytic cases and bad dimensions") {
    CHECK_THROWS_AS(analytic_solution(DampedAugmented{1.0, 1.0, 3.0}, PhasePoint{{1.0}, {0.0}}, 1.0),
                    UnsupportedCase);
    CHECK_THROWS_AS(analytic_solution(HenonHeiles{}, PhasePoint{{1.0, 0.0}, {0.0, 0.0}}, 1.0), UnsupportedCase);
    CHECK_THROWS_AS(hamiltonian(HenonHeiles{}, PhasePoint{{1.0}, {0.0}}), InvalidInput);
    CHECK_THROWS_AS(vector_field(HarmonicOscillator{}, PhasePoint{{1.0, 2.0}, {0.0, 0.0}}), InvalidInput);
  }
}
