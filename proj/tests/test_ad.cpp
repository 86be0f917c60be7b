#include <cmath>

#include "doctest.h"
#include "sympflow/ad.hpp"

using sympflow::ad::Tape;
using sympflow::ad::TapeScope;
using sympflow::ad::Var;

TEST_SUITE("reverse mode") {
  TEST_CASE("gradient of a small expression") {
    Tape tape;
    TapeScope scope(tape);
    const Var x = Var::leaf(0.7);
    const Var y = Var::leaf(-1.3);
    const Var f = tanh(x * y) + square(x) / y - 3.0 * x;
    std::vector<double> adj;
    tape.backward(f.i, 1.0, adj);
    const double s = 1.0 - std::tanh(0.7 * -1.3) * std::tanh(0.7 * -1.3);
    CHECK(adj[0] == doctest::Approx(s * -1.3 + 2 * 0.7 / -1.3 - 3.0).epsilon(1e-14));
    CHECK(adj[1] == doctest::Approx(s * 0.7 - 0.49 / (1.69)).epsilon(1e-14));
  }

  TEST_CASE("constants record nothing") {
    Tape tape;
    TapeScope scope(tape);
    const Var a(2.0), b(3.0);
    const Var c = a * b + tanh(a);
    CHECK(c.is_constant());
    CHECK(tape.size() == 0);
  }

  TEST_CASE("dot product node and truncation") {
    Tape tape;
    TapeScope scope(tape);
    std::vector<Var> a{Var::leaf(1.0), Var::leaf(2.0), Var(3.0)};
    std::vector<Var> b{Var(4.0), Var::leaf(5.0), Var::leaf(6.0)};
    const auto base = tape.size();
    const Var d = sympflow::ad::dot(a.data(), 1, b.data(), 1, 3, Var(0.5));
    CHECK(d.v == doctest::Approx(4 + 10 + 18 + 0.5));
    std::vector<double> adj;
    tape.backward(d.i, 2.0, adj);
    // leaves in creation order: a0, a1, b1, b2
    CHECK(adj[0] == 8.0);
    CHECK(adj[1] == 10.0);
    CHECK(adj[2] == 4.0);
    CHECK(adj[3] == 6.0);
    tape.truncate(base);
    CHECK(tape.size() == base);
    CHECK(tape.edge_count() == 0);
  }
}
