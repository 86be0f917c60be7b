#pragma once

// Minimal reverse-mode differentiation over a scalar expression graph.
//
// Every arithmetic operation on `Var` appends one node to the active tape
// holding the partial derivatives with respect to its operands. Operands with
// index -1 are constants and contribute no edges, so expressions mixing
// constants and variables only record what is needed. Dot products are
// recorded as a single n-ary node.
//
// The closed-form derivative kernels of the potential networks are written
// as templates over the scalar type; instantiating them with `Var` records
// the derivative computation itself, which yields exact parameter gradients
// of any loss built from those quantities.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

namespace sympflow::ad {

class Tape {
 public:
  using Index = std::int32_t;

  Tape() { starts_.push_back(0); }

  void clear() {
    starts_.assign(1, 0);
    n_edges_ = 0;
  }

  // Drops every node from index `n` on.
  void truncate(Index n) {
    starts_.resize(static_cast<std::size_t>(n) + 1);
    n_edges_ = starts_.back();
  }

  [[nodiscard]] Index size() const { return static_cast<Index>(starts_.size() - 1); }
  [[nodiscard]] std::size_t edge_count() const { return n_edges_; }

  Index leaf() {
    starts_.push_back(n_edges_);
    return size() - 1;
  }

  // Opens a node; add edges with `edge`, then `close`. Returns -1 from
  // `close` when no non-constant operand was attached. `reserve` before a
  // run of `edge` calls makes the unchecked variant safe.
  void reserve(std::size_t n) {
    if (n_edges_ + n > parents_.size()) {
      const std::size_t cap = std::max<std::size_t>(2 * parents_.size(), n_edges_ + n + 1024);
      parents_.resize(cap);
      weights_.resize(cap);
    }
  }
  void edge_unchecked(Index parent, double weight) {
    if (parent < 0) return;
    parents_[n_edges_] = parent;
    weights_[n_edges_] = weight;
    ++n_edges_;
  }
  void edge(Index parent, double weight) {
    reserve(1);
    edge_unchecked(parent, weight);
  }
  Index close() {
    if (n_edges_ == starts_.back()) return -1;
    starts_.push_back(n_edges_);
    return size() - 1;
  }

  Index unary(Index a, double wa) {
    if (a < 0) return -1;
    edge(a, wa);
    return close();
  }
  Index binary(Index a, double wa, Index b, double wb) {
    if (a < 0 && b < 0) return -1;
    reserve(2);
    edge_unchecked(a, wa);
    edge_unchecked(b, wb);
    return close();
  }

  // Adjoints of every node for d(output)/d(node), seeded with `seed`.
  // `adjoint` is resized to the tape length and overwritten.
  void backward(Index output, double seed, std::vector<double>& adjoint) const {
    adjoint.assign(static_cast<std::size_t>(size()), 0.0);
    if (output < 0) return;
    adjoint[static_cast<std::size_t>(output)] = seed;
    for (Index n = output; n >= 0; --n) {
      const double a = adjoint[static_cast<std::size_t>(n)];
      if (a == 0.0) continue;
      const std::uint32_t end = starts_[static_cast<std::size_t>(n) + 1];
      for (std::uint32_t e = starts_[static_cast<std::size_t>(n)]; e < end; ++e) {
        adjoint[static_cast<std::size_t>(parents_[e])] += weights_[e] * a;
      }
    }
  }

 private:
  std::vector<std::uint32_t> starts_;
  std::vector<Index> parents_;
  std::vector<double> weights_;
  std::uint32_t n_edges_ = 0;
};

namespace detail {
inline thread_local Tape* active_tape = nullptr;
}

inline Tape& tape() { return *detail::active_tape; }

// Installs a tape as the recording target of the current thread.
class TapeScope {
 public:
  explicit TapeScope(Tape& t) : previous_(detail::active_tape) { detail::active_tape = &t; }
  ~TapeScope() { detail::active_tape = previous_; }
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;

 private:
  Tape* previous_;
};

struct Var {
  double v = 0.0;
  Tape::Index i = -1;

  Var() = default;
  Var(double value) : v(value) {}  // NOLINT: constants convert implicitly
  Var(double value, Tape::Index index) : v(value), i(index) {}

  [[nodiscard]] bool is_constant() const { return i < 0; }

  static Var leaf(double value) { return Var(value, tape().leaf()); }

  Var& operator+=(const Var& o);
  Var& operator-=(const Var& o);
  Var& operator*=(const Var& o);
};

inline Var operator+(const Var& a, const Var& b) {
  if (a.i < 0 && b.i < 0) return Var(a.v + b.v);
  return Var(a.v + b.v, tape().binary(a.i, 1.0, b.i, 1.0));
}
inline Var operator-(const Var& a, const Var& b) {
  if (a.i < 0 && b.i < 0) return Var(a.v - b.v);
  return Var(a.v - b.v, tape().binary(a.i, 1.0, b.i, -1.0));
}
inline Var operator*(const Var& a, const Var& b) {
  if (a.i < 0 && b.i < 0) return Var(a.v * b.v);
  return Var(a.v * b.v, tape().binary(a.i, b.v, b.i, a.v));
}
inline Var operator/(const Var& a, const Var& b) {
  if (a.i < 0 && b.i < 0) return Var(a.v / b.v);
  const double r = a.v / b.v;
  return Var(r, tape().binary(a.i, 1.0 / b.v, b.i, -r / b.v));
}
inline Var operator-(const Var& a) {
  if (a.i < 0) return Var(-a.v);
  return Var(-a.v, tape().unary(a.i, -1.0));
}

inline Var& Var::operator+=(const Var& o) { return *this = *this + o; }
inline Var& Var::operator-=(const Var& o) { return *this = *this - o; }
inline Var& Var::operator*=(const Var& o) { return *this = *this * o; }

inline Var tanh(const Var& a) {
  const double y = std::tanh(a.v);
  if (a.i < 0) return Var(y);
  return Var(y, tape().unary(a.i, 1.0 - y * y));
}

inline Var square(const Var& a) {
  if (a.i < 0) return Var(a.v * a.v);
  return Var(a.v * a.v, tape().unary(a.i, 2.0 * a.v));
}
inline double square(double a) { return a * a; }

inline double value(double x) { return x; }
inline double value(const Var& x) { return x.v; }

// sum_k a[k*sa] * b[k*sb] + c
inline double dot(const double* a, std::ptrdiff_t sa, const double* b, std::ptrdiff_t sb,
                  std::size_t n, double c = 0.0) {
  double s = c;
  for (std::size_t k = 0; k < n; ++k) {
    const auto kk = static_cast<std::ptrdiff_t>(k);
    s += a[kk * sa] * b[kk * sb];
  }
  return s;
}

inline Var dot(const Var* a, std::ptrdiff_t sa, const Var* b, std::ptrdiff_t sb, std::size_t n,
               const Var& c = Var(0.0)) {
  Tape* t = detail::active_tape;
  double s = c.v;
  if (t) t->reserve(2 * n + 1);
  for (std::size_t k = 0; k < n; ++k) {
    const auto kk = static_cast<std::ptrdiff_t>(k);
    const Var& x = a[kk * sa];
    const Var& y = b[kk * sb];
    s += x.v * y.v;
    if (t) {
      t->edge_unchecked(x.i, y.v);
      t->edge_unchecked(y.i, x.v);
    }
  }
  if (!t) return Var(s);
  t->edge_unchecked(c.i, 1.0);
  return Var(s, t->close());
}

// a*b + c*d as one node.
inline double mul_add(double a, double b, double c, double d) { return a * b + c * d; }
inline Var mul_add(const Var& a, const Var& b, const Var& c, const Var& d) {
  Tape* t = detail::active_tape;
  const double s = a.v * b.v + c.v * d.v;
  if (!t) return Var(s);
  t->reserve(4);
  t->edge_unchecked(a.i, b.v);
  t->edge_unchecked(b.i, a.v);
  t->edge_unchecked(c.i, d.v);
  t->edge_unchecked(d.i, c.v);
  return Var(s, t->close());
}

}  // namespace sympflow::ad
