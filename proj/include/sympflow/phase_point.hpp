#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "sympflow/errors.hpp"

namespace sympflow {

// Point (q, p) of a 2d-dimensional canonical phase space.
template <class T>
struct PhaseState {
  std::vector<T> q;
  std::vector<T> p;

  [[nodiscard]] std::size_t dim() const { return q.size(); }

  bool operator==(const PhaseState&) const = default;
};

using PhasePoint = PhaseState<double>;

// Splits [q; p] into a phase point.
template <class T>
PhaseState<T> split(std::span<const T> flat) {
  detail::require(flat.size() % 2 == 0 && !flat.empty(),
                  "phase point: flat state must have even, positive length");
  const auto d = flat.size() / 2;
  return {std::vector<T>(flat.begin(), flat.begin() + static_cast<std::ptrdiff_t>(d)),
          std::vector<T>(flat.begin() + static_cast<std::ptrdiff_t>(d), flat.end())};
}

inline PhasePoint split(const std::vector<double>& flat) {
  return split<double>(std::span<const double>(flat));
}

template <class T>
std::vector<T> flatten(const PhaseState<T>& x) {
  std::vector<T> out(x.q);
  out.insert(out.end(), x.p.begin(), x.p.end());
  return out;
}

// Converts a double phase point into constants of another scalar type.
template <class T>
PhaseState<T> lift(const PhasePoint& x) {
  return {std::vector<T>(x.q.begin(), x.q.end()), std::vector<T>(x.p.begin(), x.p.end())};
}

inline bool is_finite(const PhasePoint& x) {
  for (double v : x.q)
    if (!std::isfinite(v)) return false;
  for (double v : x.p)
    if (!std::isfinite(v)) return false;
  return true;
}

inline double norm2(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

// J v with J = [[0, I], [-I, 0]] acting on [q; p].
inline std::vector<double> apply_symplectic(std::span<const double> v) {
  const auto d = v.size() / 2;
  std::vector<double> out(v.size());
  for (std::size_t k = 0; k < d; ++k) {
    out[k] = v[d + k];
    out[d + k] = -v[k];
  }
  return out;
}

// Dense row-major matrix, only used for small Jacobians.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
};

inline Matrix canonical_symplectic(std::size_t d) {
  Matrix j(2 * d, 2 * d);
  for (std::size_t k = 0; k < d; ++k) {
    j(k, d + k) = 1.0;
    j(d + k, k) = -1.0;
  }
  return j;
}

inline Matrix operator*(const Matrix& a, const Matrix& b) {
  detail::require(a.cols == b.rows, "matrix product: shape mismatch");
  Matrix c(a.rows, b.cols);
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t k = 0; k < a.cols; ++k)
      for (std::size_t j = 0; j < b.cols; ++j) c(i, j) += a(i, k) * b(k, j);
  return c;
}

inline Matrix transpose(const Matrix& a) {
  Matrix t(a.cols, a.rows);
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t j = 0; j < a.cols; ++j) t(j, i) = a(i, j);
  return t;
}

// How d/dt of a flow network is computed.
enum class DerivativeMode { Exact, FiniteDifference };

inline constexpr double kFlowFdStep = 1e-4;

}  // namespace sympflow
