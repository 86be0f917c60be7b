#pragma once

// Independent reference computations for the tests: straight-line network
// evaluation and central finite differences.

#include <cmath>
#include <functional>
#include <vector>

#include "sympflow/phase_point.hpp"
#include "sympflow/potential_net.hpp"

namespace oracle {

// V(t, q) written out with explicit loops over the canonical layout.
inline double potential(const sympflow::PotentialNet& net, double t, const std::vector<double>& q) {
  const int d = net.dim();
  const int h = net.hidden();
  const auto p = net.params();
  std::size_t at = 0;
  std::vector<std::vector<double>> a1(h, std::vector<double>(d + 1));
  for (int i = 0; i < h; ++i)
    for (int j = 0; j <= d; ++j) a1[i][j] = p[at++];
  std::vector<double> b1(h);
  for (int i = 0; i < h; ++i) b1[i] = p[at++];
  std::vector<std::vector<double>> a2(h, std::vector<double>(h));
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < h; ++j) a2[i][j] = p[at++];
  std::vector<double> b2(h);
  for (int i = 0; i < h; ++i) b2[i] = p[at++];
  std::vector<double> a3(h);
  for (int i = 0; i < h; ++i) a3[i] = p[at++];
  const double b3 = p[at++];

  std::vector<double> z(d + 1);
  for (int j = 0; j < d; ++j) z[j] = q[j];
  z[d] = t;
  std::vector<double> y1(h), y2(h);
  for (int i = 0; i < h; ++i) {
    double s = b1[i];
    for (int j = 0; j <= d; ++j) s += a1[i][j] * z[j];
    y1[i] = std::tanh(s);
  }
  for (int i = 0; i < h; ++i) {
    double s = b2[i];
    for (int j = 0; j < h; ++j) s += a2[i][j] * y1[j];
    y2[i] = std::tanh(s);
  }
  double v = b3;
  for (int i = 0; i < h; ++i) v += a3[i] * y2[i];
  return v;
}

inline double central(const std::function<double(double)>& f, double x, double h) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

// Central-difference gradient of a scalar function of a vector.
inline std::vector<double> gradient(const std::function<double(const std::vector<double>&)>& f,
                                    const std::vector<double>& x, double h) {
  std::vector<double> g(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    auto xp = x, xm = x;
    xp[k] += h;
    xm[k] -= h;
    g[k] = (f(xp) - f(xm)) / (2.0 * h);
  }
  return g;
}

inline std::vector<double> potential_gradient(const sympflow::PotentialNet& net, double t,
                                              const std::vector<double>& q, double h = 1e-5) {
  return gradient([&](const std::vector<double>& y) { return potential(net, t, y); }, q, h);
}

// |a - b| <= rel * max(|a|, |b|) + abs_floor
inline bool close(double a, double b, double rel, double abs_floor = 0.0) {
  return std::abs(a - b) <= rel * std::max(std::abs(a), std::abs(b)) + abs_floor;
}

inline bool close(const std::vector<double>& a, const std::vector<double>& b, double rel,
                  double abs_floor = 0.0) {
  if (a.size() != b.size()) return false;
  for (std::size_t k = 0; k < a.size(); ++k)
    if (!close(a[k], b[k], rel, abs_floor)) return false;
  return true;
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, std::abs(a[k] - b[k]));
  return m;
}

}  // namespace oracle
