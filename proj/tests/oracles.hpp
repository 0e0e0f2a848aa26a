#pragma once

// Independent reference computations shared by the unit tests and the
// acceptance binary. Nothing here calls the solvers under test.

#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace oracles {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

/// 0.5 a^T Q a + c^T a
inline double quadratic_value(const MatrixXd& q, const VectorXd& c, const VectorXd& a) {
  return 0.5 * a.dot(q * a) + c.dot(a);
}

/// Minimiser of a strictly convex quadratic over the simplex by enumerating
/// every support set and keeping the KKT point with the smallest value.
inline VectorXd quadratic_on_simplex(const MatrixXd& q, const VectorXd& c) {
  const Index m = c.size();
  VectorXd best;
  double best_value = std::numeric_limits<double>::infinity();
  for (unsigned mask = 1; mask < (1u << m); ++mask) {
    std::vector<Index> support;
    for (Index i = 0; i < m; ++i)
      if (mask & (1u << i)) support.push_back(i);
    const Index s = Index(support.size());
    MatrixXd kkt = MatrixXd::Zero(s + 1, s + 1);
    VectorXd rhs(s + 1);
    for (Index a = 0; a < s; ++a) {
      for (Index b = 0; b < s; ++b) kkt(a, b) = q(support[a], support[b]);
      kkt(a, s) = kkt(s, a) = 1.0;
      rhs[a] = -c[support[a]];
    }
    rhs[s] = 1.0;
    const VectorXd sol = kkt.fullPivLu().solve(rhs);
    VectorXd alpha = VectorXd::Zero(m);
    bool ok = true;
    for (Index a = 0; a < s; ++a) {
      alpha[support[a]] = sol[a];
      if (sol[a] < -1e-12) ok = false;
    }
    if (!ok) continue;
    const VectorXd grad = q * alpha + c;
    const double mu = -sol[s];
    for (Index i = 0; i < m && ok; ++i)
      if (!(mask & (1u << i)) && grad[i] < mu - 1e-10) ok = false;
    if (!ok) continue;
    const double value = quadratic_value(q, c, alpha);
    if (value < best_value) {
      best_value = value;
      best = alpha.cwiseMax(0.0);
    }
  }
  return best;
}

/// Minimiser of a strictly convex quadratic over alpha >= 0 by support enumeration.
inline VectorXd quadratic_on_nonneg(const MatrixXd& q, const VectorXd& c) {
  const Index m = c.size();
  VectorXd best = VectorXd::Zero(m);
  double best_value = std::numeric_limits<double>::infinity();
  for (unsigned mask = 0; mask < (1u << m); ++mask) {
    std::vector<Index> support;
    for (Index i = 0; i < m; ++i)
      if (mask & (1u << i)) support.push_back(i);
    const Index s = Index(support.size());
    VectorXd alpha = VectorXd::Zero(m);
    if (s > 0) {
      MatrixXd sub(s, s);
      VectorXd rhs(s);
      for (Index a = 0; a < s; ++a) {
        for (Index b = 0; b < s; ++b) sub(a, b) = q(support[a], support[b]);
        rhs[a] = -c[support[a]];
      }
      const VectorXd sol = sub.ldlt().solve(rhs);
      for (Index a = 0; a < s; ++a) alpha[support[a]] = sol[a];
    }
    if ((alpha.array() < -1e-12).any()) continue;
    const VectorXd grad = q * alpha + c;
    bool ok = true;
    for (Index i = 0; i < m; ++i)
      if (!(mask & (1u << i)) && grad[i] < -1e-10) ok = false;
    if (!ok) continue;
    const double value = quadratic_value(q, c, alpha);
    if (value < best_value) {
      best_value = value;
      best = alpha.cwiseMax(0.0);
    }
  }
  return best;
}

/// Random symmetric positive definite matrix with eigenvalues at least `floor`.
inline MatrixXd random_spd(std::mt19937_64& rng, Index m, double floor = 0.1) {
  std::normal_distribution<double> normal;
  MatrixXd a(m, m);
  for (Index i = 0; i < m; ++i)
    for (Index j = 0; j < m; ++j) a(i, j) = normal(rng);
  return a.transpose() * a + floor * MatrixXd::Identity(m, m);
}

inline VectorXd random_vector(std::mt19937_64& rng, Index m, double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  VectorXd v(m);
  for (Index i = 0; i < m; ++i) v[i] = normal(rng);
  return v;
}

inline VectorXd random_simplex_point(std::mt19937_64& rng, Index m) {
  std::exponential_distribution<double> e(1.0);
  VectorXd a(m);
  for (Index i = 0; i < m; ++i) a[i] = e(rng);
  return a / a.sum();
}

/// Minimum of g over {(t, 1 - t)} by a dense grid followed by golden-section
/// refinement around the best grid cell (g convex in t).
inline double minimize_on_segment(const std::function<double(double)>& g, double* argmin = nullptr) {
  const int steps = 20000;
  int best = 0;
  double best_value = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= steps; ++i) {
    const double v = g(double(i) / steps);
    if (v < best_value) {
      best_value = v;
      best = i;
    }
  }
  double lo = std::max(0.0, double(best - 1) / steps);
  double hi = std::min(1.0, double(best + 1) / steps);
  const double ratio = (std::sqrt(5.0) - 1.0) / 2.0;
  for (int k = 0; k < 200; ++k) {
    const double a = hi - ratio * (hi - lo);
    const double b = lo + ratio * (hi - lo);
    if (g(a) <= g(b)) hi = b;
    else lo = a;
  }
  const double t = 0.5 * (lo + hi);
  const double v = g(t);
  if (v < best_value) {
    best_value = v;
    if (argmin) *argmin = t;
  } else if (argmin) {
    *argmin = double(best) / steps;
  }
  return best_value;
}

/// Minimum of a convex g over [0, hi]^2: dense grid, then alternating
/// golden-section searches along each coordinate.
inline double minimize_on_square(const std::function<double(double, double)>& g, double hi,
                                 double* a_out = nullptr, double* b_out = nullptr) {
  const int steps = 600;
  double a = 0.0, b = 0.0;
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= steps; ++i)
    for (int j = 0; j <= steps; ++j) {
      const double v = g(hi * i / steps, hi * j / steps);
      if (v < best) {
        best = v;
        a = hi * i / steps;
        b = hi * j / steps;
      }
    }
  const double ratio = (std::sqrt(5.0) - 1.0) / 2.0;
  auto golden = [&](const std::function<double(double)>& h, double lo, double up) {
    for (int k = 0; k < 100; ++k) {
      const double u = up - ratio * (up - lo);
      const double w = lo + ratio * (up - lo);
      if (h(u) <= h(w)) up = w;
      else lo = u;
    }
    return 0.5 * (lo + up);
  };
  double width = 2.0 * hi / steps;
  for (int sweep = 0; sweep < 200; ++sweep) {
    const double na = golden([&](double t) { return g(t, b); }, std::max(0.0, a - width), std::min(hi, a + width));
    if (g(na, b) <= g(a, b)) a = na;
    const double nb = golden([&](double t) { return g(a, t); }, std::max(0.0, b - width), std::min(hi, b + width));
    if (g(a, nb) <= g(a, b)) b = nb;
  }
  if (a_out) *a_out = a;
  if (b_out) *b_out = b;
  return g(a, b);
}

}  // namespace oracles
