#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/Core>

namespace appeval::optimize {

struct ScalarResult {
  double x = 0.0;
  double fx = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Golden-section minimisation of a unimodal f on [lo, hi]; stops when the
/// bracket is narrower than tol.
template <typename F>
ScalarResult golden_section(F&& f, double lo, double hi, double tol, int max_iter = 500) {
  constexpr double kInvPhi = 0.6180339887498948482;
  double a = lo, b = hi;
  double c = b - kInvPhi * (b - a);
  double d = a + kInvPhi * (b - a);
  double fc = f(c), fd = f(d);
  int it = 0;
  while (b - a > tol && it < max_iter) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kInvPhi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kInvPhi * (b - a);
      fd = f(d);
    }
    ++it;
  }
  ScalarResult r;
  r.iterations = it;
  r.converged = b - a <= tol;
  r.x = 0.5 * (a + b);
  r.fx = f(r.x);
  if (fc < r.fx) r = {c, fc, it, r.converged};
  if (fd < r.fx) r = {d, fd, it, r.converged};
  return r;
}

template <int N>
struct SimplexResult {
  Eigen::Matrix<double, N, 1> x;
  double fx = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Nelder–Mead downhill simplex with the standard coefficients (1, 2, 0.5, 0.5).
/// Converged when every vertex lies within x_tol (max-norm) of the best vertex.
template <int N, typename F>
SimplexResult<N> nelder_mead(F&& f, const Eigen::Matrix<double, N, 1>& start, double step, double x_tol,
                             int max_iter = 500) {
  using Vec = Eigen::Matrix<double, N, 1>;
  std::array<Vec, N + 1> v;
  std::array<double, N + 1> fv;
  v[0] = start;
  for (int i = 0; i < N; ++i) {
    v[i + 1] = start;
    v[i + 1][i] += step;
  }
  for (int i = 0; i <= N; ++i) fv[i] = f(v[i]);

  std::array<int, N + 1> order;
  SimplexResult<N> result;
  int it = 0;
  for (;; ++it) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return fv[a] < fv[b]; });
    const int best = order[0], worst = order[N], second = order[N - 1];

    double spread = 0.0;
    for (int i = 0; i <= N; ++i) spread = std::max(spread, (v[i] - v[best]).cwiseAbs().maxCoeff());
    if (spread <= x_tol) {
      result.converged = true;
      break;
    }
    if (it >= max_iter) break;

    Vec centroid = Vec::Zero();
    for (int i = 0; i <= N; ++i)
      if (i != worst) centroid += v[i];
    centroid /= N;

    const Vec xr = centroid + (centroid - v[worst]);
    const double fr = f(xr);
    if (fr < fv[best]) {
      const Vec xe = centroid + 2.0 * (centroid - v[worst]);
      const double fe = f(xe);
      if (fe < fr) {
        v[worst] = xe;
        fv[worst] = fe;
      } else {
        v[worst] = xr;
        fv[worst] = fr;
      }
      continue;
    }
    if (fr < fv[second]) {
      v[worst] = xr;
      fv[worst] = fr;
      continue;
    }
    const bool outside = fr < fv[worst];
    const Vec xc = outside ? Vec(centroid + 0.5 * (xr - centroid)) : Vec(centroid + 0.5 * (v[worst] - centroid));
    const double fc = f(xc);
    if (fc < (outside ? fr : fv[worst])) {
      v[worst] = xc;
      fv[worst] = fc;
      continue;
    }
    for (int i = 0; i <= N; ++i) {
      if (i == best) continue;
      v[i] = v[best] + 0.5 * (v[i] - v[best]);
      fv[i] = f(v[i]);
    }
  }
  int best = 0;
  for (int i = 1; i <= N; ++i)
    if (fv[i] < fv[best]) best = i;
  result.x = v[best];
  result.fx = fv[best];
  result.iterations = it;
  return result;
}

}  // namespace appeval::optimize
