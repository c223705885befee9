#pragma once

#include <algorithm>
#include <cmath>
#include <random>

#include <Eigen/Dense>

namespace crossover {

/// Classical fourth-order Runge-Kutta step for autonomous y' = f(y).
/// `State` is any Eigen-like vector type supporting expression arithmetic.
template <typename State, typename Rhs>
void rk4_step(State& y, double dt, Rhs&& f) {
  const State k1 = f(y);
  const State k2 = f(State(y + (0.5 * dt) * k1));
  const State k3 = f(State(y + (0.5 * dt) * k2));
  const State k4 = f(State(y + dt * k3));
  y += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

/// Same step with caller-owned scratch buffers; `f(in, out)` writes the
/// derivative into `out`. Used by the large Liouville-space solvers.
template <typename State>
struct Rk4Workspace {
  State k1, k2, k3, k4, tmp;
};

template <typename State, typename Rhs>
void rk4_step(State& y, double dt, Rhs&& f, Rk4Workspace<State>& ws) {
  f(y, ws.k1);
  ws.tmp = y + (0.5 * dt) * ws.k1;
  f(ws.tmp, ws.k2);
  ws.tmp = y + (0.5 * dt) * ws.k2;
  f(ws.tmp, ws.k3);
  ws.tmp = y + dt * ws.k3;
  f(ws.tmp, ws.k4);
  y += (dt / 6.0) * (ws.k1 + 2.0 * ws.k2 + 2.0 * ws.k3 + ws.k4);
}

/// Integrating-factor (Lawson) RK4 for y' = D y + N(y) with diagonal D.
/// `half_exp` holds exp(D dt / 2); the diagonal part is integrated exactly.
template <typename Rhs>
void lawson_rk4_step(Eigen::VectorXcd& y, double dt, const Eigen::VectorXcd& half_exp, Rhs&& nonlinear,
                     Rk4Workspace<Eigen::VectorXcd>& ws) {
  const auto e = half_exp.array();
  nonlinear(y, ws.k1);
  ws.tmp = (e * (y + (0.5 * dt) * ws.k1).array()).matrix();
  nonlinear(ws.tmp, ws.k2);
  ws.tmp = (e * y.array()).matrix() + (0.5 * dt) * ws.k2;
  nonlinear(ws.tmp, ws.k3);
  ws.tmp = (e * e * y.array() + dt * e * ws.k3.array()).matrix();
  nonlinear(ws.tmp, ws.k4);
  y = (e * e * y.array() + (dt / 6.0) * (e * e * ws.k1.array() + 2.0 * e * (ws.k2 + ws.k3).array() + ws.k4.array()))
          .matrix();
}

/// Upper estimate of the spectral radius of a linear map by power iteration:
/// the largest growth ratio seen over the iterations.
template <typename Apply>
double growth_bound(Eigen::Index dim, Apply&& apply, int iterations = 60) {
  std::mt19937_64 rng(12345);
  std::normal_distribution<double> g;
  Eigen::VectorXcd v(dim), w(dim);
  for (Eigen::Index i = 0; i < dim; ++i) v[i] = {g(rng), g(rng)};
  v.normalize();
  double bound = 0.0;
  for (int it = 0; it < iterations; ++it) {
    apply(v, w);
    const double r = w.norm();
    if (!(r > 0.0)) break;
    bound = std::max(bound, r);
    v = w / r;
  }
  return bound;
}

}  // namespace crossover
