#pragma once

// Adaptive embedded Runge-Kutta-Fehlberg 7(8) integration (Boost.Odeint
// controlled stepper) sampled exactly at the grid times.

#include <boost/numeric/odeint.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <sstream>
#include <vector>

#include "error.hpp"
#include "model.hpp"

namespace mblw {

/// Defaults keep the Bloch-vector norm drift of a 12-site chain at h = 8
/// below 1e-6 over Jt = 120.
struct Tolerance {
  double rel = 1e-9;
  double abs = 1e-11;
};

struct IntegratorStats {
  std::size_t steps = 0;
  std::size_t rhs_evals = 0;
};

/// Integrates dy/dt = rhs(y) from t = 0 through every point of `grid`,
/// calling observe(k, y) at grid index k (including k = 0). `y` holds the
/// initial state on entry and the final state on exit.
///
/// rhs has the signature void(std::span<const double> y, std::span<double> dydt).
/// Throws Error(Integrator) when the step size cannot be adjusted to meet
/// the tolerance or the solution stops being finite.
template <class Rhs, class Observer>
IntegratorStats integrate(Rhs&& rhs, std::span<double> y, const TimeGrid& grid,
                          const Tolerance& tol, Observer&& observe) {
  namespace ode = boost::numeric::odeint;
  using state = std::vector<double>;
  require(tol.rel > 0.0 && tol.abs > 0.0, ErrorKind::InvalidArgument,
          "integrator tolerances must be positive");

  IntegratorStats stats;
  double t_now = 0.0;
  auto failure = [&](const std::string& why) {
    std::ostringstream os;
    os << why << " at t=" << t_now;
    fail(ErrorKind::Integrator, os.str());
  };

  auto system = [&](const state& s, state& d, double t) {
    t_now = t;
    ++stats.rhs_evals;
    rhs(std::span<const double>(s), std::span<double>(d));
    for (double v : d)
      if (!std::isfinite(v)) failure("non-finite derivative");
  };

  state x(y.begin(), y.end());
  auto stepper = ode::make_controlled<ode::runge_kutta_fehlberg78<state>>(tol.abs, tol.rel);
  double t = grid.points().front();
  double dt = std::min(0.01, grid.size() > 1 ? grid[1] : 0.01);
  observe(std::size_t{0}, std::span<const double>(x));
  for (std::size_t k = 1; k < grid.size(); ++k) {
    const double target = grid[k];
    while (t < target) {
      const bool last = dt >= target - t;
      const double saved = dt;
      if (last) dt = target - t;
      t_now = t;
      if (stepper.try_step(system, x, t, dt) == ode::success) {
        ++stats.steps;
        if (last) {
          t = target;
          dt = std::max(dt, saved);
        }
      } else if (dt < 1e-13 * std::max(1.0, std::abs(t))) {
        failure("step size underflow");
      }
    }
    observe(k, std::span<const double>(x));
  }
  std::copy(x.begin(), x.end(), y.begin());
  return stats;
}

}  // namespace mblw
