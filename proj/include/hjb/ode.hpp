#pragma once

#include "hjb/common.hpp"

namespace hjb {

// One classical Runge-Kutta step for y' = rhs(t, y).
template <class State, class Rhs>
State rk4_step(const Rhs& rhs, double t, const State& y, double dt) {
    State k1 = rhs(t, y);
    State k2 = rhs(t + 0.5 * dt, y + (0.5 * dt) * k1);
    State k3 = rhs(t + 0.5 * dt, y + (0.5 * dt) * k2);
    State k4 = rhs(t + dt, y + dt * k3);
    return y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

template <class State, class Rhs>
State rk4_integrate(const Rhs& rhs, double t0, const State& y0, double t1, int steps) {
    State y = y0;
    double t = t0, dt = (t1 - t0) / steps;
    for (int i = 0; i < steps; ++i, t += dt) y = rk4_step(rhs, t, y, dt);
    return y;
}

}  // namespace hjb
