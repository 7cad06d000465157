#pragma once

#include <functional>
#include <vector>

#include "hjb/common.hpp"

namespace hjb {

// drift evaluated on a batch of states (columns)
using BatchDriftFn = std::function<Matrix(const Matrix&)>;

struct Trajectory {
    int id = 0;
    Matrix states;  // d x m
    Vector times;   // m, starting at 0
    Vector arclen;  // m, cumulative |dx|
    bool exited = false;  // last recorded state is the first one outside the domain
};

// Classical RK4 with fixed step; records every record_stride-th accepted state
// (plus the initial one) and stops after the state leaves `domain`.
Trajectory integrate_characteristic(const Vector& x0, const BatchDriftFn& drift, double horizon,
                                    double step, const Box& domain, int record_stride = 1);

// Lockstep batch of the same integration (one drift call per stage for all
// still-active trajectories).
std::vector<Trajectory> integrate_characteristics(const Matrix& X0, const BatchDriftFn& drift,
                                                  double horizon, double step, const Box& domain,
                                                  int record_stride = 1);

// Labels along a recorded path for the stationary transport equation
//   kappa Y - DY.G = S  =>  Y(x(t)) = int_t^infty e^{-kappa (s-t)} S(x(s)) ds,
// integrated with exponentially-exact trapezoid weights on each recorded
// interval and closed with the frozen-endpoint tail S(x_end)/kappa.
// `sources` holds one row per label component, one column per recorded point.
Matrix discounted_along(const Vector& times, const Matrix& sources, double kappa);

Vector value_along(const Trajectory& traj, const Vector& value_source, double kappa);
Matrix gradient_along(const Trajectory& traj, const Matrix& grad_sources, double kappa);

struct LabelledSnapshot {
    int traj_id = 0;
    double t = 0.0;
    double arclen = 0.0;
    Vector x;
    double value = 0.0;
    Vector costate;
};

// Uniform arc-length resampling of the portion of the path inside `box`
// (prefix up to the first exit).  Paths with fewer than 3 recorded points
// inside are dropped (empty result); a stationary path collapses to one
// snapshot.  Labels are interpolated linearly in arc length.
std::vector<LabelledSnapshot> arclength_resample(const Trajectory& traj, const Vector& values,
                                                 const Matrix& costates, const Box& box,
                                                 int snapshots);

Matrix sample_initial_states(const Box& box, int n, std::uint64_t seed);

void save_snapshots_csv(const std::vector<LabelledSnapshot>& batch, const std::string& path);

}  // namespace hjb
