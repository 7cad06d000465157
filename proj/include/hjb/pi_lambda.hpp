#pragma once

#include <functional>
#include <vector>

#include "hjb/characteristics.hpp"
#include "hjb/common.hpp"
#include "hjb/control_problem.hpp"
#include "hjb/heat.hpp"
#include "hjb/learning.hpp"
#include "hjb/value_model.hpp"

namespace hjb {

// batched scalar field (values plus gradients at state columns); the carrier
// for "previous slice" data
struct ScalarField {
    std::function<void(const Matrix&, Vector&, Matrix&)> batch;
    double value(const Vector& x) const;
    Vector grad(const Vector& x) const;
};

ScalarField field_from_model(ValueModel model);
ScalarField field_from_initial(const ControlProblem& pr);
BatchGradFn grad_of(const ScalarField& field);
BatchGradFn grad_of(const ValueModel& model);

struct PiLambdaConfig {
    double kappa = 10.0;          // 1/h for the implicit slice
    int policy_iters = 30;
    int residual_tail = 20;       // residuals averaged over this many final iterations
    int n_train = 16;             // characteristics per iteration
    int snapshots_per_traj = 30;
    double cover_factor = 8.0;    // snapshots come from t <= cover/kappa
    double horizon_factor = 8.0;  // extra recorded discount tail beyond the cover window
    double sim_box_scale = 3.0;   // trajectories may run in the scaled box
    double integrator_step = 0.0; // 0: one twentieth of 1/kappa
    int record_stride = 1;
    int n_residual = 10000;
    std::uint64_t seed = 0;
    double mu = 0.4;              // value-vs-gradient loss weight
    ValueModel::Family family = ValueModel::Family::rbf;
    int max_centers = 400;
    int mlp_width = 64;
    AdamConfig adam;
};

PiLambdaConfig default_pi_config(ValueModel::Family family, double kappa);

struct SliceSolve {
    ValueModel model;
    Dataset data;  // training set behind the fit
};

// One frozen-policy transport solve: integrate the optimally-controlled
// characteristics for the costate field `policy_lambda`, label value and
// costate along them by discounted integration, and fit a model.  A `warm`
// model of the same architecture seeds the optimizer (networks benefit across
// iterations; linear expansions are re-solved from their centers).
SliceSolve pi_lambda_linear_step(const ControlProblem& pr, const ScalarField& prev,
                                 const BatchGradFn& policy_lambda, const Box& box,
                                 const PiLambdaConfig& cfg, const ValueModel* warm = nullptr);

// mean | kappa V + H(x, DV) - kappa V_prev |  over the given points
double slice_residual(const ControlProblem& pr, const ValueModel& model, const ScalarField& prev,
                      double kappa, const Matrix& pts);

// mean | kappa V - G . DV - L |  over the given points, where drift G and
// source L belong to the frozen policy `policy_lambda`
double transport_residual(const ControlProblem& pr, const ValueModel& model,
                          const ScalarField& prev, const BatchGradFn& policy_lambda, double kappa,
                          const Matrix& pts);

struct SliceResult {
    ValueModel model;
    double residual_mean = 0.0;          // tail average of the per-iteration transport residual
    std::vector<double> residual_tail;   // transport residual, final `residual_tail` iterations
    double residual_hjb = 0.0;           // nonlinear slice residual of the final model
};

// full policy iteration for one implicit slice, started from the previous
// slice's gradient field; `warm` seeds the first iteration's fit
SliceResult pi_lambda_slice(const ControlProblem& pr, const ScalarField& prev, const Box& box,
                            const PiLambdaConfig& cfg, const ValueModel* warm = nullptr);

struct MarchResult {
    std::vector<ValueModel> models;
    std::vector<double> residuals;
    Vector times;  // slice boundaries, size slices + 1
};

// implicit slice marching of u_t + H(x, Du) = 0 on [0, T]
MarchResult solve_first_order(const ControlProblem& pr, const Box& box, double T, int n_slices,
                              PiLambdaConfig cfg);

struct Quadrature {
    Matrix points;
    Vector weights;
};

Quadrature box_quadrature_gl(const Box& box, int panels_per_axis);  // d <= 2
Quadrature box_quadrature_mc(const Box& box, Index n, std::uint64_t seed);

// sum_i (e^{-gamma t_{i-1}} - e^{-gamma t_i})/gamma * int |A_i - B_i|^2 (1+|x|^2)^{-2 alpha} dx
double weighted_field_distance(const std::vector<BatchGradFn>& a, const std::vector<BatchGradFn>& b,
                               const Vector& times, double gamma, double alpha,
                               const Quadrature& quad);

struct SweepStudyConfig {
    int sweeps = 10;
    int n_slices = 5;
    double T = 0.1;
    double gamma = 50.0;
    double alpha = 1.0;
    int quad_panels = 8;     // d <= 2: composite Gauss-Legendre panels per axis
    Index mc_points = 4096;  // d >= 3
    PiLambdaConfig slice;
};

struct SweepStudy {
    std::vector<double> errors;  // errors[k-1] compares sweep k to sweep k-1
    std::vector<double> ratios;  // successive quotients
};

// Outer policy sweeps: every sweep re-marches all slices against the costate
// fields of the previous sweep (sweep 0 is the initial gradient everywhere);
// initial states and quadrature stay fixed so the errors are comparable.
SweepStudy run_pi_sweeps(const ControlProblem& pr, const Box& box, const SweepStudyConfig& cfg);

}  // namespace hjb
