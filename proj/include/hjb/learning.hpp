#pragma once

#include <functional>
#include <vector>

#include "hjb/common.hpp"
#include "hjb/value_model.hpp"

namespace hjb {

// supervised targets: states X (d x n), values V (n), costates Lam (d x n)
struct Dataset {
    Matrix X;
    Vector V;
    Matrix Lam;
    Index size() const { return X.cols(); }
};

// mu * mean_j (V_j - Vhat_j)^2 + (1 - mu) * mean_j |Lam_j - grad Vhat_j|^2
double vg_loss(const ValueModel& m, const Dataset& data, double mu);
// same value, plus d(loss)/d(theta); one fused forward/backward pass
double vg_loss_grad(const ValueModel& m, const Dataset& data, double mu, Vector& grad);

// loss as an explicit quadratic theta'A theta - 2 b'theta + c (linear-in-theta models)
struct QuadraticLoss {
    Matrix A;
    Vector b;
    double c = 0.0;
    double value(const Vector& theta) const;
    double value_grad(const Vector& theta, Vector& grad) const;
    Vector minimizer(double ridge = 0.0) const;  // direct normal-equation solve
};
QuadraticLoss rbf_quadratic_loss(const RbfModel& m, const Dataset& data, double mu);

struct AdamConfig {
    double lr = 1e-2;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    int max_steps = 1000;
    double loss_tol = 1e-8;         // stop when loss falls below
    double rel_improve_tol = 1e-6;  // stop when 100-step relative progress stalls
    int stall_window = 100;
    bool seed_linear = true;       // start linear-in-theta fits at the least-squares minimizer
    double seed_rank_tol = 1e-10;  // rank cutoff for the seeding solve
};

struct FitResult {
    std::vector<double> loss_history;
    int steps = 0;
    double final_loss = 0.0;
};

using LossGradFn = std::function<double(const Vector&, Vector&)>;

FitResult adam_minimize(const LossGradFn& f, Vector& theta, const AdamConfig& cfg);

// fit in place; rbf models go through the precomputed quadratic form
FitResult fit_model(ValueModel& m, const Dataset& data, double mu, const AdamConfig& cfg);

AdamConfig default_adam(ValueModel::Family family);

}  // namespace hjb
