#pragma once

#include <functional>
#include <optional>

#include "hjb/common.hpp"

namespace hjb {

// Control-affine problem data: dynamics f(x,a) = f0(x) + cf^T a, running cost
// l(x,a), initial datum u0.  The Hamiltonian is the costate sup
//   H(x,p) = sup_a [ p.(-f(x,a)) - l(x,a) ].
struct ControlProblem {
    Index d = 0;  // state dimension
    Index p = 0;  // control dimension

    std::function<Vector(const Vector&)> f0;
    std::function<Matrix(const Vector&)> f0_jac;            // optional; FD fallback
    std::function<Matrix(const Matrix&)> f0_batch;          // optional; column-wise fallback
    Matrix cf;                                              // p x d

    std::function<double(const Vector&, const Vector&)> cost;
    std::function<Vector(const Vector&, const Vector&)> cost_grad_x;
    std::function<Vector(const Vector&, const Vector&)> cost_grad_a;
    std::function<Matrix(const Vector&, const Vector&)> cost_hess_aa;  // optional; FD fallback
    bool quadratic_cost = false;  // l(x,a) = |x|^2 + |a|^2: closed-form maximizer

    std::function<double(const Vector&)> u0;
    std::function<Vector(const Vector&)> u0_grad;
    // optional batched initial datum: columns of X -> values v, gradient columns G
    std::function<void(const Matrix&, Vector&, Matrix&)> u0_batch;

    Vector dynamics(const Vector& x, const Vector& a) const { return f0(x) + cf.transpose() * a; }
    Matrix dynamics_jac_x(const Vector& x) const;  // D_x f (independent of a)
    Matrix f0_of(const Matrix& X) const;           // batched drift part
};

struct LQRSpec {
    Matrix A;  // f0(x) = A x
    Matrix B;  // control injection, cf = B^T

    static LQRSpec identity(Index d) {
        return {Matrix::Identity(d, d), Matrix::Identity(d, d)};
    }
};

// A = (a^T a + I)/d with a an i.i.d. standard normal d x d draw.
Matrix random_gram_matrix(Index d, std::uint64_t seed);

// l = |x|^2 + |a|^2 with the given linear dynamics; no initial datum attached.
ControlProblem lqr_problem(const LQRSpec& spec);

// u0(x) = exp(-|x|^2)
void set_gaussian_initial(ControlProblem& pr);
// u0(x) = x^T P0 x
void set_quadratic_initial(ControlProblem& pr, const Matrix& P0);

// Maximizer of a -> lambda.(-f(x,a)) - l(x,a).  Quadratic costs use the closed
// form a = -cf lambda / 2; otherwise a damped Newton iteration on the first-order
// condition, warm-started from `warm` when given.
Vector policy_argmax(const ControlProblem& pr, const Vector& x, const Vector& lambda,
                     const Vector* warm = nullptr, int max_iter = 50, double tol = 1e-10);

double hamiltonian(const ControlProblem& pr, const Vector& x, const Vector& p);

// columnwise maximizers, optimal drifts f(x,a*), and Hamiltonian values for
// state/costate pairs; quadratic costs take one matrix product, the general
// path runs the Newton maximizer per column with warm starts
Matrix optimal_action_batch(const ControlProblem& pr, const Matrix& X, const Matrix& Lam);
Matrix optimal_drift_batch(const ControlProblem& pr, const Matrix& X, const Matrix& Lam);
Vector hamiltonian_batch(const ControlProblem& pr, const Matrix& X, const Matrix& P);

// Value of the LQR problem with l = |x|^2 + |a|^2 is u(x,t) = x^T P(t) x + c(t):
//   P' = -P B B^T P + P A + A^T P + I,   c' = 2 eps tr(P),  P(0) = P0, c(0) = 0.
struct RiccatiValue {
    Matrix P;
    double c = 0.0;
};
RiccatiValue riccati_oracle(const Matrix& A, const Matrix& B, const Matrix& P0, double eps,
                            double t, int steps = 2000);

// Sampled estimates of the structural constants the convergence theory needs.
struct AssumptionReport {
    double cf_hat = 0.0;      // sup |f(x,a)| / (1 + |x| + |a|)  and  sup |D_x f|
    double cl_hat = 0.0;      // sup |l| / (1 + |x|^2 + |a|^2)
    double l0_hat = 0.0;      // min eigenvalue of D^2_aa l over samples
    double c0_grad_hat = 0.0; // sup |Du0| / (1 + |x|)
    double c0_hess_hat = 0.0; // sup |D^2 u0| (spectral norm, FD)
    bool l0_degenerate = false;
    bool u0_unbounded_hessian = false;
};
AssumptionReport assumption_diagnostics(const ControlProblem& pr, const Box& box,
                                        int n_samples, std::uint64_t seed);

}  // namespace hjb
