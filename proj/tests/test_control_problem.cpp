#include <doctest.h>

#include "hjb/control_problem.hpp"

using namespace hjb;

namespace {

// Independent oracle: maximize a -> lambda.(-f(x,a)) - l(x,a) by a zoomed grid
// search (three refinement levels, 41 points per axis), control dim <= 2.
Vector grid_argmax(const ControlProblem& pr, const Vector& x, const Vector& lambda,
                   double half_width, int levels = 3) {
    Vector best = Vector::Zero(pr.p);
    double w = half_width;
    auto value = [&](const Vector& a) { return -lambda.dot(pr.dynamics(x, a)) - pr.cost(x, a); };
    for (int lev = 0; lev < levels; ++lev) {
        const int n = 41;
        Vector center = best;
        double vbest = -std::numeric_limits<double>::infinity();
        Vector a(pr.p);
        if (pr.p == 1) {
            for (int i = 0; i < n; ++i) {
                a[0] = center[0] - w + 2.0 * w * i / (n - 1);
                if (double v = value(a); v > vbest) vbest = v, best = a;
            }
        } else {
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) {
                    a[0] = center[0] - w + 2.0 * w * i / (n - 1);
                    a[1] = center[1] - w + 2.0 * w * j / (n - 1);
                    if (double v = value(a); v > vbest) vbest = v, best = a;
                }
        }
        w = 2.0 * w / (n - 1) * 2.0;  // shrink to a few grid cells around the best
    }
    return best;
}

}  // namespace

TEST_CASE("hamiltonian matches brute-force sup for the linear-quadratic family") {
    auto pr = lqr_problem(LQRSpec::identity(2));
    Rng rng(7);
    for (int trial = 0; trial < 12; ++trial) {
        Vector x = rng.normal_vector(2), p = rng.normal_vector(2);
        Vector a_star = grid_argmax(pr, x, p, 6.0, 4);
        double h_grid = -p.dot(pr.dynamics(x, a_star)) - pr.cost(x, a_star);
        CHECK(std::abs(hamiltonian(pr, x, p) - h_grid) < 1e-5);
        CHECK((policy_argmax(pr, x, p) - a_star).lpNorm<Eigen::Infinity>() < 2.0 * 0.03);
    }
}

TEST_CASE("closed-form Hamiltonian value") {
    auto pr = lqr_problem(LQRSpec::identity(2));
    Vector x(2), p(2);
    x << 0.3, -0.2;
    p << 0.5, 1.1;
    // 0.25|p|^2 - p.x - |x|^2
    CHECK(hamiltonian(pr, x, p) == doctest::Approx(0.305).epsilon(1e-12));
    Vector a = policy_argmax(pr, x, p);
    CHECK((a + 0.5 * p).norm() < 1e-14);  // a = -cf p / 2, cf = I
}

TEST_CASE("Legendre consistency H = lambda.(-f(a*)) - l(a*)") {
    auto pr = lqr_problem(LQRSpec::identity(3));
    Rng rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        Vector x = rng.normal_vector(3), p = rng.normal_vector(3);
        Vector a = policy_argmax(pr, x, p);
        double h = -p.dot(pr.dynamics(x, a)) - pr.cost(x, a);
        CHECK(hamiltonian(pr, x, p) == doctest::Approx(h).epsilon(1e-12));
    }
}

TEST_CASE("Newton argmax agrees with closed form and grid search") {
    auto pr = lqr_problem(LQRSpec::identity(2));
    auto newton_pr = pr;
    newton_pr.quadratic_cost = false;  // force the iterative path
    Rng rng(3);
    for (int trial = 0; trial < 10; ++trial) {
        Vector x = rng.normal_vector(2), p = rng.normal_vector(2);
        CHECK((policy_argmax(newton_pr, x, p) - policy_argmax(pr, x, p)).norm() < 1e-9);
    }

    // genuinely non-quadratic control cost: l = |x|^2 + |a|^2 + 0.1 |a|^4
    auto quartic = pr;
    quartic.quadratic_cost = false;
    quartic.cost = [](const Vector& x, const Vector& a) {
        return x.squaredNorm() + a.squaredNorm() + 0.1 * std::pow(a.squaredNorm(), 2);
    };
    quartic.cost_grad_a = [](const Vector&, const Vector& a) -> Vector {
        return 2.0 * a + 0.4 * a.squaredNorm() * a;
    };
    quartic.cost_grad_x = [](const Vector& x, const Vector&) -> Vector { return 2.0 * x; };
    quartic.cost_hess_aa = nullptr;  // exercise the FD Hessian fallback
    for (int trial = 0; trial < 6; ++trial) {
        Vector x = rng.normal_vector(2), p = 2.0 * rng.normal_vector(2);
        Vector a = policy_argmax(quartic, x, p);
        Vector foc = -quartic.cf * p - quartic.cost_grad_a(x, a);
        CHECK(foc.lpNorm<Eigen::Infinity>() < 1e-8);
        CHECK((a - grid_argmax(quartic, x, p, 4.0)).lpNorm<Eigen::Infinity>() < 2.0 * 0.02);
    }
}

TEST_CASE("policy map is Lipschitz in the costate with ratio cf_hat/l0_hat") {
    auto pr = lqr_problem(LQRSpec::identity(2));
    set_gaussian_initial(pr);
    auto rep = assumption_diagnostics(pr, Box::cube(2, -1.0, 1.0), 200, 5);
    double bound = rep.cf_hat / rep.l0_hat;
    Rng rng(17);
    Vector x = rng.normal_vector(2);
    for (int trial = 0; trial < 20; ++trial) {
        Vector l1 = rng.normal_vector(2), l2 = rng.normal_vector(2);
        double num = (policy_argmax(pr, x, l1) - policy_argmax(pr, x, l2)).norm();
        CHECK(num <= bound * (l1 - l2).norm() * (1.0 + 1e-9));
    }
}

TEST_CASE("Riccati oracle: scalar closed form tanh / 2 eps log cosh") {
    Matrix A = Matrix::Zero(1, 1), B = Matrix::Identity(1, 1), P0 = Matrix::Zero(1, 1);
    for (double t : {0.1, 0.5, 1.0, 2.0}) {
        auto rv = riccati_oracle(A, B, P0, 0.3, t);
        CHECK(rv.P(0, 0) == doctest::Approx(std::tanh(t)).epsilon(1e-10));
        CHECK(rv.c == doctest::Approx(2.0 * 0.3 * std::log(std::cosh(t))).epsilon(1e-10));
    }
    // steady state: P0 = I is a fixed point when A = 0, B = I
    auto rv = riccati_oracle(A, B, Matrix::Identity(1, 1), 0.0, 1.7);
    CHECK(rv.P(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("Riccati integrator shows fourth-order step refinement") {
    Matrix A = Matrix::Identity(2, 2), B = Matrix::Identity(2, 2), P0 = Matrix::Zero(2, 2);
    auto ref = riccati_oracle(A, B, P0, 0.0, 1.0, 4000).P;
    double e10 = (riccati_oracle(A, B, P0, 0.0, 1.0, 10).P - ref).norm();
    double e20 = (riccati_oracle(A, B, P0, 0.0, 1.0, 20).P - ref).norm();
    double ratio = e10 / e20;
    CHECK(ratio > 12.0);
    CHECK(ratio < 20.0);

    // symmetry is preserved and the ODE residual vanishes (FD in t)
    auto rv = riccati_oracle(A, B, P0, 0.0, 0.7);
    CHECK((rv.P - rv.P.transpose()).norm() < 1e-12);
    double dt = 1e-5;
    Matrix dP = (riccati_oracle(A, B, P0, 0.0, 0.7 + dt).P - riccati_oracle(A, B, P0, 0.0, 0.7 - dt).P) / (2.0 * dt);
    Matrix rhs = -rv.P * B * B.transpose() * rv.P + rv.P * A + A.transpose() * rv.P + Matrix::Identity(2, 2);
    CHECK((dP - rhs).norm() < 1e-6);
}

TEST_CASE("assumption diagnostics recover the structural constants") {
    auto pr = lqr_problem(LQRSpec::identity(2));
    set_gaussian_initial(pr);
    auto rep = assumption_diagnostics(pr, Box::cube(2, -1.0, 1.0), 400, 9);
    CHECK(rep.l0_hat == doctest::Approx(2.0).epsilon(1e-9));       // D^2_aa |a|^2 = 2I
    CHECK(rep.c0_hess_hat == doctest::Approx(2.0).epsilon(0.02));  // sup |D^2 exp(-|x|^2)| = 2
    CHECK(!rep.l0_degenerate);
    CHECK(rep.cf_hat >= 1.0);  // |D_x f| = |I| = 1 at least

    // FD Jacobian fallback agrees with the exact one
    auto fd = pr;
    fd.f0_jac = nullptr;
    Vector x = Vector::Constant(2, 0.4);
    CHECK((fd.dynamics_jac_x(x) - Matrix::Identity(2, 2)).norm() < 1e-7);
}

TEST_CASE("batched initial data agree with the scalar callbacks") {
    auto pr = lqr_problem(LQRSpec::identity(3));
    set_gaussian_initial(pr);
    Rng rng(23);
    Matrix X(3, 5);
    for (int j = 0; j < 5; ++j) X.col(j) = rng.normal_vector(3);
    Vector v;
    Matrix G;
    pr.u0_batch(X, v, G);
    for (int j = 0; j < 5; ++j) {
        CHECK(v[j] == doctest::Approx(pr.u0(X.col(j))).epsilon(1e-14));
        CHECK((G.col(j) - pr.u0_grad(X.col(j))).norm() < 1e-14);
    }

    Matrix P0(3, 3);
    P0 << 1.0, 0.2, 0.0, 0.2, 2.0, -0.1, 0.0, -0.1, 0.5;
    set_quadratic_initial(pr, P0);
    pr.u0_batch(X, v, G);
    for (int j = 0; j < 5; ++j) {
        CHECK(v[j] == doctest::Approx(pr.u0(X.col(j))).epsilon(1e-14));
        CHECK((G.col(j) - pr.u0_grad(X.col(j))).norm() < 1e-14);
    }
}
