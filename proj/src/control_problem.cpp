#include "hjb/control_problem.hpp"

#include <Eigen/Eigenvalues>

#include "hjb/ode.hpp"

namespace hjb {

Matrix ControlProblem::dynamics_jac_x(const Vector& x) const {
    if (f0_jac) return f0_jac(x);
    // central differences on f0
    const double h = 1e-6 * (1.0 + x.norm());
    Matrix J(d, d);
    Vector xp = x, xm = x;
    for (Index j = 0; j < d; ++j) {
        xp[j] += h;
        xm[j] -= h;
        J.col(j) = (f0(xp) - f0(xm)) / (2.0 * h);
        xp[j] = x[j];
        xm[j] = x[j];
    }
    return J;
}

Matrix ControlProblem::f0_of(const Matrix& X) const {
    if (f0_batch) return f0_batch(X);
    Matrix F(d, X.cols());
    for (Index j = 0; j < X.cols(); ++j) F.col(j) = f0(X.col(j));
    return F;
}

Matrix random_gram_matrix(Index d, std::uint64_t seed) {
    Rng rng(seed);
    Matrix a(d, d);
    for (Index i = 0; i < d; ++i)
        for (Index j = 0; j < d; ++j) a(i, j) = rng.normal();
    return (a.transpose() * a + Matrix::Identity(d, d)) / static_cast<double>(d);
}

ControlProblem lqr_problem(const LQRSpec& spec) {
    ControlProblem pr;
    pr.d = spec.A.rows();
    pr.p = spec.B.cols();
    Matrix A = spec.A;
    pr.f0 = [A](const Vector& x) -> Vector { return A * x; };
    pr.f0_jac = [A](const Vector&) -> Matrix { return A; };
    pr.f0_batch = [A](const Matrix& X) -> Matrix { return A * X; };
    pr.cf = spec.B.transpose();
    pr.cost = [](const Vector& x, const Vector& a) { return x.squaredNorm() + a.squaredNorm(); };
    pr.cost_grad_x = [](const Vector& x, const Vector&) -> Vector { return 2.0 * x; };
    pr.cost_grad_a = [](const Vector&, const Vector& a) -> Vector { return 2.0 * a; };
    pr.cost_hess_aa = [p = pr.p](const Vector&, const Vector&) -> Matrix {
        return 2.0 * Matrix::Identity(p, p);
    };
    pr.quadratic_cost = true;
    return pr;
}

void set_gaussian_initial(ControlProblem& pr) {
    pr.u0 = [](const Vector& x) { return std::exp(-x.squaredNorm()); };
    pr.u0_grad = [](const Vector& x) -> Vector { return -2.0 * std::exp(-x.squaredNorm()) * x; };
    pr.u0_batch = [](const Matrix& X, Vector& v, Matrix& G) {
        v = (-X.colwise().squaredNorm()).array().exp().matrix().transpose();
        G = X * (-2.0);
        G.array().rowwise() *= v.transpose().array();
    };
}

void set_quadratic_initial(ControlProblem& pr, const Matrix& P0) {
    pr.u0 = [P0](const Vector& x) { return x.dot(P0 * x); };
    pr.u0_grad = [P0](const Vector& x) -> Vector { return (P0 + P0.transpose()) * x; };
    pr.u0_batch = [P0](const Matrix& X, Vector& v, Matrix& G) {
        Matrix PX = P0 * X;
        v = (X.array() * PX.array()).colwise().sum().matrix().transpose();
        G = PX + P0.transpose() * X;
    };
}

static Matrix hess_aa(const ControlProblem& pr, const Vector& x, const Vector& a) {
    if (pr.cost_hess_aa) return pr.cost_hess_aa(x, a);
    const double h = 1e-6 * (1.0 + a.norm());
    Matrix H(pr.p, pr.p);
    Vector ap = a, am = a;
    for (Index j = 0; j < pr.p; ++j) {
        ap[j] += h;
        am[j] -= h;
        H.col(j) = (pr.cost_grad_a(x, ap) - pr.cost_grad_a(x, am)) / (2.0 * h);
        ap[j] = a[j];
        am[j] = a[j];
    }
    return 0.5 * (H + H.transpose());
}

Vector policy_argmax(const ControlProblem& pr, const Vector& x, const Vector& lambda,
                     const Vector* warm, int max_iter, double tol) {
    if (pr.quadratic_cost) return -0.5 * (pr.cf * lambda);

    auto objective = [&](const Vector& a) {
        return -lambda.dot(pr.dynamics(x, a)) - pr.cost(x, a);
    };
    // first-order condition: r(a) = -cf lambda - D_a l(x,a) = 0
    Vector cfl = pr.cf * lambda;
    auto residual = [&](const Vector& a) -> Vector { return -cfl - pr.cost_grad_a(x, a); };

    Vector a = warm ? *warm : Vector::Zero(pr.p);
    Vector r = residual(a);
    for (int it = 0; it < max_iter && r.lpNorm<Eigen::Infinity>() > tol; ++it) {
        Matrix J = -hess_aa(pr, x, a);  // dr/da
        Vector step = -J.fullPivLu().solve(r);
        double t = 1.0, g0 = objective(a);
        Vector cand = a + step;
        while (t > 1e-4 && objective(cand) < g0) {
            t *= 0.5;
            cand = a + t * step;
        }
        a = cand;
        r = residual(a);
    }
    return a;
}

double hamiltonian(const ControlProblem& pr, const Vector& x, const Vector& p) {
    if (pr.quadratic_cost) {
        Vector cfp = pr.cf * p;
        return 0.25 * cfp.squaredNorm() - p.dot(pr.f0(x)) - x.squaredNorm();
    }
    Vector a = policy_argmax(pr, x, p);
    return -p.dot(pr.dynamics(x, a)) - pr.cost(x, a);
}

Matrix optimal_action_batch(const ControlProblem& pr, const Matrix& X, const Matrix& Lam) {
    if (pr.quadratic_cost) return -0.5 * (pr.cf * Lam);
    Matrix A(pr.p, X.cols());
    Vector warm = Vector::Zero(pr.p);
    for (Index j = 0; j < X.cols(); ++j) {
        warm = policy_argmax(pr, X.col(j), Lam.col(j), &warm);
        A.col(j) = warm;
    }
    return A;
}

Matrix optimal_drift_batch(const ControlProblem& pr, const Matrix& X, const Matrix& Lam) {
    return pr.f0_of(X) + pr.cf.transpose() * optimal_action_batch(pr, X, Lam);
}

Vector hamiltonian_batch(const ControlProblem& pr, const Matrix& X, const Matrix& P) {
    if (pr.quadratic_cost) {
        Matrix cfp = pr.cf * P;
        Vector h = 0.25 * cfp.colwise().squaredNorm().transpose();
        h -= (P.array() * pr.f0_of(X).array()).colwise().sum().matrix().transpose();
        h -= X.colwise().squaredNorm().transpose();
        return h;
    }
    Vector h(X.cols());
    for (Index j = 0; j < X.cols(); ++j) h[j] = hamiltonian(pr, X.col(j), P.col(j));
    return h;
}

RiccatiValue riccati_oracle(const Matrix& A, const Matrix& B, const Matrix& P0, double eps,
                            double t, int steps) {
    const Index d = A.rows();
    Vector y0(d * d + 1);
    Eigen::Map<Matrix>(y0.data(), d, d) = P0;
    y0[d * d] = 0.0;
    auto rhs = [&](double, const Vector& y) -> Vector {
        Eigen::Map<const Matrix> P(y.data(), d, d);
        Matrix dP = -P * B * B.transpose() * P + P * A + A.transpose() * P + Matrix::Identity(d, d);
        Vector dy(d * d + 1);
        Eigen::Map<Matrix>(dy.data(), d, d) = dP;
        dy[d * d] = 2.0 * eps * P.trace();
        return dy;
    };
    if (t <= 0.0) return {P0, 0.0};
    Vector y = rk4_integrate(rhs, 0.0, y0, t, steps);
    RiccatiValue out;
    out.P = Eigen::Map<Matrix>(y.data(), d, d);
    out.c = y[d * d];
    return out;
}

AssumptionReport assumption_diagnostics(const ControlProblem& pr, const Box& box,
                                        int n_samples, std::uint64_t seed) {
    Rng rng(seed);
    AssumptionReport rep;
    double l0 = std::numeric_limits<double>::infinity();
    Vector center = 0.5 * (box.lo + box.hi);
    for (int s = 0; s < n_samples; ++s) {
        Vector x = (s == 0) ? center : rng.uniform_in(box);
        Vector a(pr.p);
        for (Index i = 0; i < pr.p; ++i) a[i] = rng.uniform(-2.0, 2.0);
        double denom1 = 1.0 + x.norm() + a.norm();
        rep.cf_hat = std::max(rep.cf_hat, pr.dynamics(x, a).norm() / denom1);
        rep.cf_hat = std::max(rep.cf_hat, pr.dynamics_jac_x(x).operatorNorm());
        double denom2 = 1.0 + x.squaredNorm() + a.squaredNorm();
        rep.cl_hat = std::max(rep.cl_hat, std::abs(pr.cost(x, a)) / denom2);
        Eigen::SelfAdjointEigenSolver<Matrix> es(hess_aa(pr, x, a));
        l0 = std::min(l0, es.eigenvalues().minCoeff());
        if (pr.u0) {
            rep.c0_grad_hat = std::max(rep.c0_grad_hat, pr.u0_grad(x).norm() / (1.0 + x.norm()));
            const double h = 1e-5;
            Matrix H(pr.d, pr.d);
            Vector xp = x, xm = x;
            for (Index j = 0; j < pr.d; ++j) {
                xp[j] += h;
                xm[j] -= h;
                H.col(j) = (pr.u0_grad(xp) - pr.u0_grad(xm)) / (2.0 * h);
                xp[j] = x[j];
                xm[j] = x[j];
            }
            rep.c0_hess_hat = std::max(rep.c0_hess_hat, 0.5 * (H + H.transpose()).operatorNorm());
        }
    }
    rep.l0_hat = l0;
    rep.l0_degenerate = !(l0 > 1e-10);
    rep.u0_unbounded_hessian = rep.c0_hess_hat > 1e6;
    return rep;
}

}  // namespace hjb
