#include "hjb/learning.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Cholesky>
#include <Eigen/QR>

namespace hjb {

double vg_loss(const ValueModel& m, const Dataset& data, double mu) {
    Vector v;
    Matrix G;
    eval_batch(m, data.X, v, G);
    const double n = double(data.size());
    return mu * (v - data.V).squaredNorm() / n + (1.0 - mu) * (G - data.Lam).squaredNorm() / n;
}

namespace {

double rbf_loss_grad(const RbfModel& m, const Dataset& data, double mu, Vector& grad) {
    Matrix Phi;
    std::vector<Matrix> Gk;
    rbf_design(m, data.X, Phi, Gk);
    const double n = double(data.size());
    Vector rv = Phi * m.theta - data.V;
    double loss = mu * rv.squaredNorm() / n;
    grad = (2.0 * mu / n) * (Phi.transpose() * rv);
    for (Index k = 0; k < data.X.rows(); ++k) {
        Vector rg = Gk[std::size_t(k)] * m.theta - data.Lam.row(k).transpose();
        loss += (1.0 - mu) * rg.squaredNorm() / n;
        grad.noalias() += (2.0 * (1.0 - mu) / n) * (Gk[std::size_t(k)].transpose() * rg);
    }
    return loss;
}

double mlp_loss_grad(const MlpModel& m, const Dataset& data, double mu, Vector& grad) {
    const Matrix& X = data.X;
    const Index n = X.cols();
    const double inv_n = 1.0 / double(n);

    // forward pass with caches
    Matrix h1 = ((m.W1() * X).colwise() + m.b1()).array().tanh().matrix();
    Matrix h2 = ((m.W2() * h1).colwise() + m.b2()).array().tanh().matrix();
    Vector v = (m.w3().transpose() * h2).transpose();
    v.array() += m.b3();
    Matrix s1 = (1.0 - h1.array().square()).matrix();
    Matrix s2 = (1.0 - h2.array().square()).matrix();
    Matrix u2 = (s2.array().colwise() * m.w3().array()).matrix();
    Matrix c1 = m.W2().transpose() * u2;
    Matrix u1 = (s1.array() * c1.array()).matrix();
    Matrix gx = m.W1().transpose() * u1;

    Vector rv = (2.0 * mu * inv_n) * (v - data.V);
    Matrix rg = (2.0 * (1.0 - mu) * inv_n) * (gx - data.Lam);
    const double loss = mu * inv_n * (v - data.V).squaredNorm() +
                        (1.0 - mu) * inv_n * (gx - data.Lam).squaredNorm();

    grad.setZero(m.n_params());
    double* p = grad.data();
    Eigen::Map<Matrix> gW1(p, m.w1, m.d);
    Eigen::Map<Vector> gb1(p + m.w1 * m.d, m.w1);
    Eigen::Map<Matrix> gW2(p + m.w1 * m.d + m.w1, m.w2, m.w1);
    Eigen::Map<Vector> gb2(p + m.w1 * m.d + m.w1 + m.w2 * m.w1, m.w2);
    Eigen::Map<Vector> gw3(p + m.w1 * m.d + m.w1 + m.w2 * m.w1 + m.w2, m.w2);
    double& gb3 = grad[m.n_params() - 1];

    // value term: ordinary backprop with per-sample weight rv
    Matrix d2 = (u2.array().rowwise() * rv.transpose().array()).matrix();  // s2 .* w3 .* rv
    Matrix d1 = (s1.array() * (m.W2().transpose() * d2).array()).matrix();
    gb3 = rv.sum();
    gw3 = h2 * rv;
    gb2 = d2.rowwise().sum();
    gW2.noalias() = d2 * h1.transpose();
    gb1 = d1.rowwise().sum();
    gW1.noalias() = d1 * X.transpose();

    // gradient term: backprop of rg . gx through the input-gradient network
    Matrix a1 = m.W1() * rg;
    Matrix p1 = (a1.array() * s1.array()).matrix();
    Matrix q1 = (a1.array() * c1.array()).matrix();
    Matrix w2p = m.W2() * p1;
    Matrix q2 = (-2.0 * h2.array() * u2.array() * w2p.array()).matrix();
    Matrix t1 = (-2.0 * h1.array() * s1.array() * q1.array() +
                 s1.array() * (m.W2().transpose() * q2).array())
                    .matrix();
    gw3 += (s2.array() * w2p.array()).matrix().rowwise().sum();
    gb2 += q2.rowwise().sum();
    gW2.noalias() += q2 * h1.transpose();
    gW2.noalias() += u2 * p1.transpose();
    gb1 += t1.rowwise().sum();
    gW1.noalias() += t1 * X.transpose();
    gW1.noalias() += u1 * rg.transpose();
    return loss;
}

// stacked weighted design solve; a rank-truncated orthogonal decomposition keeps
// the conditioning of the design itself rather than its square and returns the
// minimum-norm minimizer, which matters for wide overlapping kernels
Vector rbf_least_squares(const RbfModel& m, const Dataset& data, double mu, double rank_tol) {
    Matrix Phi;
    std::vector<Matrix> Gk;
    rbf_design(m, data.X, Phi, Gk);
    const Index n = data.size(), d = data.X.rows(), nc = m.centers.cols();
    const double wv = std::sqrt(mu / double(n));
    const double wg = std::sqrt((1.0 - mu) / double(n));
    Matrix D((1 + d) * n, nc);
    Vector t((1 + d) * n);
    D.topRows(n) = wv * Phi;
    t.head(n) = wv * data.V;
    for (Index k = 0; k < d; ++k) {
        D.middleRows((1 + k) * n, n) = wg * Gk[std::size_t(k)];
        t.segment((1 + k) * n, n) = wg * data.Lam.row(k).transpose();
    }
    // the threshold must be prescribed before factorization: the annihilation of the
    // rank-deficient block is built during compute() for the rank determined there
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod;
    cod.setThreshold(rank_tol);
    cod.compute(D);
    return cod.solve(t);
}

}  // namespace

double vg_loss_grad(const ValueModel& m, const Dataset& data, double mu, Vector& grad) {
    if (m.family == ValueModel::Family::rbf) return rbf_loss_grad(m.rbf, data, mu, grad);
    return mlp_loss_grad(m.mlp, data, mu, grad);
}

double QuadraticLoss::value(const Vector& theta) const {
    return theta.dot(A * theta) - 2.0 * b.dot(theta) + c;
}

double QuadraticLoss::value_grad(const Vector& theta, Vector& grad) const {
    Vector At = A * theta;
    grad = 2.0 * (At - b);
    return theta.dot(At) - 2.0 * b.dot(theta) + c;
}

Vector QuadraticLoss::minimizer(double ridge) const {
    Matrix M = A;
    M.diagonal().array() += ridge;
    return M.ldlt().solve(b);
}

QuadraticLoss rbf_quadratic_loss(const RbfModel& m, const Dataset& data, double mu) {
    Matrix Phi;
    std::vector<Matrix> Gk;
    rbf_design(m, data.X, Phi, Gk);
    const double n = double(data.size());
    QuadraticLoss q;
    q.A = (mu / n) * (Phi.transpose() * Phi);
    q.b = (mu / n) * (Phi.transpose() * data.V);
    q.c = (mu / n) * data.V.squaredNorm();
    for (Index k = 0; k < data.X.rows(); ++k) {
        const Matrix& G = Gk[std::size_t(k)];
        Vector lam = data.Lam.row(k).transpose();
        q.A.noalias() += ((1.0 - mu) / n) * (G.transpose() * G);
        q.b.noalias() += ((1.0 - mu) / n) * (G.transpose() * lam);
        q.c += ((1.0 - mu) / n) * lam.squaredNorm();
    }
    return q;
}

FitResult adam_minimize(const LossGradFn& f, Vector& theta, const AdamConfig& cfg) {
    FitResult out;
    Vector grad(theta.size());
    Vector m1 = Vector::Zero(theta.size());
    Vector m2 = Vector::Zero(theta.size());
    double best = std::numeric_limits<double>::infinity();
    int last_improve = 0;
    for (int k = 0; k < cfg.max_steps; ++k) {
        const double loss = f(theta, grad);
        if (!std::isfinite(loss)) throw std::runtime_error("non-finite loss in optimizer");
        out.loss_history.push_back(loss);
        out.final_loss = loss;
        if (loss < cfg.loss_tol) break;
        if (loss < best * (1.0 - cfg.rel_improve_tol)) {
            best = loss;
            last_improve = k;
        } else if (k - last_improve >= cfg.stall_window) {
            break;
        }
        m1 = cfg.beta1 * m1 + (1.0 - cfg.beta1) * grad;
        m2 = (cfg.beta2 * m2.array() + (1.0 - cfg.beta2) * grad.array().square()).matrix();
        const double bc1 = 1.0 - std::pow(cfg.beta1, k + 1);
        const double bc2 = 1.0 - std::pow(cfg.beta2, k + 1);
        theta.array() -= cfg.lr * (m1.array() / bc1) / ((m2.array() / bc2).sqrt() + cfg.eps);
        out.steps = k + 1;
    }
    if (out.steps == cfg.max_steps) {
        out.final_loss = f(theta, grad);
        out.loss_history.push_back(out.final_loss);
    }
    return out;
}

AdamConfig default_adam(ValueModel::Family family) {
    AdamConfig cfg;
    cfg.lr = family == ValueModel::Family::rbf ? 1e-2 : 3e-3;
    return cfg;
}

FitResult fit_model(ValueModel& m, const Dataset& data, double mu, const AdamConfig& cfg) {
    if (m.family == ValueModel::Family::rbf) {
        QuadraticLoss q = rbf_quadratic_loss(m.rbf, data, mu);
        if (cfg.seed_linear) {
            // trajectory-local features are near-collinear; a diagonally preconditioned
            // first-order method stalls orders of magnitude above the attainable optimum
            Vector old = m.rbf.theta;
            const double old_loss = vg_loss(m, data, mu);
            m.rbf.theta = rbf_least_squares(m.rbf, data, mu, cfg.seed_rank_tol);
            const double seed_loss = vg_loss(m, data, mu);
            if (!(std::isfinite(seed_loss) && seed_loss < old_loss)) m.rbf.theta = std::move(old);
        }
        auto f = [&q](const Vector& th, Vector& g) { return q.value_grad(th, g); };
        Vector held = m.rbf.theta;
        const double held_loss = vg_loss(m, data, mu);
        FitResult r = adam_minimize(f, m.rbf.theta, cfg);
        const double adam_loss = vg_loss(m, data, mu);
        if (held_loss < adam_loss) {  // keep the better iterate if the optimizer wandered
            m.rbf.theta = std::move(held);
            r.final_loss = held_loss;
        } else {
            r.final_loss = adam_loss;
        }
        return r;
    }
    auto f = [&m, &data, mu](const Vector& th, Vector& g) {
        if (th.data() != m.mlp.theta.data()) m.mlp.theta = th;
        return mlp_loss_grad(m.mlp, data, mu, g);
    };
    return adam_minimize(f, m.mlp.theta, cfg);
}

}  // namespace hjb
