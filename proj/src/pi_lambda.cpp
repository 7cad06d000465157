#include "hjb/pi_lambda.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

namespace hjb {

double ScalarField::value(const Vector& x) const {
    Vector v;
    Matrix G;
    batch(x, v, G);
    return v[0];
}

Vector ScalarField::grad(const Vector& x) const {
    Vector v;
    Matrix G;
    batch(x, v, G);
    return G.col(0);
}

ScalarField field_from_model(ValueModel model) {
    ScalarField f;
    f.batch = [m = std::move(model)](const Matrix& X, Vector& v, Matrix& G) {
        eval_batch(m, X, v, G);
    };
    return f;
}

ScalarField field_from_initial(const ControlProblem& pr) {
    ScalarField f;
    if (pr.u0_batch) {
        f.batch = [fn = pr.u0_batch](const Matrix& X, Vector& v, Matrix& G) { fn(X, v, G); };
    } else {
        f.batch = [u0 = pr.u0, g0 = pr.u0_grad](const Matrix& X, Vector& v, Matrix& G) {
            v.resize(X.cols());
            G.resize(X.rows(), X.cols());
            for (Index j = 0; j < X.cols(); ++j) {
                v[j] = u0(X.col(j));
                G.col(j) = g0(X.col(j));
            }
        };
    }
    return f;
}

BatchGradFn grad_of(const ScalarField& field) {
    return [b = field.batch](const Matrix& X) {
        Vector v;
        Matrix G;
        b(X, v, G);
        return G;
    };
}

BatchGradFn grad_of(const ValueModel& model) {
    return [m = model](const Matrix& X) {
        Vector v;
        Matrix G;
        eval_batch(m, X, v, G);
        return G;
    };
}

PiLambdaConfig default_pi_config(ValueModel::Family family, double kappa) {
    PiLambdaConfig cfg;
    cfg.family = family;
    cfg.kappa = kappa;
    cfg.adam = default_adam(family);
    return cfg;
}

namespace {

Matrix subsample_columns(const Matrix& X, Index target) {
    if (X.cols() <= target) return X;
    Matrix out(X.rows(), target);
    for (Index j = 0; j < target; ++j) out.col(j) = X.col(j * X.cols() / target);
    return out;
}

}  // namespace

SliceSolve pi_lambda_linear_step(const ControlProblem& pr, const ScalarField& prev,
                                 const BatchGradFn& policy_lambda, const Box& box,
                                 const PiLambdaConfig& cfg, const ValueModel* warm) {
    const double kappa = cfg.kappa;
    // Integrate past the snapshot window so every label keeps a recorded
    // discount tail; the frozen-endpoint remainder is then O(exp(-horizon_factor)).
    const double cover = cfg.cover_factor / kappa;
    const double horizon = cover + cfg.horizon_factor / kappa;
    const double step = cfg.integrator_step > 0 ? cfg.integrator_step : 1.0 / (20.0 * kappa);
    const Box sim = box.scaled(cfg.sim_box_scale);

    Matrix X0 = sample_initial_states(box, cfg.n_train, child_seed(cfg.seed, "x0"));
    auto drift = [&](const Matrix& S) { return optimal_drift_batch(pr, S, policy_lambda(S)); };
    auto trajs = integrate_characteristics(X0, drift, horizon, step, sim, cfg.record_stride);

    std::vector<LabelledSnapshot> all;
    all.reserve(std::size_t(cfg.n_train * cfg.snapshots_per_traj));
    for (const auto& traj : trajs) {
        const Matrix& S = traj.states;
        const Index m = S.cols();
        Vector vp;
        Matrix Gp;
        prev.batch(S, vp, Gp);
        Matrix Lam = policy_lambda(S);
        Matrix Acts = optimal_action_batch(pr, S, Lam);
        Vector vsrc(m);
        Matrix gsrc(pr.d, m);
        for (Index j = 0; j < m; ++j) {
            vsrc[j] = pr.cost(S.col(j), Acts.col(j)) + kappa * vp[j];
            gsrc.col(j) = pr.dynamics_jac_x(S.col(j)).transpose() * Lam.col(j) +
                          pr.cost_grad_x(S.col(j), Acts.col(j)) + kappa * Gp.col(j);
        }
        Vector V = value_along(traj, vsrc, kappa);
        Matrix C = gradient_along(traj, gsrc, kappa);
        Index keep = 0;
        while (keep < m && traj.times[keep] <= cover * (1.0 + 1e-12)) ++keep;
        Trajectory head;
        head.id = traj.id;
        head.states = S.leftCols(keep);
        head.times = traj.times.head(keep);
        head.arclen = traj.arclen.head(keep);
        head.exited = traj.exited && keep == m;
        auto snaps = arclength_resample(head, V.head(keep), C.leftCols(keep), box,
                                        cfg.snapshots_per_traj);
        all.insert(all.end(), snaps.begin(), snaps.end());
    }
    if (all.size() < 4) throw std::runtime_error("too few training snapshots in slice solve");

    SliceSolve out;
    const Index n = Index(all.size());
    out.data.X.resize(pr.d, n);
    out.data.V.resize(n);
    out.data.Lam.resize(pr.d, n);
    for (Index j = 0; j < n; ++j) {
        const auto& s = all[std::size_t(j)];
        out.data.X.col(j) = s.x;
        out.data.V[j] = s.value;
        out.data.Lam.col(j) = s.costate;
    }

    if (cfg.family == ValueModel::Family::rbf) {
        Matrix centers = subsample_columns(out.data.X, cfg.max_centers);
        out.model = make_rbf(centers, rbf_shape_fill(centers, box, child_seed(cfg.seed, "shape")));
    } else if (warm && warm->family == ValueModel::Family::mlp && warm->dim() == pr.d) {
        out.model = *warm;
    } else {
        out.model = make_mlp(pr.d, cfg.mlp_width, cfg.mlp_width, child_seed(cfg.seed, "mlp-init"));
    }
    fit_model(out.model, out.data, cfg.mu, cfg.adam);
    return out;
}

double slice_residual(const ControlProblem& pr, const ValueModel& model, const ScalarField& prev,
                      double kappa, const Matrix& pts) {
    Vector v;
    Matrix G;
    eval_batch(model, pts, v, G);
    Vector h = hamiltonian_batch(pr, pts, G);
    Vector vp;
    Matrix Gp;
    prev.batch(pts, vp, Gp);
    return (kappa * (v - vp) + h).cwiseAbs().mean();
}

double transport_residual(const ControlProblem& pr, const ValueModel& model,
                          const ScalarField& prev, const BatchGradFn& policy_lambda, double kappa,
                          const Matrix& pts) {
    Vector v;
    Matrix G;
    eval_batch(model, pts, v, G);
    Matrix Lam = policy_lambda(pts);
    Matrix Acts = optimal_action_batch(pr, pts, Lam);
    Matrix drift = optimal_drift_batch(pr, pts, Lam);
    Vector vp;
    Matrix Gp;
    prev.batch(pts, vp, Gp);
    Vector r(pts.cols());
    for (Index j = 0; j < pts.cols(); ++j) {
        const double src = pr.cost(pts.col(j), Acts.col(j)) + kappa * vp[j];
        r[j] = kappa * v[j] - G.col(j).dot(drift.col(j)) - src;
    }
    return r.cwiseAbs().mean();
}

SliceResult pi_lambda_slice(const ControlProblem& pr, const ScalarField& prev, const Box& box,
                            const PiLambdaConfig& cfg, const ValueModel* warm) {
    Matrix rpts = sample_initial_states(box, cfg.n_residual, child_seed(cfg.seed, "residual"));
    SliceResult out;
    BatchGradFn lam = grad_of(prev);
    const int tail_start = std::max(0, cfg.policy_iters - cfg.residual_tail);
    const ValueModel* carry = warm;
    for (int k = 0; k < cfg.policy_iters; ++k) {
        // fresh initial states every iteration: successive refits of a carried
        // model see different rays, so coverage accumulates over the iteration
        PiLambdaConfig it = cfg;
        it.seed = child_seed(cfg.seed, "iter", std::uint64_t(k));
        SliceSolve s = pi_lambda_linear_step(pr, prev, lam, box, it, carry);
        if (k >= tail_start)
            out.residual_tail.push_back(
                transport_residual(pr, s.model, prev, lam, cfg.kappa, rpts));
        out.model = std::move(s.model);
        lam = grad_of(out.model);
        carry = &out.model;
    }
    out.residual_mean = 0.0;
    for (double r : out.residual_tail) out.residual_mean += r;
    if (!out.residual_tail.empty()) out.residual_mean /= double(out.residual_tail.size());
    out.residual_hjb = slice_residual(pr, out.model, prev, cfg.kappa, rpts);
    return out;
}

MarchResult solve_first_order(const ControlProblem& pr, const Box& box, double T, int n_slices,
                              PiLambdaConfig cfg) {
    cfg.kappa = double(n_slices) / T;
    MarchResult out;
    out.times = linspace(0.0, T, n_slices + 1);
    const std::uint64_t base = cfg.seed;
    ScalarField prev = field_from_initial(pr);
    for (int i = 0; i < n_slices; ++i) {
        cfg.seed = child_seed(base, "slice", std::uint64_t(i));
        SliceResult r =
            pi_lambda_slice(pr, prev, box, cfg, out.models.empty() ? nullptr : &out.models.back());
        prev = field_from_model(r.model);
        out.residuals.push_back(r.residual_mean);
        out.models.push_back(std::move(r.model));
    }
    return out;
}

Quadrature box_quadrature_gl(const Box& box, int panels_per_axis) {
    const Index d = box.dim();
    if (d > 2) throw std::runtime_error("tensor quadrature limited to one or two dimensions");
    // 4-point Gauss-Legendre on [-1, 1]
    static const double gn[4] = {-0.8611363115940526, -0.3399810435848563, 0.3399810435848563,
                                 0.8611363115940526};
    static const double gw[4] = {0.3478548451374538, 0.6521451548625461, 0.6521451548625461,
                                 0.3478548451374538};
    const Index per_axis = 4 * Index(panels_per_axis);
    std::vector<Vector> axis_pts, axis_wts;
    axis_pts.resize(std::size_t(d));
    axis_wts.resize(std::size_t(d));
    for (Index k = 0; k < d; ++k) {
        Vector pts(per_axis), wts(per_axis);
        const double width = (box.hi[k] - box.lo[k]) / double(panels_per_axis);
        for (Index pnl = 0; pnl < panels_per_axis; ++pnl) {
            const double a = box.lo[k] + double(pnl) * width;
            for (Index q = 0; q < 4; ++q) {
                pts[4 * pnl + q] = a + 0.5 * width * (1.0 + gn[q]);
                wts[4 * pnl + q] = 0.5 * width * gw[q];
            }
        }
        axis_pts[std::size_t(k)] = pts;
        axis_wts[std::size_t(k)] = wts;
    }
    Quadrature quad;
    if (d == 1) {
        quad.points = axis_pts[0].transpose();
        quad.weights = axis_wts[0];
        return quad;
    }
    const Index n = per_axis * per_axis;
    quad.points.resize(2, n);
    quad.weights.resize(n);
    for (Index j = 0; j < per_axis; ++j)
        for (Index i = 0; i < per_axis; ++i) {
            quad.points(0, i + per_axis * j) = axis_pts[0][i];
            quad.points(1, i + per_axis * j) = axis_pts[1][j];
            quad.weights[i + per_axis * j] = axis_wts[0][i] * axis_wts[1][j];
        }
    return quad;
}

Quadrature box_quadrature_mc(const Box& box, Index n, std::uint64_t seed) {
    Quadrature quad;
    quad.points = sample_initial_states(box, int(n), seed);
    quad.weights = Vector::Constant(n, box.volume() / double(n));
    return quad;
}

double weighted_field_distance(const std::vector<BatchGradFn>& a, const std::vector<BatchGradFn>& b,
                               const Vector& times, double gamma, double alpha,
                               const Quadrature& quad) {
    if (a.size() != b.size() || Index(a.size()) + 1 != times.size())
        throw std::runtime_error("weighted distance: slice counts disagree");
    Vector wx = quad.weights;
    if (alpha != 0.0)
        wx.array() *=
            (1.0 + quad.points.colwise().squaredNorm().transpose().array()).pow(-2.0 * alpha);
    double total = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        Matrix A = a[i](quad.points);
        Matrix B = b[i](quad.points);
        Vector d2 = (A - B).colwise().squaredNorm().transpose();
        const double wt =
            (std::exp(-gamma * times[Index(i)]) - std::exp(-gamma * times[Index(i) + 1])) / gamma;
        total += wt * wx.dot(d2);
    }
    return total;
}

SweepStudy run_pi_sweeps(const ControlProblem& pr, const Box& box, const SweepStudyConfig& cfg) {
    const int M = cfg.n_slices;
    Vector times = linspace(0.0, cfg.T, M + 1);
    Quadrature quad = pr.d <= 2
                          ? box_quadrature_gl(box, cfg.quad_panels)
                          : box_quadrature_mc(box, cfg.mc_points, child_seed(cfg.slice.seed, "quad"));

    std::vector<std::uint64_t> slice_seed;
    slice_seed.resize(std::size_t(M));
    for (int i = 0; i < M; ++i)
        slice_seed[std::size_t(i)] = child_seed(cfg.slice.seed, "sweep-slice", std::uint64_t(i));

    ScalarField initial = field_from_initial(pr);
    std::vector<BatchGradFn> prev_fields(std::size_t(M), grad_of(initial));

    SweepStudy out;
    for (int sweep = 1; sweep <= cfg.sweeps; ++sweep) {
        std::vector<BatchGradFn> new_fields;
        new_fields.reserve(std::size_t(M));
        ScalarField chain = initial;
        for (int i = 0; i < M; ++i) {
            PiLambdaConfig sc = cfg.slice;
            sc.kappa = double(M) / cfg.T;
            sc.seed = slice_seed[std::size_t(i)];
            SliceSolve s = pi_lambda_linear_step(pr, chain, prev_fields[std::size_t(i)], box, sc);
            chain = field_from_model(s.model);
            new_fields.push_back(grad_of(s.model));
        }
        out.errors.push_back(
            weighted_field_distance(new_fields, prev_fields, times, cfg.gamma, cfg.alpha, quad));
        prev_fields = std::move(new_fields);
    }
    for (std::size_t k = 1; k < out.errors.size(); ++k)
        out.ratios.push_back(out.errors[k] / out.errors[k - 1]);
    return out;
}

}  // namespace hjb
