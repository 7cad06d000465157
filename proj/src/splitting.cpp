#include "hjb/splitting.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>

namespace hjb {

GridHamiltonian hamiltonian_of(const ControlProblem& pr) {
    return [&pr](const Matrix& X, const Matrix& P) { return hamiltonian_batch(pr, X, P); };
}

GridHamiltonian quadratic_hamiltonian() {
    return [](const Matrix&, const Matrix& P) {
        return Vector(0.5 * P.colwise().squaredNorm().transpose());
    };
}

namespace {

// periodic neighbor copy along one axis of the flat x-fastest storage
void shift_axis(const Array& u, Index d, Index res, Index axis, int dir, Array& out) {
    const Index n = u.size();
    out.resize(n);
    if (d == 1) {
        if (dir > 0) {
            out.head(n - 1) = u.tail(n - 1);
            out[n - 1] = u[0];
        } else {
            out.tail(n - 1) = u.head(n - 1);
            out[0] = u[n - 1];
        }
        return;
    }
    Eigen::Map<const Matrix> U(u.data(), res, res);
    Eigen::Map<Matrix> O(out.data(), res, res);
    if (axis == 0) {
        if (dir > 0) {
            O.topRows(res - 1) = U.bottomRows(res - 1);
            O.row(res - 1) = U.row(0);
        } else {
            O.bottomRows(res - 1) = U.topRows(res - 1);
            O.row(0) = U.row(res - 1);
        }
    } else {
        if (dir > 0) {
            O.leftCols(res - 1) = U.rightCols(res - 1);
            O.col(res - 1) = U.col(0);
        } else {
            O.rightCols(res - 1) = U.leftCols(res - 1);
            O.col(0) = U.col(res - 1);
        }
    }
}

// max |dH/dp_k| over subsampled states and a tensor grid of gradients
Vector estimate_theta(const GridHamiltonian& H, const Matrix& X, const Vector& plo,
                      const Vector& phi, const FdConfig& cfg) {
    const Index d = X.rows();
    const Index nx = std::min<Index>(X.cols(), 64);
    Matrix Xs(d, nx);
    for (Index j = 0; j < nx; ++j) Xs.col(j) = X.col(j * X.cols() / nx);

    Index nc = 1;
    for (Index k = 0; k < d; ++k) nc *= cfg.p_samples;
    Matrix Xrep(d, nx * nc), Prep(d, nx * nc);
    for (Index c = 0; c < nc; ++c) {
        Vector p(d);
        Index rem = c;
        for (Index k = 0; k < d; ++k) {
            const Index idx = rem % cfg.p_samples;
            rem /= cfg.p_samples;
            p[k] = plo[k] + (phi[k] - plo[k]) * double(idx) / double(cfg.p_samples - 1);
        }
        Xrep.middleCols(c * nx, nx) = Xs;
        Prep.middleCols(c * nx, nx).colwise() = p;
    }
    Vector theta(d);
    for (Index k = 0; k < d; ++k) {
        const double delta = 1e-4 * (1.0 + phi[k] - plo[k]);
        Matrix Pp = Prep, Pm = Prep;
        Pp.row(k).array() += delta;
        Pm.row(k).array() -= delta;
        theta[k] =
            cfg.theta_margin * ((H(Xrep, Pp) - H(Xrep, Pm)) / (2.0 * delta)).cwiseAbs().maxCoeff();
    }
    return theta;
}

}  // namespace

GridField fd_viscous_solve(const GridHamiltonian& H, const GridField& u0, double eps, double T,
                           const FdConfig& cfg) {
    if (!u0.periodic) throw std::runtime_error("transport march needs a periodic grid");
    if (u0.d > 2) throw std::runtime_error("transport march limited to one or two dimensions");
    const Index d = u0.d, res = u0.res;
    if (T <= 0.0) return u0;
    const Matrix X = grid_points(u0);
    Vector dx(d);
    for (Index k = 0; k < d; ++k) dx[k] = u0.spacing(k);

    std::vector<Array> up(static_cast<std::size_t>(d)), dn(static_cast<std::size_t>(d)),
        pm(static_cast<std::size_t>(d)), pp(static_cast<std::size_t>(d));
    auto slopes = [&](const Array& u) {
        for (Index k = 0; k < d; ++k) {
            shift_axis(u, d, res, k, +1, up[std::size_t(k)]);
            shift_axis(u, d, res, k, -1, dn[std::size_t(k)]);
            pm[std::size_t(k)] = (u - dn[std::size_t(k)]) / dx[k];
            pp[std::size_t(k)] = (up[std::size_t(k)] - u) / dx[k];
        }
    };

    // gradient range of the datum, padded; the march restarts wider if exceeded
    slopes(u0.values);
    Vector plo(d), phi(d);
    for (Index k = 0; k < d; ++k) {
        plo[k] = std::min(pm[std::size_t(k)].minCoeff(), pp[std::size_t(k)].minCoeff());
        phi[k] = std::max(pm[std::size_t(k)].maxCoeff(), pp[std::size_t(k)].maxCoeff());
    }
    auto pad = [&]() {
        for (Index k = 0; k < d; ++k) {
            const double c = 0.5 * (plo[k] + phi[k]), r = 0.5 * (phi[k] - plo[k]);
            plo[k] = c - (2.0 * r + 1.0);
            phi[k] = c + (2.0 * r + 1.0);
        }
    };
    pad();

    Matrix P(d, u0.size());
    Array u, upd;
    for (int attempt = 0; attempt < 4; ++attempt) {
        const Vector theta = estimate_theta(H, X, plo, phi, cfg);
        double bound = 0.0;
        for (Index k = 0; k < d; ++k) bound += theta[k] / dx[k] + 2.0 * eps / (dx[k] * dx[k]);
        const Index steps = std::max<Index>(1, Index(std::ceil(T * bound / cfg.cfl)));
        const double dt = T / double(steps);

        u = u0.values;
        bool grown = false;
        for (Index s = 0; s < steps && !grown; ++s) {
            slopes(u);
            for (Index k = 0; k < d; ++k) {
                const double lo =
                    std::min(pm[std::size_t(k)].minCoeff(), pp[std::size_t(k)].minCoeff());
                const double hi =
                    std::max(pm[std::size_t(k)].maxCoeff(), pp[std::size_t(k)].maxCoeff());
                if (lo < plo[k] || hi > phi[k]) {
                    plo[k] = std::min(plo[k], lo);
                    phi[k] = std::max(phi[k], hi);
                    grown = true;
                }
            }
            if (grown) break;
            for (Index k = 0; k < d; ++k)
                P.row(k) = (0.5 * (pm[std::size_t(k)] + pp[std::size_t(k)])).matrix().transpose();
            upd = -H(X, P).array();
            for (Index k = 0; k < d; ++k) {
                upd += 0.5 * theta[k] * (pp[std::size_t(k)] - pm[std::size_t(k)]);
                if (eps > 0.0)
                    upd += (eps / (dx[k] * dx[k])) *
                           (up[std::size_t(k)] - 2.0 * u + dn[std::size_t(k)]);
            }
            u += dt * upd;
        }
        if (!grown) {
            GridField out = u0;
            out.values = u;
            return out;
        }
        pad();
    }
    throw std::runtime_error("gradient range kept growing in the transport march");
}

FdReference fd_viscous_reference(const GridHamiltonian& H,
                                 const std::function<double(const Vector&)>& u0, const Box& domain,
                                 double eps, double T, Index res0, double tol, int max_doublings,
                                 const FdConfig& cfg) {
    FdReference out;
    const Index d = domain.dim();
    GridField prev;
    for (int level = 0; level <= max_doublings; ++level) {
        const Index res = res0 << level;
        GridField g = GridField::sample(d, res, domain, true, u0);
        g = fd_viscous_solve(H, g, eps, T, cfg);
        if (level > 0) {
            // coarse point i sits at fine point 2i on a shared periodic origin
            double change = 0.0;
            for (Index flat = 0; flat < prev.size(); ++flat) {
                Index fine = 0;
                if (d == 1) {
                    fine = 2 * flat;
                } else {
                    const Index i = flat % prev.res, j = flat / prev.res;
                    fine = 2 * i + res * (2 * j);
                }
                change = std::max(change, std::abs(prev.values[flat] - g.values[fine]));
            }
            out.changes.push_back(change);
        }
        prev = std::move(g);
    }
    out.converged = !out.changes.empty() && out.changes.back() <= tol;
    out.field = std::move(prev);
    return out;
}

void append_regularity(RegularityTrace& trace, const GridField& g) {
    const Index d = g.d, res = g.res;
    std::vector<Array> fwd(static_cast<std::size_t>(d)), sec(static_cast<std::size_t>(d));
    for (Index k = 0; k < d; ++k) {
        Array up, dn;
        shift_axis(g.values, d, res, k, +1, up);
        shift_axis(g.values, d, res, k, -1, dn);
        const double h = g.spacing(k);
        fwd[std::size_t(k)] = (up - g.values) / h;
        sec[std::size_t(k)] = (up - 2.0 * g.values + dn) / (h * h);
        if (!g.periodic) {
            // one-sided rows at box edges carry wrapped garbage; zero them out
            for (Index flat = 0; flat < g.size(); ++flat) {
                const Index i = d == 1 ? flat : (k == 0 ? flat % res : flat / res);
                if (i == res - 1) fwd[std::size_t(k)][flat] = 0.0;
                if (i == 0 || i == res - 1) sec[std::size_t(k)][flat] = 0.0;
            }
        }
    }
    Array norm2 = Array::Zero(g.size());
    for (Index k = 0; k < d; ++k) norm2 += fwd[std::size_t(k)].square();
    double sc = -std::numeric_limits<double>::infinity();
    for (Index k = 0; k < d; ++k) sc = std::max(sc, sec[std::size_t(k)].maxCoeff());
    trace.lip.push_back(std::sqrt(norm2.maxCoeff()));
    trace.sc.push_back(sc);
}

SplitRun split_solve_grid(const GridHamiltonian& H, const GridField& u0,
                          const SplitRunConfig& cfg) {
    const double h = cfg.T / double(cfg.n_steps);
    SplitRun out;
    out.times = linspace(0.0, cfg.T, cfg.n_steps + 1);
    append_regularity(out.trace, u0);
    GridField v = u0;
    for (int i = 0; i < cfg.n_steps; ++i) {
        if (cfg.heat_first && cfg.eps > 0.0) v = heat_apply_grid(v, cfg.eps * h);
        v = fd_viscous_solve(H, v, 0.0, h, cfg.fd);
        if (!cfg.heat_first && cfg.eps > 0.0) v = heat_apply_grid(v, cfg.eps * h);
        append_regularity(out.trace, v);
        out.fields.push_back(v);
    }
    return out;
}

ModelSplitRun split_solve_models(const ControlProblem& pr, const Box& box, double eps, double T,
                                 int n_steps, PiLambdaConfig pi, const SmoothingSpec& smoothing) {
    pi.kappa = double(n_steps) / T;
    const double h = T / double(n_steps);
    ModelSplitRun out;
    out.times = linspace(0.0, T, n_steps + 1);
    const std::uint64_t base = pi.seed;
    ScalarField prev = field_from_initial(pr);
    const ValueModel* warm = nullptr;
    for (int i = 0; i < n_steps; ++i) {
        pi.seed = child_seed(base, "slice", std::uint64_t(i));
        SliceResult r = pi_lambda_slice(pr, prev, box, pi, warm);
        out.residuals.push_back(r.residual_mean);
        out.models.push_back(std::move(r.model));
        warm = &out.models.back();
        const double et = eps * h;
        if (et > 0.0) {
            SmoothingSpec spec = smoothing;
            spec.seed = child_seed(base, "smooth", std::uint64_t(i));
            prev.batch = [m = out.models.back(), spec, et](const Matrix& Xq, Vector& v, Matrix& G) {
                BatchValueFn vf = [&m](const Matrix& Z) {
                    Vector vv;
                    Matrix GG;
                    eval_batch(m, Z, vv, GG);
                    return vv;
                };
                BatchGradFn gf = [&m](const Matrix& Z) {
                    Vector vv;
                    Matrix GG;
                    eval_batch(m, Z, vv, GG);
                    return GG;
                };
                v = heat_apply_points(vf, Xq, et, spec).values;
                G = heat_apply_gradient(gf, Xq, et, spec).gradients;
            };
        } else {
            prev = field_from_model(out.models.back());
        }
    }
    return out;
}

RateReport splitting_rate_study(const GridHamiltonian& H,
                                const std::function<double(const Vector&)>& u0, const Box& domain,
                                double eps, double T, const std::vector<int>& steps_list, Index res,
                                double ref_tol, const SplitRunConfig& base) {
    const Index res0 = std::max<Index>(res / 4, 32);
    int doublings = 0;
    while ((res0 << doublings) < res) ++doublings;
    FdReference ref =
        fd_viscous_reference(H, u0, domain, eps, T, res0, ref_tol, doublings, base.fd);

    RateReport report;
    report.ref_changes = ref.changes;
    report.ref_converged = ref.converged;
    const GridField u0g = GridField::sample(domain.dim(), res, domain, true, u0);
    std::vector<double> hs, overs, unders, l1s;
    for (int n : steps_list) {
        SplitRunConfig cfg = base;
        cfg.eps = eps;
        cfg.T = T;
        cfg.n_steps = n;
        SplitRun run = split_solve_grid(H, u0g, cfg);
        const Array diff = ref.field.values - run.fields.back().values;
        RateRow row;
        row.h = T / double(n);
        row.over = std::max(0.0, diff.maxCoeff());
        row.under = std::max(0.0, (-diff).maxCoeff());
        row.l1 = diff.abs().mean() * domain.volume();
        report.rows.push_back(row);
        hs.push_back(row.h);
        overs.push_back(row.over);
        unders.push_back(row.under);
        l1s.push_back(row.l1);
    }
    report.slope_over = fit_loglog_slope(hs, overs);
    report.slope_under = fit_loglog_slope(hs, unders);
    report.slope_l1 = fit_loglog_slope(hs, l1s);
    return report;
}

double ridge_datum(double x, double delta) {
    const double s = std::sin(M_PI * x);
    return 1.0 - std::sqrt(s * s + delta * delta);
}

double valley_datum(double x, double delta) {
    const double s = std::sin(M_PI * x);
    return std::sqrt(s * s + delta * delta);
}

double smooth_datum(double x) { return 0.5 * std::cos(2.0 * M_PI * x); }

GridField hopf_lax_reference(const GridField& u0, double t) {
    if (u0.d != 1) throw std::runtime_error("inf-convolution reference is one-dimensional");
    if (!u0.periodic) throw std::runtime_error("inf-convolution reference needs a periodic grid");
    const Index n = u0.res;
    const double L = u0.domain.hi[0] - u0.domain.lo[0];
    GridField out = u0;
    for (Index i = 0; i < n; ++i) {
        const double xi = u0.domain.lo[0] + double(i) * u0.spacing(0);
        double best = std::numeric_limits<double>::infinity();
        for (Index j = 0; j < n; ++j) {
            const double yj = u0.domain.lo[0] + double(j) * u0.spacing(0);
            for (int w = -1; w <= 1; ++w) {
                const double dxy = xi - yj - double(w) * L;
                best = std::min(best, u0.values[j] + dxy * dxy / (2.0 * t));
            }
        }
        out.values[i] = best;
    }
    return out;
}

double fit_loglog_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    int n = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (!(xs[i] > 0.0) || !(ys[i] > 0.0)) continue;
        const double lx = std::log(xs[i]), ly = std::log(ys[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
        ++n;
    }
    if (n < 2) return 0.0;
    const double denom = double(n) * sxx - sx * sx;
    return denom == 0.0 ? 0.0 : (double(n) * sxy - sx * sy) / denom;
}

}  // namespace hjb
