#include "hjb/heat.hpp"

#include <unsupported/Eigen/FFT>

#include <Eigen/Eigenvalues>
#include <complex>

namespace hjb {

GaussHermiteRule gauss_hermite_rule(int order) {
    // Golub-Welsch on the Jacobi matrix of the physicists' Hermite recurrence
    Matrix J = Matrix::Zero(order, order);
    for (int i = 0; i + 1 < order; ++i) {
        double b = std::sqrt(0.5 * (i + 1));
        J(i, i + 1) = b;
        J(i + 1, i) = b;
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(J);
    GaussHermiteRule rule;
    rule.nodes = es.eigenvalues();
    rule.weights.resize(order);
    for (int i = 0; i < order; ++i) {
        double v0 = es.eigenvectors()(0, i);
        rule.weights[i] = v0 * v0;  // already normalized: sum = 1
    }
    return rule;
}

namespace {

using Cplx = std::complex<double>;

void spectral_heat_1d(Eigen::VectorXcd& freq, double L, double eps_t) {
    const Index n = freq.size();
    for (Index k = 0; k < n; ++k) {
        double kk = static_cast<double>(k <= n / 2 ? k : k - n);
        double omega = 2.0 * M_PI * kk / L;
        freq[k] *= std::exp(-eps_t * omega * omega);
    }
}

GridField heat_periodic(const GridField& g, double eps_t) {
    GridField out = g;
    Eigen::FFT<double> fft;
    const Index n = g.res;
    if (g.d == 1) {
        std::vector<double> tv(g.values.data(), g.values.data() + n);
        std::vector<Cplx> fv;
        fft.fwd(fv, tv);
        Eigen::VectorXcd freq = Eigen::Map<Eigen::VectorXcd>(fv.data(), n);
        spectral_heat_1d(freq, g.domain.hi[0] - g.domain.lo[0], eps_t);
        Eigen::Map<Eigen::VectorXcd>(fv.data(), n) = freq;
        fft.inv(tv, fv);
        out.values = Eigen::Map<Array>(tv.data(), n);
        return out;
    }
    // 2D: complex transform axis by axis
    Eigen::MatrixXcd F(n, n);
    std::vector<double> tv(n);
    std::vector<Cplx> fv(n);
    for (Index j = 0; j < n; ++j) {  // transform along x for each row j
        for (Index i = 0; i < n; ++i) tv[i] = g.values[i + n * j];
        fft.fwd(fv, tv);
        for (Index i = 0; i < n; ++i) F(i, j) = fv[i];
    }
    std::vector<Cplx> cv(n), cf(n);
    for (Index i = 0; i < n; ++i) {  // transform along y for each column i
        for (Index j = 0; j < n; ++j) cv[j] = F(i, j);
        fft.fwd(cf, cv);
        for (Index j = 0; j < n; ++j) F(i, j) = cf[j];
    }
    for (Index i = 0; i < n; ++i) {
        Eigen::VectorXcd col(n);
        for (Index j = 0; j < n; ++j) col[j] = F(i, j);
        spectral_heat_1d(col, g.domain.hi[1] - g.domain.lo[1], eps_t);
        for (Index j = 0; j < n; ++j) F(i, j) = col[j];
    }
    {
        Eigen::VectorXcd row(n);
        for (Index j = 0; j < n; ++j) {
            for (Index i = 0; i < n; ++i) row[i] = F(i, j);
            spectral_heat_1d(row, g.domain.hi[0] - g.domain.lo[0], eps_t);
            for (Index i = 0; i < n; ++i) F(i, j) = row[i];
        }
    }
    for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j < n; ++j) cf[j] = F(i, j);
        fft.inv(cv, cf);
        for (Index j = 0; j < n; ++j) F(i, j) = cv[j];
    }
    for (Index j = 0; j < n; ++j) {
        for (Index i = 0; i < n; ++i) fv[i] = F(i, j);
        fft.inv(tv, fv);
        for (Index i = 0; i < n; ++i) out.values[i + n * j] = tv[i];
    }
    return out;
}

// normalized sampled Gaussian kernel, half width 8 sigma (capped at the grid)
Array box_kernel(double dx, double eps_t, Index n, Index& half) {
    double sigma = std::sqrt(2.0 * eps_t);
    half = std::min<Index>(n - 1, static_cast<Index>(std::ceil(8.0 * sigma / dx)) + 1);
    Array w(2 * half + 1);
    for (Index k = -half; k <= half; ++k)
        w[k + half] = std::exp(-(k * dx) * (k * dx) / (4.0 * eps_t));
    w /= w.sum();
    return w;
}

void convolve_clamped(const Array& in, const Array& w, Index half, Array& out) {
    const Index n = in.size();
    for (Index i = 0; i < n; ++i) {
        double acc = 0.0;
        for (Index k = -half; k <= half; ++k)
            acc += w[k + half] * in[std::clamp<Index>(i + k, 0, n - 1)];
        out[i] = acc;
    }
}

GridField heat_box(const GridField& g, double eps_t) {
    GridField out = g;
    const Index n = g.res;
    if (g.d == 1) {
        Index half;
        Array w = box_kernel(g.spacing(0), eps_t, n, half);
        convolve_clamped(g.values, w, half, out.values);
        return out;
    }
    Index hx, hy;
    Array wx = box_kernel(g.spacing(0), eps_t, n, hx);
    Array wy = box_kernel(g.spacing(1), eps_t, n, hy);
    Array tmp(n), res1(n * n);
    for (Index j = 0; j < n; ++j) {  // along x
        Array row = g.values.segment(n * j, n);
        convolve_clamped(row, wx, hx, tmp);
        res1.segment(n * j, n) = tmp;
    }
    for (Index i = 0; i < n; ++i) {  // along y
        Array col(n);
        for (Index j = 0; j < n; ++j) col[j] = res1[i + n * j];
        convolve_clamped(col, wy, hy, tmp);
        for (Index j = 0; j < n; ++j) out.values[i + n * j] = tmp[j];
    }
    return out;
}

struct NodeSet {
    std::vector<Vector> offsets;  // premultiplied by sqrt(2 eps t)
    std::vector<double> weights;
    bool stochastic = false;
};

NodeSet build_nodes(Index d, double eps_t, const SmoothingSpec& spec) {
    NodeSet ns;
    const double sigma = std::sqrt(2.0 * eps_t);
    if (spec.mode == SmoothingSpec::Mode::gauss_hermite) {
        auto rule = gauss_hermite_rule(spec.quad_order);
        const int q = spec.quad_order;
        std::vector<int> idx(d, 0);
        while (true) {
            Vector off(d);
            double w = 1.0;
            for (Index i = 0; i < d; ++i) {
                off[i] = sigma * std::sqrt(2.0) * rule.nodes[idx[i]];
                w *= rule.weights[idx[i]];
            }
            ns.offsets.push_back(off);
            ns.weights.push_back(w);
            Index axis = 0;
            while (axis < d && ++idx[axis] == q) idx[axis++] = 0;
            if (axis == d) break;
        }
    } else {
        ns.stochastic = true;
        Rng rng(child_seed(spec.seed, "heat-mc"));
        int m = std::max(2, spec.mc_samples);
        if (spec.antithetic) m += m % 2;
        for (int s = 0; s < (spec.antithetic ? m / 2 : m); ++s) {
            Vector z = rng.normal_vector(d);
            ns.offsets.push_back(sigma * z);
            ns.weights.push_back(1.0 / m);
            if (spec.antithetic) {
                ns.offsets.push_back(-sigma * z);
                ns.weights.push_back(1.0 / m);
            }
        }
    }
    return ns;
}

}  // namespace

GridField heat_apply_grid(const GridField& g, double eps_t) {
    if (eps_t <= 0.0) return g;
    return g.periodic ? heat_periodic(g, eps_t) : heat_box(g, eps_t);
}

PointSmoothing heat_apply_points(const BatchValueFn& f, const Matrix& X, double eps_t,
                                 const SmoothingSpec& spec) {
    PointSmoothing out;
    const Index n = X.cols();
    if (eps_t <= 0.0) {
        out.values = f(X);
        out.std_error = Vector::Zero(n);
        return out;
    }
    NodeSet ns = build_nodes(X.rows(), eps_t, spec);
    out.values = Vector::Zero(n);
    Vector sumsq = Vector::Zero(n);
    Vector pair = Vector::Zero(n);
    const std::size_t K = ns.offsets.size();
    for (std::size_t k = 0; k < K; ++k) {
        Vector v = f(X.colwise() + ns.offsets[k]);
        out.values += ns.weights[k] * v;
        if (ns.stochastic) {
            if (spec.antithetic) {
                if (k % 2 == 0) {
                    pair = v;
                } else {
                    Vector mean_pair = 0.5 * (pair + v);
                    sumsq += mean_pair.cwiseProduct(mean_pair);
                }
            } else {
                sumsq += v.cwiseProduct(v);
            }
        }
    }
    if (ns.stochastic) {
        double m = spec.antithetic ? K / 2.0 : static_cast<double>(K);
        Vector var = (sumsq / m - out.values.cwiseProduct(out.values)).cwiseMax(0.0);
        out.std_error = (var / m).cwiseSqrt();
    } else {
        out.std_error = Vector::Zero(n);
    }
    return out;
}

PointGradSmoothing heat_apply_gradient(const BatchGradFn& df, const Matrix& X, double eps_t,
                                       const SmoothingSpec& spec) {
    PointGradSmoothing out;
    const Index d = X.rows(), n = X.cols();
    if (eps_t <= 0.0) {
        out.gradients = df(X);
        out.std_error = Vector::Zero(n);
        return out;
    }
    NodeSet ns = build_nodes(d, eps_t, spec);
    out.gradients = Matrix::Zero(d, n);
    Vector sumsq = Vector::Zero(n);
    Matrix pair;
    const std::size_t K = ns.offsets.size();
    for (std::size_t k = 0; k < K; ++k) {
        Matrix G = df(X.colwise() + ns.offsets[k]);
        out.gradients += ns.weights[k] * G;
        if (ns.stochastic) {
            if (spec.antithetic) {
                if (k % 2 == 0) {
                    pair = G;
                } else {
                    Matrix mp = 0.5 * (pair + G);
                    sumsq += mp.colwise().squaredNorm().transpose();
                }
            } else {
                sumsq += G.colwise().squaredNorm().transpose();
            }
        }
    }
    if (ns.stochastic) {
        double m = spec.antithetic ? K / 2.0 : static_cast<double>(K);
        Vector var = (sumsq / m - out.gradients.colwise().squaredNorm().transpose()).cwiseMax(0.0);
        out.std_error = (var / m).cwiseSqrt();
    } else {
        out.std_error = Vector::Zero(n);
    }
    return out;
}

CommutatorReport commutator_probe(const std::function<double(double, double)>& H,
                                  const std::function<double(double)>& zeta,
                                  const std::function<double(double)>& zeta_deriv,
                                  const Box& domain, Index res, const Box& window,
                                  const std::vector<double>& eps_t_list) {
    (void)zeta;
    GridField grad = GridField::sample(1, res, domain, false,
                                       [&](const Vector& x) { return zeta_deriv(x[0]); });
    GridField hfield = GridField::sample(1, res, domain, false, [&](const Vector& x) {
        return H(x[0], zeta_deriv(x[0]));
    });
    CommutatorReport rep;
    for (double et : eps_t_list) {
        GridField sh = heat_apply_grid(hfield, et);
        GridField sg = heat_apply_grid(grad, et);
        CommutatorProbeRow row;
        row.eps_t = et;
        row.sup = -std::numeric_limits<double>::infinity();
        row.inf = std::numeric_limits<double>::infinity();
        for (Index k = 0; k < res; ++k) {
            Vector x = sh.point(k);
            if (x[0] < window.lo[0] || x[0] > window.hi[0]) continue;
            double c = sh.values[k] - H(x[0], sg.values[k]);
            row.sup = std::max(row.sup, c);
            row.inf = std::min(row.inf, c);
        }
        row.sup_abs = std::max(std::abs(row.sup), std::abs(row.inf));
        rep.rows.push_back(row);
    }
    // log-log OLS of sup_abs against eps_t
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(rep.rows.size());
    for (const auto& r : rep.rows) {
        double lx = std::log(r.eps_t), ly = std::log(r.sup_abs);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    rep.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    return rep;
}

GridField cole_hopf_reference(const GridField& u0, double eps, double t) {
    GridField w = u0;
    double shift = u0.values.minCoeff();
    w.values = (-(u0.values - shift) / (2.0 * eps)).exp();
    GridField sw = heat_apply_grid(w, eps * t);
    GridField out = u0;
    out.values = shift - 2.0 * eps * sw.values.log();
    return out;
}

}  // namespace hjb
