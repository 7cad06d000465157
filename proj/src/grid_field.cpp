#include "hjb/grid_field.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace hjb {

GridField GridField::create(Index d, Index res, const Box& domain, bool periodic) {
    if (d < 1 || d > 2) throw std::invalid_argument("GridField supports d in {1,2}");
    GridField g;
    g.domain = domain;
    g.periodic = periodic;
    g.d = d;
    g.res = res;
    g.values = Array::Zero(d == 1 ? res : res * res);
    return g;
}

GridField GridField::sample(Index d, Index res, const Box& domain, bool periodic,
                            const std::function<double(const Vector&)>& f) {
    GridField g = create(d, res, domain, periodic);
    for (Index k = 0; k < g.size(); ++k) g.values[k] = f(g.point(k));
    return g;
}

Vector GridField::point(Index flat) const {
    Vector x(d);
    Index i = flat % res;
    x[0] = domain.lo[0] + spacing(0) * static_cast<double>(i);
    if (d == 2) {
        Index j = flat / res;
        x[1] = domain.lo[1] + spacing(1) * static_cast<double>(j);
    }
    return x;
}

namespace {

// cubic Lagrange weights for the 4 stencil points at offsets {-1,0,1,2}
// around the cell, s in [0,1] the fractional position inside it
inline void cubic_weights(double s, double w[4]) {
    w[0] = -s * (s - 1.0) * (s - 2.0) / 6.0;
    w[1] = (s + 1.0) * (s - 1.0) * (s - 2.0) / 2.0;
    w[2] = -(s + 1.0) * s * (s - 2.0) / 2.0;
    w[3] = (s + 1.0) * s * (s - 1.0) / 6.0;
}

inline void cubic_weights_deriv(double s, double w[4]) {
    w[0] = -(3.0 * s * s - 6.0 * s + 2.0) / 6.0;
    w[1] = (3.0 * s * s - 4.0 * s - 1.0) / 2.0;
    w[2] = -(3.0 * s * s - 2.0 * s - 2.0) / 2.0;
    w[3] = (3.0 * s * s - 1.0) / 6.0;
}

inline Index wrap_or_clamp(Index i, Index n, bool periodic) {
    if (periodic) {
        i %= n;
        return i < 0 ? i + n : i;
    }
    return std::clamp<Index>(i, 0, n - 1);
}

}  // namespace

double GridField::interpolate(const Vector& x) const {
    double wx[4], wy[4];
    Index ix, iy = 0;
    double sx, sy = 0.0;
    auto locate = [&](Index axis, Index& i0, double& s) {
        double u = (x[axis] - domain.lo[axis]) / spacing(axis);
        if (!periodic) u = std::clamp(u, 0.0, static_cast<double>(res - 1));
        double fl = std::floor(u);
        i0 = static_cast<Index>(fl);
        s = u - fl;
    };
    locate(0, ix, sx);
    cubic_weights(sx, wx);
    if (d == 1) {
        double acc = 0.0;
        for (int k = 0; k < 4; ++k) acc += wx[k] * values[wrap_or_clamp(ix - 1 + k, res, periodic)];
        return acc;
    }
    locate(1, iy, sy);
    cubic_weights(sy, wy);
    double acc = 0.0;
    for (int ky = 0; ky < 4; ++ky) {
        Index j = wrap_or_clamp(iy - 1 + ky, res, periodic);
        for (int kx = 0; kx < 4; ++kx)
            acc += wy[ky] * wx[kx] * values[wrap_or_clamp(ix - 1 + kx, res, periodic) + res * j];
    }
    return acc;
}

double GridField::interpolate_derivative(const Vector& x, Index axis) const {
    double wx[4], wy[4];
    Index ix, iy = 0;
    double sx, sy = 0.0;
    auto locate = [&](Index ax, Index& i0, double& s) {
        double u = (x[ax] - domain.lo[ax]) / spacing(ax);
        if (!periodic) u = std::clamp(u, 0.0, static_cast<double>(res - 1));
        double fl = std::floor(u);
        i0 = static_cast<Index>(fl);
        s = u - fl;
    };
    locate(0, ix, sx);
    if (axis == 0)
        cubic_weights_deriv(sx, wx);
    else
        cubic_weights(sx, wx);
    if (d == 1) {
        double acc = 0.0;
        for (int k = 0; k < 4; ++k) acc += wx[k] * values[wrap_or_clamp(ix - 1 + k, res, periodic)];
        return acc / spacing(0);
    }
    locate(1, iy, sy);
    if (axis == 1)
        cubic_weights_deriv(sy, wy);
    else
        cubic_weights(sy, wy);
    double acc = 0.0;
    for (int ky = 0; ky < 4; ++ky) {
        Index j = wrap_or_clamp(iy - 1 + ky, res, periodic);
        for (int kx = 0; kx < 4; ++kx)
            acc += wy[ky] * wx[kx] * values[wrap_or_clamp(ix - 1 + kx, res, periodic) + res * j];
    }
    return acc / spacing(axis);
}

void GridField::save_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path);
    out << d << "," << res;
    for (Index i = 0; i < d; ++i) out << "," << fmt_exact(domain.lo[i]) << "," << fmt_exact(domain.hi[i]);
    out << "," << (periodic ? 1 : 0) << "\n";
    for (Index k = 0; k < size(); ++k) out << fmt_exact(values[k]) << "\n";
}

GridField GridField::load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::string header;
    std::getline(in, header);
    std::stringstream ss(header);
    std::string tok;
    auto next = [&]() {
        if (!std::getline(ss, tok, ',')) throw std::runtime_error("bad grid header in " + path);
        return std::stod(tok);
    };
    Index d = static_cast<Index>(next());
    Index res = static_cast<Index>(next());
    Box box;
    box.lo.resize(d);
    box.hi.resize(d);
    for (Index i = 0; i < d; ++i) {
        box.lo[i] = next();
        box.hi[i] = next();
    }
    bool periodic = next() != 0.0;
    GridField g = create(d, res, box, periodic);
    for (Index k = 0; k < g.size(); ++k) {
        std::string line;
        if (!std::getline(in, line)) throw std::runtime_error("truncated grid file " + path);
        g.values[k] = std::stod(line);
    }
    return g;
}

Matrix grid_points(const GridField& g) {
    Matrix X(g.d, g.size());
    for (Index k = 0; k < g.size(); ++k) X.col(k) = g.point(k);
    return X;
}

}  // namespace hjb
