#include "hjb/value_model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace hjb {

double rbf_shape_from_centers(const Matrix& centers) {
    const Index n = centers.cols();
    if (n < 2) return 1.0;
    // pairwise squared distances via the |a|^2 + |b|^2 - 2 a.b identity
    Vector sq = centers.colwise().squaredNorm();
    Matrix d2 = sq.replicate(1, n) + sq.transpose().replicate(n, 1) - 2.0 * centers.transpose() * centers;
    d2.diagonal().setConstant(std::numeric_limits<double>::infinity());
    double mean_nn = 0.0;
    for (Index j = 0; j < n; ++j) mean_nn += std::sqrt(std::max(0.0, d2.col(j).minCoeff()));
    return 2.0 * mean_nn / double(n);
}

double rbf_shape_fill(const Matrix& centers, const Box& box, std::uint64_t seed, Index n_probe) {
    Rng rng(seed);
    Matrix P(box.dim(), n_probe);
    for (Index j = 0; j < n_probe; ++j) P.col(j) = rng.uniform_in(box);
    Matrix d2 = -2.0 * P.transpose() * centers;  // n_probe x nc
    d2.colwise() += P.colwise().squaredNorm().transpose();
    d2.rowwise() += centers.colwise().squaredNorm();
    double mean_gap = 0.0;
    for (Index j = 0; j < n_probe; ++j) mean_gap += std::sqrt(std::max(0.0, d2.row(j).minCoeff()));
    // centers clustered along trajectories under-report the gap; kernels narrower
    // than a fraction of the box diagonal interpolate in spikes and extrapolate to
    // zero between rays, so floor the width at the scale of the domain
    return std::max(2.0 * mean_gap / double(n_probe), 0.35 * (box.hi - box.lo).norm());
}

ValueModel make_rbf(const Matrix& centers, double shape) {
    ValueModel m;
    m.family = ValueModel::Family::rbf;
    m.rbf.centers = centers;
    m.rbf.shape = shape;
    m.rbf.theta = Vector::Zero(centers.cols());
    return m;
}

ValueModel make_mlp(Index d, Index w1, Index w2, std::uint64_t seed) {
    ValueModel m;
    m.family = ValueModel::Family::mlp;
    m.mlp.d = d;
    m.mlp.w1 = w1;
    m.mlp.w2 = w2;
    m.mlp.theta = Vector::Zero(m.mlp.n_params());
    Rng rng(child_seed(seed, "mlp-init"));
    double* p = m.mlp.theta.data();
    auto glorot = [&](Index rows, Index cols, Index fan_in, Index fan_out) {
        const double lim = std::sqrt(6.0 / double(fan_in + fan_out));
        for (Index i = 0; i < rows * cols; ++i) *p++ = (2.0 * rng.uniform() - 1.0) * lim;
    };
    glorot(w1, d, d, w1);
    p += w1;  // b1 = 0
    glorot(w2, w1, w1, w2);
    p += w2;  // b2 = 0
    glorot(w2, 1, w2, 1);
    // b3 = 0
    return m;
}

namespace {

void rbf_batch(const RbfModel& m, const Matrix& X, Vector& v, Matrix& G) {
    const double inv_s2 = 1.0 / (m.shape * m.shape);
    Matrix phi = -2.0 * X.transpose() * m.centers;  // n x nc squared distances
    phi.colwise() += X.colwise().squaredNorm().transpose();
    phi.rowwise() += m.centers.colwise().squaredNorm();
    phi = (-0.5 * inv_s2 * phi.array()).exp().matrix();
    v.noalias() = phi * m.theta;
    Matrix w = (phi.array().rowwise() * m.theta.transpose().array()).matrix();  // n x nc
    G.noalias() = m.centers * w.transpose();
    G = ((G.array() - X.array().rowwise() * v.transpose().array()) * inv_s2).matrix();
}

void mlp_batch(const MlpModel& m, const Matrix& X, Vector& v, Matrix& G) {
    Matrix h1 = ((m.W1() * X).colwise() + m.b1()).array().tanh().matrix();
    Matrix h2 = ((m.W2() * h1).colwise() + m.b2()).array().tanh().matrix();
    v = (m.w3().transpose() * h2).transpose();
    v.array() += m.b3();
    Matrix s2 = (1.0 - h2.array().square()).matrix();
    Matrix s1 = (1.0 - h1.array().square()).matrix();
    Matrix u2 = (s2.array().colwise() * m.w3().array()).matrix();  // s2 .* w3
    Matrix c1 = m.W2().transpose() * u2;
    Matrix u1 = (s1.array() * c1.array()).matrix();
    G.noalias() = m.W1().transpose() * u1;
}

}  // namespace

void eval_batch(const ValueModel& m, const Matrix& X, Vector& v, Matrix& G) {
    if (m.family == ValueModel::Family::rbf)
        rbf_batch(m.rbf, X, v, G);
    else
        mlp_batch(m.mlp, X, v, G);
}

double eval_value(const ValueModel& m, const Vector& x) {
    Vector v;
    Matrix G;
    eval_batch(m, x, v, G);
    return v[0];
}

Vector eval_gradient(const ValueModel& m, const Vector& x) {
    Vector v;
    Matrix G;
    eval_batch(m, x, v, G);
    return G.col(0);
}

void rbf_design(const RbfModel& m, const Matrix& X, Matrix& Phi, std::vector<Matrix>& Gk) {
    const double inv_s2 = 1.0 / (m.shape * m.shape);
    const Index d = m.centers.rows();
    Phi = -2.0 * X.transpose() * m.centers;
    Phi.colwise() += X.colwise().squaredNorm().transpose();
    Phi.rowwise() += m.centers.colwise().squaredNorm();
    Phi = (-0.5 * inv_s2 * Phi.array()).exp().matrix();
    Gk.assign(std::size_t(d), Matrix());
    for (Index k = 0; k < d; ++k) {
        Matrix diff = m.centers.row(k).replicate(X.cols(), 1);
        diff.colwise() -= X.row(k).transpose();
        Gk[std::size_t(k)] = (Phi.array() * diff.array() * inv_s2).matrix();
    }
}

namespace {

template <class T>
void put(std::ostream& os, const T& x) {
    os.write(reinterpret_cast<const char*>(&x), sizeof(T));
}

template <class T>
T get(std::istream& is) {
    T x;
    is.read(reinterpret_cast<char*>(&x), sizeof(T));
    return x;
}

void put_doubles(std::ostream& os, const double* p, Index n) {
    os.write(reinterpret_cast<const char*>(p), std::streamsize(n * sizeof(double)));
}

void get_doubles(std::istream& is, double* p, Index n) {
    is.read(reinterpret_cast<char*>(p), std::streamsize(n * sizeof(double)));
}

constexpr std::uint32_t kMagic = 0x4d424a48;  // "HJBM"

}  // namespace

void save_model(const ValueModel& m, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write model file: " + path);
    put(os, kMagic);
    put(os, std::uint32_t(1));
    put(os, std::uint8_t(m.family == ValueModel::Family::rbf ? 0 : 1));
    if (m.family == ValueModel::Family::rbf) {
        put(os, std::int64_t(m.rbf.centers.rows()));
        put(os, std::int64_t(m.rbf.centers.cols()));
        put(os, m.rbf.shape);
        put_doubles(os, m.rbf.centers.data(), m.rbf.centers.size());
        put_doubles(os, m.rbf.theta.data(), m.rbf.theta.size());
    } else {
        put(os, std::int64_t(m.mlp.d));
        put(os, std::int64_t(m.mlp.w1));
        put(os, std::int64_t(m.mlp.w2));
        put_doubles(os, m.mlp.theta.data(), m.mlp.theta.size());
    }
}

ValueModel load_model(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot read model file: " + path);
    if (get<std::uint32_t>(is) != kMagic) throw std::runtime_error("bad model file: " + path);
    if (get<std::uint32_t>(is) != 1) throw std::runtime_error("unknown model version: " + path);
    const auto family = get<std::uint8_t>(is);
    ValueModel m;
    if (family == 0) {
        m.family = ValueModel::Family::rbf;
        const auto d = get<std::int64_t>(is);
        const auto nc = get<std::int64_t>(is);
        m.rbf.shape = get<double>(is);
        m.rbf.centers.resize(d, nc);
        m.rbf.theta.resize(nc);
        get_doubles(is, m.rbf.centers.data(), m.rbf.centers.size());
        get_doubles(is, m.rbf.theta.data(), m.rbf.theta.size());
    } else {
        m.family = ValueModel::Family::mlp;
        m.mlp.d = get<std::int64_t>(is);
        m.mlp.w1 = get<std::int64_t>(is);
        m.mlp.w2 = get<std::int64_t>(is);
        m.mlp.theta.resize(m.mlp.n_params());
        get_doubles(is, m.mlp.theta.data(), m.mlp.theta.size());
    }
    if (!is) throw std::runtime_error("truncated model file: " + path);
    return m;
}

}  // namespace hjb
