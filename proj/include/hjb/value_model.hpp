#pragma once

#include <string>

#include "hjb/common.hpp"

namespace hjb {

// Gaussian radial basis expansion V(x) = sum_j theta_j exp(-|x-c_j|^2 / (2 s^2)).
struct RbfModel {
    Matrix centers;      // d x nc
    double shape = 1.0;  // shared width s
    Vector theta;        // nc
};

// Two hidden tanh layers; parameters packed as [W1, b1, W2, b2, w3, b3].
struct MlpModel {
    Index d = 0, w1 = 64, w2 = 64;
    Vector theta;

    Index n_params() const { return w1 * d + w1 + w2 * w1 + w2 + w2 + 1; }
    // views into the packed vector
    Eigen::Map<const Matrix> W1() const { return {theta.data(), w1, d}; }
    Eigen::Map<const Vector> b1() const { return {theta.data() + w1 * d, w1}; }
    Eigen::Map<const Matrix> W2() const { return {theta.data() + w1 * d + w1, w2, w1}; }
    Eigen::Map<const Vector> b2() const { return {theta.data() + w1 * d + w1 + w2 * w1, w2}; }
    Eigen::Map<const Vector> w3() const { return {theta.data() + w1 * d + w1 + w2 * w1 + w2, w2}; }
    double b3() const { return theta[n_params() - 1]; }
};

struct ValueModel {
    enum class Family { rbf, mlp };
    Family family = Family::rbf;
    RbfModel rbf;
    MlpModel mlp;

    Vector& theta() { return family == Family::rbf ? rbf.theta : mlp.theta; }
    const Vector& theta() const { return family == Family::rbf ? rbf.theta : mlp.theta; }
    Index dim() const { return family == Family::rbf ? rbf.centers.rows() : mlp.d; }
};

// shared width heuristic: twice the mean nearest-neighbour distance
double rbf_shape_from_centers(const Matrix& centers);

// coverage-aware width: twice the mean distance from uniform probe points in
// `box` to their nearest centre.  Trajectory data clusters along short arcs,
// which collapses the nearest-neighbour width; probing the box measures the
// gaps the kernels actually have to bridge.
double rbf_shape_fill(const Matrix& centers, const Box& box, std::uint64_t seed,
                      Index n_probe = 256);

ValueModel make_rbf(const Matrix& centers, double shape);
ValueModel make_mlp(Index d, Index w1, Index w2, std::uint64_t seed);  // Glorot-uniform init

double eval_value(const ValueModel& m, const Vector& x);
Vector eval_gradient(const ValueModel& m, const Vector& x);
// values and gradients for a batch of states (columns)
void eval_batch(const ValueModel& m, const Matrix& X, Vector& v, Matrix& G);

// rbf design matrices: Phi (n x nc) and per-dimension gradient designs
// Gk[k] (n x nc) with dV/dx_k = Gk[k] theta
void rbf_design(const RbfModel& m, const Matrix& X, Matrix& Phi, std::vector<Matrix>& Gk);

// bit-exact round trip
void save_model(const ValueModel& m, const std::string& path);
ValueModel load_model(const std::string& path);

}  // namespace hjb
