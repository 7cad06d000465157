#pragma once

#include <functional>
#include <vector>

#include "hjb/grid_field.hpp"

namespace hjb {

// Heat flow over effective time eps*t: convolution with the Gaussian kernel of
// variance 2*eps*t per axis, i.e. E[ f(x + sqrt(2 eps t) Z) ], Z std normal.

// Quadrature choice for scattered-point smoothing.
struct SmoothingSpec {
    enum class Mode { gauss_hermite, monte_carlo };
    Mode mode = Mode::gauss_hermite;
    int quad_order = 7;      // nodes per axis (tensorized)
    int mc_samples = 64;     // total draws, antithetic pairs
    bool antithetic = true;
    std::uint64_t seed = 0;

    static SmoothingSpec default_for_dim(Index d) {
        SmoothingSpec s;
        if (d > 4) s.mode = Mode::monte_carlo;
        return s;
    }
};

struct GaussHermiteRule {
    Vector nodes;    // physicists' nodes (weight exp(-z^2))
    Vector weights;  // normalized so E[g(Z)] = sum w_i g(sqrt(2) z_i)
};
GaussHermiteRule gauss_hermite_rule(int order);

// Grid flow: spectral multiplier on periodic grids, normalized discrete
// convolution with constant (clamped) extension on box grids.
GridField heat_apply_grid(const GridField& g, double eps_t);

using BatchValueFn = std::function<Vector(const Matrix&)>;    // columns -> values
using BatchGradFn = std::function<Matrix(const Matrix&)>;     // columns -> gradient columns

struct PointSmoothing {
    Vector values;
    Vector std_error;  // zero for deterministic quadrature
};
struct PointGradSmoothing {
    Matrix gradients;
    Vector std_error;
};

PointSmoothing heat_apply_points(const BatchValueFn& f, const Matrix& X, double eps_t,
                                 const SmoothingSpec& spec);
// Smoothing commutes with the gradient, so this is the per-component flow of Df.
PointGradSmoothing heat_apply_gradient(const BatchGradFn& df, const Matrix& X, double eps_t,
                                       const SmoothingSpec& spec);

// Size of the smoothing-vs-nonlinearity defect  S_t[H(.,Dz)] - H(., S_t[Dz])
// on a 1D box grid, measured over an interior window to keep boundary effects
// out, for a list of effective times.
struct CommutatorProbeRow {
    double eps_t = 0.0;
    double sup = 0.0;   // max of the defect
    double inf = 0.0;   // min of the defect
    double sup_abs = 0.0;
};
struct CommutatorReport {
    std::vector<CommutatorProbeRow> rows;
    double slope = 0.0;  // log-log fit of sup_abs against eps_t
};
CommutatorReport commutator_probe(const std::function<double(double, double)>& H,
                                  const std::function<double(double)>& zeta,
                                  const std::function<double(double)>& zeta_deriv,
                                  const Box& domain, Index res, const Box& window,
                                  const std::vector<double>& eps_t_list);

// Exact solution of u_t + |Du|^2/2 = eps Lap u on the periodic 1D grid via the
// exponential transform: u = -2 eps log S_t exp(-u0 / 2 eps).
GridField cole_hopf_reference(const GridField& u0, double eps, double t);

}  // namespace hjb
