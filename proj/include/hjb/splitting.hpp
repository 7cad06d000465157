#pragma once

#include <functional>
#include <vector>

#include "hjb/common.hpp"
#include "hjb/control_problem.hpp"
#include "hjb/grid_field.hpp"
#include "hjb/heat.hpp"
#include "hjb/pi_lambda.hpp"

namespace hjb {

// batched pointwise Hamiltonian H(x, p): state columns X, gradient columns P
using GridHamiltonian = std::function<Vector(const Matrix&, const Matrix&)>;

GridHamiltonian hamiltonian_of(const ControlProblem& pr);  // the control sup
GridHamiltonian quadratic_hamiltonian();                   // H(x, p) = |p|^2 / 2

struct FdConfig {
    double cfl = 0.4;           // fraction of the monotone stability limit
    double theta_margin = 1.2;  // safety factor on the artificial viscosity
    int p_samples = 17;         // per-axis gradient samples when bounding dH/dp
};

// explicit monotone march of u_t + H(x, Du) = eps lap u on the (periodic) grid
// of u0: central-slope Hamiltonian with artificial viscosity at least
// max |dH/dp| over the running gradient range, plus centered diffusion
GridField fd_viscous_solve(const GridHamiltonian& H, const GridField& u0, double eps, double T,
                           const FdConfig& cfg = {});

struct FdReference {
    GridField field;              // finest level
    std::vector<double> changes;  // sup difference between successive doublings
    bool converged = false;
};

// refine by grid doubling until two levels agree within tol in sup norm
FdReference fd_viscous_reference(const GridHamiltonian& H,
                                 const std::function<double(const Vector&)>& u0, const Box& domain,
                                 double eps, double T, Index res0, double tol, int max_doublings,
                                 const FdConfig& cfg = {});

// per-field max one-sided gradient norm and max second-difference quotient
struct RegularityTrace {
    std::vector<double> lip;
    std::vector<double> sc;
};
void append_regularity(RegularityTrace& trace, const GridField& g);

struct SplitRunConfig {
    double eps = 0.1;
    double T = 0.5;
    int n_steps = 8;          // step h = T / n_steps
    bool heat_first = false;  // default order: transport sub-step, then heat
    FdConfig fd;
};

struct SplitRun {
    std::vector<GridField> fields;  // v at t_1 .. t_n
    Vector times;                   // t_0 .. t_n
    RegularityTrace trace;          // measured at t_0 .. t_n
};

// alternate the first-order transport step (monotone fd march with eps = 0)
// and the exact spectral heat step
SplitRun split_solve_grid(const GridHamiltonian& H, const GridField& u0, const SplitRunConfig& cfg);

// same composition carried by trained slice models: the transport step is one
// implicit policy-iteration slice, the heat step smooths the slice field
struct ModelSplitRun {
    std::vector<ValueModel> models;  // transport-step output at each slice
    std::vector<double> residuals;   // per-slice tail-mean transport residual
    Vector times;
};
ModelSplitRun split_solve_models(const ControlProblem& pr, const Box& box, double eps, double T,
                                 int n_steps, PiLambdaConfig pi, const SmoothingSpec& smoothing);

// one-sided sup errors and L1 error of the split solution against a refined
// unsplit fd reference, with log-log slope fits in h; the one-sided errors
// stay separate because the two bounds carry different rates
struct RateRow {
    double h = 0.0;
    double over = 0.0;   // max(reference - split)
    double under = 0.0;  // max(split - reference)
    double l1 = 0.0;     // mean |difference| times domain volume
};
struct RateReport {
    std::vector<RateRow> rows;
    double slope_over = 0.0, slope_under = 0.0, slope_l1 = 0.0;
    std::vector<double> ref_changes;
    bool ref_converged = false;
};
RateReport splitting_rate_study(const GridHamiltonian& H,
                                const std::function<double(const Vector&)>& u0, const Box& domain,
                                double eps, double T, const std::vector<int>& steps_list, Index res,
                                double ref_tol, const SplitRunConfig& base);

// datum family on the unit torus; delta is the kink-smoothing scale
double ridge_datum(double x, double delta = 1e-3);   // 1 - |sin(pi x)|: concave kinks
double valley_datum(double x, double delta = 1e-3);  // |sin(pi x)|: convex kinks
double smooth_datum(double x);                       // cos(2 pi x) / 2

// brute-force inf-convolution  min_y [ u0(y) + |x - y|^2 / (2 t) ]  on the grid
GridField hopf_lax_reference(const GridField& u0, double t);

// least-squares slope of log y against log x; nonpositive entries are skipped
double fit_loglog_slope(const std::vector<double>& xs, const std::vector<double>& ys);

}  // namespace hjb
