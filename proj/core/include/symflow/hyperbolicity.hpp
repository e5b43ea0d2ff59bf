#pragma once

#include <utility>
#include <vector>

#include "symflow/sections.hpp"

namespace symflow {

/// Thrown when a point shows no usable hyperbolicity at the working horizon.
struct NuhRejectionError : DomainError {
    explicit NuhRejectionError(const std::string& what) : DomainError(what) {}
};

struct Splitting {
    int d_s = 0, d_u = 0;
    Mat stable_basis;    // d x d_s, orthonormal
    Mat unstable_basis;  // d x d_u, orthonormal
    Vec exponents;       // finite-time exponents, descending
};

struct HyperbolicityParams {
    double chi = 0.25;
    double rho = 0.1;
    double eps = 1e-3;
    double beta = 1.0;
    double split_horizon = 2.0;  // flow time for the splitting estimate
    double quad_step = 0.01;     // Simpson step for the Lyapunov integrals
    double tail_tol = 1e-8;      // accepted relative truncation error
};

/// Per-point hyperbolicity package: splitting bases, Lyapunov Gram data,
/// the reduction C(x), and the window size Q(x).
struct PesinFrame {
    Vec x;
    Splitting splitting;
    Mat gram_s, gram_u;
    Mat C, C_inv;
    double C_norm = 0, C_inv_norm = 0;
    double s_param = 0, u_param = 0;  // s(x), u(x)
    double Q = 0;
    double tail_error = 0;
};

/// Splits N_x by the singular directions of Phi^{±T}; finite-time exponents
/// inside [-chi, chi] reject the point.
Splitting estimate_splitting(const Cocycle& coc, const Vec& x, double horizon,
                             double chi);

/// Lyapunov Gram matrices by composite Simpson quadrature, the isometry C(x)
/// from inverse Cholesky factors, and Q(x) = eps^{6/beta} ||C^{-1}||^{-48/beta}.
PesinFrame lyapunov_frame(const Cocycle& coc, const Vec& x, const Splitting& split,
                          const HyperbolicityParams& par);

/// Analytic truncation-tail bound used by lyapunov_frame.
double lyapunov_tail_bound(double rho, double chi, double horizon);

struct ReductionResult {
    Mat D;
    Mat D_s, D_u;
    double off_norm = 0;       // norm of the off-diagonal blocks
    double s_min = 0, s_max = 0;
    double u_min = 0, u_max = 0;
    bool within_bounds = true;
};

/// D(x,t) = C(phi^t x)^{-1} Phi^t C(x); throws DiagnosticError when verify is
/// set and a block bound fails.
ReductionResult reduction(const PesinFrame& frame_x, const PesinFrame& frame_y,
                          const Mat& phi_t, double t, double chi, double rho,
                          bool verify = true, double off_tol = 1e-6);

struct QParameters {
    std::vector<double> times;
    std::vector<double> Q;
    std::vector<double> q, q_s, q_u;
    std::vector<double> p_s, p_u;
    double grid_spacing_max = 0;  // recorded refinement error proxy
    bool q_positive_window = false;
};

/// Backward/forward greedy recursions over a return-time grid, seeded at the
/// window ends by eps*Q. The grid spacing must lie in [dt_min, dt_max].
std::pair<std::vector<double>, std::vector<double>> greedy_p(
    const std::vector<double>& times, const std::vector<double>& q_values, double eps,
    double dt_min, double dt_max);

/// Discrete proxies q, q^{s/u} (direct infima over the window) plus the
/// greedy p^{s/u}, from Q-values along one orbit.
QParameters q_parameters(const std::vector<double>& times,
                         const std::vector<double>& q_values, double eps,
                         double dt_min, double dt_max, double positivity_floor = 0.0);

}  // namespace symflow
