#include "symflow/hyperbolicity.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>

namespace symflow {

Splitting estimate_splitting(const Cocycle& coc, const Vec& x, double horizon,
                             double chi) {
    const int d = coc.dim();
    Mat fwd = coc.evaluate(x, horizon);
    Mat bwd = coc.evaluate(x, -horizon);

    Eigen::JacobiSVD<Mat> svd_f(fwd, Eigen::ComputeFullV);
    Eigen::JacobiSVD<Mat> svd_b(bwd, Eigen::ComputeFullV);

    Vec exps(d);
    for (int i = 0; i < d; ++i) {
        exps[i] = std::log(svd_f.singularValues()(i)) / horizon;
    }

    int d_u = 0, d_s = 0;
    for (int i = 0; i < d; ++i) {
        if (exps[i] > chi) ++d_u;
        else if (exps[i] < -chi) ++d_s;
        else
            throw NuhRejectionError("estimate_splitting: finite-time exponent " +
                                    std::to_string(exps[i]) +
                                    " inside the chi band");
    }
    if (d_s + d_u != d) {
        throw NuhRejectionError("estimate_splitting: splitting dimensions do not fill");
    }

    Splitting s;
    s.d_s = d_s;
    s.d_u = d_u;
    s.exponents = exps;
    // most contracted forward directions (smallest singular values come last)
    s.stable_basis = fix_column_signs(
        svd_f.matrixV().rightCols(d_s));
    s.unstable_basis = fix_column_signs(
        svd_b.matrixV().rightCols(d_u));
    return s;
}

double lyapunov_tail_bound(double rho, double chi, double horizon) {
    return 4.0 * std::exp(2 * rho) * std::exp(2 * (chi - 1.0) * horizon) /
           (2.0 * (1.0 - chi));
}

namespace {

/// Simpson sweep of G(i,l) = 4 e^{2 rho} int_0^T e^{2 chi t} <B_t e_i, B_t e_l> dt
/// where B_t is the cocycle along the given time direction.
Mat gram_sweep(const Cocycle& coc, const Vec& x, const Mat& basis, double dir,
               const HyperbolicityParams& par, double horizon) {
    const int k = static_cast<int>(basis.cols());
    double step = par.quad_step;
    int n = std::max(2, static_cast<int>(std::ceil(horizon / step)));
    if (n % 2 == 1) ++n;
    step = horizon / n;

    Mat acc = Mat::Zero(k, k);
    Mat prop = basis;  // columns Phi^{dir t} e_i
    Vec y = x;
    for (int j = 0; j <= n; ++j) {
        double t = j * step;
        double w = (j == 0 || j == n) ? 1.0 : (j % 2 == 1 ? 4.0 : 2.0);
        acc += w * std::exp(2 * par.chi * t) * (prop.transpose() * prop);
        if (j < n) {
            Mat stepm = coc.evaluate(y, dir * step);
            prop = stepm * prop;
            y = coc.advance(y, dir * step);
        }
    }
    return 4.0 * std::exp(2 * par.rho) * (step / 3.0) * acc;
}

}  // namespace

PesinFrame lyapunov_frame(const Cocycle& coc, const Vec& x, const Splitting& split,
                          const HyperbolicityParams& par) {
    const int d = coc.dim();
    if (split.d_s + split.d_u != d) {
        throw InputError("lyapunov_frame: invalid splitting");
    }

    // horizon T with tail below tolerance relative to the guaranteed lower
    // bound 2/(1-chi) on the diagonal entries
    double floor2 = 2.0 / (1.0 - par.chi);
    double horizon = 1.0;
    while (lyapunov_tail_bound(par.rho, par.chi, horizon) > par.tail_tol * floor2) {
        horizon += 1.0;
        if (horizon > 400.0) {
            throw SolveError("lyapunov_frame: truncation tail does not converge");
        }
    }

    PesinFrame f;
    f.x = x;
    f.splitting = split;
    f.tail_error = lyapunov_tail_bound(par.rho, par.chi, horizon);
    f.gram_s = gram_sweep(coc, x, split.stable_basis, +1.0, par, horizon);
    f.gram_u = gram_sweep(coc, x, split.unstable_basis, -1.0, par, horizon);

    Eigen::SelfAdjointEigenSolver<Mat> es_s(f.gram_s), es_u(f.gram_u);
    f.s_param = std::sqrt(es_s.eigenvalues().maxCoeff());
    f.u_param = std::sqrt(es_u.eigenvalues().maxCoeff());

    // C = [B_s L_s^{-T} | B_u L_u^{-T}] with G = L L^T
    Eigen::LLT<Mat> llt_s(f.gram_s), llt_u(f.gram_u);
    if (llt_s.info() != Eigen::Success || llt_u.info() != Eigen::Success) {
        throw SolveError("lyapunov_frame: Gram matrix is not positive definite");
    }
    Mat ls_t = llt_s.matrixL().transpose();
    Mat lu_t = llt_u.matrixL().transpose();
    f.C = Mat::Zero(d, d);
    f.C.leftCols(split.d_s) =
        split.stable_basis * ls_t.triangularView<Eigen::Upper>().solve(
                                 Mat::Identity(split.d_s, split.d_s));
    f.C.rightCols(split.d_u) =
        split.unstable_basis * lu_t.triangularView<Eigen::Upper>().solve(
                                   Mat::Identity(split.d_u, split.d_u));
    f.C_inv = f.C.inverse();
    f.C_norm = operator_norm(f.C);
    f.C_inv_norm = operator_norm(f.C_inv);
    f.Q = std::pow(par.eps, 6.0 / par.beta) *
          std::pow(f.C_inv_norm, -48.0 / par.beta);
    return f;
}

ReductionResult reduction(const PesinFrame& frame_x, const PesinFrame& frame_y,
                          const Mat& phi_t, double t, double chi, double rho,
                          bool verify, double off_tol) {
    if (t < 0 || t > 2 * rho + 1e-12) {
        throw InputError("reduction: t must lie in [0, 2 rho]");
    }
    const int d_s = frame_x.splitting.d_s;
    const int d_u = frame_x.splitting.d_u;
    const int d = d_s + d_u;

    ReductionResult r;
    r.D = frame_y.C_inv * phi_t * frame_x.C;
    r.D_s = r.D.topLeftCorner(d_s, d_s);
    r.D_u = r.D.bottomRightCorner(d_u, d_u);
    double off = 0;
    off = std::max(off, r.D.topRightCorner(d_s, d_u).norm());
    off = std::max(off, r.D.bottomLeftCorner(d_u, d_s).norm());
    r.off_norm = off;

    r.s_min = co_norm(r.D_s);
    r.s_max = operator_norm(r.D_s);
    r.u_min = co_norm(r.D_u);
    r.u_max = operator_norm(r.D_u);

    const double slack = 1e-9;
    r.within_bounds = r.off_norm <= off_tol &&
                      r.s_min > std::exp(-4 * rho) * (1 - slack) &&
                      r.s_max < std::exp(-chi * t) * (1 + slack) &&
                      r.u_min > std::exp(chi * t) * (1 - slack) &&
                      r.u_max < std::exp(4 * rho) * (1 + slack);
    if (verify && !r.within_bounds) {
        throw DiagnosticError("reduction: block bounds violated (off=" +
                              std::to_string(r.off_norm) + ")");
    }
    (void)d;
    return r;
}

std::pair<std::vector<double>, std::vector<double>> greedy_p(
    const std::vector<double>& times, const std::vector<double>& q_values, double eps,
    double dt_min, double dt_max) {
    const size_t n = times.size();
    if (q_values.size() != n || n < 2) {
        throw InputError("greedy_p: need matching time and Q arrays");
    }
    for (size_t i = 0; i + 1 < n; ++i) {
        double dt = times[i + 1] - times[i];
        if (dt < dt_min - 1e-12 || dt > dt_max + 1e-12) {
            throw InputError("greedy_p: grid spacing outside [" +
                             std::to_string(dt_min) + ", " + std::to_string(dt_max) +
                             "]");
        }
    }
    std::vector<double> p_s(n), p_u(n);
    p_s[n - 1] = eps * q_values[n - 1];
    for (size_t i = n - 1; i-- > 0;) {
        double dt = times[i + 1] - times[i];
        p_s[i] = std::min(std::exp(eps * dt) * p_s[i + 1], eps * q_values[i]);
    }
    p_u[0] = eps * q_values[0];
    for (size_t i = 1; i < n; ++i) {
        double dt = times[i] - times[i - 1];
        p_u[i] = std::min(std::exp(eps * dt) * p_u[i - 1], eps * q_values[i]);
    }
    return {p_s, p_u};
}

QParameters q_parameters(const std::vector<double>& times,
                         const std::vector<double>& q_values, double eps,
                         double dt_min, double dt_max, double positivity_floor) {
    QParameters out;
    out.times = times;
    out.Q = q_values;
    const size_t n = times.size();
    out.q_s.resize(n);
    out.q_u.resize(n);
    out.q.resize(n);
    for (size_t i = 0; i + 1 < n; ++i) {
        out.grid_spacing_max = std::max(out.grid_spacing_max, times[i + 1] - times[i]);
    }
    for (size_t i = 0; i < n; ++i) {
        double qs = std::numeric_limits<double>::infinity();
        double qu = qs;
        for (size_t m = i; m < n; ++m) {
            qs = std::min(qs, std::exp(eps * (times[m] - times[i])) * q_values[m]);
        }
        for (size_t m = 0; m <= i; ++m) {
            qu = std::min(qu, std::exp(eps * (times[i] - times[m])) * q_values[m]);
        }
        out.q_s[i] = eps * qs;
        out.q_u[i] = eps * qu;
        out.q[i] = std::min(out.q_s[i], out.q_u[i]);
    }
    auto ps = greedy_p(times, q_values, eps, dt_min, dt_max);
    out.p_s = std::move(ps.first);
    out.p_u = std::move(ps.second);
    out.q_positive_window = true;
    for (double v : out.q) {
        if (!(v > positivity_floor)) out.q_positive_window = false;
    }
    return out;
}

}  // namespace symflow
