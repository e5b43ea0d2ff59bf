#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <random>

namespace symflow {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Reduce a scalar to [0, 1).
inline double wrap01(double x) {
    double y = x - std::floor(x);
    if (y >= 1.0) y -= 1.0;
    return y;
}

/// Reduce a scalar to [-1/2, 1/2).
inline double wrap_half(double x) {
    double y = x - std::round(x);
    if (y >= 0.5) y -= 1.0;
    if (y < -0.5) y += 1.0;
    return y;
}

inline Vec wrap01(Vec v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = wrap01(v[i]);
    return v;
}

inline Vec wrap_half(Vec v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = wrap_half(v[i]);
    return v;
}

/// Reduce to [-p/2, p/2) for period p.
inline double wrap_period(double x, double p) { return p * wrap_half(x / p); }

inline double operator_norm(const Mat& m) {
    return m.jacobiSvd().singularValues()(0);
}

inline double co_norm(const Mat& m) {
    auto sv = m.jacobiSvd().singularValues();
    return sv(sv.size() - 1);
}

/// Flip column signs so the first nonzero entry of each column is positive.
inline Mat fix_column_signs(Mat m, double tol = 1e-12) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            if (std::abs(m(i, j)) > tol) {
                if (m(i, j) < 0) m.col(j) *= -1.0;
                break;
            }
        }
    }
    return m;
}

/// Largest principal angle between the column spans of two orthonormal frames.
inline double subspace_angle(const Mat& a, const Mat& b) {
    Mat prod = a.transpose() * b;
    auto sv = prod.jacobiSvd().singularValues();
    double c = std::min(1.0, sv(sv.size() - 1));
    return std::acos(c);
}

/// Deterministic RNG used across the pipeline; seeded explicitly everywhere.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    double uniform() {
        // fixed 53-bit construction, independent of libstdc++ internals
        return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    std::uint64_t integer(std::uint64_t n) { return gen_() % n; }

    Vec uniform_vec(int n, double lo = 0.0, double hi = 1.0) {
        Vec v(n);
        for (int i = 0; i < n; ++i) v[i] = uniform(lo, hi);
        return v;
    }

    /// Uniform point on the unit sphere of dimension n.
    Vec unit_vec(int n) {
        Vec v(n);
        for (int i = 0; i < n; ++i) {
            double u1 = uniform(), u2 = uniform();
            u1 = std::max(u1, 1e-300);
            v[i] = std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
        }
        double nrm = v.norm();
        return nrm > 0 ? Vec(v / nrm) : unit_vec(n);
    }

private:
    std::mt19937_64 gen_;
};

}  // namespace symflow
