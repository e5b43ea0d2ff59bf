#include "symflow/models.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

namespace symflow {

MappingTorusModel::MappingTorusModel(const MappingTorusSpec& spec) {
    const auto& m = spec.base_matrix;
    if (m.rows() != m.cols() || m.rows() < 2) {
        throw InputError("mapping torus: base matrix must be square, dim >= 2");
    }
    d_ = static_cast<int>(m.rows());
    c_ = spec.roof_constant;
    if (c_ <= 0) throw InputError("mapping torus: roof constant must be positive");
    if (m != m.transpose()) {
        throw InputError("mapping torus: base matrix must be symmetric");
    }

    A_ = m.cast<double>();
    double det = A_.determinant();
    if (std::abs(std::abs(det) - 1.0) > 1e-9) {
        throw InputError("mapping torus: base matrix must be unimodular");
    }
    Ainv_ = A_.inverse();
    // entries of the inverse of a unimodular integer matrix are integers
    Ainv_ = Ainv_.array().round().matrix();

    Eigen::SelfAdjointEigenSolver<Mat> es(A_);
    evals_ = es.eigenvalues();
    evecs_ = es.eigenvectors();
    double lam_max = 0.0;
    for (int i = 0; i < d_; ++i) {
        if (evals_[i] <= 0) {
            throw InputError("mapping torus: base matrix must be positive definite");
        }
        if (std::abs(std::abs(evals_[i]) - 1.0) < 1e-12) {
            throw InputError("mapping torus: base matrix must be hyperbolic");
        }
        lam_max = std::max(lam_max, std::max(evals_[i], 1.0 / evals_[i]));
    }
    log_lambda_ = std::log(lam_max);

    // ||grad X|| for the unscaled flow is log(lambda)/c; rescale to stay <= 1
    s_ = spec.speed_scale > 0 ? spec.speed_scale
                              : std::min(1.0, 0.998 * c_ / log_lambda_);
    if (s_ * log_lambda_ / c_ > 1.0 + 1e-12) {
        throw InputError("mapping torus: speed scale violates the growth bound");
    }
    name_ = "mapping_torus_d" + std::to_string(d_);
}

Mat MappingTorusModel::fractional_power(double x) const {
    Vec p(d_);
    for (int i = 0; i < d_; ++i) p[i] = std::pow(evals_[i], x);
    return evecs_ * p.asDiagonal() * evecs_.transpose();
}

Mat MappingTorusModel::integer_power(long n) const {
    Mat r = Mat::Identity(d_, d_);
    const Mat& base = n >= 0 ? A_ : Ainv_;
    for (long i = 0; i < std::labs(n); ++i) r = base * r;
    return r;
}

Vec MappingTorusModel::make_point(const Vec& u, double h) const {
    Vec x(d_ + 1);
    x.head(d_) = wrap01(u);
    x[d_] = h;
    return x;
}

Vec MappingTorusModel::vector_field(const Vec&) const {
    Vec v = Vec::Zero(d_ + 1);
    v[d_] = s_;
    return v;
}

Vec MappingTorusModel::flow(const Vec& x, double t) const {
    Vec u = x.head(d_);
    double h_tot = x[d_] + s_ * t;
    long n = static_cast<long>(std::floor(h_tot / c_));
    if (std::labs(n) > 2'000'000L) {
        throw DomainError("mapping torus flow: time exceeds the integration horizon");
    }
    // apply crossings one by one so u stays reduced and well conditioned
    for (long i = 0; i < n; ++i) u = wrap01(A_ * u);
    for (long i = 0; i > n; --i) u = wrap01(Ainv_ * u);
    double h = h_tot - static_cast<double>(n) * c_;
    if (h < 0) h = 0;
    if (h >= c_) h = std::nextafter(c_, 0.0);
    return make_point(u, h);
}

Mat MappingTorusModel::derivative(const Vec&, double t) const {
    Mat d = Mat::Identity(d_ + 1, d_ + 1);
    d.topLeftCorner(d_, d_) = fractional_power(s_ * t / c_);
    return d;
}

double MappingTorusModel::distance(const Vec& x, const Vec& y) const {
    Mat fx = frame_at(x[d_]);
    double best = std::numeric_limits<double>::infinity();
    // compare y, its image one roof crossing ahead, and one behind
    for (int shift = -1; shift <= 1; ++shift) {
        Vec uy = y.head(d_);
        double hy = y[d_] + shift * c_;
        if (shift == 1) uy = wrap01(A_ * uy);
        if (shift == -1) uy = wrap01(Ainv_ * uy);
        Vec du = wrap_half(uy - x.head(d_));
        double dh = hy - x[d_];
        double dist = std::sqrt((fx * du).squaredNorm() + dh * dh);
        best = std::min(best, dist);
    }
    return best;
}

Vec MappingTorusModel::slice_exp(const Vec& x, const Vec& v) const {
    if (v.size() != d_) throw InputError("slice_exp: tangent dimension mismatch");
    Vec du = fractional_power(-x[d_] / c_) * v;
    for (int i = 0; i < d_; ++i) {
        if (std::abs(du[i]) > 0.45) {
            throw DomainError("slice_exp: displacement exceeds the wrap guard");
        }
    }
    return make_point(x.head(d_) + du, x[d_]);
}

Vec MappingTorusModel::slice_log(const Vec& x, const Vec& y) const {
    if (std::abs(y[d_] - x[d_]) > 1e-9) {
        throw DomainError("slice_log: points on different slices");
    }
    Vec du = wrap_half(y.head(d_) - x.head(d_));
    return frame_at(x[d_]) * du;
}

double MappingTorusModel::slice_distance(const Vec& x, const Vec& y) const {
    return slice_log(x, y).norm();
}

NumericOdeModel::NumericOdeModel(std::string name, int ambient_dim, VectorField field,
                                 double step, double speed_scale, double holder_beta)
    : name_(std::move(name)),
      n_(ambient_dim),
      field_(std::move(field)),
      h_(step),
      beta_(holder_beta) {
    if (n_ < 2) throw InputError("numeric model: ambient dimension must be >= 2");
    if (h_ <= 0) throw InputError("numeric model: step must be positive");

    // estimate sup ||grad X|| on a coarse sample grid, then rescale
    Rng rng(0x5eedULL);
    double g = 0.0;
    for (int i = 0; i < 256; ++i) {
        g = std::max(g, operator_norm(jacobian(rng.uniform_vec(n_))));
    }
    s_ = speed_scale > 0 ? speed_scale : std::min(1.0, 0.98 / std::max(g, 1e-12));
    grad_bound_ = s_ * g;
}

Vec NumericOdeModel::vector_field(const Vec& x) const { return s_ * field_(wrap01(x)); }

Mat NumericOdeModel::jacobian(const Vec& x) const {
    const double fd = 1e-6;
    Mat j(n_, n_);
    for (int k = 0; k < n_; ++k) {
        Vec xp = x, xm = x;
        xp[k] += fd;
        xm[k] -= fd;
        j.col(k) = (field_(wrap01(xp)) - field_(wrap01(xm))) / (2 * fd);
    }
    return j;
}

void NumericOdeModel::rk4_step(Vec& x, Mat* j, double dt) const {
    auto f = [&](const Vec& p) { return Vec(s_ * field_(wrap01(p))); };
    Vec k1 = f(x);
    Vec k2 = f(x + 0.5 * dt * k1);
    Vec k3 = f(x + 0.5 * dt * k2);
    Vec k4 = f(x + dt * k3);
    if (j) {
        auto df = [&](const Vec& p, const Mat& m) { return Mat(s_ * jacobian(p) * m); };
        Mat m1 = df(x, *j);
        Mat m2 = df(x + 0.5 * dt * k1, *j + 0.5 * dt * m1);
        Mat m3 = df(x + 0.5 * dt * k2, *j + 0.5 * dt * m2);
        Mat m4 = df(x + dt * k3, *j + dt * m3);
        *j += dt / 6.0 * (m1 + 2 * m2 + 2 * m3 + m4);
    }
    x = wrap01(x + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4));
}

Vec NumericOdeModel::flow(const Vec& x, double t) const {
    if (std::abs(t) > horizon_) {
        throw DomainError("numeric flow: time exceeds the integration horizon");
    }
    Vec y = wrap01(x);
    double remaining = t;
    double dir = t >= 0 ? 1.0 : -1.0;
    while (std::abs(remaining) > 0) {
        double dt = dir * std::min(h_, std::abs(remaining));
        if (std::abs(dt) < 1e-300) {
            throw DiagnosticError("numeric flow: step underflow");
        }
        rk4_step(y, nullptr, dt);
        remaining -= dt;
        if (std::abs(remaining) < 1e-15 * std::abs(t)) break;
    }
    return y;
}

Mat NumericOdeModel::derivative(const Vec& x, double t) const {
    if (std::abs(t) > horizon_) {
        throw DomainError("numeric derivative: time exceeds the integration horizon");
    }
    Vec y = wrap01(x);
    Mat j = Mat::Identity(n_, n_);
    double remaining = t;
    double dir = t >= 0 ? 1.0 : -1.0;
    while (std::abs(remaining) > 0) {
        double dt = dir * std::min(h_, std::abs(remaining));
        if (std::abs(dt) < 1e-300) {
            throw DiagnosticError("numeric derivative: step underflow");
        }
        rk4_step(y, &j, dt);
        remaining -= dt;
        if (std::abs(remaining) < 1e-15 * std::abs(t)) break;
    }
    return j;
}

double NumericOdeModel::distance(const Vec& x, const Vec& y) const {
    return wrap_half(Vec(y - x)).norm();
}

double NumericOdeModel::min_speed(int samples, std::uint64_t seed) const {
    Rng rng(seed);
    double lo = std::numeric_limits<double>::infinity();
    for (int i = 0; i < samples; ++i) {
        lo = std::min(lo, vector_field(rng.uniform_vec(n_)).norm());
    }
    return lo;
}

std::unique_ptr<NumericOdeModel> make_rotor_model(double step) {
    auto field = [](const Vec& x) {
        Vec v(3);
        const double tau = 6.283185307179586;
        v[0] = 0.9 + 0.1 * std::sin(tau * x[1]);
        v[1] = 0.35 + 0.1 * std::cos(tau * x[2]);
        v[2] = 0.55 + 0.1 * std::sin(tau * x[0]);
        return v;
    };
    return std::make_unique<NumericOdeModel>("rotor", 3, field, step);
}

std::unique_ptr<MappingTorusModel> make_cat_suspension(double roof, double speed_scale) {
    MappingTorusSpec spec;
    spec.base_matrix.resize(2, 2);
    spec.base_matrix << 2, 1, 1, 1;
    spec.roof_constant = roof;
    spec.speed_scale = speed_scale;
    return std::make_unique<MappingTorusModel>(spec);
}

std::unique_ptr<MappingTorusModel> make_double_cat_suspension(double roof,
                                                              double speed_scale) {
    MappingTorusSpec spec;
    spec.base_matrix = Eigen::MatrixXi::Zero(4, 4);
    spec.base_matrix.block(0, 0, 2, 2) << 2, 1, 1, 1;
    spec.base_matrix.block(2, 2, 2, 2) << 2, 1, 1, 1;
    spec.roof_constant = roof;
    spec.speed_scale = speed_scale;
    return std::make_unique<MappingTorusModel>(spec);
}

}  // namespace symflow
