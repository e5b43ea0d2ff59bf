#pragma once

#include <functional>
#include <memory>
#include <string>

#include "symflow/errors.hpp"
#include "symflow/linalg.hpp"

namespace symflow {

/// A smooth flow with positive speed on a closed manifold, presented through
/// an orthonormal moving frame: points are coordinate vectors, tangent vectors
/// and derivative matrices are expressed in the frame at their base point, so
/// inner products of frame coordinates evaluate the Riemannian metric.
class FlowModel {
public:
    virtual ~FlowModel() = default;

    virtual std::string name() const = 0;
    virtual int ambient_dim() const = 0;
    int section_dim() const { return ambient_dim() - 1; }

    /// Time rescaling factor applied at construction so the sampled growth
    /// bound ||dphi^t|| <= e^{|t|} holds.
    virtual double speed_scale() const = 0;
    virtual double holder_beta() const { return 1.0; }
    virtual bool closed_form() const = 0;

    virtual Vec vector_field(const Vec& x) const = 0;
    virtual Vec flow(const Vec& x, double t) const = 0;
    /// dphi^t_x as a matrix from the frame at x to the frame at phi^t(x).
    virtual Mat derivative(const Vec& x, double t) const = 0;
    virtual double distance(const Vec& x, const Vec& y) const = 0;

    /// Measured bound on the covariant derivative of the (rescaled) field.
    virtual double grad_bound() const = 0;
    virtual double integration_horizon() const { return 1e6; }
};

/// Construction parameters for a mapping-torus suspension of a hyperbolic
/// toral automorphism. The base matrix must be integer, unimodular, symmetric
/// positive definite and hyperbolic (no eigenvalue on the unit circle); the
/// symmetry gives real fractional powers, which the moving frame uses.
struct MappingTorusSpec {
    Eigen::MatrixXi base_matrix;
    double roof_constant = 1.0;
    /// 0 selects the automatic rescaling s = min(1, c/||log A||).
    double speed_scale = 0.0;
};

/// Suspension flow over T^d with constant roof c, glued by the base matrix A.
/// Points are (u, h) with u in [0,1)^d and h in [0, c). The frame at height h
/// is A^{h/c} applied to the product frame, which makes the derivative cocycle
/// between frames exactly blockdiag(A^{s t / c}, 1): smooth in t, exact in
/// closed form, and at the base slice h = 0 equal to the product-frame value.
class MappingTorusModel final : public FlowModel {
public:
    explicit MappingTorusModel(const MappingTorusSpec& spec);

    std::string name() const override { return name_; }
    int ambient_dim() const override { return d_ + 1; }
    double speed_scale() const override { return s_; }
    bool closed_form() const override { return true; }

    Vec vector_field(const Vec& x) const override;
    Vec flow(const Vec& x, double t) const override;
    Mat derivative(const Vec& x, double t) const override;
    double distance(const Vec& x, const Vec& y) const override;
    double grad_bound() const override { return s_ * log_lambda_ / c_; }

    int torus_dim() const { return d_; }
    double roof_constant() const { return c_; }
    /// Flow time of one full trip around the roof.
    double wrap_period() const { return c_ / s_; }
    const Mat& base_matrix() const { return A_; }
    const Mat& base_inverse() const { return Ainv_; }
    double expansion_rate() const { return s_ * log_lambda_ / c_; }

    /// A^x through the spectral decomposition.
    Mat fractional_power(double x) const;
    /// Exact integer power by repeated multiplication.
    Mat integer_power(long n) const;
    /// Frame change A^{h/c} at height h.
    Mat frame_at(double h) const { return fractional_power(h / c_); }

    double height(const Vec& x) const { return x[d_]; }
    Vec torus_part(const Vec& x) const { return x.head(d_); }
    Vec make_point(const Vec& u, double h) const;

    /// Geodesic chart of the height-h slice: frame coordinates v around x.
    /// Exact and affine; throws DomainError when the displacement is large
    /// enough to make the torus wrap ambiguous.
    Vec slice_exp(const Vec& x, const Vec& v) const;
    Vec slice_log(const Vec& x, const Vec& y) const;
    /// Riemannian distance within a slice.
    double slice_distance(const Vec& x, const Vec& y) const;

    /// Radius out to which slice charts retain Lipschitz bounds.
    double chart_radius() const { return 0.2; }
    /// Largest safe frame-coordinate displacement for slice_exp.
    double coordinate_guard() const { return 0.22; }

private:
    std::string name_;
    int d_;
    double c_;
    double s_;
    double log_lambda_;
    Mat A_, Ainv_;
    Mat evecs_;   // orthonormal eigenvectors of A
    Vec evals_;   // positive eigenvalues
};

using VectorField = std::function<Vec(const Vec&)>;

/// Generic hook for user flows: a vector field on the periodic box T^{d+1}
/// integrated with fixed-step fourth order Runge-Kutta; the derivative
/// cocycle integrates the variational equation alongside, with the field
/// Jacobian taken by central differences.
class NumericOdeModel final : public FlowModel {
public:
    NumericOdeModel(std::string name, int ambient_dim, VectorField field,
                    double step = 1e-3, double speed_scale = 0.0,
                    double holder_beta = 1.0);

    std::string name() const override { return name_; }
    int ambient_dim() const override { return n_; }
    double speed_scale() const override { return s_; }
    double holder_beta() const override { return beta_; }
    bool closed_form() const override { return false; }

    Vec vector_field(const Vec& x) const override;
    Vec flow(const Vec& x, double t) const override;
    Mat derivative(const Vec& x, double t) const override;
    double distance(const Vec& x, const Vec& y) const override;
    double grad_bound() const override { return grad_bound_; }
    double integration_horizon() const override { return horizon_; }

    double step() const { return h_; }
    /// Smallest sampled field norm (positive-speed check).
    double min_speed(int samples, std::uint64_t seed) const;

private:
    Mat jacobian(const Vec& x) const;
    void rk4_step(Vec& x, Mat* j, double dt) const;

    std::string name_;
    int n_;
    VectorField field_;
    double h_;
    double s_;
    double beta_;
    double grad_bound_;
    double horizon_ = 200.0;
};

/// Built-in nonvanishing test field on T^3 (constant drift plus a small
/// periodic swirl).
std::unique_ptr<NumericOdeModel> make_rotor_model(double step = 1e-3);

/// Cat map suspension: A = [[2,1],[1,1]], dimension 3.
std::unique_ptr<MappingTorusModel> make_cat_suspension(double roof = 1.0,
                                                       double speed_scale = 0.0);
/// Doubled spectrum model: A + A on T^4, dimension 5.
std::unique_ptr<MappingTorusModel> make_double_cat_suspension(double roof = 1.0,
                                                              double speed_scale = 0.0);

}  // namespace symflow
