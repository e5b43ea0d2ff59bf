#pragma once

#include <span>

#include "symflow/gpo.hpp"

namespace symflow {

struct AmBounds {
    double value_at_zero = 0;   // ||F(0)||
    double deriv_at_zero = 0;   // ||dF_0||
    double deriv_sup = 0;       // sup ||dF||
    double holder = 0;          // Hoelder quotient of dF at exponent beta/3
    bool admissible(double p_min, double beta, double slack = 1e-9) const;
};

/// Multilinear interpolation over the tensor grid of [-radius, radius]^dom
/// with `nodes` points per axis; values beyond the grid extrapolate linearly.
Vec grid_interpolate(const std::vector<Vec>& values, int nodes, int dom_dim,
                     double radius, const Vec& t);

/// Graph of a small representing function over the stable (or unstable) box
/// of a double chart, stored as values on a tensor grid with multilinear
/// interpolation.
struct AdmissibleManifold {
    DoubleChart chart;
    char kind = 's';
    int nodes = 9;  // per axis
    int dom_dim = 0, cod_dim = 0;
    std::vector<Vec> values;

    double radius() const { return kind == 's' ? chart.p_s : chart.p_u; }
    Vec value_at(const Vec& t) const;   // multilinear interpolation
    Mat deriv_at(const Vec& t) const;   // central differences of the grid
    AmBounds bounds() const;
    /// Chart coordinates of the graph point over parameter t.
    Vec graph_point(const Vec& t) const;
    /// Manifold point of the graph over parameter t.
    Vec embed(const Vec& t) const;
};

AdmissibleManifold zero_manifold(const DoubleChart& chart, char kind, int nodes = 9);
/// Admissible manifold with prescribed affine data, for seeding and tests.
AdmissibleManifold affine_manifold(const DoubleChart& chart, char kind,
                                   const Vec& value0, const Mat& slope,
                                   int nodes = 9);

/// One pullback (kind 's', through the backward holonomy, edge v -> w maps
/// manifolds at w to manifolds at v) or pushforward (kind 'u', maps manifolds
/// at v to manifolds at w), solved nodewise by a chord/Newton iteration.
AdmissibleManifold graph_transform(const SectionPair& sections, const DoubleChart& v,
                                   const DoubleChart& w, const AdmissibleManifold& m,
                                   char kind, bool validate = true);

struct RayResult {
    AdmissibleManifold manifold;
    double seed_c0_gap = 0;  // distance between the two seed runs at the root
    double seed_c1_gap = 0;
    std::vector<double> contraction;  // per-step C0 ratio of the seed gap
};

/// Composition of graph transforms along a chart ray. For kind 's' the ray is
/// ordered v_0 -> v_1 -> ... and the result lives at v_0; for kind 'u' the
/// ray is ordered v_{-N} -> ... -> v_0 and the result lives at v_0.
RayResult invariant_manifold(const SectionPair& sections,
                             std::span<const DoubleChart> ray, char kind,
                             double settle_tol = 1e-12);

/// Single intersection point of an s-graph and a u-graph in a common chart.
Vec manifold_intersection(const AdmissibleManifold& vs, const AdmissibleManifold& vu,
                          Vec* chart_coords = nullptr, double tol = 1e-11);

struct ShadowResult {
    Vec point;
    Vec chart_coords;                // in the chart of the middle vertex
    std::vector<double> residuals;   // per index, <= 0 means inside the box
    double seed_gap = 0;             // sensitivity to the seed manifolds
};

/// Unique point whose holonomy orbit stays inside the window boxes; found as
/// the intersection of the forward stable and backward unstable manifolds.
ShadowResult shadow(const SectionPair& sections, std::span<const DoubleChart> window,
                    int centre_index);

/// Smale bracket: intersection of the stable manifold through x's forward ray
/// and the unstable manifold through y's backward ray, both rooted at the
/// same chart.
Vec smale_bracket(const SectionPair& sections, const AdmissibleManifold& vs_x,
                  const AdmissibleManifold& vu_y);

}  // namespace symflow
