#pragma once

#include "symflow/hyperbolicity.hpp"

namespace symflow {

/// Affine chart exp_x after the reduction C(x). Exact for torus slices.
struct PesinChart {
    const MappingTorusModel* model = nullptr;
    PesinFrame frame;
    int slice = -1;
    double eta = 0;  // box radius, at most the frame's window size

    Vec apply(const Vec& v) const;
    Vec inverse(const Vec& y) const;
    const Vec& center() const { return frame.x; }
    int d_s() const { return frame.splitting.d_s; }
    int d_u() const { return frame.splitting.d_u; }
    int dim() const { return d_s() + d_u(); }
    /// Largest box radius whose image stays clear of the torus wrap guard.
    double safe_radius() const;
};

/// A Pesin chart with separate stable/unstable window radii.
struct DoubleChart {
    PesinChart chart;
    double p_s = 0, p_u = 0;
    double p_min() const { return std::min(p_s, p_u); }
};

/// Center/reduction proximity used by the overlap predicate.
double overlap_proximity(const PesinChart& a, const PesinChart& b);

/// Overlap at an explicit proximity threshold: radius ratio within e^{±eps},
/// equal stable dimensions, same slice, centers and reductions closer than
/// the threshold.
bool overlaps_at(const DoubleChart& a, const DoubleChart& b, double eps,
                 double threshold, std::string* why = nullptr);

/// Literal predicate with threshold (eta_a eta_b)^4.
bool overlaps(const DoubleChart& a, const DoubleChart& b, double eps);

/// Chart representation of one holonomy step: hyperbolic blocks plus the
/// sampled nonlinear remainder H on a 5^d tensor grid.
struct TransitionRecord {
    Mat D_s, D_u;
    double transition_time = 0;
    double H0_norm = 0;
    double dH0_norm = 0;
    double H_grid_norm = 0;
    double dH_grid_norm = 0;
    double holder_quotient = 0;  // exponent beta/3
    double domain_radius = 0;
    int nodes_per_axis = 5;
};

/// Measures f = Psi_to^{-1} o g^{±} o Psi_from on a grid of
/// R[min(10 Q, domain caps)]. The target chart must sit on the slice the
/// holonomy maps onto.
TransitionRecord chart_transition(const PesinChart& from, const PesinChart& to,
                                  const ProperSection& section, bool forward,
                                  double q_window, double beta);

/// Decomposition of Psi_a^{-1} o Psi_b as translation + orthogonal part +
/// remainder, for overlap-quality diagnostics.
struct CoordChangeRecord {
    Vec delta;
    Mat orthogonal;
    double remainder_grid_norm = 0;
    double remainder_deriv_norm = 0;
};

CoordChangeRecord chart_coordinate_change(const PesinChart& a, const PesinChart& b,
                                          double radius);

}  // namespace symflow
