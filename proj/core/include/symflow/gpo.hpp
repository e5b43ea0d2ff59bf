#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "symflow/charts.hpp"
#include "symflow/symbolic.hpp"

namespace symflow {

/// Knobs of the finite-truncation geometry: the working window scale, the
/// aperture playing the role of the chart-size parameter in the geometric
/// recursions, and the snapping resolution. Exported with every alphabet.
struct GeometryParams {
    double aperture = 0.75;
    double q_scale = 0.08;       // target maximum window size after rescaling
    int snap_cells = 24;         // dedup grid cells per frame-coordinate unit
    double overlap_slack = 1.35; // proximity threshold in snap-diagonal units
    int boundary_margin = 16;    // window positions excluded near the ends
    double compare_slack = 1e-10;
};

struct SymbolKey {
    int slice = 0;
    std::vector<long long> cell;
    long long i_s = 0, i_u = 0;  // quantization indices of the window radii
    auto operator<=>(const SymbolKey&) const = default;
};

struct Symbol {
    int id = -1;
    SymbolKey key;
    DoubleChart chart;
    PesinFrame forward_frame, backward_frame;  // frames at f(center), f^{-1}(center)
    Vec forward_point, backward_point;
    double return_time = 0, backward_return_time = 0;
    double q_desk = 0;  // desk-layer recurrence value at the representative
    int first_orbit = -1, first_position = -1;
    int hits = 0;
};

struct Alphabet {
    GeometryParams geom;
    HyperbolicityParams hyp;
    double kappa = 1.0;           // desk rescale factor applied to Q
    double cell_width = 0.0;      // snap cell width in frame coordinates
    double proximity_threshold = 0.0;
    std::vector<Symbol> symbols;
    std::map<SymbolKey, int> index;

    int count_above(double t) const;  // #{symbols : p_s, p_u > t}
};

struct OrbitSymbolization {
    std::vector<int> symbol;  // alphabet id per sample, -1 outside the interior
    std::vector<double> time;
    std::vector<double> p_s, p_u, Q_desk;
    int interior_lo = 0, interior_hi = -1;
};

struct CoarseGrainResult {
    Alphabet alphabet;
    std::vector<OrbitSymbolization> orbits;
    int cg2_failures = 0;
    int cg3_failures = 0;
    int snap_fallbacks = 0;
};

using FrameProvider = std::function<PesinFrame(const Vec&)>;

/// Grid-snapping construction of the chart alphabet from sampled orbits:
/// representatives at snap-cell centers, greedy window sequences, maximal /
/// growing classification at exp(aperture^1.5), multiplier induction, and
/// quantization of the window radii into I_{aperture, q}.
CoarseGrainResult coarse_grain(const std::vector<std::vector<Vec>>& orbit_points,
                               const std::vector<std::vector<double>>& orbit_times,
                               const SectionPair& sections,
                               const FrameProvider& frames,
                               const GeometryParams& geom,
                               const HyperbolicityParams& hyp);

/// Minimal forward/backward holonomy time over the sampled inner boxes.
double transition_time(const SectionPair& sections, const DoubleChart& v,
                       const DoubleChart& w);

struct EdgeDiagnostics {
    bool ok = false;
    bool gpo1_forward = false, gpo1_backward = false;
    bool gpo2_stable = false, gpo2_unstable = false;
    double transition_time = 0;
    std::string detail;
};

/// Full edge test: double overlap through the return map plus the two greedy
/// window inequalities. Diagnostics name the failing clause. When given, the
/// optional frames are used for the charts at the return images of the
/// centers; otherwise the source charts' frames are transported.
EdgeDiagnostics is_edge(const DoubleChart& v, const DoubleChart& w, double eps,
                        const SectionPair& sections, double proximity_threshold,
                        double compare_slack = 1e-10,
                        const PesinFrame* frame_at_fv = nullptr,
                        const PesinFrame* frame_at_bw = nullptr);

struct GpoGraph {
    const Alphabet* alphabet = nullptr;
    std::vector<std::vector<int>> out;
    std::vector<std::vector<int>> in;
    std::vector<double> edge_time;  // parallel to a flattened edge list
    std::vector<std::pair<int, int>> edges;
    std::vector<bool> alive;  // false for pruned vertices
    int alive_count = 0;

    SymbolicShift to_shift(std::vector<int>* alphabet_of_vertex = nullptr) const;
};

/// All-pairs edge construction behind a window-ratio and proximity prefilter,
/// followed by iterated removal of vertices with no ingoing or no outgoing
/// edge. Throws ConstructionError when nothing survives.
GpoGraph build_gpo_graph(const Alphabet& alphabet, const SectionPair& sections);

}  // namespace symflow
