#pragma once

#include "symflow/manifolds.hpp"

namespace symflow {

struct MarkovOptions {
    int fibre_depth = 8;             // graph-transform chain length per fibre
    int fibre_nodes = 9;
    double fibre_tol = 1e-7;         // membership tolerance in chart coordinates
    double intersect_tol = 1e-4;     // fibre/rectangle intersection tolerance
    double ambiguity_factor = 10.0;  // exclusion band [tol, factor*tol]
    int refine_depth = 2;            // signature window half width N
    int neighbor_span = 2;           // slice offsets probed for affiliated covers
    int neighbor_cells = 2;          // Chebyshev cell radius for the probes
    int rect_representatives = 12;   // projected cloud size per rectangle
    int classify_probe = 40;         // symbol-level pass sample cap
    double markov_tol = 1e-6;
    double recon_tol = 1e-8;
};

/// One shadowed sample of a rectangle, with its orbit links under the return
/// map of the cover.
struct CoverSample {
    int id = -1;
    int orbit = -1, pos = -1;
    Vec point;
    int symbol = -1;
    int next = -1, prev = -1;  // sample ids, -1 at run boundaries
    double r_next = 0, r_prev = 0;
};

struct Rectangle {
    int symbol = -1;
    std::vector<int> samples;
};

/// Compact per-sample fibre grids (values over the stable/unstable boxes of
/// the symbol chart).
struct FibreData {
    bool ready = false;
    std::vector<Vec> s_values, u_values;
};

struct MarkovCover {
    const Alphabet* alphabet = nullptr;
    const SectionPair* sections = nullptr;
    MarkovOptions options;
    std::vector<CoverSample> samples;
    std::vector<Rectangle> rects;            // indexed by symbol id
    std::vector<std::vector<int>> affiliated_covers;  // J[symbol]
    int excluded_pruned = 0;                 // samples dropped with their symbol
    double max_box_ratio = 0;                // sample excursion / window radius

    const FibreData& fibre(int sample_id) const;
    AdmissibleManifold fibre_manifold(int sample_id, char kind) const;
    /// Membership of an arbitrary point, by base cell; -1 when no symbol fits.
    int symbol_of_point(const Vec& x) const;

    mutable std::vector<FibreData> fibre_cache;
};

MarkovCover build_cover(const SectionPair& sections, const Alphabet& alphabet,
                        const GpoGraph& graph,
                        const std::vector<OrbitSymbolization>& symbolization,
                        const std::vector<std::vector<Vec>>& orbit_points,
                        const MarkovOptions& options);

enum class EClass : int { both = 0, stable_only = 1, unstable_only = 2, neither = 3 };

struct MarkovCell {
    int id = -1;
    int symbol = -1;
    std::vector<int> samples;
    std::vector<int> signature;
};

struct MarkovPartition {
    int depth = 0;
    std::vector<MarkovCell> cells;
    std::vector<int> cell_of_sample;  // -1 for excluded or ambiguous samples
    int ambiguous_samples = 0;
    int boundary_excluded = 0;
    int unstable_classification = 0;  // cells whose signature moved on resampling
    /// Per symbol: number of cells supported inside phi^{[-rho,rho]} of it,
    /// with the combinatorial bound for comparison.
    std::vector<std::pair<int, double>> cell_count_bounds;
};

/// Bowen-Sinai refinement: fibre-intersection classes against affiliated
/// covers, intersected over the itinerary window |k| <= N.
MarkovPartition refine(const MarkovCover& cover, int refine_depth);

struct MarkovCheckReport {
    int fibre_points = 0;
    int stable_violations = 0;
    int unstable_violations = 0;
    int bracket_identity_failures = 0;
    int ambiguous_excluded = 0;
    double max_graph_distance = 0;    // worst fibre-image deviation
    double fibre_contraction = 0;     // measured diameter ratio under the map
};

/// Geometrical Markov property on bracket-generated fibre points; report
/// only, never throws on violations.
MarkovCheckReport check_markov(const MarkovCover& cover,
                               const MarkovPartition& partition, int fibre_points,
                               std::uint64_t seed);

struct AffiliationResult {
    std::vector<std::vector<int>> related;  // cell ids, sorted
    std::vector<int> n_of_cell;             // N(R)
    int max_preimage_multiplicity = 0;
    double max_bound = 0;                   // largest applicable N(R)N(S)
    int multiplicity_violations = 0;
};

AffiliationResult affiliation(const MarkovCover& cover,
                              const MarkovPartition& partition);

struct SecondCodingResult {
    SymbolicShift shift;                 // cell graph under the return map
    std::vector<double> roof;            // mean return time per cell
    std::vector<double> roof_sup;        // per-cell maximum (sup check)
    std::vector<CylinderWord> words;     // per queried sample
    std::vector<double> reconstruction_error;
    std::vector<int> word_sample;        // sample ids of the rows above
    double equivariance_error = 0;       // worst one-step commutation defect
};

/// Itineraries of the refined cells under the return map, their roof values,
/// and nested-cylinder reconstruction diagnostics.
SecondCodingResult second_coding(const MarkovCover& cover,
                                 const MarkovPartition& partition, int word_radius,
                                 int max_words);

}  // namespace symflow
