#pragma once

#include <vector>

#include "symflow/models.hpp"

namespace symflow {

/// One codimension-one disc of a section: a grid cell of a torus slice,
/// shrunk by a small margin so closures of distinct discs are disjoint.
struct TransverseDisc {
    int id = -1;
    int slice = -1;
    Eigen::VectorXi cell;
    Vec center;      // (u, h)
    double radius;   // covering radius in the slice metric
};

struct SectionOptions {
    /// boundary margin as a fraction of the cell width
    double margin = 1e-6;
    int max_discs_per_slice = 8192;
};

/// A finite union of transverse discs cutting every orbit within time rho.
/// Mapping tori are sliced at k = ceil(2c/(s rho)) equally spaced heights and
/// each slice is subdivided into grid-cell discs of metric diameter < 4 rho.
class ProperSection {
public:
    enum class Role { reference, security };

    const MappingTorusModel* model = nullptr;
    Role role = Role::reference;
    double rho = 0.0;
    double size = 0.0;  // rho/2
    double margin = 0.0;
    int slices = 0;
    double spacing = 0.0;        // height gap between slices
    double return_time = 0.0;    // flow time between consecutive slices
    std::vector<double> slice_heights;
    std::vector<int> cells_per_axis;  // per slice
    std::vector<TransverseDisc> discs;
    std::vector<int> disc_offset;  // first disc id of each slice, plus total

    int slice_of(const Vec& x, double tol = 1e-9) const;
    /// Disc containing x, or -1 when x sits off the section or in a margin gap.
    int disc_of(const Vec& x, double tol = 0.0) const;
    const TransverseDisc& disc(int id) const { return discs.at(id); }
    /// Orthonormal tangent basis of every disc, in frame coordinates.
    Mat disc_basis() const;
    int slice_after(int slice, bool forward) const;
};

struct SectionPair {
    ProperSection reference;  // Lambda
    ProperSection security;   // hat Lambda
};

/// Builds the reference/security pair; verifies the cover and partial-order
/// conditions on a seeded sample set and throws ConstructionError on failure.
SectionPair build_proper_section(const MappingTorusModel& model, double rho,
                                 const SectionOptions& opt = {},
                                 int cover_samples = 2000,
                                 std::uint64_t seed = 17);

struct ReturnResult {
    Vec point;
    double time = 0.0;
    int disc = -1;
};

/// First return of x in Lambda to Lambda (or first backward hit).
ReturnResult poincare_return(const ProperSection& section, const Vec& x, bool forward);

struct FlowBoxCoords {
    Vec base;     // point on the disc's slice
    double time;  // x = phi^time(base), |time| <= 4 rho
};

/// Inverse of the flow-box chart of a disc, by bisection on the slice height.
FlowBoxCoords flow_box_coords(const ProperSection& section, int disc_id, const Vec& x);

struct HolonomyResult {
    Vec point;
    double time = 0.0;
    int disc = -1;  // -1 when the landing point falls in a margin gap
    int slice = -1;
};

/// Local projection of y to the slice of f(x) (forward) or f^{-1}(x)
/// (backward) along the flow.
HolonomyResult holonomy(const ProperSection& section, const Vec& x, bool forward,
                        const Vec& y);

/// Cocycle interface the hyperbolicity machinery is written against.
class Cocycle {
public:
    virtual ~Cocycle() = default;
    virtual int dim() const = 0;
    virtual Vec advance(const Vec& x, double t) const = 0;
    virtual Mat evaluate(const Vec& x, double t) const = 0;
};

/// Quotient of dphi^t on Ker(theta) with theta(v) = <v, X>/|X|^2, projected
/// parallel to X. Matrices are expressed in deterministic orthonormal bases
/// of Ker(theta): Gram-Schmidt of the projected ambient frame, signs fixed.
class LinearPoincareCocycle final : public Cocycle {
public:
    explicit LinearPoincareCocycle(const FlowModel& model, double rho);

    int dim() const override { return model_->section_dim(); }
    Vec advance(const Vec& x, double t) const override { return model_->flow(x, t); }
    Mat evaluate(const Vec& x, double t) const override;

    double theta(const Vec& x, const Vec& v) const;
    Vec project_to_normal(const Vec& x, const Vec& v) const;
    Mat normal_frame(const Vec& x) const;
    const FlowModel& model() const { return *model_; }
    double rho() const { return rho_; }

private:
    const FlowModel* model_;
    double rho_;
};

}  // namespace symflow
