#pragma once

#include <functional>
#include <string>
#include <vector>

#include "symflow/errors.hpp"

namespace symflow {

/// Directed graph presentation of a topological Markov shift.
struct SymbolicShift {
    std::vector<std::string> labels;
    std::vector<std::vector<int>> out;

    int vertex_count() const { return static_cast<int>(out.size()); }
    int edge_count() const;
    std::vector<std::vector<int>> in_edges() const;
    bool locally_compact(int degree_cap = 1 << 30) const;
    SymbolicShift subgraph(const std::vector<int>& vertices,
                           std::vector<int>* old_to_new = nullptr) const;
};

/// Strongly connected components that carry at least one internal edge,
/// in reverse topological order of discovery.
std::vector<std::vector<int>> scc_decompose(const SymbolicShift& shift);

/// log of the adjacency spectral radius of an irreducible graph, by power
/// iteration on A + I (primitive for irreducible A) to tolerance 1e-10.
double parry_entropy(const SymbolicShift& component);

struct ParryMeasure {
    double spectral_radius = 0;
    std::vector<double> left, right;     // Perron vectors, normalized
    std::vector<double> stationary;      // vertex marginals
};

ParryMeasure parry_measure(const SymbolicShift& component);

/// Abramov quotient h(base) / integral of the roof against the Parry measure;
/// the roof is piecewise constant on depth-1 cylinders (one value per vertex).
double suspension_entropy(const SymbolicShift& component,
                          const std::vector<double>& roof);

/// A finite word with explicit index range [offset, offset + size).
struct CylinderWord {
    std::vector<int> symbols;
    int offset = 0;

    int lo() const { return offset; }
    int hi() const { return offset + static_cast<int>(symbols.size()) - 1; }
    bool defined(int n) const { return n >= lo() && n <= hi(); }
    int at(int n) const { return symbols.at(static_cast<size_t>(n - offset)); }
    CylinderWord shifted(int k = 1) const { return {symbols, offset - k}; }
    bool operator==(const CylinderWord& o) const {
        return offset == o.offset && symbols == o.symbols;
    }
};

/// exp(-inf{|n| : symbols differ}), with the common horizon standing in for
/// the infimum when the words agree everywhere both are defined; exactly zero
/// for identical words.
double cylinder_distance(const CylinderWord& a, const CylinderWord& b);

using RoofFunction = std::function<double(const CylinderWord&)>;

/// Suspension metric over the cylinder distance: heights are normalized by
/// the roof and paths may cross the roof in either direction.
double bowen_walters_distance(const CylinderWord& a, double height_a,
                              const CylinderWord& b, double height_b,
                              const RoofFunction& roof);

/// Birkhoff sums of the roof, extended to negative n by the cocycle identity.
double birkhoff_roof(const CylinderWord& word, const RoofFunction& roof, int n);

}  // namespace symflow
