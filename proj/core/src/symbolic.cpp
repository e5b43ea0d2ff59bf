#include "symflow/symbolic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace symflow {

int SymbolicShift::edge_count() const {
    int n = 0;
    for (const auto& adj : out) n += static_cast<int>(adj.size());
    return n;
}

std::vector<std::vector<int>> SymbolicShift::in_edges() const {
    std::vector<std::vector<int>> in(out.size());
    for (size_t v = 0; v < out.size(); ++v) {
        for (int w : out[v]) in[static_cast<size_t>(w)].push_back(static_cast<int>(v));
    }
    return in;
}

bool SymbolicShift::locally_compact(int degree_cap) const {
    auto in = in_edges();
    for (size_t v = 0; v < out.size(); ++v) {
        if (static_cast<int>(out[v].size()) > degree_cap) return false;
        if (static_cast<int>(in[v].size()) > degree_cap) return false;
    }
    return true;
}

SymbolicShift SymbolicShift::subgraph(const std::vector<int>& vertices,
                                      std::vector<int>* old_to_new) const {
    std::vector<int> map(out.size(), -1);
    SymbolicShift sub;
    for (size_t i = 0; i < vertices.size(); ++i) {
        map[static_cast<size_t>(vertices[i])] = static_cast<int>(i);
        sub.labels.push_back(labels.empty() ? std::to_string(vertices[i])
                                            : labels[static_cast<size_t>(vertices[i])]);
    }
    sub.out.resize(vertices.size());
    for (size_t i = 0; i < vertices.size(); ++i) {
        for (int w : out[static_cast<size_t>(vertices[i])]) {
            if (map[static_cast<size_t>(w)] >= 0) {
                sub.out[i].push_back(map[static_cast<size_t>(w)]);
            }
        }
    }
    if (old_to_new) *old_to_new = std::move(map);
    return sub;
}

std::vector<std::vector<int>> scc_decompose(const SymbolicShift& shift) {
    const int n = shift.vertex_count();
    std::vector<int> dfs_number(n, -1), low(n, -1), stack_index(n, -1);
    std::vector<int> stack;
    std::vector<std::vector<int>> sccs;
    int counter = 0;

    // iterative Tarjan: frames of (vertex, next edge index)
    std::vector<std::pair<int, size_t>> frames;
    for (int root = 0; root < n; ++root) {
        if (dfs_number[root] != -1) continue;
        frames.emplace_back(root, 0);
        dfs_number[root] = low[root] = counter++;
        stack_index[root] = static_cast<int>(stack.size());
        stack.push_back(root);
        while (!frames.empty()) {
            auto& [v, edge] = frames.back();
            if (edge < shift.out[static_cast<size_t>(v)].size()) {
                int w = shift.out[static_cast<size_t>(v)][edge++];
                if (dfs_number[w] == -1) {
                    dfs_number[w] = low[w] = counter++;
                    stack_index[w] = static_cast<int>(stack.size());
                    stack.push_back(w);
                    frames.emplace_back(w, 0);
                } else if (stack_index[w] != -1) {
                    low[v] = std::min(low[v], dfs_number[w]);
                }
            } else {
                if (low[v] == dfs_number[v]) {
                    int base = stack_index[v];
                    std::vector<int> scc(stack.begin() + base, stack.end());
                    for (int u : scc) stack_index[u] = -1;
                    stack.resize(static_cast<size_t>(base));
                    sccs.push_back(std::move(scc));
                }
                int finished = v;
                frames.pop_back();
                if (!frames.empty()) {
                    low[frames.back().first] =
                        std::min(low[frames.back().first], low[finished]);
                }
            }
        }
    }

    // keep only components with an internal edge
    std::vector<std::vector<int>> result;
    for (auto& scc : sccs) {
        bool internal = false;
        for (int v : scc) {
            for (int w : shift.out[static_cast<size_t>(v)]) {
                if (std::find(scc.begin(), scc.end(), w) != scc.end()) {
                    internal = true;
                    break;
                }
            }
            if (internal) break;
        }
        if (internal) {
            std::sort(scc.begin(), scc.end());
            result.push_back(std::move(scc));
        }
    }
    return result;
}

namespace {

void require_irreducible(const SymbolicShift& g) {
    auto sccs = scc_decompose(g);
    if (sccs.size() != 1 || static_cast<int>(sccs[0].size()) != g.vertex_count()) {
        throw InputError("entropy: graph is not irreducible");
    }
}

/// Perron data of A + I by power iteration (tolerance 1e-10).
std::pair<double, std::vector<double>> perron(const SymbolicShift& g, bool transpose) {
    const int n = g.vertex_count();
    auto in = g.in_edges();
    const auto& adj = transpose ? in : g.out;
    std::vector<double> v(static_cast<size_t>(n), 1.0), next(static_cast<size_t>(n));
    double lambda = 0;
    for (int iter = 0; iter < 200000; ++iter) {
        for (int i = 0; i < n; ++i) {
            double acc = v[static_cast<size_t>(i)];  // the +I term
            for (int w : adj[static_cast<size_t>(i)]) acc += v[static_cast<size_t>(w)];
            next[static_cast<size_t>(i)] = acc;
        }
        double norm = 0;
        for (double x : next) norm = std::max(norm, x);
        for (auto& x : next) x /= norm;
        double delta = 0;
        for (int i = 0; i < n; ++i) {
            delta = std::max(delta,
                             std::abs(next[static_cast<size_t>(i)] - v[static_cast<size_t>(i)]));
        }
        v.swap(next);
        lambda = norm;
        if (delta < 1e-13) break;
        if (iter == 199999) throw SolveError("perron: power iteration stalled");
    }
    // Rayleigh-style refinement of the eigenvalue
    double num = 0, den = 0;
    for (int i = 0; i < n; ++i) {
        double acc = v[static_cast<size_t>(i)];
        for (int w : adj[static_cast<size_t>(i)]) acc += v[static_cast<size_t>(w)];
        num += acc * v[static_cast<size_t>(i)];
        den += v[static_cast<size_t>(i)] * v[static_cast<size_t>(i)];
    }
    lambda = num / den;
    return {lambda - 1.0, v};
}

}  // namespace

double parry_entropy(const SymbolicShift& component) {
    require_irreducible(component);
    auto [radius, vec] = perron(component, false);
    (void)vec;
    return std::log(std::max(radius, 1e-300));
}

ParryMeasure parry_measure(const SymbolicShift& component) {
    require_irreducible(component);
    ParryMeasure m;
    auto [radius, right] = perron(component, false);
    auto [radius_l, left] = perron(component, true);
    m.spectral_radius = 0.5 * (radius + radius_l);
    m.right = std::move(right);
    m.left = std::move(left);
    const int n = component.vertex_count();
    m.stationary.resize(static_cast<size_t>(n));
    double total = 0;
    for (int i = 0; i < n; ++i) {
        m.stationary[static_cast<size_t>(i)] =
            m.left[static_cast<size_t>(i)] * m.right[static_cast<size_t>(i)];
        total += m.stationary[static_cast<size_t>(i)];
    }
    for (auto& x : m.stationary) x /= total;
    return m;
}

double suspension_entropy(const SymbolicShift& component,
                          const std::vector<double>& roof) {
    if (roof.size() != component.out.size()) {
        throw InputError("suspension_entropy: roof size mismatch");
    }
    ParryMeasure m = parry_measure(component);
    double mean_roof = 0;
    for (size_t i = 0; i < roof.size(); ++i) {
        if (roof[i] <= 0) throw InputError("suspension_entropy: roof must be positive");
        mean_roof += m.stationary[i] * roof[i];
    }
    return std::log(m.spectral_radius) / mean_roof;
}

double cylinder_distance(const CylinderWord& a, const CylinderWord& b) {
    if (a == b) return 0.0;
    int lo = std::max(a.lo(), b.lo());
    int hi = std::min(a.hi(), b.hi());
    int best = std::numeric_limits<int>::max();
    for (int n = lo; n <= hi; ++n) {
        if (a.at(n) != b.at(n)) best = std::min(best, std::abs(n));
    }
    if (best == std::numeric_limits<int>::max()) {
        // agreement over the whole common range: the horizon decides
        int horizon = std::min(std::abs(lo), hi) + 1;
        if (lo > hi) horizon = 0;  // disjoint ranges carry no information
        best = horizon;
    }
    return std::exp(-static_cast<double>(best));
}

double bowen_walters_distance(const CylinderWord& a, double height_a,
                              const CylinderWord& b, double height_b,
                              const RoofFunction& roof) {
    double ra = roof(a), rb = roof(b);
    if (ra <= 0 || rb <= 0) throw InputError("bowen_walters: roof must be positive");
    if (height_a < 0 || height_a >= ra || height_b < 0 || height_b >= rb) {
        throw InputError("bowen_walters: height outside [0, roof)");
    }
    double ta = height_a / ra, tb = height_b / rb;

    auto horizontal = [&](double level) {
        return (1 - level) * cylinder_distance(a, b) +
               level * cylinder_distance(a.shifted(), b.shifted());
    };
    double direct = std::abs(ta - tb) + std::min(horizontal(ta), horizontal(tb));
    double through_roof = (1 - ta) + tb + cylinder_distance(a.shifted(), b);
    double through_floor = (1 - tb) + ta + cylinder_distance(a, b.shifted());
    return std::min({direct, through_roof, through_floor});
}

double birkhoff_roof(const CylinderWord& word, const RoofFunction& roof, int n) {
    if (n == 0) return 0.0;
    if (n > 0) {
        double acc = 0;
        for (int i = 0; i < n; ++i) acc += roof(word.shifted(i));
        return acc;
    }
    // cocycle identity: r_{-m} = -r_m o sigma^{-m}
    int m = -n;
    double acc = 0;
    for (int i = 0; i < m; ++i) acc += roof(word.shifted(-m + i));
    return -acc;
}

}  // namespace symflow
