#include "symflow/gpo.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

namespace symflow {

namespace {

SymbolKey base_key(const MappingTorusModel& model, const ProperSection& sec,
                   const Vec& x, double cell_width) {
    SymbolKey key;
    key.slice = sec.slice_of(x, 1e-7);
    if (key.slice < 0) throw DomainError("coarse_grain: sample is off the section");
    Vec y = model.frame_at(sec.slice_heights[key.slice]) * model.torus_part(x);
    key.cell.resize(static_cast<size_t>(model.torus_dim()));
    for (int i = 0; i < model.torus_dim(); ++i) {
        key.cell[static_cast<size_t>(i)] =
            static_cast<long long>(std::floor(y[i] / cell_width));
    }
    return key;
}

Vec cell_center(const MappingTorusModel& model, const ProperSection& sec,
                const SymbolKey& key, double cell_width) {
    int d = model.torus_dim();
    Vec y(d);
    for (int i = 0; i < d; ++i) {
        y[i] = (static_cast<double>(key.cell[static_cast<size_t>(i)]) + 0.5) *
               cell_width;
    }
    double h = sec.slice_heights[static_cast<size_t>(key.slice)];
    Vec u = wrap01(Vec(model.frame_at(h).inverse() * y));
    return model.make_point(u, h);
}

/// Largest grid value exp(-i * step) not exceeding value; returns the index.
long long snap_down(double value, double step, double* snapped) {
    if (!(value > 0) || !(step > 0)) throw InputError("snap_down: bad arguments");
    double raw = -std::log(value) / step;
    long long i = static_cast<long long>(std::ceil(raw - 1e-9));
    if (i < 0) i = 0;
    double v = std::exp(-static_cast<double>(i) * step);
    while (v > value * (1 + 1e-12)) {
        ++i;
        v = std::exp(-static_cast<double>(i) * step);
    }
    *snapped = v;
    return i;
}

struct MultiplierResult {
    std::vector<double> p;
    std::vector<long long> index;
    int fallbacks = 0;
};

/// Multiplier induction between maximal indices; `stable` selects the
/// backward (stable) or forward (unstable) recursion.
MultiplierResult choose_multipliers(const std::vector<double>& P,
                                    const std::vector<double>& steps, double aperture,
                                    bool stable) {
    const size_t n = P.size();
    MultiplierResult r;
    r.p.assign(n, 0.0);
    r.index.assign(n, 0);
    const double lambda = std::exp(std::pow(aperture, 1.5));

    std::vector<char> maximal(n, 0);
    for (size_t i = 0; i < n; ++i) {
        bool grow;
        if (stable) {
            grow = (i + 1 < n) && P[i] >= lambda * P[i + 1];
        } else {
            grow = (i > 0) && P[i] >= lambda * P[i - 1];
        }
        maximal[i] = grow ? 0 : 1;
    }

    std::vector<double> a(n, 1.0);
    auto snap_at = [&](size_t i, double cap) {
        double value = cap * P[i];
        double snapped;
        long long idx = snap_down(value, steps[i], &snapped);
        r.index[i] = idx;
        return snapped / P[i];
    };

    if (stable) {
        for (size_t ii = n; ii-- > 0;) {
            if (maximal[ii]) {
                a[ii] = snap_at(ii, 1.0);
            } else {
                double cap = std::exp(-(aperture / 4.0) * P[ii]) * a[ii + 1];
                a[ii] = snap_at(ii, cap);
                // lower half of the bracketing condition
                if (a[ii] < std::exp(-(aperture / 2.0) * P[ii]) * a[ii + 1]) {
                    a[ii] = cap;
                    r.index[ii] = -1;  // off-grid fallback
                    ++r.fallbacks;
                }
            }
        }
    } else {
        for (size_t ii = 0; ii < n; ++ii) {
            if (maximal[ii]) {
                a[ii] = snap_at(ii, 1.0);
            } else {
                double cap = std::exp(-(aperture / 4.0) * P[ii]) * a[ii - 1];
                a[ii] = snap_at(ii, cap);
                if (a[ii] < std::exp(-(aperture / 2.0) * P[ii]) * a[ii - 1]) {
                    a[ii] = cap;
                    r.index[ii] = -1;
                    ++r.fallbacks;
                }
            }
        }
    }
    for (size_t i = 0; i < n; ++i) r.p[i] = a[i] * P[i];
    return r;
}

}  // namespace

int Alphabet::count_above(double t) const {
    int n = 0;
    for (const auto& s : symbols) {
        if (s.chart.p_s > t && s.chart.p_u > t) ++n;
    }
    return n;
}

CoarseGrainResult coarse_grain(const std::vector<std::vector<Vec>>& orbit_points,
                               const std::vector<std::vector<double>>& orbit_times,
                               const SectionPair& sections,
                               const FrameProvider& frames,
                               const GeometryParams& geom,
                               const HyperbolicityParams& hyp) {
    if (orbit_points.size() != orbit_times.size()) {
        throw InputError("coarse_grain: orbit arrays disagree");
    }
    const ProperSection& sec = sections.reference;
    const MappingTorusModel& model = *sec.model;
    const double aperture = geom.aperture;

    CoarseGrainResult result;
    Alphabet& alpha = result.alphabet;
    alpha.geom = geom;
    alpha.hyp = hyp;
    alpha.cell_width = 1.0 / geom.snap_cells;

    // pass 1: collect distinct base cells and build their representatives
    std::map<SymbolKey, int> rep_index;
    struct Rep {
        Vec centre;
        PesinFrame frame, fwd, bwd;
        Vec fwd_point, bwd_point;
        double r_fwd = 0, r_bwd = 0;
        double q_desk = -1.0;
    };
    std::vector<Rep> reps;
    std::vector<std::vector<int>> orbit_rep(orbit_points.size());
    std::vector<std::vector<SymbolKey>> orbit_keys(orbit_points.size());

    for (size_t o = 0; o < orbit_points.size(); ++o) {
        orbit_rep[o].reserve(orbit_points[o].size());
        orbit_keys[o].reserve(orbit_points[o].size());
        for (const Vec& x : orbit_points[o]) {
            SymbolKey key = base_key(model, sec, x, alpha.cell_width);
            orbit_keys[o].push_back(key);
            auto it = rep_index.find(key);
            if (it == rep_index.end()) {
                Rep rep;
                rep.centre = cell_center(model, sec, key, alpha.cell_width);
                rep.frame = frames(rep.centre);
                ReturnResult fwd = poincare_return(sec, rep.centre, true);
                ReturnResult bwd = poincare_return(sec, rep.centre, false);
                rep.fwd_point = fwd.point;
                rep.bwd_point = bwd.point;
                rep.r_fwd = fwd.time;
                rep.r_bwd = bwd.time;
                rep.fwd = frames(fwd.point);
                rep.bwd = frames(bwd.point);
                it = rep_index.emplace(key, static_cast<int>(reps.size())).first;
                reps.push_back(std::move(rep));
            }
            orbit_rep[o].push_back(it->second);
        }
    }
    if (reps.empty()) throw InputError("coarse_grain: no samples");

    double max_q = 0;
    for (const Rep& rep : reps) max_q = std::max(max_q, rep.frame.Q);
    alpha.kappa = geom.q_scale / max_q;
    alpha.proximity_threshold =
        geom.overlap_slack * alpha.cell_width * std::sqrt(double(model.torus_dim())) *
        (1.0 + std::pow(std::exp(model.expansion_rate()), sec.return_time));

    const double r_ref = sec.return_time;
    // pass 2: per-orbit window sequences and quantized radii
    result.orbits.resize(orbit_points.size());
    for (size_t o = 0; o < orbit_points.size(); ++o) {
        const auto& times = orbit_times[o];
        const size_t n = times.size();
        if (n < 2) continue;
        std::vector<double> q_desk(n);
        for (size_t i = 0; i < n; ++i) {
            q_desk[i] = alpha.kappa * reps[static_cast<size_t>(orbit_rep[o][i])].frame.Q;
        }
        QParameters qp = q_parameters(times, q_desk, aperture, 0.25 * r_ref,
                                      4.0 * r_ref);
        // first-visit recurrence values for the grid steps
        for (size_t i = 0; i < n; ++i) {
            Rep& rep = reps[static_cast<size_t>(orbit_rep[o][i])];
            if (rep.q_desk < 0) rep.q_desk = qp.q[i];
        }
        std::vector<double> steps(n);
        for (size_t i = 0; i < n; ++i) {
            double q = reps[static_cast<size_t>(orbit_rep[o][i])].q_desk;
            steps[i] = aperture * aperture * q;
        }
        // greedy windows on the desk scale
        std::vector<double> P_s = qp.p_s, P_u = qp.p_u;
        MultiplierResult ms = choose_multipliers(P_s, steps, aperture, true);
        MultiplierResult mu = choose_multipliers(P_u, steps, aperture, false);
        result.snap_fallbacks += ms.fallbacks + mu.fallbacks;

        OrbitSymbolization& sym = result.orbits[o];
        sym.time = times;
        sym.symbol.assign(n, -1);
        sym.p_s = ms.p;
        sym.p_u = mu.p;
        sym.Q_desk = q_desk;
        int margin = geom.boundary_margin;
        sym.interior_lo = margin;
        sym.interior_hi = static_cast<int>(n) - 1 - margin;

        for (int i = sym.interior_lo; i <= sym.interior_hi; ++i) {
            size_t si = static_cast<size_t>(i);
            SymbolKey key = orbit_keys[o][si];
            key.i_s = ms.index[si];
            key.i_u = mu.index[si];
            auto it = alpha.index.find(key);
            if (it == alpha.index.end()) {
                const Rep& rep = reps[static_cast<size_t>(orbit_rep[o][si])];
                Symbol s;
                s.id = static_cast<int>(alpha.symbols.size());
                s.key = key;
                s.chart.chart.model = &model;
                s.chart.chart.frame = rep.frame;
                s.chart.chart.slice = key.slice;
                s.chart.chart.eta = alpha.kappa * rep.frame.Q;
                s.chart.p_s = ms.p[si];
                s.chart.p_u = mu.p[si];
                s.chart.q_window = alpha.kappa * rep.frame.Q;
                s.forward_frame = rep.fwd;
                s.backward_frame = rep.bwd;
                s.forward_point = rep.fwd_point;
                s.backward_point = rep.bwd_point;
                s.return_time = rep.r_fwd;
                s.backward_return_time = rep.r_bwd;
                s.q_desk = rep.q_desk;
                s.first_orbit = static_cast<int>(o);
                s.first_position = i;
                // membership checks on emission
                double p_min = std::min(s.chart.p_s, s.chart.p_u);
                if (s.chart.p_s > aperture * s.chart.q_window * (1 + 1e-9) ||
                    s.chart.p_u > aperture * s.chart.q_window * (1 + 1e-9)) {
                    ++result.cg2_failures;
                }
                double hh = aperture * hyp.rho + 288.0 * hyp.rho / hyp.beta;
                double ratio = p_min / s.q_desk;
                if (ratio < std::exp(-hh - 1) || ratio > std::exp(hh + 1)) {
                    ++result.cg3_failures;
                }
                it = alpha.index.emplace(key, s.id).first;
                alpha.symbols.push_back(std::move(s));
            }
            alpha.symbols[static_cast<size_t>(it->second)].hits++;
            sym.symbol[si] = it->second;
        }
    }
    return result;
}

double transition_time(const SectionPair& sections, const DoubleChart& v,
                       const DoubleChart& w) {
    const int d = v.chart.dim();
    auto box_min_time = [&](const DoubleChart& c, bool forward) {
        double radius = c.p_min() / 20.0;
        double best = std::numeric_limits<double>::infinity();
        // centre and box corners
        std::vector<Vec> probes;
        probes.push_back(Vec::Zero(d));
        for (int corner = 0; corner < (1 << d); ++corner) {
            Vec p(d);
            for (int i = 0; i < d; ++i) {
                p[i] = (corner >> i & 1) ? radius : -radius;
            }
            probes.push_back(p);
        }
        for (const Vec& p : probes) {
            Vec y = c.chart.apply(p);
            HolonomyResult h = holonomy(sections.security, c.chart.center(), forward, y);
            double t = forward ? h.time : -h.time;
            best = std::min(best, t);
        }
        return best;
    };
    double fwd = box_min_time(v, true);
    double bwd = box_min_time(w, false);
    return std::min(fwd, bwd);
}

EdgeDiagnostics is_edge(const DoubleChart& v, const DoubleChart& w, double eps,
                        const SectionPair& sections, double proximity_threshold,
                        double compare_slack, const PesinFrame* frame_at_fv,
                        const PesinFrame* frame_at_bw) {
    EdgeDiagnostics diag;
    const ProperSection& sec = sections.reference;

    ReturnResult fwd = poincare_return(sec, v.chart.center(), true);
    ReturnResult bwd = poincare_return(sec, w.chart.center(), false);

    double q_min = w.p_min();
    double p_min = v.p_min();

    std::string why;
    DoubleChart w_at = w;
    w_at.chart.eta = q_min;
    DoubleChart v_at = v;
    v_at.chart.eta = p_min;

    // chart at the forward return of v's center, compared against w
    DoubleChart fwd_chart = v;
    if (frame_at_fv) {
        fwd_chart.chart.frame = *frame_at_fv;
    }
    fwd_chart.chart.frame.x = fwd.point;
    fwd_chart.chart.slice = sec.slice_of(fwd.point, 1e-7);
    fwd_chart.chart.eta = q_min;
    diag.gpo1_forward = overlaps_at(fwd_chart, w_at, eps, proximity_threshold, &why);
    if (!diag.gpo1_forward) {
        diag.detail = "gpo1 forward: " + why;
        return diag;
    }
    DoubleChart bwd_chart = w;
    if (frame_at_bw) {
        bwd_chart.chart.frame = *frame_at_bw;
    }
    bwd_chart.chart.frame.x = bwd.point;
    bwd_chart.chart.slice = sec.slice_of(bwd.point, 1e-7);
    bwd_chart.chart.eta = p_min;
    diag.gpo1_backward = overlaps_at(bwd_chart, v_at, eps, proximity_threshold, &why);
    if (!diag.gpo1_backward) {
        diag.detail = "gpo1 backward: " + why;
        return diag;
    }

    double T = transition_time(sections, v, w);
    diag.transition_time = T;

    const double slack = compare_slack;
    auto leq = [&](double a, double b) { return a <= b * (1 + slack); };
    {
        double cap = std::min(std::exp(eps * T) * w.p_s, eps * v.q_window);
        double floor_cap = std::exp(-eps * v.p_s) *
                           std::min(std::exp(eps * T) * w.p_s,
                                    std::exp(-eps) * eps * v.q_window);
        diag.gpo2_stable = leq(v.p_s, cap) && leq(floor_cap, v.p_s);
        if (!diag.gpo2_stable) {
            diag.detail = "gpo2 stable: p_s=" + std::to_string(v.p_s) +
                          " cap=" + std::to_string(cap) +
                          " floor=" + std::to_string(floor_cap);
            return diag;
        }
    }
    {
        double cap = std::min(std::exp(eps * T) * v.p_u, eps * w.q_window);
        double floor_cap = std::exp(-eps * w.p_u) *
                           std::min(std::exp(eps * T) * v.p_u,
                                    std::exp(-eps) * eps * w.q_window);
        diag.gpo2_unstable = leq(w.p_u, cap) && leq(floor_cap, w.p_u);
        if (!diag.gpo2_unstable) {
            diag.detail = "gpo2 unstable: p_u=" + std::to_string(w.p_u) +
                          " cap=" + std::to_string(cap) +
                          " floor=" + std::to_string(floor_cap);
            return diag;
        }
    }
    diag.ok = true;
    return diag;
}

SymbolicShift GpoGraph::to_shift(std::vector<int>* alphabet_of_vertex) const {
    SymbolicShift shift;
    std::vector<int> map(out.size(), -1);
    std::vector<int> back;
    for (size_t i = 0; i < out.size(); ++i) {
        if (alive[i]) {
            map[i] = static_cast<int>(back.size());
            back.push_back(static_cast<int>(i));
            shift.labels.push_back("v" + std::to_string(i));
        }
    }
    shift.out.resize(back.size());
    for (size_t i = 0; i < out.size(); ++i) {
        if (!alive[i]) continue;
        for (int w : out[i]) {
            if (alive[static_cast<size_t>(w)]) {
                shift.out[static_cast<size_t>(map[i])].push_back(map[static_cast<size_t>(w)]);
            }
        }
    }
    if (alphabet_of_vertex) *alphabet_of_vertex = std::move(back);
    return shift;
}

GpoGraph build_gpo_graph(const Alphabet& alphabet, const SectionPair& sections) {
    const size_t n = alphabet.symbols.size();
    if (n == 0) throw InputError("build_gpo_graph: empty alphabet");
    const MappingTorusModel& model = *sections.reference.model;
    const int d = model.torus_dim();

    GpoGraph g;
    g.alphabet = &alphabet;
    g.out.resize(n);
    g.in.resize(n);
    g.alive.assign(n, true);

    // spatial index of symbols by base cell
    std::map<std::pair<int, std::vector<long long>>, std::vector<int>> buckets;
    for (const Symbol& s : alphabet.symbols) {
        buckets[{s.key.slice, s.key.cell}].push_back(s.id);
    }

    double eps = alphabet.geom.aperture;
    for (const Symbol& s : alphabet.symbols) {
        // locate the forward image cell and scan its neighborhood
        SymbolKey fkey =
            base_key(model, sections.reference, s.forward_point, alphabet.cell_width);
        std::vector<long long> probe(fkey.cell.size());
        int span = 2;
        std::vector<int> offsets(static_cast<size_t>(d), -span);
        while (true) {
            for (size_t i = 0; i < probe.size(); ++i) {
                probe[i] = fkey.cell[i] + offsets[i];
            }
            auto it = buckets.find({fkey.slice, probe});
            if (it != buckets.end()) {
                for (int w_id : it->second) {
                    const Symbol& w = alphabet.symbols[static_cast<size_t>(w_id)];
                    double ratio = std::min(s.chart.p_s, s.chart.p_u) /
                                   std::min(w.chart.p_s, w.chart.p_u);
                    if (ratio > std::exp(2 * eps) * (1 + 1e-12) ||
                        ratio < std::exp(-2 * eps) * (1 - 1e-12)) {
                        continue;  // window-ratio prefilter
                    }
                    EdgeDiagnostics diag =
                        is_edge(s.chart, w.chart, eps, sections,
                                alphabet.proximity_threshold,
                                alphabet.geom.compare_slack, &s.forward_frame,
                                &w.backward_frame);
                    if (diag.ok) {
                        g.out[static_cast<size_t>(s.id)].push_back(w_id);
                        g.in[static_cast<size_t>(w_id)].push_back(s.id);
                        g.edges.emplace_back(s.id, w_id);
                        g.edge_time.push_back(diag.transition_time);
                    }
                }
            }
            size_t i = 0;
            while (i < offsets.size() && ++offsets[i] > span) offsets[i++] = -span;
            if (i == offsets.size()) break;
        }
    }

    // relevance pruning
    std::deque<int> queue;
    std::vector<int> out_deg(n), in_deg(n);
    for (size_t i = 0; i < n; ++i) {
        out_deg[i] = static_cast<int>(g.out[i].size());
        in_deg[i] = static_cast<int>(g.in[i].size());
        if (out_deg[i] == 0 || in_deg[i] == 0) queue.push_back(static_cast<int>(i));
    }
    while (!queue.empty()) {
        int v = queue.front();
        queue.pop_front();
        if (!g.alive[static_cast<size_t>(v)]) continue;
        g.alive[static_cast<size_t>(v)] = false;
        for (int w : g.out[static_cast<size_t>(v)]) {
            if (g.alive[static_cast<size_t>(w)] && --in_deg[static_cast<size_t>(w)] == 0) {
                queue.push_back(w);
            }
        }
        for (int w : g.in[static_cast<size_t>(v)]) {
            if (g.alive[static_cast<size_t>(w)] && --out_deg[static_cast<size_t>(w)] == 0) {
                queue.push_back(w);
            }
        }
    }
    for (size_t i = 0; i < n; ++i) {
        if (g.alive[i]) ++g.alive_count;
    }
    if (g.alive_count == 0) {
        throw ConstructionError(
            "build_gpo_graph: graph is empty after relevance pruning");
    }
    return g;
}

}  // namespace symflow
