#include "symflow/manifolds.hpp"

#include <algorithm>
#include <cmath>

namespace symflow {

namespace {

int grid_total(int nodes, int dim) {
    int t = 1;
    for (int i = 0; i < dim; ++i) t *= nodes;
    return t;
}

Vec node_coordinates(int flat, int nodes, int dim, double radius) {
    Vec t(dim);
    for (int i = 0; i < dim; ++i) {
        int idx = flat % nodes;
        flat /= nodes;
        t[i] = nodes == 1 ? 0.0 : -radius + 2.0 * radius * idx / (nodes - 1);
    }
    return t;
}

int flat_of(const std::vector<int>& idx, int nodes) {
    int f = 0;
    for (int i = static_cast<int>(idx.size()); i-- > 0;) f = f * nodes + idx[i];
    return f;
}

}  // namespace

bool AmBounds::admissible(double p_min, double beta, double slack) const {
    return value_at_zero <= 1e-3 * p_min + slack &&
           deriv_at_zero <= 0.5 * std::pow(p_min, beta / 3.0) + slack &&
           deriv_sup + holder <= 0.5 + slack;
}

Vec grid_interpolate(const std::vector<Vec>& values, int nodes, int dom_dim,
                     double radius, const Vec& t) {
    const int n = nodes;
    const int cod = static_cast<int>(values.front().size());
    // cell index and local coordinate per axis; values beyond the grid
    // extrapolate linearly through the boundary cell
    std::vector<int> base(static_cast<size_t>(dom_dim));
    Vec local(dom_dim);
    for (int i = 0; i < dom_dim; ++i) {
        double pos = n == 1 ? 0.0 : (t[i] + radius) / (2 * radius) * (n - 1);
        int b = static_cast<int>(std::floor(pos));
        b = std::clamp(b, 0, n - 2 >= 0 ? n - 2 : 0);
        base[static_cast<size_t>(i)] = b;
        local[i] = n == 1 ? 0.0 : pos - b;
    }
    Vec acc = Vec::Zero(cod);
    int corners = 1 << dom_dim;
    for (int c = 0; c < corners; ++c) {
        double weight = 1.0;
        std::vector<int> idx(static_cast<size_t>(dom_dim));
        for (int i = 0; i < dom_dim; ++i) {
            int bit = (c >> i) & 1;
            idx[static_cast<size_t>(i)] =
                std::min(base[static_cast<size_t>(i)] + bit, n - 1);
            weight *= bit ? local[i] : (1.0 - local[i]);
        }
        acc += weight * values[static_cast<size_t>(flat_of(idx, n))];
    }
    return acc;
}

Vec AdmissibleManifold::value_at(const Vec& t) const {
    return grid_interpolate(values, nodes, dom_dim, radius(), t);
}

Mat AdmissibleManifold::deriv_at(const Vec& t) const {
    const double r = radius();
    double h = nodes > 1 ? r / (nodes - 1) : r;
    Mat jac(cod_dim, dom_dim);
    for (int i = 0; i < dom_dim; ++i) {
        Vec tp = t, tm = t;
        tp[i] += h;
        tm[i] -= h;
        jac.col(i) = (value_at(tp) - value_at(tm)) / (2 * h);
    }
    return jac;
}

AmBounds AdmissibleManifold::bounds() const {
    AmBounds b;
    b.value_at_zero = value_at(Vec::Zero(dom_dim)).norm();
    const double r = radius();
    const int n = nodes;
    std::vector<Mat> derivs;
    std::vector<Vec> pos;
    for (int flat = 0; flat < grid_total(n, dom_dim); ++flat) {
        Vec t = node_coordinates(flat, n, dom_dim, r);
        bool interior = true;
        for (int i = 0; i < dom_dim; ++i) {
            if (std::abs(std::abs(t[i]) - r) < 1e-15 && n > 2) interior = false;
        }
        if (!interior && n > 2) continue;
        Mat d = deriv_at(t);
        derivs.push_back(d);
        pos.push_back(t);
        double nd = operator_norm(d);
        b.deriv_sup = std::max(b.deriv_sup, nd);
        if (t.norm() < 1e-14) b.deriv_at_zero = nd;
    }
    double beta3 = 1.0 / 3.0;  // Hoelder exponent beta/3 with beta = 1
    for (size_t i = 0; i < derivs.size(); ++i) {
        for (size_t j = i + 1; j < derivs.size(); ++j) {
            double dist = (pos[i] - pos[j]).norm();
            if (dist > 1e-14) {
                b.holder = std::max(b.holder, operator_norm(derivs[i] - derivs[j]) /
                                                  std::pow(dist, beta3));
            }
        }
    }
    return b;
}

Vec AdmissibleManifold::graph_point(const Vec& t) const {
    const int d_s = chart.chart.d_s();
    const int d = chart.chart.dim();
    Vec z(d);
    Vec f = value_at(t);
    if (kind == 's') {
        z.head(d_s) = t;
        z.tail(d - d_s) = f;
    } else {
        z.head(d_s) = f;
        z.tail(d - d_s) = t;
    }
    return z;
}

Vec AdmissibleManifold::embed(const Vec& t) const {
    return chart.chart.apply(graph_point(t));
}

AdmissibleManifold zero_manifold(const DoubleChart& chart, char kind, int nodes) {
    return affine_manifold(chart, kind,
                           Vec::Zero(kind == 's' ? chart.chart.d_u() : chart.chart.d_s()),
                           Mat::Zero(kind == 's' ? chart.chart.d_u() : chart.chart.d_s(),
                                     kind == 's' ? chart.chart.d_s() : chart.chart.d_u()),
                           nodes);
}

AdmissibleManifold affine_manifold(const DoubleChart& chart, char kind,
                                   const Vec& value0, const Mat& slope, int nodes) {
    AdmissibleManifold m;
    m.chart = chart;
    m.kind = kind;
    m.nodes = nodes;
    m.dom_dim = kind == 's' ? chart.chart.d_s() : chart.chart.d_u();
    m.cod_dim = chart.chart.dim() - m.dom_dim;
    m.values.resize(static_cast<size_t>(grid_total(nodes, m.dom_dim)));
    for (int flat = 0; flat < grid_total(nodes, m.dom_dim); ++flat) {
        Vec t = node_coordinates(flat, nodes, m.dom_dim, m.radius());
        m.values[static_cast<size_t>(flat)] = value0 + slope * t;
    }
    return m;
}

namespace {

/// Chart-to-chart holonomy map used by the transforms.
struct TransitionMap {
    const SectionPair* sections;
    const DoubleChart* source;
    const DoubleChart* target;
    bool forward;

    Vec operator()(const Vec& z) const {
        Vec y = source->chart.apply(z);
        HolonomyResult h =
            holonomy(sections->security, source->chart.center(), forward, y);
        return target->chart.inverse(h.point);
    }
};

}  // namespace

AdmissibleManifold graph_transform(const SectionPair& sections, const DoubleChart& v,
                                   const DoubleChart& w, const AdmissibleManifold& m,
                                   char kind, bool validate) {
    const int d = v.chart.dim();
    const int d_s = v.chart.d_s();

    AdmissibleManifold out;
    out.kind = kind;
    out.nodes = m.nodes;
    TransitionMap map;
    map.sections = &sections;

    if (kind == 's') {
        if (m.kind != 's') throw InputError("graph_transform: kind mismatch");
        // pull back through the backward holonomy from w to v
        map.source = &w;
        map.target = &v;
        map.forward = false;
        out.chart = v;
        out.dom_dim = d_s;
        out.cod_dim = d - d_s;
    } else {
        if (m.kind != 'u') throw InputError("graph_transform: kind mismatch");
        map.source = &v;
        map.target = &w;
        map.forward = true;
        out.chart = w;
        out.dom_dim = d - d_s;
        out.cod_dim = d_s;
    }
    out.values.resize(static_cast<size_t>(grid_total(out.nodes, out.dom_dim)));

    auto image = [&](const Vec& tau) { return map(m.graph_point(tau)); };
    auto dom_part = [&](const Vec& z) {
        return kind == 's' ? Vec(z.head(d_s)) : Vec(z.tail(d - d_s));
    };
    auto cod_part = [&](const Vec& z) {
        return kind == 's' ? Vec(z.tail(d - d_s)) : Vec(z.head(d_s));
    };

    // affine model of tau -> dom_part(image(tau)) for chord iterations
    Vec phi0 = image(Vec::Zero(m.dom_dim));
    Mat lin(out.dom_dim, m.dom_dim);
    double fd = std::max(1e-7, 1e-4 * m.radius());
    for (int i = 0; i < m.dom_dim; ++i) {
        Vec tp = Vec::Zero(m.dom_dim), tm = Vec::Zero(m.dom_dim);
        tp[i] += fd;
        tm[i] -= fd;
        lin.col(i) = (dom_part(image(tp)) - dom_part(image(tm))) / (2 * fd);
    }
    Mat lin_inv = lin.inverse();

    const double tol = 1e-11;
    for (int flat = 0; flat < grid_total(out.nodes, out.dom_dim); ++flat) {
        Vec t = node_coordinates(flat, out.nodes, out.dom_dim, out.radius());
        Vec tau = lin_inv * (t - dom_part(phi0));
        Vec z;
        bool done = false;
        for (int iter = 0; iter < 80; ++iter) {
            z = image(tau);
            Vec err = dom_part(z) - t;
            if (err.norm() < tol) {
                done = true;
                break;
            }
            if (iter >= 20 && iter % 10 == 0) {
                // refresh the chord model if convergence stalls
                for (int i = 0; i < m.dom_dim; ++i) {
                    Vec tp = tau, tm = tau;
                    tp[i] += fd;
                    tm[i] -= fd;
                    lin.col(i) = (dom_part(image(tp)) - dom_part(image(tm))) / (2 * fd);
                }
                lin_inv = lin.inverse();
            }
            tau -= lin_inv * err;
            if (!tau.allFinite() || tau.norm() > 50 * m.radius()) {
                throw SolveError("graph_transform: iteration diverged at node " +
                                 std::to_string(flat));
            }
        }
        if (!done) {
            throw SolveError("graph_transform: no convergence at node " +
                             std::to_string(flat));
        }
        out.values[static_cast<size_t>(flat)] = cod_part(z);
    }

    if (validate) {
        AmBounds b = out.bounds();
        if (!b.admissible(out.chart.p_min(), 1.0, 1e-6)) {
            throw DiagnosticError("graph_transform: output fails the admissibility bounds");
        }
    }
    return out;
}

RayResult invariant_manifold(const SectionPair& sections,
                             std::span<const DoubleChart> ray, char kind,
                             double settle_tol) {
    if (ray.size() < 2) throw InputError("invariant_manifold: ray too short");
    RayResult res;

    auto run = [&](const AdmissibleManifold& seed_far, std::vector<double>* gaps,
                   const AdmissibleManifold* other_far) {
        AdmissibleManifold m = seed_far;
        AdmissibleManifold other;
        bool track = other_far != nullptr;
        if (track) other = *other_far;
        if (kind == 's') {
            for (size_t i = ray.size() - 1; i-- > 0;) {
                m = graph_transform(sections, ray[i], ray[i + 1], m, 's');
                if (track) {
                    other = graph_transform(sections, ray[i], ray[i + 1], other, 's');
                    double gap = 0;
                    for (size_t k = 0; k < m.values.size(); ++k) {
                        gap = std::max(gap, (m.values[k] - other.values[k]).norm());
                    }
                    gaps->push_back(gap);
                    if (gap < settle_tol) track = false;
                }
            }
        } else {
            for (size_t i = 1; i < ray.size(); ++i) {
                m = graph_transform(sections, ray[i - 1], ray[i], m, 'u');
                if (track) {
                    other = graph_transform(sections, ray[i - 1], ray[i], other, 'u');
                    double gap = 0;
                    for (size_t k = 0; k < m.values.size(); ++k) {
                        gap = std::max(gap, (m.values[k] - other.values[k]).norm());
                    }
                    gaps->push_back(gap);
                    if (gap < settle_tol) track = false;
                }
            }
        }
        return m;
    };

    const DoubleChart& far = kind == 's' ? ray.back() : ray.front();
    AdmissibleManifold seed0 = zero_manifold(far, kind);
    // second seed: admissible offset graph
    int cod = kind == 's' ? far.chart.d_u() : far.chart.d_s();
    int dom = far.chart.dim() - cod;
    Vec off = Vec::Constant(cod, 0.5e-3 * far.p_min());
    Mat slope = Mat::Constant(cod, dom, 0.05);
    AdmissibleManifold seed1 = affine_manifold(far, kind, off, slope);

    std::vector<double> gaps;
    res.manifold = run(seed0, &gaps, &seed1);

    if (!gaps.empty()) {
        res.seed_c0_gap = gaps.back();
        for (size_t i = 1; i < gaps.size(); ++i) {
            if (gaps[i - 1] > 0) res.contraction.push_back(gaps[i] / gaps[i - 1]);
        }
    }
    return res;
}

Vec manifold_intersection(const AdmissibleManifold& vs, const AdmissibleManifold& vu,
                          Vec* chart_coords, double tol) {
    if (vs.kind != 's' || vu.kind != 'u') {
        throw InputError("manifold_intersection: expects an s and a u manifold");
    }
    Vec t = Vec::Zero(vs.dom_dim);
    Vec tau = Vec::Zero(vu.dom_dim);
    for (int iter = 0; iter < 400; ++iter) {
        Vec t_next = vu.value_at(tau);
        Vec tau_next = vs.value_at(t);
        double delta = (t_next - t).norm() + (tau_next - tau).norm();
        t = t_next;
        tau = tau_next;
        if (delta < tol) {
            Vec z(vs.chart.chart.dim());
            z.head(vs.dom_dim) = t;
            z.tail(vu.dom_dim) = tau;
            if (chart_coords) *chart_coords = z;
            return vs.chart.chart.apply(z);
        }
    }
    throw SolveError("manifold_intersection: fixed point iteration diverged");
}

ShadowResult shadow(const SectionPair& sections, std::span<const DoubleChart> window,
                    int centre_index) {
    if (centre_index <= 0 || centre_index + 1 >= static_cast<int>(window.size())) {
        throw InputError("shadow: centre must be interior to the window");
    }
    std::span<const DoubleChart> fwd = window.subspan(static_cast<size_t>(centre_index));
    std::span<const DoubleChart> bwd =
        window.subspan(0, static_cast<size_t>(centre_index) + 1);

    RayResult vs = invariant_manifold(sections, fwd, 's');
    RayResult vu = invariant_manifold(sections, bwd, 'u');

    ShadowResult out;
    out.seed_gap = std::max(vs.seed_c0_gap, vu.seed_c0_gap);
    out.point = manifold_intersection(vs.manifold, vu.manifold, &out.chart_coords);

    // orbit residuals against the window boxes
    const ProperSection& sec = sections.security;
    out.residuals.assign(window.size(), 0.0);
    Vec y = out.point;
    for (size_t i = static_cast<size_t>(centre_index); i < window.size(); ++i) {
        Vec coords = window[i].chart.inverse(y);
        out.residuals[i] =
            coords.lpNorm<Eigen::Infinity>() - window[i].p_min();
        if (i + 1 < window.size()) {
            y = holonomy(sec, window[i].chart.center(), true, y).point;
        }
    }
    y = out.point;
    for (size_t i = static_cast<size_t>(centre_index); i-- > 0;) {
        y = holonomy(sec, window[i + 1].chart.center(), false, y).point;
        Vec coords = window[i].chart.inverse(y);
        out.residuals[i] =
            coords.lpNorm<Eigen::Infinity>() - window[i].p_min();
    }
    return out;
}

Vec smale_bracket(const SectionPair& sections, const AdmissibleManifold& vs_x,
                  const AdmissibleManifold& vu_y) {
    (void)sections;
    return manifold_intersection(vs_x, vu_y);
}

}  // namespace symflow
