#include "symflow/charts.hpp"

#include <cmath>

namespace symflow {

Vec PesinChart::apply(const Vec& v) const {
    return model->slice_exp(frame.x, frame.C * v);
}

Vec PesinChart::inverse(const Vec& y) const {
    return frame.C_inv * model->slice_log(frame.x, y);
}

double PesinChart::safe_radius() const {
    double stretch = operator_norm(model->frame_at(model->height(frame.x))
                                       .inverse() *
                                   frame.C);
    return model->coordinate_guard() / (stretch * std::sqrt(double(dim())));
}

double overlap_proximity(const PesinChart& a, const PesinChart& b) {
    // flat slices: parallel transport between centers is the identity in
    // frame coordinates, so the reductions compare entrywise
    double dc = (a.frame.C - b.frame.C).jacobiSvd().singularValues()(0);
    return a.model->distance(a.frame.x, b.frame.x) + dc;
}

bool overlaps_at(const DoubleChart& a, const DoubleChart& b, double eps,
                 double threshold, std::string* why) {
    auto fail = [&](const std::string& reason) {
        if (why) *why = reason;
        return false;
    };
    double ratio = a.chart.eta / b.chart.eta;
    if (ratio < std::exp(-eps) * (1 - 1e-12) || ratio > std::exp(eps) * (1 + 1e-12)) {
        return fail("radius ratio " + std::to_string(ratio));
    }
    if (a.chart.d_s() != b.chart.d_s()) {
        return fail("stable dimensions differ");
    }
    if (a.chart.slice != b.chart.slice) {
        return fail("different slices");
    }
    double prox = overlap_proximity(a.chart, b.chart);
    if (!(prox < threshold)) {
        return fail("proximity " + std::to_string(prox) + " >= " +
                    std::to_string(threshold));
    }
    if (why) why->clear();
    return true;
}

bool overlaps(const DoubleChart& a, const DoubleChart& b, double eps) {
    double t = std::pow(a.chart.eta * b.chart.eta, 4.0);
    return overlaps_at(a, b, eps, t);
}

namespace {

/// Tensor grid iteration over [-r, r]^d with n nodes per axis.
template <class F>
void for_grid(int d, int n, double r, F&& f) {
    std::vector<int> idx(d, 0);
    Vec v(d);
    while (true) {
        for (int i = 0; i < d; ++i) {
            v[i] = n == 1 ? 0.0 : -r + 2.0 * r * idx[i] / (n - 1);
        }
        f(idx, v);
        int i = 0;
        while (i < d && ++idx[i] == n) idx[i++] = 0;
        if (i == d) break;
    }
}

int flat_index(const std::vector<int>& idx, int n) {
    int f = 0;
    for (int i = static_cast<int>(idx.size()); i-- > 0;) f = f * n + idx[i];
    return f;
}

}  // namespace

TransitionRecord chart_transition(const PesinChart& from, const PesinChart& to,
                                  const ProperSection& section, bool forward,
                                  double q_window, double beta) {
    const int d = from.dim();
    TransitionRecord rec;
    rec.nodes_per_axis = 5;
    const int n = rec.nodes_per_axis;

    double r = std::min({10.0 * q_window, 0.9 * from.safe_radius(),
                         from.model->chart_radius()});
    rec.domain_radius = r;

    // hyperbolic blocks from the center transition
    HolonomyResult centre = holonomy(section, from.center(), forward, from.center());
    if (to.slice != centre.slice) {
        throw InputError("chart_transition: target chart is on the wrong slice");
    }
    rec.transition_time = centre.time;
    LinearPoincareCocycle coc(*from.model, section.rho);
    Mat phi = coc.evaluate(from.center(), centre.time);
    Mat block = to.frame.C_inv * phi * from.frame.C;
    const int d_s = from.d_s();
    const int d_u = from.d_u();
    rec.D_s = block.topLeftCorner(d_s, d_s);
    rec.D_u = block.bottomRightCorner(d_u, d_u);
    Mat linear = Mat::Zero(d, d);
    linear.topLeftCorner(d_s, d_s) = rec.D_s;
    linear.bottomRightCorner(d_u, d_u) = rec.D_u;

    int total = 1;
    for (int i = 0; i < d; ++i) total *= n;
    std::vector<Vec> h_values(total);

    for_grid(d, n, r, [&](const std::vector<int>& idx, const Vec& v) {
        Vec y = from.apply(v);
        HolonomyResult hol = holonomy(section, from.center(), forward, y);
        Vec image = to.inverse(hol.point);
        if (image.lpNorm<Eigen::Infinity>() > from.model->chart_radius() * 10) {
            throw DomainError("chart_transition: image escapes the chart domain");
        }
        h_values[flat_index(idx, n)] = image - linear * v;
    });

    double step = n == 1 ? 1.0 : 2.0 * r / (n - 1);
    rec.H0_norm = h_values[flat_index(std::vector<int>(d, n / 2), n)].norm();
    for (const Vec& h : h_values) {
        rec.H_grid_norm = std::max(rec.H_grid_norm, h.norm());
    }

    // derivatives of H at interior nodes by central differences
    std::vector<Mat> dh;
    std::vector<Vec> dh_pos;
    for_grid(d, n, r, [&](const std::vector<int>& idx, const Vec& v) {
        for (int i = 0; i < d; ++i) {
            if (idx[i] == 0 || idx[i] == n - 1) return;
        }
        Mat jac(d, d);
        for (int i = 0; i < d; ++i) {
            std::vector<int> up = idx, dn = idx;
            ++up[i];
            --dn[i];
            jac.col(i) =
                (h_values[flat_index(up, n)] - h_values[flat_index(dn, n)]) /
                (2 * step);
        }
        dh.push_back(jac);
        dh_pos.push_back(v);
    });
    for (size_t a = 0; a < dh.size(); ++a) {
        double nrm = operator_norm(dh[a]);
        rec.dH_grid_norm = std::max(rec.dH_grid_norm, nrm);
        if (dh_pos[a].norm() < 1e-12) rec.dH0_norm = nrm;
        for (size_t b = a + 1; b < dh.size(); ++b) {
            double dist = (dh_pos[a] - dh_pos[b]).norm();
            if (dist > 1e-12) {
                double quot =
                    operator_norm(dh[a] - dh[b]) / std::pow(dist, beta / 3.0);
                rec.holder_quotient = std::max(rec.holder_quotient, quot);
            }
        }
    }
    return rec;
}

CoordChangeRecord chart_coordinate_change(const PesinChart& a, const PesinChart& b,
                                          double radius) {
    CoordChangeRecord rec;
    const int d = a.dim();
    rec.delta = a.inverse(b.apply(Vec::Zero(d)));

    // linear part of Psi_a^{-1} o Psi_b and its closest orthogonal map
    Mat lin = a.frame.C_inv * b.frame.C;
    Eigen::JacobiSVD<Mat> svd(lin, Eigen::ComputeFullU | Eigen::ComputeFullV);
    rec.orthogonal = svd.matrixU() * svd.matrixV().transpose();

    const int n = 5;
    for_grid(d, n, radius, [&](const std::vector<int>&, const Vec& v) {
        Vec image = a.inverse(b.apply(v));
        Vec residual = image - rec.delta - rec.orthogonal * v;
        rec.remainder_grid_norm = std::max(rec.remainder_grid_norm, residual.norm());
    });
    rec.remainder_deriv_norm = operator_norm(lin - rec.orthogonal);
    return rec;
}

}  // namespace symflow
