#include "symflow/sections.hpp"

#include <algorithm>
#include <cmath>

namespace symflow {

int ProperSection::slice_of(const Vec& x, double tol) const {
    double h = model->height(x);
    double idx = h / spacing;
    long j = std::lround(idx);
    if (j == slices) j = 0;  // height c is identified with height 0
    double href = slice_heights[static_cast<size_t>(j % slices)];
    if (std::abs(wrap_period(h - href, model->roof_constant())) > tol) return -1;
    return static_cast<int>(j % slices);
}

int ProperSection::disc_of(const Vec& x, double tol) const {
    int j = slice_of(x);
    if (j < 0) return -1;
    int m = cells_per_axis[j];
    int d = model->torus_dim();
    Vec u = model->torus_part(x);
    Eigen::VectorXi cell(d);
    double w = 1.0 / m;
    for (int i = 0; i < d; ++i) {
        double ui = wrap01(u[i]);
        int ci = std::min(static_cast<int>(std::floor(ui * m)), m - 1);
        // margin gap test against the cell of the center
        double centre = (ci + 0.5) * w;
        if (std::abs(wrap_half(ui - centre)) > w / 2 - margin * w + tol) return -1;
        cell[i] = ci;
    }
    int flat = 0;
    for (int i = 0; i < d; ++i) flat = flat * m + cell[i];
    return disc_offset[j] + flat;
}

Mat ProperSection::disc_basis() const {
    int d = model->torus_dim();
    Mat b = Mat::Zero(d + 1, d);
    b.topLeftCorner(d, d).setIdentity();
    return b;
}

int ProperSection::slice_after(int slice, bool forward) const {
    int j = forward ? slice + 1 : slice - 1;
    if (j >= slices) j = 0;
    if (j < 0) j = slices - 1;
    return j;
}

namespace {

ProperSection make_section(const MappingTorusModel& model, double rho,
                           ProperSection::Role role, double margin,
                           int max_discs_per_slice) {
    ProperSection sec;
    sec.model = &model;
    sec.role = role;
    sec.rho = rho;
    sec.size = rho / 2;
    sec.margin = margin;

    const double c = model.roof_constant();
    const double s = model.speed_scale();
    const int d = model.torus_dim();

    sec.slices = static_cast<int>(std::ceil(2.0 * c / (s * rho)));
    sec.spacing = c / sec.slices;
    sec.return_time = sec.spacing / s;
    if (sec.return_time >= rho) {
        throw ConstructionError("section: slice spacing exceeds the return bound");
    }
    // forward flow boxes must not wrap around the whole roof
    if (8 * rho * s >= c) {
        throw ConstructionError("section: rho too large for the roof constant");
    }

    double target = std::min(0.9 * 4 * rho, sec.spacing);
    int cap = std::max(1, static_cast<int>(std::floor(
                              std::pow(double(max_discs_per_slice), 1.0 / d))));

    sec.disc_offset.assign(sec.slices + 1, 0);
    int next_id = 0;
    for (int j = 0; j < sec.slices; ++j) {
        double h = j * sec.spacing;
        sec.slice_heights.push_back(h);
        double stretch = operator_norm(model.frame_at(h));
        int m = static_cast<int>(std::ceil(std::sqrt(double(d)) * stretch / target));
        m = std::min(std::max(m, 1), cap);
        double diam = stretch * std::sqrt(double(d)) / m;
        if (diam >= 4 * rho) {
            throw ConstructionError("section: cannot satisfy the disc diameter bound");
        }
        sec.cells_per_axis.push_back(m);
        sec.disc_offset[j] = next_id;

        double w = 1.0 / m;
        Eigen::VectorXi cell = Eigen::VectorXi::Zero(d);
        int total = 1;
        for (int i = 0; i < d; ++i) total *= m;
        for (int flat = 0; flat < total; ++flat) {
            int rem = flat;
            for (int i = d - 1; i >= 0; --i) {
                cell[i] = rem % m;
                rem /= m;
            }
            TransverseDisc disc;
            disc.id = next_id++;
            disc.slice = j;
            disc.cell = cell;
            Vec u(d);
            for (int i = 0; i < d; ++i) u[i] = (cell[i] + 0.5) * w;
            disc.center = model.make_point(u, h);
            disc.radius = stretch * (w / 2) * (1 - 2 * margin) * std::sqrt(double(d));
            sec.discs.push_back(std::move(disc));
        }
        sec.disc_offset[j] = sec.disc_offset[j];
    }
    // rebuild offsets (cells_per_axis may differ per slice)
    int acc = 0;
    for (int j = 0; j < sec.slices; ++j) {
        sec.disc_offset[j] = acc;
        int m = sec.cells_per_axis[j];
        int total = 1;
        for (int i = 0; i < d; ++i) total *= m;
        acc += total;
    }
    sec.disc_offset[sec.slices] = acc;
    return sec;
}

}  // namespace

SectionPair build_proper_section(const MappingTorusModel& model, double rho,
                                 const SectionOptions& opt, int cover_samples,
                                 std::uint64_t seed) {
    if (rho <= 0 || rho >= 0.25) {
        throw InputError("build_proper_section: rho must lie in (0, 0.25)");
    }
    SectionPair pair;
    pair.security =
        make_section(model, rho, ProperSection::Role::security, opt.margin / 10,
                     opt.max_discs_per_slice);
    pair.reference = make_section(model, rho, ProperSection::Role::reference,
                                  opt.margin, opt.max_discs_per_slice);

    // Cover check: sampled points of M must hit a reference disc within [0, rho).
    Rng rng(seed);
    const int dim = model.ambient_dim();
    for (int i = 0; i < cover_samples; ++i) {
        Vec x(dim);
        for (int k = 0; k < dim - 1; ++k) x[k] = rng.uniform();
        x[dim - 1] = rng.uniform() * model.roof_constant();
        double step = pair.reference.return_time;
        bool hit = false;
        double t = 0;
        // first slice crossing, then at most one more in case of a margin gap
        double first = wrap_period(-model.height(x), pair.reference.spacing);
        if (first <= 0) first += pair.reference.spacing;
        t = first / model.speed_scale();
        for (int hop = 0; hop < 2 && t < rho; ++hop) {
            Vec y = model.flow(x, t);
            int j = pair.reference.slice_of(y, 1e-7);
            if (j >= 0) {
                Vec snapped = y;
                snapped[dim - 1] = pair.reference.slice_heights[j];
                if (pair.reference.disc_of(snapped) >= 0) {
                    hit = true;
                    break;
                }
            }
            t += step;
        }
        if (!hit) {
            throw ConstructionError("section cover check failed at sample " +
                                    std::to_string(i));
        }
    }
    return pair;
}

ReturnResult poincare_return(const ProperSection& section, const Vec& x, bool forward) {
    const MappingTorusModel& model = *section.model;
    int j = section.slice_of(x);
    if (j < 0) throw DomainError("poincare_return: point is not on the section");

    double dir = forward ? 1.0 : -1.0;
    double step = section.return_time;
    Vec y = x;
    int slice = j;
    double total = 0.0;
    for (int hop = 0; hop < 4; ++hop) {
        y = model.flow(y, dir * step);
        total += step;
        slice = section.slice_after(slice, forward);
        // the return lands on a slice by construction; pin the height exactly
        y[model.torus_dim()] = section.slice_heights[slice];
        if (section.disc_of(y) >= 0) {
            ReturnResult r;
            r.point = y;
            r.time = dir * total;
            r.disc = section.disc_of(y);
            return r;
        }
        if (total + step > 2 * section.rho) break;
    }
    throw ConstructionError("poincare_return: no return within the 2 rho horizon");
}

FlowBoxCoords flow_box_coords(const ProperSection& section, int disc_id, const Vec& x) {
    const MappingTorusModel& model = *section.model;
    const TransverseDisc& d = section.disc(disc_id);
    const double c = model.roof_constant();
    const double s = model.speed_scale();
    double h_target = model.height(d.center);

    // candidate flow times to the slice, one per roof branch
    double base = wrap_period(model.height(x) - h_target, c) / s;
    double t = std::numeric_limits<double>::quiet_NaN();
    for (int shift = -1; shift <= 1; ++shift) {
        double cand = base + shift * c / s;
        if (std::abs(cand) <= 4 * section.rho + 1e-12) {
            t = cand;
            break;
        }
    }
    if (!std::isfinite(t)) {
        throw DomainError("flow_box_coords: point is outside the flow box");
    }

    // bisection on the signed height offset around the candidate
    double lo = t - 2 * model.wrap_period() * 1e-4, hi = t + 2 * model.wrap_period() * 1e-4;
    auto offset = [&](double tau) {
        return wrap_period(model.height(model.flow(x, -tau)) - h_target, c);
    };
    double flo = offset(lo), fhi = offset(hi);
    if (flo == 0.0) {
        hi = lo;
    } else if (fhi != 0.0) {
        if ((flo > 0) == (fhi > 0)) {
            // widen once; the height moves at speed s so the bracket is tight
            lo = t - 1e-2;
            hi = t + 1e-2;
            flo = offset(lo);
            fhi = offset(hi);
        }
        if ((flo > 0) == (fhi > 0)) {
            throw DomainError("flow_box_coords: failed to bracket the slice crossing");
        }
        while (hi - lo > 1e-12) {
            double mid = 0.5 * (lo + hi);
            double fm = offset(mid);
            if (fm == 0.0) {
                lo = hi = mid;
            } else if ((fm > 0) == (flo > 0)) {
                lo = mid;
                flo = fm;
            } else {
                hi = mid;
            }
        }
    }
    double tau = 0.5 * (lo + hi);
    Vec q = model.flow(x, -tau);
    q[model.torus_dim()] = h_target;

    // q must land inside the disc cell
    int m = section.cells_per_axis[d.slice];
    double w = 1.0 / m;
    for (int i = 0; i < model.torus_dim(); ++i) {
        double centre = d.center[i];
        if (std::abs(wrap_half(q[i] - centre)) > w / 2 + 1e-9) {
            throw DomainError("flow_box_coords: projection misses the disc");
        }
    }
    FlowBoxCoords out;
    out.base = q;
    out.time = tau;
    return out;
}

HolonomyResult holonomy(const ProperSection& section, const Vec& x, bool forward,
                        const Vec& y) {
    const MappingTorusModel& model = *section.model;
    ReturnResult target = poincare_return(section, x, forward);
    double h_target = model.height(target.point);

    int jy = section.slice_of(y);
    if (jy < 0) throw DomainError("holonomy: source point is not on the section");

    const double c = model.roof_constant();
    const double s = model.speed_scale();
    double base = wrap_period(h_target - model.height(y), c) / s;
    double t = std::numeric_limits<double>::quiet_NaN();
    for (int shift = -1; shift <= 1; ++shift) {
        double cand = base + shift * c / s;
        if (std::abs(cand) < section.rho) {
            t = cand;
            break;
        }
    }
    if (!std::isfinite(t)) {
        throw DomainError("holonomy: source point leaves the target flow box");
    }
    Vec z = model.flow(y, t);
    z[model.torus_dim()] = h_target;

    HolonomyResult r;
    r.point = z;
    r.time = t;
    r.slice = section.slice_of(z);
    r.disc = section.disc_of(z);
    return r;
}

LinearPoincareCocycle::LinearPoincareCocycle(const FlowModel& model, double rho)
    : model_(&model), rho_(rho) {}

double LinearPoincareCocycle::theta(const Vec& x, const Vec& v) const {
    Vec X = model_->vector_field(x);
    return v.dot(X) / X.squaredNorm();
}

Vec LinearPoincareCocycle::project_to_normal(const Vec& x, const Vec& v) const {
    Vec X = model_->vector_field(x);
    return v - theta(x, v) * X;
}

Mat LinearPoincareCocycle::normal_frame(const Vec& x) const {
    int n = model_->ambient_dim();
    int d = n - 1;
    Mat frame(n, d);
    int got = 0;
    for (int i = 0; i < n && got < d; ++i) {
        Vec cand = project_to_normal(x, Vec::Unit(n, i));
        for (int k = 0; k < got; ++k) cand -= cand.dot(frame.col(k)) * frame.col(k);
        double nrm = cand.norm();
        if (nrm > 1e-8) {
            frame.col(got++) = cand / nrm;
        }
    }
    if (got != d) throw DiagnosticError("normal_frame: degenerate projection");
    return fix_column_signs(frame);
}

Mat LinearPoincareCocycle::evaluate(const Vec& x, double t) const {
    Vec y = model_->flow(x, t);
    Mat d = model_->derivative(x, t);
    Mat nx = normal_frame(x);
    Mat ny = normal_frame(y);
    Mat out(dim(), dim());
    for (int i = 0; i < dim(); ++i) {
        Vec w = d * nx.col(i);
        out.col(i) = ny.transpose() * project_to_normal(y, w);
    }
    return out;
}

}  // namespace symflow
