#include "shadowblow/blowup_data.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "shadowblow/error.hpp"
#include "shadowblow/hermite.hpp"

namespace shadowblow {

namespace {

double norm(std::span<const double> v) {
    double a = 0.0;
    for (double x : v) a += x * x;
    return std::sqrt(a);
}

double dot_d1(const InitialDataSpec& spec, std::span<const double> z) {
    double a = 0.0;
    for (std::size_t i = 0; i < spec.d1.size() && i < z.size(); ++i) a += spec.d1[i] * z[i];
    return a;
}

}  // namespace

void validate(const InitialDataSpec& spec) {
    validate(spec.params);
    if (!spec.d1.empty() && static_cast<int>(spec.d1.size()) != spec.params.dim) {
        throw ValidationError("d1", "length must equal dim");
    }
    if (!(std::abs(spec.d0) <= 2.0)) throw ValidationError("d0", "must lie in [-2, 2]");
    for (double v : spec.d1) {
        if (!(std::abs(v) <= 2.0)) throw ValidationError("d1", "components must lie in [-2, 2]");
    }
}

double initial_value(const InitialDataSpec& spec, std::span<const double> x) {
    const ModelParams& P = spec.params;
    const double T = P.T;
    const double s0 = -std::log(T);
    const double ax = norm(x);
    const double c1 = chi1(ax, T);
    double out = 0.0;
    if (c1 < 1.0) out += H_star(ax, P.p, P.radius) * (1.0 - c1);
    if (c1 > 0.0) {
        const double zscale = 1.0 / std::sqrt(T * s0);
        std::vector<double> z(x.begin(), x.end());
        for (double& v : z) v *= zscale;
        const double bump = chi0(ax * zscale / (P.K0 / 32.0));
        const double inner = phi(ax / std::sqrt(T), s0, P.p, P.dim) + (spec.d0 + dot_d1(spec, z)) * bump;
        out += std::pow(T, -1.0 / (P.p - 1.0)) * inner * c1;
    }
    return out;
}

RadialField build_initial(const InitialDataSpec& spec, const GridPtr& grid) {
    validate(spec);
    std::vector<double> x(static_cast<std::size_t>(spec.params.dim), 0.0);
    std::vector<double> v(grid->size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        x[0] = (*grid)[i];
        v[i] = initial_value(spec, x);
        if (!(v[i] >= 0.0)) {
            throw ConstructionError(fmt::format("initial data negative at node {} (radius {:.6g}): {:.6g}", i,
                                                (*grid)[i], v[i]));
        }
    }
    return RadialField(grid, std::move(v));
}

double initial_W(const InitialDataSpec& spec, std::span<const double> y0) {
    const ModelParams& P = spec.params;
    const double T = P.T;
    const double s0 = -std::log(T);
    const double ay = norm(y0);
    const double ax = ay * std::sqrt(T);
    if (ax > P.radius) return 0.0;
    const double c1 = chi1(ax, T);
    double out = 0.0;
    if (c1 < 1.0) out += std::pow(T, 1.0 / (P.p - 1.0)) * H_star(ax, P.p, P.radius) * (1.0 - c1);
    if (c1 > 0.0) {
        const double zscale = 1.0 / std::sqrt(s0);
        std::vector<double> z(y0.begin(), y0.end());
        for (double& v : z) v *= zscale;
        const double bump = chi0(ay * zscale / (P.K0 / 32.0));
        out += (phi(ay, s0, P.p, P.dim) + (spec.d0 + dot_d1(spec, z)) * bump) * c1;
    }
    return out;
}

InitialForms initial_similarity_forms(const InitialDataSpec& spec, const GridPtr& grid, double tolerance) {
    validate(spec);
    const ModelParams& P = spec.params;
    const double T = P.T;
    InitialForms out;
    out.s0 = -std::log(T);
    const RadialField U0 = build_initial(spec, grid);
    const auto y_uniform = uniform_y_grid(frame_y_max(out.s0, P.K0));
    const SimilarityFrame transformed = to_similarity(U0, 0.0, T, P.p, y_uniform);

    SimilarityFrame& f = out.frame;
    f = transformed;
    std::vector<double> point(static_cast<std::size_t>(P.dim), 0.0);
    double max_w = 0.0, max_diff = 0.0;
    for (std::size_t i = 0; i < f.y.size(); ++i) {
        point[0] = f.y[i];
        f.W[i] = initial_W(spec, point);
        max_w = std::max(max_w, std::abs(f.W[i]));
        max_diff = std::max(max_diff, std::abs(f.W[i] - transformed.W[i]));
    }
    build_w_q(f, P);
    out.consistency_error = max_w > 0.0 ? max_diff / max_w : max_diff;
    if (out.consistency_error > tolerance) {
        throw ConsistencyError(fmt::format("closed-form and transformed W differ by {:.3e} (relative)",
                                           out.consistency_error));
    }
    return out;
}

namespace {

// Gamma is defined for every (d0, d1); only the admissible box is validated.
GammaValue gamma_eval(const InitialDataSpec& spec) {
    const ModelParams& params = spec.params;
    const double s0 = -std::log(params.T);
    const int N = params.dim;
    const PointFunction q = [&](std::span<const double> y) {
        const double w = initial_W(spec, y) * psi_M0(norm(y), s0, params.M0);
        return w - phi(norm(y), s0, params.p, N);
    };
    GammaValue out;
    std::vector<int> beta(static_cast<std::size_t>(N), 0);
    out.q0 = project_beta(q, beta, s0, params.K0, N);
    for (int i = 0; i < N; ++i) {
        beta.assign(static_cast<std::size_t>(N), 0);
        beta[static_cast<std::size_t>(i)] = 1;
        out.q1.push_back(project_beta(q, beta, s0, params.K0, N));
    }
    return out;
}

}  // namespace

GammaValue gamma_map(double d0, const std::vector<double>& d1, const ModelParams& params) {
    InitialDataSpec spec{d0, d1, params};
    validate(spec);
    return gamma_eval(spec);
}

GammaBox gamma_box(const ModelParams& params) {
    const double s0 = -std::log(params.T);
    const double bound = params.A / (s0 * s0);
    const auto n = static_cast<std::size_t>(params.dim);
    const std::vector<double> zero(n, 0.0);
    std::vector<double> unit(n, 0.0);
    unit[0] = 1.0;
    const GammaValue g0 = gamma_map(0.0, zero, params);
    const GammaValue gd0 = gamma_map(1.0, zero, params);
    const GammaValue gd1 = gamma_map(0.0, unit, params);
    const double slope0 = gd0.q0 - g0.q0;
    const double slope1 = gd1.q1[0] - g0.q1[0];
    if (slope0 == 0.0 || slope1 == 0.0) throw ConstructionError("Gamma is degenerate");
    GammaBox box;
    box.d0_lo = (-bound - g0.q0) / slope0;
    box.d0_hi = (bound - g0.q0) / slope0;
    if (box.d0_lo > box.d0_hi) std::swap(box.d0_lo, box.d0_hi);
    box.d1_half_width = bound / std::abs(slope1);
    validate(params);
    const double lo = gamma_eval({box.d0_lo, zero, params}).q0;
    const double hi = gamma_eval({box.d0_hi, zero, params}).q0;
    box.encloses_zero = lo < 0.0 && hi > 0.0;
    box.inside_admissible =
        std::max(std::abs(box.d0_lo), std::abs(box.d0_hi)) <= 2.0 && box.d1_half_width <= 2.0;
    return box;
}

}  // namespace shadowblow
