#include "shadowblow/shrinking_set.hpp"

#include <algorithm>
#include <cmath>

#include "detail/pchip.hpp"
#include <boost/math/tools/roots.hpp>
#include <fmt/format.h>

#include "shadowblow/error.hpp"

namespace shadowblow {

namespace {

using Pchip = boost::math::interpolators::pchip<std::vector<double>>;

Pchip field_spline(const RadialField& f) {
    return Pchip(std::vector<double>(f.grid()->nodes().begin(), f.grid()->nodes().end()),
                 std::vector<double>(f.values().begin(), f.values().end()), 0.0);
}

ClauseRecord record(std::string clause, std::string region, double at, double measured, double threshold) {
    ClauseRecord r;
    r.clause = std::move(clause);
    r.region = std::move(region);
    r.s_or_t = at;
    r.measured = measured;
    r.threshold = threshold;
    r.margin = threshold - measured;
    r.pass = measured <= threshold;
    return r;
}

}  // namespace

EntryTime t_of_x(double absx, double T_est, double K0) {
    absx = std::abs(absx);
    const double x_max = 0.25 * K0 * std::sqrt(std::exp(-1.0));
    if (!(absx > 0.0) || absx > x_max) {
        throw NoSolutionError(fmt::format("|x| = {:.6g} outside (0, {:.6g}] where t(x) is defined", absx, x_max));
    }
    // In terms of L = ln v the map is monotone on (-inf, -1).
    auto g = [&](double L) { return 0.25 * K0 * std::sqrt(std::exp(L) * -L) - absx; };
    double lo = -2.0;
    while (g(lo) > 0.0) lo *= 2.0;
    const double hi = -1.0;
    const auto [a, b] = boost::math::tools::bisect(
        g, lo, hi, [](double l, double r) { return std::abs(r - l) <= 1e-15 * std::max(1.0, std::abs(l)); });
    const double L = 0.5 * (a + b);
    EntryTime out;
    out.varrho = std::exp(L);
    out.t_x = T_est - out.varrho;
    return out;
}

RegionGeometry region_geometry(double t, double T_est, const ModelParams& params) {
    if (!(t < T_est)) throw DomainError("region geometry requires t < T_est");
    const double tau = T_est - t;
    RegionGeometry g;
    g.t = t;
    g.T_est = T_est;
    g.p1_outer = params.K0 * std::sqrt(tau * std::abs(std::log(tau)));
    g.p2_inner = 0.25 * g.p1_outer;
    g.p2_outer = params.eps0;
    g.p3_inner = 0.25 * params.eps0;
    return g;
}

HistoryEntry make_history_entry(const RadialField& U, double t, double theta, double T_est,
                                const ModelParams& params, const std::vector<double>& y_uniform) {
    HistoryEntry e;
    e.t = t;
    e.theta = theta;
    e.theta_prime = theta_prime(U, params);
    e.U = U;
    e.frame = to_similarity(U, t, T_est, params.p, y_uniform);
    set_theta(e.frame, theta, e.theta_prime);
    build_w_q(e.frame, params);
    const auto dq = q_derivative(e.frame, params);
    e.decomposition = decompose(e.frame.y, e.frame.q, dq, e.frame.s, params);
    return e;
}

StateHistory build_history(const std::vector<Snapshot>& snapshots, double T_est, const ModelParams& params) {
    if (snapshots.empty()) throw InsufficientSamplesError("no snapshots");
    StateHistory h;
    h.T_est = T_est;
    h.U0 = U_from_u(snapshots.front().u, snapshots.front().theta, params.p);
    double t_last = -1.0;
    for (const auto& sn : snapshots) {
        if (sn.t < T_est) t_last = sn.t;
    }
    if (t_last < 0.0) throw InsufficientSamplesError("no snapshot before T_est");
    const auto y_uniform = uniform_y_grid(frame_y_max(-std::log(T_est - t_last), params.K0));
    for (const auto& sn : snapshots) {
        if (!(sn.t < T_est)) continue;
        h.entries.push_back(
            make_history_entry(U_from_u(sn.u, sn.theta, params.p), sn.t, sn.theta, T_est, params, y_uniform));
    }
    return h;
}

double rescaled_U(const StateHistory& history, double x, double xi, double tau, const ModelParams& params) {
    const EntryTime et = t_of_x(x, history.T_est, params.K0);
    const double t = et.varrho * tau + et.t_x;
    const auto& es = history.entries;
    if (es.empty() || t < es.front().t || t > es.back().t) {
        throw UnavailableSampleError(fmt::format("t = {:.6g} outside the stored history", t));
    }
    const double radius = std::abs(x + xi * std::sqrt(et.varrho));
    if (radius > history.U0.grid()->radius()) throw UnavailableSampleError("x + xi sqrt(rho) outside the ball");
    std::size_t k = 0;
    while (k + 1 < es.size() && es[k + 1].t < t) ++k;
    const double scale = std::pow(et.varrho, 1.0 / (params.p - 1.0));
    const double a = field_spline(es[k].U)(radius);
    if (k + 1 >= es.size() || es[k].t == t) return scale * a;
    const double b = field_spline(es[k + 1].U)(radius);
    const double lambda = (t - es[k].t) / (es[k + 1].t - es[k].t);
    return scale * ((1.0 - lambda) * a + lambda * b);
}

bool ShrinkingSetReport::pass() const {
    return std::all_of(records.begin(), records.end(), [](const ClauseRecord& r) { return r.pass; });
}

double ShrinkingSetReport::min_margin() const {
    double m = INFINITY;
    for (const auto& r : records) m = std::min(m, r.margin);
    return m;
}

std::vector<ClauseRecord> clause_p1(const SpectralDecomposition& d, const ModelParams& params) {
    const double s = d.s;
    const double A = params.A;
    const double s2 = s * s;
    double q1 = 0.0, q2 = 0.0;
    for (double v : d.q1) q1 = std::max(q1, std::abs(v));
    for (const auto& row : d.q2) {
        for (double v : row) q2 = std::max(q2, std::abs(v));
    }
    return {
        record("q0", "P1", s, std::abs(d.q0), A / s2),
        record("q1", "P1", s, q1, A / s2),
        record("q2", "P1", s, q2, A * A * std::log(s) / s2),
        record("q_minus", "P1", s, d.q_minus_weighted(), A * A / s2),
        record("grad_perp", "P1", s, d.grad_perp_weighted(), A / s2),
        record("q_e", "P1", s, d.q_e_sup(), A * A / std::sqrt(s)),
    };
}

ShrinkingSetReport check_membership(const StateHistory& history, std::size_t index, const ModelParams& params,
                                    const MembershipOptions& options) {
    if (index >= history.entries.size()) throw UnavailableSampleError("history index out of range");
    const HistoryEntry& e = history.entries[index];
    ShrinkingSetReport rep;
    rep.t = e.t;
    rep.s = e.frame.s;
    rep.records = clause_p1(e.decomposition, params);

    const RegionGeometry geo = region_geometry(e.t, history.T_est, params);
    const double R = e.U.grid()->radius();
    const double beta = 1.0 / (params.p - 1.0);
    const RadialField grad = gradient(e.U);

    // Item (ii) on a logarithmic lattice of |x| and a uniform lattice of xi.
    double worst_value = 0.0, worst_grad = 0.0;
    std::size_t samples = 0;
    if (geo.p2_inner < geo.p2_outer) {
        const Pchip Ui = field_spline(e.U);
        const Pchip Gi = field_spline(grad);
        const double decades = std::log10(geo.p2_outer / geo.p2_inner);
        const int nx = std::max(2, static_cast<int>(std::ceil(decades * options.x_per_decade)) + 1);
        for (int k = 0; k < nx; ++k) {
            const double x = geo.p2_inner * std::pow(10.0, decades * k / (nx - 1));
            const EntryTime et = t_of_x(x, history.T_est, params.K0);
            const double tau = (e.t - et.t_x) / et.varrho;
            const double target = hat_U(tau, params.p, params.K0);
            const double log_rho = std::abs(std::log(et.varrho));
            const double a = params.alpha0 * options.xi_multiplier * std::sqrt(log_rho);
            const double root = std::sqrt(et.varrho);
            for (int j = 0; j < options.xi_count; ++j) {
                const double xi = options.xi_count == 1 ? 0.0 : -a + 2.0 * a * j / (options.xi_count - 1);
                const double radius = std::abs(x + xi * root);
                if (radius > R) continue;
                const double value = std::pow(et.varrho, beta) * Ui(radius);
                const double g = std::pow(et.varrho, beta + 0.5) * std::abs(Gi(radius));
                worst_value = std::max(worst_value, std::abs(value - target));
                worst_grad = std::max(worst_grad, g * std::sqrt(log_rho));
                ++samples;
            }
        }
    }
    const std::string p2 = samples > 0 ? "P2" : "P2 (empty)";
    rep.records.push_back(record("U_rescaled", p2, e.t, worst_value, params.delta0));
    rep.records.push_back(record("grad_xi_U", p2, e.t, worst_grad, params.C0));

    // Item (iii) on the mesh nodes with |x| >= eps0/4.
    const RadialField heat = heat_semigroup(history.U0, e.t, params.dim, options.heat_max_step);
    const RadialField heat_grad = gradient(heat);
    double dv = 0.0, dg = 0.0;
    for (std::size_t i = 0; i < e.U.size(); ++i) {
        if (!geo.in_p3((*e.U.grid())[i])) continue;
        dv = std::max(dv, std::abs(e.U[i] - history.U0[i]));
        dg = std::max(dg, std::abs(grad[i] - heat_grad[i]));
    }
    rep.records.push_back(record("U_minus_U0", "P3", e.t, dv, params.eta0));
    rep.records.push_back(record("grad_U_minus_heat", "P3", e.t, dg, params.eta0));
    return rep;
}

ShrinkingSetReport check_membership(const StateHistory& history, double t, const ModelParams& params,
                                    const MembershipOptions& options) {
    for (std::size_t i = 0; i < history.entries.size(); ++i) {
        const double ti = history.entries[i].t;
        if (std::abs(ti - t) <= std::max(1e-15, 1e-12 * std::abs(t))) {
            return check_membership(history, i, params, options);
        }
    }
    throw UnavailableSampleError(fmt::format("no stored frame at t = {:.17g}", t));
}

GrowthBoundReport growth_bound_check(std::span<const double> y, std::span<const double> q, double s,
                                     const ModelParams& params) {
    GrowthBoundReport rep;
    rep.s = s;
    const double A2 = params.A * params.A;
    const double core = params.K0 * std::sqrt(s);
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double a = std::abs(q[i]);
        rep.C_global = std::max(rep.C_global, a * std::sqrt(s) / A2);
        rep.C_weighted =
            std::max(rep.C_weighted, a * s * s / (A2 * std::log(s) * (1.0 + y[i] * y[i] * y[i])));
        if (y[i] <= core) rep.C_core = std::max(rep.C_core, a * std::sqrt(s) / params.A);
    }
    return rep;
}

ModeResidualReport mode_ode_residuals(const std::vector<ModeSample>& series, const ModelParams& params) {
    if (series.size() < 5) throw InsufficientSamplesError("mode residuals need at least five samples");
    ModeResidualReport rep;
    rep.samples = series.size();
    for (std::size_t k = 1; k + 1 < series.size(); ++k) {
        const auto& a = series[k - 1];
        const auto& b = series[k];
        const auto& c = series[k + 1];
        const double h1 = b.s - a.s, h2 = c.s - b.s;
        auto deriv = [&](double fa, double fb, double fc) {
            return (-h2 / (h1 * (h1 + h2))) * fa + ((h2 - h1) / (h1 * h2)) * fb + (h1 / (h2 * (h1 + h2))) * fc;
        };
        const double s = b.s;
        rep.q0_scaled = std::max(rep.q0_scaled, std::abs(deriv(a.q0, b.q0, c.q0) - b.q0) * s * s);
        for (std::size_t i = 0; i < b.q1.size(); ++i) {
            rep.q1_scaled =
                std::max(rep.q1_scaled, std::abs(deriv(a.q1[i], b.q1[i], c.q1[i]) - 0.5 * b.q1[i]) * s * s);
        }
        for (std::size_t i = 0; i < b.q2.size(); ++i) {
            for (std::size_t j = 0; j < b.q2[i].size(); ++j) {
                const double d = deriv(a.q2[i][j], b.q2[i][j], c.q2[i][j]);
                rep.q2_scaled =
                    std::max(rep.q2_scaled, std::abs(d + 2.0 * b.q2[i][j] / s) * s * s * s / params.A);
            }
        }
    }
    return rep;
}

}  // namespace shadowblow
