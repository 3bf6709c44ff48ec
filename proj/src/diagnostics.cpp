#include "shadowblow/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <fmt/format.h>

#include "shadowblow/error.hpp"
#include "shadowblow/fit.hpp"
#include "shadowblow/similarity.hpp"

namespace shadowblow {

namespace {

FitResult to_fit(const LinearFit& line, double lo, double hi) {
    FitResult f;
    f.exponent = line.slope;
    f.prefactor = line.intercept;
    f.residual = line.rms;
    f.r_squared = line.r_squared;
    f.window_lo = lo;
    f.window_hi = hi;
    f.samples = line.samples;
    return f;
}

// Relative slack on window edges absorbing the overshoot of level crossings.
constexpr double kEdgeSlack = 1.05;

}  // namespace

ThetaStar theta_star(std::span<const TrajectoryRow> rows, double T_est, int per_decade) {
    ThetaStar out;
    std::vector<const TrajectoryRow*> usable;
    for (const auto& r : rows) {
        if (r.t < T_est) usable.push_back(&r);
    }
    if (usable.size() < 3) throw InsufficientSamplesError("theta_star needs rows before T_est");
    out.theta_star = usable.back()->theta;
    out.theta_min = out.theta_max = out.theta_star;
    for (const auto* r : usable) {
        out.theta_min = std::min(out.theta_min, r->theta);
        out.theta_max = std::max(out.theta_max, r->theta);
    }
    const double tau_last = T_est - usable.back()->t;
    std::vector<double> x, y;
    long last_bin = std::numeric_limits<long>::min();
    for (const auto* r : usable) {
        const double tau = T_est - r->t;
        if (tau < 10.0 * tau_last) continue;
        const double gap = std::abs(r->theta - out.theta_star);
        if (!(gap > 0.0)) continue;
        const long bin = static_cast<long>(std::floor(std::log10(tau) * per_decade));
        if (bin == last_bin) continue;
        last_bin = bin;
        x.push_back(std::log(tau));
        y.push_back(std::log(gap));
    }
    if (x.size() < 3) {
        out.note = "too few samples before the last decade";
        return out;
    }
    const LinearFit line = fit_line(x, y);
    out.fit = to_fit(line, std::exp(*std::min_element(x.begin(), x.end())), std::exp(*std::max_element(x.begin(), x.end())));
    out.eps_hat = line.slope;
    out.converged = out.eps_hat > 0.0;
    out.note = out.converged ? "converged" : "theta does not approach its last value as a power law";
    return out;
}

double intermediate_error(const RadialField& u, double t, double T_est, double theta_star, const ModelParams& params) {
    if (!(t < T_est)) throw DomainError("intermediate_error requires t < T_est");
    const double tau = T_est - t;
    const double beta = 1.0 / (params.p - 1.0);
    const double scale = std::sqrt(tau * std::abs(std::log(tau)));
    const double amp = std::pow(theta_star, -beta);
    const double wt = std::pow(tau, beta);
    double err = 0.0;
    const auto x = u.grid()->nodes();
    for (std::size_t i = 0; i < u.size(); ++i) {
        err = std::max(err, std::abs(wt * u[i] - amp * phi0(x[i] / scale, params.p)));
    }
    return err;
}

FitResult final_profile_check(const RadialField& u_final, double t_stop, double T_est, const ModelParams& params) {
    if (!(t_stop < T_est)) throw DomainError("final_profile_check requires t_stop < T_est");
    const double tau = T_est - t_stop;
    const double lo = params.K0 * std::sqrt(tau * std::abs(std::log(tau)));
    const double hi = std::min(params.eps0, 0.999);
    const double pm1 = params.p - 1.0;
    std::vector<double> X, Y;
    const auto x = u_final.grid()->nodes();
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i] < lo || x[i] > hi || !(u_final[i] > 0.0)) continue;
        X.push_back(std::log(pm1 * pm1 * x[i] * x[i] / (8.0 * params.p * std::abs(std::log(x[i])))));
        Y.push_back(std::log(u_final[i]));
    }
    if (X.size() < 3) throw WindowError(fmt::format("annulus [{:.4g}, {:.4g}] holds fewer than 3 nodes", lo, hi));
    return to_fit(fit_line(X, Y), lo, hi);
}

double lk_norm(const RadialField& u, double k, const ModelParams& params) {
    if (!(k > 0.0)) throw DomainError("k must be positive");
    return ball_power_integral(u, k, params.dim);
}

std::string_view to_string(LkRegime r) {
    switch (r) {
        case LkRegime::subcritical: return "subcritical";
        case LkRegime::supercritical: return "supercritical";
        case LkRegime::critical: return "critical";
    }
    return "unknown";
}

LkRegime lk_regime(double k, const ModelParams& params) {
    const double d = k / (params.p - 1.0) - 0.5 * params.dim;
    if (std::abs(d) < 1e-12) return LkRegime::critical;
    return d < 0.0 ? LkRegime::subcritical : LkRegime::supercritical;
}

LkFit fit_lk(std::span<const LkSample> samples, double k, double T_est, const ModelParams& params, LkRegime regime) {
    const LkRegime actual = lk_regime(k, params);
    if (actual != regime) {
        const char* item = actual == LkRegime::subcritical ? "(i) bounded norms"
                           : actual == LkRegime::supercritical ? "(ii) power-law growth"
                                                               : "(iii) logarithmic growth";
        throw RegimeMismatchError(fmt::format("k = {} is {}; the applicable item is {}", k, to_string(actual), item));
    }
    std::vector<const LkSample*> usable;
    for (const auto& s : samples) {
        if (s.t < T_est && s.norm > 0.0) usable.push_back(&s);
    }
    if (usable.size() < 2) throw InsufficientSamplesError("L^k fit needs samples before T_est");
    const double u_stop = usable.back()->sup_u;
    const double decades = regime == LkRegime::supercritical ? 3.0 : 1.0;
    const double u_hi = u_stop * std::pow(10.0, -0.5) * kEdgeSlack;
    const double u_lo = u_stop * std::pow(10.0, -0.5 - decades) / kEdgeSlack;

    LkFit out;
    out.regime = regime;
    out.k = k;
    const double N = params.dim;
    std::vector<double> X, Y;
    double tau_lo = INFINITY, tau_hi = 0.0;
    double ratio_min = INFINITY, ratio_max = 0.0;
    for (const auto* s : usable) {
        out.sup_norm = std::max(out.sup_norm, s->norm);
        if (s->sup_u < u_lo || s->sup_u > u_hi) continue;
        const double tau = T_est - s->t;
        const double L = std::abs(std::log(tau));
        tau_lo = std::min(tau_lo, tau);
        tau_hi = std::max(tau_hi, tau);
        if (regime == LkRegime::supercritical) {
            X.push_back(std::log(tau));
            Y.push_back(std::log(s->norm) - 0.5 * N * std::log(L));
        } else {
            X.push_back(std::log(L));
            Y.push_back(std::log(s->norm));
        }
        if (regime == LkRegime::critical) {
            out.last_ratio = s->norm / std::pow(L, 0.5 * N + 1.0);
            ratio_min = std::min(ratio_min, out.last_ratio);
            ratio_max = std::max(ratio_max, out.last_ratio);
        }
    }
    if (X.size() < 2) throw InsufficientSamplesError("fewer than two samples in the L^k window");
    out.fit = to_fit(fit_line(X, Y), tau_lo, tau_hi);
    switch (regime) {
        case LkRegime::subcritical:
            out.expected_exponent = 0.0;
            out.verdict = std::isfinite(out.sup_norm) && out.fit.exponent < 0.5;
            break;
        case LkRegime::supercritical:
            out.expected_exponent = 0.5 * N - k / (params.p - 1.0);
            out.verdict = std::abs(out.fit.exponent - out.expected_exponent) <= 0.15 * std::abs(out.expected_exponent);
            break;
        case LkRegime::critical:
            out.expected_exponent = 0.5 * N + 1.0;
            out.ratio_spread = ratio_max / ratio_min;
            out.verdict = ratio_min > 0.0 && out.ratio_spread <= 1.10;
            break;
    }
    return out;
}

FundamentalIntegral fundamental_integral(double a, double b, double n, double m) {
    if (!(a > 0.0 && a < b && b < 1.0)) throw DomainError("fundamental_integral requires 0 < a < b < 1");
    if (!(n >= 0.0)) throw DomainError("fundamental_integral requires n >= 0");
    if (!(m < 0.0)) throw DomainError("fundamental_integral requires m < 0");
    if (m == -1.0) throw DomainError("m = -1 is excluded");
    // s = e^{-v}: int v^n e^{-(m+1) v} dv over [-ln b, -ln a].
    const double va = -std::log(b), vb = -std::log(a);
    auto f = [n, m](double v) { return std::pow(v, n) * std::exp(-(m + 1.0) * v); };
    double err = 0.0;
    FundamentalIntegral out;
    out.value = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, va, vb, 20, 1e-15, &err);
    out.bound_ratio =
        out.value / (std::pow(-std::log(b), n) * std::pow(b, 1.0 + m) + std::pow(-std::log(a), n) * std::pow(a, 1.0 + m));
    return out;
}

std::vector<EnvelopeRecord> envelope_check(const StateHistory& history, const ModelParams& params) {
    std::vector<EnvelopeRecord> out;
    const double beta = 1.0 / (params.p - 1.0);
    const double pm1 = params.p - 1.0;
    auto profile = [&](double x) { return pm1 * pm1 * x * x / (8.0 * params.p * std::abs(std::log(x))); };
    for (const auto& e : history.entries) {
        const double tau = history.T_est - e.t;
        const double L = std::abs(std::log(tau));
        const RegionGeometry geo = region_geometry(e.t, history.T_est, params);
        const RadialField grad = gradient(e.U);
        const auto x = e.U.grid()->nodes();
        double p1 = 0.0, p2v = 0.0, p2g = 0.0, p3 = INFINITY;
        for (std::size_t i = 0; i < x.size(); ++i) {
            if (x[i] <= geo.p2_inner) {
                const double ref = std::pow(tau, -beta) * phi0(x[i] / std::sqrt(tau * L), params.p);
                p1 = std::max(p1, std::abs(e.U[i] - ref) * std::pow(tau, beta) * (1.0 + std::sqrt(L)));
            }
            if (x[i] >= geo.p2_inner && x[i] <= params.eps0 && x[i] < 1.0) {
                const double h = profile(x[i]);
                p2v = std::max(p2v, e.U[i] / (4.0 * std::pow(h, -beta)));
                p2g = std::max(p2g, std::abs(grad[i]) /
                                        (8.0 * params.C0 * std::pow(h, -beta - 0.5) / std::abs(std::log(x[i]))));
            }
            if (x[i] >= params.eps0) p3 = std::min(p3, e.U[i]);
        }
        out.push_back({"P1_profile_scaled", e.t, p1, params.A * params.A, p1 <= params.A * params.A});
        out.push_back({"P2_value_ratio", e.t, p2v, 1.0, p2v <= 1.0});
        out.push_back({"P2_gradient_ratio", e.t, p2g, 1.0, p2g <= 1.0});
        out.push_back({"P3_lower_bound", e.t, p3, 0.5, p3 >= 0.5});
    }
    return out;
}

}  // namespace shadowblow
