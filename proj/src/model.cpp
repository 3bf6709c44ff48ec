#include "shadowblow/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "shadowblow/error.hpp"

namespace shadowblow {

namespace {

void require(bool ok, const char* field, const std::string& what) {
    if (!ok) throw ValidationError(field, what);
}

void require_positive(double v, const char* field) {
    require(std::isfinite(v), field, "must be finite");
    require(v > 0.0, field, "must be positive");
}

// Value with first and second derivative, enough to differentiate chi0 twice.
struct Jet2 {
    double v, d, dd;
};

Jet2 operator*(Jet2 a, Jet2 b) {
    return {a.v * b.v, a.d * b.v + a.v * b.d, a.dd * b.v + 2.0 * a.d * b.d + a.v * b.dd};
}

Jet2 operator+(Jet2 a, Jet2 b) { return {a.v + b.v, a.d + b.d, a.dd + b.dd}; }

Jet2 reciprocal(Jet2 a) {
    const double inv = 1.0 / a.v;
    return {inv, -a.d * inv * inv, 2.0 * a.d * a.d * inv * inv * inv - a.dd * inv * inv};
}

Jet2 exp(Jet2 a) {
    const double e = std::exp(a.v);
    return {e, e * a.d, e * (a.dd + a.d * a.d)};
}

// exp(-1/u) for u > 0, zero otherwise.
Jet2 bump_edge(Jet2 u) {
    if (u.v <= 0.0) return {0.0, 0.0, 0.0};
    Jet2 minus_inv = reciprocal(u);
    minus_inv = {-minus_inv.v, -minus_inv.d, -minus_inv.dd};
    return exp(minus_inv);
}

Jet2 chi0_jet(double x) {
    if (x <= 1.0) return {1.0, 0.0, 0.0};
    if (x >= 2.0) return {0.0, 0.0, 0.0};
    const Jet2 left = bump_edge({2.0 - x, -1.0, 0.0});
    const Jet2 right = bump_edge({x - 1.0, 1.0, 0.0});
    return left * reciprocal(left + right);
}

constexpr double kCriticalTolerance = 1e-12;

}  // namespace

std::string_view to_string(Criticality c) {
    switch (c) {
        case Criticality::subcritical: return "subcritical";
        case Criticality::supercritical: return "supercritical";
        case Criticality::excluded_critical: return "excluded-critical";
    }
    return "unknown";
}

void validate(const ModelParams& params) {
    require(std::isfinite(params.p), "p", "must be finite");
    require(params.p > 1.0, "p", "must exceed 1");
    require_positive(params.r, "r");
    require_positive(params.gamma, "gamma");
    require(params.dim >= 1, "dim", "must be at least 1");
    require_positive(params.radius, "radius");
    require_positive(params.K0, "K0");
    require_positive(params.A, "A");
    require_positive(params.delta0, "delta0");
    require_positive(params.C0, "C0");
    require_positive(params.eta0, "eta0");
    require_positive(params.eps0, "eps0");
    require_positive(params.alpha0, "alpha0");
    require_positive(params.M0, "M0");
    require_positive(params.T, "T");
    require(params.T < 1.0, "T", "must be below 1");
}

TuringCheck check_turing(const ModelParams& params) {
    validate(params);
    const double pm1 = params.p - 1.0;
    const double margin = 1.0 - params.r * params.gamma / pm1;
    TuringCheck out;
    if (std::abs(margin) <= kCriticalTolerance) {
        out.cls = Criticality::excluded_critical;
    } else {
        out.cls = margin > 0.0 ? Criticality::subcritical : Criticality::supercritical;
    }
    out.valid = params.r / pm1 < 0.5 * params.dim && out.cls != Criticality::excluded_critical;
    return out;
}

double theta_U_exponent(const ModelParams& params) {
    const double margin = 1.0 - params.r * params.gamma / (params.p - 1.0);
    if (std::abs(margin) <= kCriticalTolerance) {
        throw CriticalExponentError("gamma*r = p-1 is the excluded critical case");
    }
    return params.gamma / margin;
}

double kappa(double p) { return std::pow(p - 1.0, -1.0 / (p - 1.0)); }

double phi0(double z, double p) {
    const double pm1 = p - 1.0;
    return std::pow(pm1 + pm1 * pm1 * z * z / (4.0 * p), -1.0 / pm1);
}

ProfileValue phi_with_derivatives(double y, double s, double p, int dim) {
    if (!(s > 1.0)) throw DomainError("phi requires s > 1");
    const double pm1 = p - 1.0;
    const double beta = 1.0 / pm1;
    const double a = pm1 * pm1 / (4.0 * p);
    const double c = kappa(p) * dim / (2.0 * p);
    const double bracket = pm1 + a * y * y / s;
    const double b1 = std::pow(bracket, -beta - 1.0);
    const double b2 = b1 / bracket;

    ProfileValue out;
    out.value = b1 * bracket + c / s;
    out.ds = beta * a * y * y / (s * s) * b1 - c / (s * s);
    out.dr = -beta * b1 * 2.0 * a * y / s;
    const double g = 2.0 * a * y / s;
    out.laplacian = -beta * (2.0 * a / s) * dim * b1 + beta * (beta + 1.0) * g * g * b2;
    return out;
}

double phi(double y, double s, double p, int dim) {
    if (!(s > 1.0)) throw DomainError("phi requires s > 1");
    return phi0(y / std::sqrt(s), p) + kappa(p) * dim / (2.0 * p * s);
}

double hat_U(double tau, double p, double K0) {
    const double pm1 = p - 1.0;
    const double bracket = pm1 * (1.0 - tau) + pm1 * pm1 * K0 * K0 / (64.0 * p);
    if (!(bracket > 0.0)) throw DomainError("hat_U bracket is non-positive");
    return std::pow(bracket, -1.0 / pm1);
}

namespace {

double singular_branch(double x, double p) {
    const double pm1 = p - 1.0;
    return std::pow(pm1 * pm1 * x * x / (8.0 * p * std::abs(std::log(x))), -1.0 / pm1);
}

double singular_branch_slope(double x, double p) {
    const double beta = 1.0 / (p - 1.0);
    return singular_branch(x, p) * (-beta) * (2.0 / x - 1.0 / (x * std::log(x)));
}

}  // namespace

double H_star(double absx, double p, double boundary_distance) {
    absx = std::abs(absx);
    if (absx == 0.0) throw DomainError("H_star is singular at x = 0");
    const double a = std::min(0.25 * boundary_distance, 0.5);
    const double b = 0.5 * boundary_distance;
    if (absx <= a) return singular_branch(absx, p);
    if (absx >= b) return 1.0;

    const double fa = singular_branch(a, p);
    const double fb = 1.0;
    const double h = b - a;
    double ma = singular_branch_slope(a, p);
    const double mb = 0.0;
    // Fritsch-Carlson limiter; inactive unless the end slope is very steep.
    const double secant = (fb - fa) / h;
    if (secant != 0.0) {
        const double alpha = ma / secant;
        if (alpha > 3.0) ma = 3.0 * secant;
    }
    const double t = (absx - a) / h;
    const double t2 = t * t;
    const double t3 = t2 * t;
    return (2 * t3 - 3 * t2 + 1) * fa + (t3 - 2 * t2 + t) * h * ma + (-2 * t3 + 3 * t2) * fb +
           (t3 - t2) * h * mb;
}

double chi0(double x) { return chi0_jet(std::abs(x)).v; }
double chi0_prime(double x) { return chi0_jet(x).d; }
double chi0_second(double x) { return chi0_jet(x).dd; }

double chi1(double absx, double T) {
    return chi0(std::abs(absx) / (std::sqrt(T) * std::abs(std::log(T))));
}

double psi_M0(double absy, double s, double M0) {
    return chi0(M0 * std::abs(absy) * std::exp(-0.5 * s));
}

double chi(double absy, double s, double K0) {
    return chi0(std::abs(absy) / (K0 * std::sqrt(s)));
}

}  // namespace shadowblow
