#include "shadowblow/similarity.hpp"

#include <algorithm>
#include <cmath>

#include "detail/pchip.hpp"

#include "shadowblow/error.hpp"
#include "shadowblow/fit.hpp"

namespace shadowblow {

namespace {

using Pchip = boost::math::interpolators::pchip<std::vector<double>>;

Pchip make_pchip(const RadialField& f) {
    std::vector<double> x(f.grid()->nodes().begin(), f.grid()->nodes().end());
    std::vector<double> v(f.values().begin(), f.values().end());
    // Radial symmetry at 0; the right end keeps the default one-sided slope.
    return Pchip(std::move(x), std::move(v), 0.0);
}

RadialField scaled(const RadialField& f, double factor) {
    std::vector<double> v(f.values().begin(), f.values().end());
    for (double& x : v) x *= factor;
    return RadialField(f.grid(), std::move(v));
}

}  // namespace

RadialField U_from_u(const RadialField& u, double theta, double p) {
    return scaled(u, std::pow(theta, 1.0 / (p - 1.0)));
}

RadialField u_from_U(const RadialField& U, double theta, double p) {
    return scaled(U, std::pow(theta, -1.0 / (p - 1.0)));
}

std::vector<double> uniform_y_grid(double y_max, std::size_t count) {
    if (!(y_max > 0.0) || count < 2) throw ValidationError("y_grid", "needs y_max > 0 and two nodes");
    std::vector<double> y(count);
    const double h = y_max / static_cast<double>(count - 1);
    for (std::size_t i = 0; i < count; ++i) y[i] = h * static_cast<double>(i);
    y.back() = y_max;
    return y;
}

double frame_y_max(double s_max, double K0) { return std::max(2.0 * K0 * std::sqrt(s_max), 20.0); }

SimilarityFrame to_similarity(const RadialField& U, double t, double T_est, double p,
                              const std::vector<double>& y_uniform) {
    if (!(t < T_est)) throw DomainError("to_similarity requires t < T_est");
    const double tau = T_est - t;
    const double root = std::sqrt(tau);
    const double w_scale = std::pow(tau, 1.0 / (p - 1.0));
    const double g_scale = w_scale * root;
    const RadialField grad = gradient(U);
    const Pchip Ui = make_pchip(U);
    const Pchip Gi = make_pchip(grad);
    const double R = U.grid()->radius();

    SimilarityFrame f;
    f.t = t;
    f.T_est = T_est;
    f.s = -std::log(tau);
    f.uniform_count = y_uniform.size();
    const double y_max = y_uniform.back();
    for (double y : y_uniform) {
        const double x = y * root;
        const bool in = x <= R;
        f.y.push_back(y);
        f.inside.push_back(in ? 1 : 0);
        f.W.push_back(in ? w_scale * Ui(x) : 0.0);
        f.dW.push_back(in ? g_scale * Gi(x) : 0.0);
    }
    const auto nodes = U.grid()->nodes();
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const double y = nodes[i] / root;
        if (y <= y_max) continue;
        f.y.push_back(y);
        f.inside.push_back(1);
        f.W.push_back(w_scale * U[i]);
        f.dW.push_back(g_scale * grad[i]);
    }
    return f;
}

void set_theta(SimilarityFrame& frame, double theta, double theta_prime) {
    frame.theta_bar = theta;
    frame.theta_bar_prime = theta_prime * std::exp(-frame.s);
}

void build_w_q(SimilarityFrame& frame, const ModelParams& params) {
    const std::size_t n = frame.y.size();
    frame.w.assign(n, 0.0);
    frame.q.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double y = frame.y[i];
        if (frame.inside[i]) frame.w[i] = frame.W[i] * psi_M0(y, frame.s, params.M0);
        frame.q[i] = frame.w[i] - phi(y, frame.s, params.p, params.dim);
    }
}

std::vector<double> q_derivative(const SimilarityFrame& frame, const ModelParams& params) {
    const std::size_t n = frame.y.size();
    std::vector<double> dq(n);
    const double e = std::exp(-0.5 * frame.s);
    for (std::size_t i = 0; i < n; ++i) {
        const double y = frame.y[i];
        double v = -phi_with_derivatives(y, frame.s, params.p, params.dim).dr;
        if (frame.inside[i]) {
            const double z = params.M0 * y * e;
            v += frame.dW[i] * chi0(z) + frame.W[i] * chi0_prime(z) * params.M0 * e;
        }
        dq[i] = v;
    }
    return dq;
}

double potential_V(double y, double s, double p, int dim) {
    return p * (std::pow(phi(y, s, p, dim), p - 1.0) - 1.0 / (p - 1.0));
}

double nonlinear_B(double q, double y, double s, double p, int dim) {
    const double ph = phi(y, s, p, dim);
    const double base = q + ph;
    if (base < 0.0 && p != std::floor(p)) throw DomainError("q + phi < 0 with non-integer p");
    return std::pow(base, p) - std::pow(ph, p) - p * std::pow(ph, p - 1.0) * q;
}

double remainder_R(double y, double s, double p, int dim) {
    const ProfileValue f = phi_with_derivatives(y, s, p, dim);
    return -f.ds + f.laplacian - 0.5 * y * f.dr - f.value / (p - 1.0) + std::pow(f.value, p);
}

std::vector<double> F_term(const SimilarityFrame& frame, const ModelParams& params) {
    const std::size_t n = frame.y.size();
    std::vector<double> F(n, 0.0);
    const double e = std::exp(-0.5 * frame.s);
    const double p = params.p;
    for (std::size_t i = 0; i < n; ++i) {
        if (!frame.inside[i]) continue;
        const double y = frame.y[i];
        const double z = params.M0 * y * e;
        const double psi = chi0(z);
        const double d1 = chi0_prime(z);
        const double d2 = chi0_second(z);
        const double grad_psi = d1 * params.M0 * e;
        const double ds_psi = -0.5 * z * d1;
        double lap_psi = d2 * params.M0 * params.M0 * e * e;
        if (y > 0.0) lap_psi += (params.dim - 1) / y * grad_psi;
        const double W = frame.W[i];
        const double w = W * psi;
        F[i] = W * (ds_psi - lap_psi + 0.5 * y * grad_psi) - 2.0 * grad_psi * frame.dW[i] +
               psi * std::pow(W, p) - std::pow(w, p);
    }
    return F;
}

std::vector<double> G_term(const SimilarityFrame& frame, const ModelParams& params) {
    if (frame.w.size() != frame.y.size()) throw Error("G_term needs w and q; call build_w_q first");
    std::vector<double> G = F_term(frame, params);
    const double factor =
        frame.theta_bar_prime / ((params.p - 1.0) * frame.theta_bar) - std::exp(-frame.s);
    for (std::size_t i = 0; i < G.size(); ++i) {
        const double ph = phi(frame.y[i], frame.s, params.p, params.dim);
        G[i] += factor * (frame.q[i] + ph);
    }
    return G;
}

TermBoundReport verify_term_bounds(const SimilarityFrame& frame, const ModelParams& params) {
    if (frame.q.size() != frame.y.size()) throw Error("verify_term_bounds needs w and q; call build_w_q first");
    const double s = frame.s;
    const double p = params.p;
    const int N = params.dim;
    TermBoundReport rep;
    rep.s = s;
    const double core = params.K0 * std::sqrt(s);
    for (std::size_t i = 0; i < frame.y.size(); ++i) {
        const double y = frame.y[i];
        const double V = potential_V(y, s, p, N);
        rep.sup_V = std::max(rep.sup_V, std::abs(V));
        const double y2 = y * y;
        rep.V_expansion_scaled =
            std::max(rep.V_expansion_scaled, std::abs(V + (y2 - 2.0 * N) / (4.0 * s)) * s * s / (1.0 + y2 * y2));
        const double q = frame.q[i];
        const double c = chi(y, s, params.K0);
        if (c > 0.0 && std::abs(q) > 1e-12) {
            const double B = nonlinear_B(q, y, s, p, N);
            rep.B_quadratic_ratio = std::max(rep.B_quadratic_ratio, c * std::abs(B) / (q * q));
        }
        if (y <= core) rep.R_scaled = std::max(rep.R_scaled, std::abs(remainder_R(y, s, p, N)) * s);
    }
    rep.R_c1 = s * s * remainder_R(0.0, s, p, N);
    for (double v : F_term(frame, params)) rep.F_sup = std::max(rep.F_sup, std::abs(v));
    for (double v : G_term(frame, params)) rep.G_sup = std::max(rep.G_sup, std::abs(v));
    return rep;
}

GDecayFit fit_G_decay(const std::vector<TermBoundReport>& reports) {
    std::vector<double> s, lg;
    for (const auto& r : reports) {
        if (r.G_sup > 0.0) {
            s.push_back(r.s);
            lg.push_back(std::log(r.G_sup));
        }
    }
    if (s.size() < 2) throw FitUnavailableError("G decay fit needs two frames with nonzero G");
    const LinearFit line = fit_line(s, lg);
    GDecayFit out;
    out.slope = line.slope;
    out.eta = -line.slope;
    out.r_squared = line.r_squared;
    for (const auto& r : reports) out.scaled_sup = std::max(out.scaled_sup, r.G_sup * std::exp(out.eta * r.s));
    return out;
}

}  // namespace shadowblow
