#include "shadowblow/hermite.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include <Eigen/Dense>
#include "detail/pchip.hpp"
#include <boost/math/quadrature/gauss.hpp>

#include "shadowblow/error.hpp"
#include "shadowblow/radial_grid.hpp"

namespace shadowblow {

Polynomial::Polynomial(std::vector<double> coefficients) : coef_(std::move(coefficients)) {
    if (coef_.empty()) coef_.push_back(0.0);
}

double Polynomial::operator()(double y) const {
    double acc = 0.0;
    for (auto it = coef_.rbegin(); it != coef_.rend(); ++it) acc = acc * y + *it;
    return acc;
}

Polynomial Polynomial::derivative() const {
    if (coef_.size() <= 1) return Polynomial({0.0});
    std::vector<double> d(coef_.size() - 1);
    for (std::size_t k = 1; k < coef_.size(); ++k) d[k - 1] = static_cast<double>(k) * coef_[k];
    return Polynomial(std::move(d));
}

namespace {

std::array<Polynomial, kMaxHermiteDegree + 1> build_hermite_table() {
    std::array<Polynomial, kMaxHermiteDegree + 1> h;
    h[0] = Polynomial({1.0});
    h[1] = Polynomial({0.0, 1.0});
    for (int m = 1; m < kMaxHermiteDegree; ++m) {
        std::vector<double> next(m + 2, 0.0);
        const auto a = h[m].coefficients();
        const auto b = h[m - 1].coefficients();
        for (std::size_t k = 0; k < a.size(); ++k) next[k + 1] += a[k];
        for (std::size_t k = 0; k < b.size(); ++k) next[k] -= 2.0 * m * b[k];
        h[m + 1] = Polynomial(std::move(next));
    }
    return h;
}

}  // namespace

const Polynomial& hermite_polynomial(int m) {
    static const auto table = build_hermite_table();
    if (m < 0 || m > kMaxHermiteDegree) throw DomainError("unsupported Hermite degree");
    return table[static_cast<std::size_t>(m)];
}

double hermite(int m, double y) { return hermite_polynomial(m)(y); }

double hermite_norm_sq(int m) {
    if (m < 0 || m > kMaxHermiteDegree) throw DomainError("unsupported Hermite degree");
    return std::ldexp(std::tgamma(m + 1.0), m);
}

Polynomial apply_L(const Polynomial& p) {
    const Polynomial d1 = p.derivative();
    const Polynomial d2 = d1.derivative();
    std::vector<double> out(p.coefficients().begin(), p.coefficients().end());
    const auto c2 = d2.coefficients();
    for (std::size_t k = 0; k < c2.size() && k < out.size(); ++k) out[k] += c2[k];
    const auto c1 = d1.coefficients();
    for (std::size_t k = 0; k < c1.size(); ++k) {
        if (k + 1 < out.size()) out[k + 1] -= 0.5 * c1[k];
    }
    return Polynomial(std::move(out));
}

double hermite_multi(std::span<const int> beta, std::span<const double> y) {
    double v = 1.0;
    for (std::size_t i = 0; i < beta.size(); ++i) {
        if (beta[i] != 0) v *= hermite(beta[i], y[i]);
    }
    return v;
}

double hermite_multi_norm_sq(std::span<const int> beta) {
    double v = 1.0;
    for (int b : beta) v *= hermite_norm_sq(b);
    return v;
}

double gaussian_weight(double r, int dim) {
    return std::exp(-0.25 * r * r) / std::pow(4.0 * std::numbers::pi, 0.5 * dim);
}

namespace {

constexpr double kRadialCutoff = 20.0;
constexpr int kPanels = 40;

struct RadialRule {
    std::vector<double> r, w;
};

const RadialRule& radial_rule() {
    static const RadialRule rule = [] {
        using G = boost::math::quadrature::gauss<double, 20>;
        RadialRule out;
        const double h = kRadialCutoff / kPanels;
        for (int k = 0; k < kPanels; ++k) {
            const double mid = (k + 0.5) * h;
            for (std::size_t j = 0; j < G::abscissa().size(); ++j) {
                const double x = G::abscissa()[j];
                const double w = G::weights()[j];
                out.r.push_back(mid + 0.5 * h * x);
                out.w.push_back(0.5 * h * w);
                if (x != 0.0) {
                    out.r.push_back(mid - 0.5 * h * x);
                    out.w.push_back(0.5 * h * w);
                }
            }
        }
        return out;
    }();
    return rule;
}

// Points on the unit sphere with weights summing to its area. Exact for
// polynomials of degree 15 when N <= 3 and degree 3 otherwise.
struct SphereRule {
    int dim = 1;
    std::vector<double> points;  // count x dim
    std::vector<double> weights;
    std::size_t count() const { return weights.size(); }
    std::span<const double> point(std::size_t k) const {
        return {points.data() + k * static_cast<std::size_t>(dim), static_cast<std::size_t>(dim)};
    }
};

SphereRule make_sphere_rule(int dim) {
    SphereRule rule;
    rule.dim = dim;
    constexpr double kOffset = 0.3;
    constexpr int kAzimuth = 16;
    if (dim == 1) {
        rule.points = {1.0, -1.0};
        rule.weights = {1.0, 1.0};
    } else if (dim == 2) {
        for (int k = 0; k < kAzimuth; ++k) {
            const double a = kOffset + 2.0 * std::numbers::pi * k / kAzimuth;
            rule.points.push_back(std::cos(a));
            rule.points.push_back(std::sin(a));
            rule.weights.push_back(2.0 * std::numbers::pi / kAzimuth);
        }
    } else if (dim == 3) {
        using G = boost::math::quadrature::gauss<double, 8>;
        std::vector<double> ct, wt;
        for (std::size_t j = 0; j < G::abscissa().size(); ++j) {
            ct.push_back(G::abscissa()[j]);
            wt.push_back(G::weights()[j]);
            ct.push_back(-G::abscissa()[j]);
            wt.push_back(G::weights()[j]);
        }
        for (std::size_t j = 0; j < ct.size(); ++j) {
            const double st = std::sqrt(1.0 - ct[j] * ct[j]);
            for (int k = 0; k < kAzimuth; ++k) {
                const double a = kOffset + 2.0 * std::numbers::pi * k / kAzimuth;
                rule.points.push_back(st * std::cos(a));
                rule.points.push_back(st * std::sin(a));
                rule.points.push_back(ct[j]);
                rule.weights.push_back(wt[j] * 2.0 * std::numbers::pi / kAzimuth);
            }
        }
    } else {
        // Rotated cross-polytope.
        Eigen::MatrixXd seed(dim, dim);
        for (int i = 0; i < dim; ++i) {
            for (int j = 0; j < dim; ++j) seed(i, j) = std::sin(1.0 + i + 2.0 * j);
        }
        const Eigen::MatrixXd Q = seed.householderQr().householderQ();
        const double w = sphere_area(dim) / (2.0 * dim);
        for (int i = 0; i < dim; ++i) {
            for (double sign : {1.0, -1.0}) {
                for (int j = 0; j < dim; ++j) rule.points.push_back(sign * Q(j, i));
                rule.weights.push_back(w);
            }
        }
    }
    return rule;
}

const SphereRule& sphere_rule(int dim) {
    if (dim < 1) throw ValidationError("dim", "must be at least 1");
    static const std::array<SphereRule, 8> cache = [] {
        std::array<SphereRule, 8> c;
        for (int d = 1; d <= 8; ++d) c[static_cast<std::size_t>(d - 1)] = make_sphere_rule(d);
        return c;
    }();
    if (dim > 8) throw ValidationError("dim", "spherical rules are tabulated up to N = 8");
    return cache[static_cast<std::size_t>(dim - 1)];
}

// int_{R^N} h(y) rho(y) dy with h evaluated on the tensor rule.
template <class H>
double gaussian_integral(int dim, H&& h) {
    const RadialRule& rr = radial_rule();
    const SphereRule& sr = sphere_rule(dim);
    std::vector<double> y(static_cast<std::size_t>(dim));
    double total = 0.0;
    for (std::size_t a = 0; a < rr.r.size(); ++a) {
        const double r = rr.r[a];
        double angular = 0.0;
        for (std::size_t k = 0; k < sr.count(); ++k) {
            const auto omega = sr.point(k);
            for (int i = 0; i < dim; ++i) y[static_cast<std::size_t>(i)] = r * omega[static_cast<std::size_t>(i)];
            angular += sr.weights[k] * h(std::span<const double>(y), r);
        }
        total += rr.w[a] * std::pow(r, dim - 1) * gaussian_weight(r, dim) * angular;
    }
    return total;
}

}  // namespace

double weighted_inner(const PointFunction& f, const PointFunction& g, int dim) {
    return gaussian_integral(dim, [&](std::span<const double> y, double) { return f(y) * g(y); });
}

double weighted_inner_radial(const RadialFunction& f, const RadialFunction& g, int dim) {
    return gaussian_integral(dim, [&](std::span<const double>, double r) { return f(r) * g(r); });
}

double project_beta(const PointFunction& f, std::span<const int> beta, double s, double K0, int dim) {
    if (static_cast<int>(beta.size()) != dim) throw ValidationError("beta", "length must equal dim");
    const double num = gaussian_integral(dim, [&](std::span<const double> y, double r) {
        return chi(r, s, K0) * f(y) * hermite_multi(beta, y);
    });
    return num / hermite_multi_norm_sq(beta);
}

double project_beta_radial(const RadialFunction& f, std::span<const int> beta, double s, double K0, int dim) {
    if (static_cast<int>(beta.size()) != dim) throw ValidationError("beta", "length must equal dim");
    const double num = gaussian_integral(dim, [&](std::span<const double> y, double r) {
        return chi(r, s, K0) * f(r) * hermite_multi(beta, y);
    });
    return num / hermite_multi_norm_sq(beta);
}

std::vector<double> GradPerp::value(std::span<const double> y, std::span<const double> grad_fb) const {
    std::vector<double> out(p0.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        double v = grad_fb[i] - p0[i];
        for (std::size_t j = 0; j < y.size(); ++j) v -= M[i][j] * y[j];
        out[i] = v;
    }
    return out;
}

GradPerp grad_perp(const PointFunction& f, const PointGradient& grad_f, double s, double K0, int dim) {
    const auto n = static_cast<std::size_t>(dim);
    const double scale = K0 * std::sqrt(s);
    GradPerp out;
    out.p0.assign(n, 0.0);
    out.M.assign(n, std::vector<double>(n, 0.0));
    std::vector<double> g(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto component = [&](std::span<const double> y, double r) {
            grad_f(y, g);
            double v = chi(r, s, K0) * g[i];
            if (r > 0.0) v += chi0_prime(r / scale) / scale * (y[i] / r) * f(y);
            return v;
        };
        out.p0[i] = gaussian_integral(dim, component);
        for (std::size_t j = 0; j < n; ++j) {
            out.M[i][j] = gaussian_integral(dim, [&](std::span<const double> y, double r) {
                              return component(y, r) * y[j];
                          }) /
                          hermite_norm_sq(1);
        }
    }
    return out;
}

struct SampledRadial::Impl {
    boost::math::interpolators::pchip<std::vector<double>> spline;
    double lo, hi;
};

SampledRadial::SampledRadial(std::vector<double> y, std::vector<double> values) {
    if (y.size() < 4 || y.size() != values.size()) throw ValidationError("samples", "need at least four matched samples");
    if (y.back() < kRadialCutoff) throw AccuracyError("sampled y-grid must reach |y| >= 20");
    const double lo = y.front(), hi = y.back();
    impl_ = std::make_shared<const Impl>(
        Impl{boost::math::interpolators::pchip<std::vector<double>>(std::move(y), std::move(values)), lo, hi});
}

double SampledRadial::operator()(double r) const { return impl_->spline(std::clamp(r, impl_->lo, impl_->hi)); }

double SpectralDecomposition::low_modes(double r) const {
    double tr = 0.0;
    for (int i = 0; i < dim; ++i) tr += q2[static_cast<std::size_t>(i)][static_cast<std::size_t>(i)];
    return q0 + q1[0] * r + q2[0][0] * r * r - 2.0 * tr;
}

namespace {

double weighted_sup(const std::vector<double>& y, const std::vector<double>& v) {
    double m = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) m = std::max(m, std::abs(v[i]) / (1.0 + y[i] * y[i] * y[i]));
    return m;
}

}  // namespace

double SpectralDecomposition::q_minus_weighted() const { return weighted_sup(y, q_minus); }
double SpectralDecomposition::grad_perp_weighted() const { return weighted_sup(y, grad_perp_norm); }
double SpectralDecomposition::q_e_sup() const {
    double m = 0.0;
    for (double v : q_e) m = std::max(m, std::abs(v));
    return m;
}

SpectralDecomposition decompose(std::span<const double> y, std::span<const double> f, std::span<const double> df,
                                double s, const ModelParams& params) {
    const int N = params.dim;
    const auto n = static_cast<std::size_t>(N);
    const SampledRadial F(std::vector<double>(y.begin(), y.end()), std::vector<double>(f.begin(), f.end()));
    const SampledRadial D(std::vector<double>(y.begin(), y.end()), std::vector<double>(df.begin(), df.end()));
    const RadialFunction fr = [&](double r) { return F(r); };

    SpectralDecomposition out;
    out.s = s;
    out.dim = N;
    std::vector<int> beta(n, 0);
    out.q0 = project_beta_radial(fr, beta, s, params.K0, N);
    out.q1.assign(n, 0.0);
    out.q2.assign(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
        beta.assign(n, 0);
        beta[i] = 1;
        out.q1[i] = project_beta_radial(fr, beta, s, params.K0, N);
        for (std::size_t j = i; j < n; ++j) {
            beta.assign(n, 0);
            beta[i] += 1;
            beta[j] += 1;
            const double P = project_beta_radial(fr, beta, s, params.K0, N);
            out.q2[i][j] = i == j ? P : 0.5 * P;
            out.q2[j][i] = out.q2[i][j];
        }
    }

    auto norm_of = [](std::span<const double> v) {
        double a = 0.0;
        for (double x : v) a += x * x;
        return std::sqrt(a);
    };
    const PointFunction fp = [&](std::span<const double> p) { return F(norm_of(p)); };
    const PointGradient gp = [&](std::span<const double> p, std::span<double> g) {
        const double r = norm_of(p);
        const double d = D(r);
        for (std::size_t i = 0; i < g.size(); ++i) g[i] = r > 0.0 ? d * p[i] / r : 0.0;
    };
    const GradPerp gperp = grad_perp(fp, gp, s, params.K0, N);

    const double scale = params.K0 * std::sqrt(s);
    std::vector<double> point(n, 0.0), grad(n, 0.0);
    out.y.assign(y.begin(), y.end());
    for (std::size_t k = 0; k < y.size(); ++k) {
        const double r = y[k];
        const double c = chi(r, s, params.K0);
        const double fb = c * f[k];
        out.f_b.push_back(fb);
        out.q_e.push_back(f[k] - fb);
        out.q_minus.push_back(fb - out.low_modes(r));
        out.q_perp.push_back(fb - out.q0 - out.q1[0] * r);
        point[0] = r;
        grad[0] = c * df[k] + chi0_prime(r / scale) / scale * f[k];
        out.grad_perp_norm.push_back(norm_of(gperp.value(point, grad)));
    }
    return out;
}

}  // namespace shadowblow
