/// @file hermite.hpp
/// @brief Hermite eigenfunctions of L = Lap - y.grad/2 + 1 in the Gaussian
///        space L^2_rho, projections, and the inner/outer decomposition.
#pragma once

#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "shadowblow/model.hpp"

namespace shadowblow {

/// One-dimensional polynomial held by its monomial coefficients.
class Polynomial {
public:
    Polynomial() = default;
    explicit Polynomial(std::vector<double> coefficients);
    double operator()(double y) const;
    Polynomial derivative() const;
    int degree() const noexcept { return static_cast<int>(coef_.size()) - 1; }
    std::span<const double> coefficients() const noexcept { return coef_; }

private:
    std::vector<double> coef_;
};

constexpr int kMaxHermiteDegree = 6;

/// h_{m+1} = y h_m - 2m h_{m-1}, h_0 = 1, h_1 = y. Supported m in [0, 6].
const Polynomial& hermite_polynomial(int m);
double hermite(int m, double y);
/// ||h_m||^2 = 2^m m!
double hermite_norm_sq(int m);

/// L applied to a one-dimensional polynomial: p'' - y p'/2 + p.
Polynomial apply_L(const Polynomial& p);

/// Product h_beta(y) = prod_i h_{beta_i}(y_i).
double hermite_multi(std::span<const int> beta, std::span<const double> y);
double hermite_multi_norm_sq(std::span<const int> beta);

using PointFunction = std::function<double(std::span<const double>)>;
using RadialFunction = std::function<double(double)>;

/// Gaussian weight rho(y) = e^{-|y|^2/4} / (4 pi)^{N/2} at |y| = r.
double gaussian_weight(double r, int dim);

/// int f g rho dy over R^N by radial Gauss-Legendre panels on [0, 20]
/// times a fixed spherical rule.
double weighted_inner(const PointFunction& f, const PointFunction& g, int dim);
double weighted_inner_radial(const RadialFunction& f, const RadialFunction& g, int dim);

/// P_beta(f_b) = <chi(., s) f, h_beta> / ||h_beta||^2.
double project_beta(const PointFunction& f, std::span<const int> beta, double s, double K0, int dim);
double project_beta_radial(const RadialFunction& f, std::span<const int> beta, double s, double K0, int dim);

/// Projections of the gradient components of the cutoff part onto h_0 and
/// h_1; (grad f)_perp = grad f_b - p0 - M y.
struct GradPerp {
    std::vector<double> p0;              ///< p0[i] = P_0(d_i f_b)
    std::vector<std::vector<double>> M;  ///< M[i][j] = P_{e_j}(d_i f_b)
    std::vector<double> value(std::span<const double> y, std::span<const double> grad_fb) const;
};

/// `grad_f` writes the gradient of f at y into its second argument.
using PointGradient = std::function<void(std::span<const double>, std::span<double>)>;

GradPerp grad_perp(const PointFunction& f, const PointGradient& grad_f, double s, double K0, int dim);

/// Monotone cubic interpolant of sampled radial data.
class SampledRadial {
public:
    /// Throws AccuracyError when y does not reach 20.
    SampledRadial(std::vector<double> y, std::vector<double> values);
    double operator()(double r) const;

private:
    struct Impl;
    std::shared_ptr<const Impl> impl_;
};

struct SpectralDecomposition {
    double s = 0.0;
    int dim = 0;
    double q0 = 0.0;
    std::vector<double> q1;
    std::vector<std::vector<double>> q2;
    /// Values along the first axis at |y| = y[i].
    std::vector<double> y;
    std::vector<double> f_b;
    std::vector<double> q_minus;
    std::vector<double> q_perp;
    std::vector<double> grad_perp_norm;
    std::vector<double> q_e;

    /// q0 + q1.y + y^T q2 y - 2 tr q2 at y = r e_1.
    double low_modes(double r) const;
    /// sup |q_minus| / (1 + |y|^3)
    double q_minus_weighted() const;
    /// sup |(grad q)_perp| / (1 + |y|^3)
    double grad_perp_weighted() const;
    double q_e_sup() const;
};

/// Decomposition of a radial field sampled at |y| = y[i] with radial
/// derivative df. The samples must reach |y| >= 20.
SpectralDecomposition decompose(std::span<const double> y, std::span<const double> f,
                                std::span<const double> df, double s, const ModelParams& params);

}  // namespace shadowblow
