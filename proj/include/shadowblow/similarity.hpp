/// @file similarity.hpp
/// @brief Self-similar variables y = x/sqrt(T-t), s = -ln(T-t),
///        W = (T-t)^{1/(p-1)} U, and the terms of the linearized equation.
#pragma once

#include <cstddef>
#include <vector>

#include "shadowblow/model.hpp"
#include "shadowblow/radial_grid.hpp"

namespace shadowblow {

RadialField U_from_u(const RadialField& u, double theta, double p);
RadialField u_from_U(const RadialField& U, double theta, double p);

/// Uniform frame abscissa on [0, y_max].
std::vector<double> uniform_y_grid(double y_max, std::size_t count = 2048);

/// y_max = max(2 K0 sqrt(s_max), 20).
double frame_y_max(double s_max, double K0);

/// One snapshot in similarity variables.
///
/// `y` holds the uniform part [0, y_max] followed by the mesh nodes whose
/// image lies beyond y_max ("tail"). Values at y outside Omega_s are W = 0.
struct SimilarityFrame {
    double t = 0.0;
    double T_est = 0.0;
    double s = 0.0;
    double theta_bar = 0.0;
    double theta_bar_prime = 0.0;
    std::size_t uniform_count = 0;
    std::vector<double> y;
    std::vector<double> W;
    std::vector<double> dW;  ///< radial derivative in y
    std::vector<unsigned char> inside;
    std::vector<double> w;
    std::vector<double> q;
};

/// Fills t, s, y, W, dW, inside. Throws DomainError when t >= T_est.
SimilarityFrame to_similarity(const RadialField& U, double t, double T_est, double p,
                              const std::vector<double>& y_uniform);

/// Sets theta_bar = theta and theta_bar_prime = theta_prime * e^{-s}.
void set_theta(SimilarityFrame& frame, double theta, double theta_prime);

/// w = W psi_{M0} inside Omega_s and 0 outside; q = w - phi.
void build_w_q(SimilarityFrame& frame, const ModelParams& params);

/// Radial derivative of q: dW psi + W dpsi - dphi inside Omega_s, -dphi outside.
std::vector<double> q_derivative(const SimilarityFrame& frame, const ModelParams& params);

double potential_V(double y, double s, double p, int dim);
double nonlinear_B(double q, double y, double s, double p, int dim);
double remainder_R(double y, double s, double p, int dim);

std::vector<double> F_term(const SimilarityFrame& frame, const ModelParams& params);
std::vector<double> G_term(const SimilarityFrame& frame, const ModelParams& params);

struct TermBoundReport {
    double s = 0.0;
    double sup_V = 0.0;
    double V_expansion_scaled = 0.0;  ///< sup |V + (|y|^2-2N)/(4s)| s^2/(1+|y|^4)
    double B_quadratic_ratio = 0.0;   ///< sup chi |B(q)| / |q|^2
    double R_scaled = 0.0;            ///< sup_{|y|<=K0 sqrt s} |R| s
    double R_c1 = 0.0;                ///< s^2 R(0, s)
    double G_sup = 0.0;
    double F_sup = 0.0;
};

TermBoundReport verify_term_bounds(const SimilarityFrame& frame, const ModelParams& params);

struct GDecayFit {
    double slope = 0.0;   ///< d ln ||G|| / ds
    double eta = 0.0;     ///< -slope
    double scaled_sup = 0.0;  ///< max ||G|| e^{eta s}
    double r_squared = 0.0;
};

GDecayFit fit_G_decay(const std::vector<TermBoundReport>& reports);

}  // namespace shadowblow
