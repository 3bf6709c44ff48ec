/// @file model.hpp
/// @brief Parameters, closed-form profiles and cutoff functions.
#pragma once

#include <string_view>

namespace shadowblow {

/// Exponents, geometry and construction constants of one experiment.
///
/// The construction constants default to desk-scale values measured on the
/// default exemplar (see README).
struct ModelParams {
    double p = 2.0;
    double r = 1.0;
    double gamma = 0.5;
    int dim = 3;
    double radius = 1.0;

    double K0 = 10.0;
    double A = 24.0;
    double delta0 = 0.75;
    double C0 = 2.0;
    double eta0 = 5.0e6;
    double eps0 = 0.15;
    double alpha0 = 0.25;
    double M0 = 2.0;
    double T = 1.0e-3;
};

enum class Criticality { subcritical, supercritical, excluded_critical };

std::string_view to_string(Criticality c);

struct TuringCheck {
    bool valid = false;
    Criticality cls = Criticality::subcritical;
};

/// Throws ValidationError naming the first non-finite or out-of-range field.
void validate(const ModelParams& params);

/// Turing condition r/(p-1) < N/2 and gamma*r != p-1, plus the sign class of
/// 1 - r*gamma/(p-1).
TuringCheck check_turing(const ModelParams& params);

/// Exponent a with theta = (mean U^r)^(-a).
double theta_U_exponent(const ModelParams& params);

double kappa(double p);

double phi0(double z, double p);

/// phi(y, s) together with the derivatives used by the remainder term.
struct ProfileValue {
    double value = 0.0;
    double ds = 0.0;         ///< d/ds
    double dr = 0.0;         ///< radial derivative
    double laplacian = 0.0;  ///< N-dimensional radial Laplacian
};

double phi(double y, double s, double p, int dim);
ProfileValue phi_with_derivatives(double y, double s, double p, int dim);

double hat_U(double tau, double p, double K0);

/// Modified final profile. `boundary_distance` is d(0, boundary).
double H_star(double absx, double p, double boundary_distance);

double chi0(double x);
/// First and second derivatives of chi0.
double chi0_prime(double x);
double chi0_second(double x);

double chi1(double absx, double T);
double psi_M0(double absy, double s, double M0);
double chi(double absy, double s, double K0);

}  // namespace shadowblow
