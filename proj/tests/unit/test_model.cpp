#include <cmath>
#include <numbers>

#include <doctest.h>

#include "shadowblow/error.hpp"
#include "shadowblow/model.hpp"

using namespace shadowblow;

TEST_SUITE("model") {

TEST_CASE("turing classification") {
    ModelParams P;
    auto c = check_turing(P);
    CHECK(c.valid);
    CHECK(c.cls == Criticality::subcritical);

    P.gamma = 1.0;  // gamma r = p - 1
    c = check_turing(P);
    CHECK_FALSE(c.valid);
    CHECK(c.cls == Criticality::excluded_critical);
    CHECK_THROWS_AS(theta_U_exponent(P), CriticalExponentError);

    P = {};
    P.r = 3.0;
    P.gamma = 0.1;  // r/(p-1) = 3 >= N/2
    CHECK_FALSE(check_turing(P).valid);

    P = {};
    P.gamma = 3.0;  // 1 - r gamma/(p-1) < 0
    CHECK(check_turing(P).cls == Criticality::supercritical);
}

TEST_CASE("validation names the field") {
    ModelParams P;
    P.p = 1.0;
    try {
        validate(P);
        FAIL("expected a validation error");
    } catch (const ValidationError& e) {
        CHECK(e.field() == "p");
    }
    P = {};
    P.T = NAN;
    try {
        check_turing(P);
        FAIL("expected a validation error");
    } catch (const ValidationError& e) {
        CHECK(e.field() == "T");
    }
    P = {};
    P.T = 1.5;
    CHECK_THROWS_AS(validate(P), ValidationError);
    P = {};
    P.dim = 0;
    CHECK_THROWS_AS(validate(P), ValidationError);
}

TEST_CASE("theta exponent for the default exemplar") { CHECK(theta_U_exponent(ModelParams{}) == doctest::Approx(1.0)); }

TEST_CASE("phi0 values and shape") {
    CHECK(phi0(0.0, 2.0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(phi0(0.0, 3.0) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-15));
    CHECK(phi0(std::sqrt(8.0), 2.0) == doctest::Approx(0.5).epsilon(1e-15));
    for (double p : {1.5, 2.0, 3.0}) {
        CHECK(phi0(0.0, p) == doctest::Approx(kappa(p)).epsilon(1e-15));
        double prev = phi0(0.0, p);
        for (double z = 0.1; z < 20.0; z += 0.1) {
            const double v = phi0(z, p);
            CHECK(v < prev);
            CHECK(v <= kappa(p));
            prev = v;
        }
    }
}

TEST_CASE("phi closed form") {
    CHECK(phi(0.0, 10.0, 2.0, 1) == doctest::Approx(1.025).epsilon(1e-14));
    CHECK(phi(std::sqrt(25.0) * std::sqrt(8.0), 25.0, 2.0, 3) == doctest::Approx(0.53).epsilon(1e-14));
    CHECK(phi(0.0, 1e12, 2.0, 3) == doctest::Approx(kappa(2.0)).epsilon(1e-11));
    CHECK_THROWS_AS(phi(0.0, 1.0, 2.0, 3), DomainError);
    for (double p : {2.0, 3.0}) {
        for (double s : {2.0, 7.0, 30.0}) {
            for (double z : {0.0, 0.5, 2.0, 6.0}) {
                const double d = phi(z * std::sqrt(s), s, p, 3) - phi0(z, p) - kappa(p) * 3.0 / (2.0 * p * s);
                CHECK(std::abs(d) < 1e-12);
            }
        }
    }
}

TEST_CASE("phi derivatives agree with finite differences") {
    const double p = 2.0, s = 9.0, h = 1e-4;
    const int N = 3;
    for (double y : {0.5, 2.0, 6.0}) {
        const ProfileValue f = phi_with_derivatives(y, s, p, N);
        CHECK(f.value == doctest::Approx(phi(y, s, p, N)).epsilon(1e-14));
        const double ds = (phi(y, s + h, p, N) - phi(y, s - h, p, N)) / (2 * h);
        const double dr = (phi(y + h, s, p, N) - phi(y - h, s, p, N)) / (2 * h);
        const double d2 = (phi(y + h, s, p, N) - 2 * phi(y, s, p, N) + phi(y - h, s, p, N)) / (h * h);
        CHECK(f.ds == doctest::Approx(ds).epsilon(1e-6));
        CHECK(f.dr == doctest::Approx(dr).epsilon(1e-6));
        CHECK(f.laplacian == doctest::Approx(d2 + (N - 1) * dr / y).epsilon(1e-5));
    }
}

TEST_CASE("hat_U values and ODE") {
    CHECK(hat_U(0.0, 2.0, 8.0) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    CHECK(hat_U(1.0, 2.0, 8.0) == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(hat_U(0.0, 2.0, 10.0) == doctest::Approx(0.5614).epsilon(1e-4));
    CHECK_THROWS_AS(hat_U(10.0, 2.0, 8.0), DomainError);
    // Central difference against U^p: the error drops by ~4 per halving.
    auto worst = [](double h) {
        double e = 0.0;
        for (double tau = -0.5; tau <= 0.9; tau += 0.05) {
            const double fd = (hat_U(tau + h, 3.0, 10.0) - hat_U(tau - h, 3.0, 10.0)) / (2 * h);
            e = std::max(e, std::abs(fd - std::pow(hat_U(tau, 3.0, 10.0), 3.0)));
        }
        return e;
    };
    const double e1 = worst(1e-2), e2 = worst(5e-3);
    CHECK(e1 / e2 == doctest::Approx(4.0).epsilon(0.05));
}

TEST_CASE("H_star branches") {
    CHECK(H_star(0.6, 2.0, 1.0) == 1.0);
    CHECK(H_star(-0.9, 2.0, 1.0) == 1.0);
    const double x = std::exp(-1.0);
    CHECK(H_star(x, 2.0, 10.0) == doctest::Approx(16.0 * std::exp(2.0)).epsilon(1e-13));
    CHECK_THROWS_AS(H_star(0.0, 2.0, 1.0), DomainError);
    // Continuity at both junctions.
    for (double d : {1.0, 1.6}) {
        const double a = std::min(d / 4, 0.5), b = d / 2, e = 1e-12;
        CHECK(std::abs(H_star(a + e, 2.0, d) - H_star(a - e, 2.0, d)) < 1e-10 * H_star(a, 2.0, d));
        CHECK(std::abs(H_star(b + e, 2.0, d) - H_star(b - e, 2.0, d)) < 1e-10);
        double prev = H_star(a, 2.0, d);
        for (double r = a; r <= b; r += (b - a) / 200) {
            const double v = H_star(r, 2.0, d);
            CHECK(v <= prev + 1e-12);
            prev = v;
        }
    }
}

TEST_CASE("cutoffs") {
    CHECK(chi0(0.5) == 1.0);
    CHECK(chi0(3.0) == 0.0);
    CHECK(chi0(1.0) == 1.0);
    CHECK(chi0(2.0) == 0.0);
    CHECK(chi(3.0 * 10.0 * std::sqrt(7.0), 7.0, 10.0) == 0.0);
    CHECK(chi(0.5 * 10.0 * std::sqrt(7.0), 7.0, 10.0) == 1.0);
    CHECK(psi_M0(0.0, 7.0, 2.0) == 1.0);
    CHECK(chi1(0.0, 1e-3) == 1.0);
    double prev = 1.0;
    for (double x = 0.0; x <= 2.5; x += 0.01) {
        const double v = chi0(x);
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
        CHECK(v <= prev);
        prev = v;
    }
    // Derivatives against central differences.
    const double h = 1e-5;
    for (double x : {1.2, 1.5, 1.8}) {
        CHECK(chi0_prime(x) == doctest::Approx((chi0(x + h) - chi0(x - h)) / (2 * h)).epsilon(1e-6));
        CHECK(chi0_second(x) == doctest::Approx((chi0_prime(x + h) - chi0_prime(x - h)) / (2 * h)).epsilon(1e-5));
    }
    CHECK(chi0_prime(0.5) == 0.0);
    CHECK(chi0_prime(2.5) == 0.0);
}

}
