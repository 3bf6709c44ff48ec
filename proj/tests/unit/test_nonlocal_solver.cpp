#include <cmath>
#include <numbers>
#include <random>

#include <boost/numeric/odeint.hpp>
#include <doctest.h>

#include "shadowblow/error.hpp"
#include "shadowblow/nonlocal_solver.hpp"
#include "shadowblow/similarity.hpp"

using namespace shadowblow;

namespace {

GridPtr coarse() { return build_grid(1.0, 64, 1.0 / 128.0); }

RadialField constant(const GridPtr& g, double c) {
    return RadialField::sample(g, [c](double) { return c; });
}

// Exact homogeneous series u = 1 / (theta* (p-1) (T - t)) with p = 2.
std::vector<TrajectoryRow> synthetic(double T, double theta_star) {
    std::vector<TrajectoryRow> rows;
    for (int k = 0; k <= 400; ++k) {
        TrajectoryRow r;
        r.step = k;
        r.t = T - T * std::pow(10.0, -5.0 * k / 400.0);
        r.sup_u = 1.0 / (theta_star * (T - r.t));
        r.theta = theta_star;
        rows.push_back(r);
    }
    return rows;
}

}  // namespace

TEST_SUITE("nonlocal-solver") {

TEST_CASE("theta of u") {
    ModelParams P;
    const GridPtr g = build_grid(1.0, 2000, 1e-4);
    CHECK(theta_of_u(constant(g, 1.0), P) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(theta_of_u(constant(g, 4.0), P) == doctest::Approx(std::pow(4.0, -0.5)).epsilon(1e-14));
    P.gamma = 2.0;
    CHECK(std::abs(theta_of_u(RadialField::sample(g, [](double r) { return r; }), P) - 16.0 / 9.0) < 1e-6);
    CHECK_THROWS_AS(theta_of_u(constant(g, 0.0), P), SingularThetaError);
}

TEST_CASE("theta of U") {
    ModelParams P;
    const GridPtr g = build_grid(1.0, 300, 1e-3);
    CHECK(theta_of_U(constant(g, 1.0), P) == doctest::Approx(1.0));
    CHECK(theta_of_U(constant(g, 3.0), P) == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
    // theta_of_U(theta^{1/(p-1)} u) = theta_of_u(u) for several exponent sets.
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> U01(0.2, 3.0);
    for (auto [p, r, gamma] : {std::tuple{2.0, 1.0, 0.5}, std::tuple{3.0, 0.5, 1.0}, std::tuple{2.5, 1.2, 0.3}}) {
        P.p = p;
        P.r = r;
        P.gamma = gamma;
        for (int trial = 0; trial < 5; ++trial) {
            const double a = U01(rng), b = U01(rng), c = U01(rng);
            const RadialField u = RadialField::sample(g, [&](double x) { return a + b * x * x + c * std::cos(3 * x) + 1.5; });
            const double th = theta_of_u(u, P);
            CHECK(theta_of_U(U_from_u(u, th, p), P) == doctest::Approx(th).epsilon(1e-12));
        }
    }
    P = {};
    P.gamma = 1.0;
    CHECK_THROWS_AS(theta_of_U(constant(g, 2.0), P), CriticalExponentError);
}

TEST_CASE("theta prime closed forms") {
    ModelParams P;
    const GridPtr g = build_grid(1.0, 300, 1e-3);
    CHECK(std::abs(theta_prime(constant(g, 1.0), P)) < 1e-15);
    // U = c: -r gamma c^{-r a} (c^{p-1} - 1), here a = 1.
    for (double c : {0.5, 2.0, 7.0}) {
        CHECK(theta_prime(constant(g, c), P) == doctest::Approx(-0.5 / c * (c - 1.0)).epsilon(1e-13));
    }
    P.p = 3.0;
    P.r = 0.5;
    P.gamma = 1.0;
    const double a = theta_U_exponent(P);
    for (double c : {0.5, 2.0}) {
        CHECK(theta_prime(constant(g, c), P) ==
              doctest::Approx(-P.r * P.gamma * std::pow(c, -P.r * a) * (c * c - 1.0)).epsilon(1e-12));
    }
}

TEST_CASE("theta prime matches finite differences along a trajectory") {
    for (double r : {1.0, 0.7}) {
        ModelParams P;
        P.r = r;
        const GridPtr g = build_grid(1.0, 800, 1e-4);
        const NonlocalSolver solver(g, P);
        SolverState s = make_state(RadialField::sample(g, [](double x) { return 2.0 + 1.5 * std::cos(std::numbers::pi * x); }), P, 0.0);
        for (int k = 0; k < 200; ++k) s = solver.step(s, 1e-4);
        const double dt = 1e-7;
        const SolverState a = solver.step(s, dt);
        const SolverState b = solver.step(a, dt);
        // theta is the same number in u and U variables.
        const double fd = (b.theta - s.theta) / (2.0 * dt);
        const double formula = theta_prime(U_from_u(a.u, a.theta, P.p), P);
        CHECK(formula == doctest::Approx(fd).epsilon(0.05));
    }
}

TEST_CASE("homogeneous states") {
    ModelParams P;
    const GridPtr g = coarse();
    const NonlocalSolver solver(g, P);
    SolverState s = make_state(constant(g, 1.0), P, 0.0);
    for (int k = 0; k < 2000; ++k) s = solver.step(s, 1e-2);
    for (double v : s.u.values()) CHECK(std::abs(v - 1.0) < 1e-12);
    CHECK(s.theta == doctest::Approx(1.0));
    CHECK(s.step_index == 2000);

    // First order in dt against an adaptive ODE integration.
    namespace ode = boost::numeric::odeint;
    std::vector<double> x{0.5};
    ode::integrate_adaptive(ode::make_controlled(1e-13, 1e-13, ode::runge_kutta_dopri5<std::vector<double>>()),
                            [](const std::vector<double>& y, std::vector<double>& dy, double) {
                                dy[0] = -y[0] + std::pow(y[0], 1.5);
                            },
                            x, 0.0, 1.0, 1e-3);
    auto err = [&](double dt) {
        SolverState h = make_state(constant(g, 0.5), P, 0.0);
        const int n = static_cast<int>(std::lround(1.0 / dt));
        for (int k = 0; k < n; ++k) h = solver.step(h, dt);
        return std::abs(h.u[0] - x[0]) / x[0];
    };
    const double e1 = err(1e-3), e2 = err(5e-4);
    CHECK(e1 < 1e-3);
    CHECK(e1 / e2 == doctest::Approx(2.0).epsilon(0.05));
    CHECK_THROWS_AS(solver.step(s, 0.0), DomainError);
}

TEST_CASE("free step advances by the stored dt") {
    ModelParams P;
    const GridPtr g = coarse();
    SolverState s = make_state(constant(g, 0.5), P, 1e-3);
    const SolverState n = step(s, P);
    CHECK(n.t == doctest::Approx(1e-3));
    CHECK(n.u[0] < 0.5);
}

TEST_CASE("run to blowup outcomes") {
    ModelParams P;
    const GridPtr g = coarse();
    SolverControls c;
    c.dt_max = 1e-3;
    c.t_max = 10.0;
    const Trajectory quiet = run_to_blowup(constant(g, 0.5), P, c);
    CHECK(quiet.outcome == RunOutcome::no_blowup);
    CHECK(quiet.rows.back().t == doctest::Approx(10.0));
    for (std::size_t i = 1; i < quiet.rows.size(); ++i) CHECK(quiet.rows[i].t > quiet.rows[i - 1].t);

    // Homogeneous blowup from u0 = 5; higher thresholds stop later.
    double prev_t = 0.0;
    for (double thr : {1e3, 1e5, 1e7}) {
        c.blowup_threshold = thr;
        const Trajectory tr = run_to_blowup(constant(g, 5.0), P, c);
        CHECK(tr.outcome == RunOutcome::blowup);
        CHECK(tr.rows.back().sup_u >= thr);
        CHECK(tr.rows.back().t >= prev_t);
        prev_t = tr.rows.back().t;
        // t = 0 plus one snapshot per half decade crossed, plus the final state.
        CHECK(tr.snapshots.front().t == 0.0);
        CHECK(tr.snapshots.back().step == tr.rows.back().step);
        for (std::size_t i = 1; i < tr.snapshots.size(); ++i) CHECK(tr.snapshots[i].sup_u > tr.snapshots[i - 1].sup_u);
    }
    // Exact blowup time of u' = -u + u^{3/2} from 5: int_5^inf du/(u^{3/2} - u) = 2 ln(sqrt5/(sqrt5-1)).
    const double T_exact = 2.0 * std::log(std::sqrt(5.0) / (std::sqrt(5.0) - 1.0));
    c.blowup_threshold = 1e8;
    // Exact time to reach u: T + 2 ln(1 - u^{-1/2}). The explicit reaction
    // step is first order in c_dt.
    c.dt_max = 1e-4;
    auto stop_error = [&] {
        const Trajectory tr = run_to_blowup(constant(g, 5.0), P, c);
        return std::abs(tr.rows.back().t - (T_exact + 2.0 * std::log(1.0 - 1.0 / std::sqrt(tr.rows.back().sup_u))));
    };
    const double e_coarse = stop_error();
    c.c_dt = 1e-3;
    c.dt_max = 1e-5;
    const double e_fine = stop_error();
    CHECK(e_fine < 1e-3 * T_exact);
    CHECK(e_coarse / e_fine == doctest::Approx(10.0).epsilon(0.5));
    c.c_dt = 1e-2;
    c.dt_max = 1e-3;

    P.gamma = 1.0;
    CHECK_THROWS_AS(run_to_blowup(constant(g, 5.0), P, c), ValidationError);
}

TEST_CASE("blowup time from exact series") {
    const BlowupFit a = estimate_blowup_time(synthetic(0.3, 1.0), 2.0);
    CHECK(a.T_est == doctest::Approx(0.3).epsilon(1e-6));
    CHECK(a.r_squared == doctest::Approx(1.0));
    const BlowupFit b = estimate_blowup_time(synthetic(0.3, 2.0), 2.0);
    CHECK(b.slope == doctest::Approx(-2.0).epsilon(1e-6));
    const BlowupFit c = estimate_blowup_time(synthetic(0.3, 2.0), 2.0, 3.0, 0.5);
    CHECK(c.T_est == doctest::Approx(0.3).epsilon(1e-6));

    auto rows = synthetic(0.3, 1.0);
    rows.resize(60);  // under 1.5 decades
    CHECK_THROWS_AS(estimate_blowup_time(rows, 2.0), FitUnavailableError);
    CHECK_THROWS_AS(estimate_blowup_time(std::vector<TrajectoryRow>{}, 2.0), FitUnavailableError);
}

}
