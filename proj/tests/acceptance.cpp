// Acceptance suite: one PASS/FAIL line per criterion.
//
//   acceptance --prepare --run-dir DIR     run the default experiment into DIR
//   acceptance --run-dir DIR [--criterion N]
//
// Criteria that need the default run read it from DIR; the rest are
// self-contained. Exit status is 0 iff every selected criterion passes.
#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <Eigen/Dense>
#include <boost/numeric/odeint.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "shadowblow/blowup_data.hpp"
#include "shadowblow/diagnostics.hpp"
#include "shadowblow/error.hpp"
#include "shadowblow/experiment.hpp"
#include "shadowblow/hermite.hpp"
#include "shadowblow/nonlocal_solver.hpp"
#include "shadowblow/radial_grid.hpp"
#include "shadowblow/shrinking_set.hpp"
#include "shadowblow/similarity.hpp"

using namespace shadowblow;
using json = nlohmann::json;

namespace {

struct Verdict {
    bool pass = false;
    std::string detail;
};

// Fit windows stop half a decade before the final sup u.
constexpr double kExcludedDecades = 0.5;
constexpr double kEdgeSlack = 1.05;

json read_json_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw NotFoundError("missing " + path.string());
    return json::parse(in);
}

fs::path timing_path(const fs::path& run_dir) { return fs::path(run_dir.string() + ".timing.json"); }

int prepare(const fs::path& run_dir) {
    RunConfig config;
    config.output_dir = fs::absolute(run_dir);
    config.overwrite = true;
    const auto t0 = std::chrono::steady_clock::now();
    const RunSummary s = cmd_simulate(config);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::ofstream(timing_path(run_dir)) << json{{"seconds", seconds}, {"ok", s.ok}}.dump(2) << "\n";
    fmt::print("default run: {:.1f} s, {} frames, T_est = {:.10g}, ok = {}\n", seconds, s.frames, s.T_est, s.ok);
    for (const auto& st : s.stages) {
        if (!st.ok) fmt::print("  stage {} failed: {}\n", st.name, st.error);
    }
    return s.ok ? 0 : 1;
}

// Run artifacts are loaded once per process.
const RunArtifacts& default_run(const fs::path& dir) {
    static const RunArtifacts run = load_run(dir);
    return run;
}

// ---------------------------------------------------------------------------

Verdict spectral() {
    // Reference coefficients (constant term first) written out by hand.
    const std::vector<std::vector<double>> ref = {
        {1}, {0, 1}, {-2, 0, 1}, {0, -6, 0, 1}, {12, 0, -12, 0, 1}};
    auto eval = [](const std::vector<double>& c, double y) {
        double v = 0.0;
        for (std::size_t k = c.size(); k-- > 0;) v = v * y + c[k];
        return v;
    };
    // L h = h'' - y h'/2 + h by direct coefficient arithmetic.
    auto L_minus_eig = [&](int m) {
        const auto& c = ref[static_cast<std::size_t>(m)];
        std::vector<double> out(c.size(), 0.0);
        for (std::size_t k = 0; k < c.size(); ++k) {
            if (k >= 2) out[k - 2] += static_cast<double>(k * (k - 1)) * c[k];
            out[k] += (1.0 - 0.5 * static_cast<double>(k)) * c[k] - (1.0 - 0.5 * m) * c[k];
        }
        return out;
    };
    double worst_eig = 0.0, worst_lib = 0.0, worst_orth = 0.0, worst_agree = 0.0;
    for (int m = 0; m <= 4; ++m) {
        const auto res_ref = L_minus_eig(m);
        const double n_ref = std::sqrt(weighted_inner([&](std::span<const double> y) { return eval(res_ref, y[0]); },
                                                      [&](std::span<const double> y) { return eval(res_ref, y[0]); }, 1));
        const Polynomial lib = apply_L(hermite_polynomial(m));
        auto res_lib = [&](std::span<const double> y) { return lib(y[0]) - (1.0 - 0.5 * m) * hermite(m, y[0]); };
        const double n_lib = std::sqrt(weighted_inner(res_lib, res_lib, 1));
        worst_eig = std::max(worst_eig, n_ref);
        worst_lib = std::max(worst_lib, n_lib);
        for (double y : {-3.7, -1.0, 0.0, 0.4, 2.5, 6.0}) {
            worst_agree = std::max(worst_agree, std::abs(hermite(m, y) - eval(ref[static_cast<std::size_t>(m)], y)));
        }
        for (int j = 0; j < m; ++j) {
            const double g = weighted_inner([m](std::span<const double> y) { return hermite(m, y[0]); },
                                            [j](std::span<const double> y) { return hermite(j, y[0]); }, 1);
            worst_orth = std::max(worst_orth, std::abs(g));
        }
    }
    const bool ok = worst_eig < 1e-8 && worst_lib < 1e-8 && worst_orth < 1e-8 && worst_agree < 1e-10;
    return {ok, fmt::format("max eigen-residual {:.2e} (library L {:.2e}), max |<h_i,h_j>| {:.2e}, coefficient match {:.1e}",
                            worst_eig, worst_lib, worst_orth, worst_agree)};
}

Verdict homogeneous() {
    ModelParams P;
    const GridPtr grid = build_grid(1.0, 64, 1.0 / 128.0);
    const NonlocalSolver solver(grid, P);

    SolverState s = make_state(RadialField::sample(grid, [](double) { return 1.0; }), P, 0.0);
    double dev1 = 0.0;
    for (int k = 0; k < 10000; ++k) {
        s = solver.step(s, 1e-3);
        for (double v : s.u.values()) dev1 = std::max(dev1, std::abs(v - 1.0));
    }

    // u' = -u + u^{p - r gamma} by adaptive Dormand-Prince as the oracle.
    const double e = P.p - P.r * P.gamma;
    using state_t = std::vector<double>;
    auto rhs = [e](const state_t& x, state_t& dx, double) { dx[0] = -x[0] + std::pow(x[0], e); };
    namespace ode = boost::numeric::odeint;
    const double dt = 1e-4, t_end = 5.0;
    SolverState h = make_state(RadialField::sample(grid, [](double) { return 0.5; }), P, 0.0);
    state_t x{0.5};
    double t = 0.0, rel = 0.0;
    auto stepper = ode::make_controlled(1e-13, 1e-13, ode::runge_kutta_dopri5<state_t>());
    const int per_check = 1000;
    for (int k = 1; k * dt <= t_end + 1e-12; ++k) {
        h = solver.step(h, dt);
        if (k % per_check != 0) continue;
        ode::integrate_adaptive(stepper, rhs, x, t, k * dt, 1e-4);
        t = k * dt;
        for (double v : h.u.values()) rel = std::max(rel, std::abs(v - x[0]) / x[0]);
    }
    SolverControls c;
    c.dt_max = 1e-3;
    c.t_max = 10.0;
    const Trajectory traj = run_to_blowup(RadialField::sample(grid, [](double) { return 0.5; }), P, c);
    const bool no_blowup = traj.outcome == RunOutcome::no_blowup;
    const bool ok = dev1 <= 1e-8 && rel <= 1e-3 && no_blowup;
    return {ok, fmt::format("u0=1: max |u-1| {:.2e} over 1e4 steps; u0=0.5: max rel. deviation from ODE {:.2e} "
                            "on [0,5]; run to t=10: {}",
                            dev1, rel, no_blowup ? "no blowup" : "BLOWUP")};
}

Verdict blowup_rate(const fs::path& dir) {
    const auto& run = default_run(dir);
    const auto& P = run.config.params;
    const double reached = run.rows.back().sup_u;
    const BlowupFit fit = estimate_blowup_time(run.rows, P.p, 3.0, kExcludedDecades);
    const double ratio = std::abs(fit.slope) / ((P.p - 1.0) * run.rows.back().theta);
    double seconds = NAN;
    try {
        seconds = read_json_file(timing_path(dir)).at("seconds").get<double>();
    } catch (const std::exception&) {
    }
    const bool ok = reached >= 1e8 && fit.r_squared > 0.999 && ratio >= 0.9 && ratio <= 1.1 && seconds <= 600.0;
    return {ok, fmt::format("sup u reached {:.3g}; R^2 {:.8f} over {} samples; |slope|/((p-1) theta_final) {:.4f}; "
                            "runtime {:.1f} s",
                            reached, fit.r_squared, fit.samples, ratio, seconds)};
}

Verdict profile_convergence(const fs::path& dir) {
    const auto& run = default_run(dir);
    const auto& P = run.config.params;
    const ThetaStar ts = theta_star(run.rows, run.T_est);
    const double u_stop = run.snapshots.back().sup_u;
    const double hi = u_stop * std::pow(10.0, -kExcludedDecades) * kEdgeSlack;
    const double lo = u_stop * std::pow(10.0, -kExcludedDecades - 3.0) / kEdgeSlack;
    std::vector<double> scaled, s;
    for (const auto& sn : run.snapshots) {
        if (!(sn.t < run.T_est) || sn.sup_u < lo || sn.sup_u > hi) continue;
        const double tau = run.T_est - sn.t;
        scaled.push_back(intermediate_error(sn.u, sn.t, run.T_est, ts.theta_star, P) *
                         (1.0 + std::sqrt(std::abs(std::log(tau)))));
        s.push_back(-std::log(tau));
    }
    bool ok = scaled.size() >= 3;
    double worst_rise = 0.0, sup = 0.0;
    for (std::size_t i = 0; i < scaled.size(); ++i) {
        ok = ok && std::isfinite(scaled[i]);
        sup = std::max(sup, scaled[i]);
        if (i > 0) worst_rise = std::max(worst_rise, scaled[i] / scaled[i - 1] - 1.0);
    }
    ok = ok && worst_rise <= 0.10;
    std::string trace;
    for (std::size_t i = 0; i < scaled.size(); ++i) trace += fmt::format("{}{:.3g}@s={:.1f}", i ? ", " : "", scaled[i], s[i]);
    return {ok, fmt::format("{} frames, sup {:.3g}, worst consecutive rise {:+.1f}% (allowed 10%): {}", scaled.size(), sup,
                            100.0 * worst_rise, trace)};
}

Verdict theta_dynamics(const fs::path& dir) {
    const auto& run = default_run(dir);
    double lo = INFINITY, hi = 0.0;
    for (const auto& r : run.rows) {
        lo = std::min(lo, r.theta);
        hi = std::max(hi, r.theta);
    }
    const ThetaStar ts = theta_star(run.rows, run.T_est);
    const bool ok = lo > 0.0 && std::isfinite(hi) && ts.converged && ts.eps_hat > 0.0;
    return {ok, fmt::format("theta in [{:.5g}, {:.5g}]; theta* {:.6g}; eps_hat {:.4f} (R^2 {:.4f}, {} samples)", lo, hi,
                            ts.theta_star, ts.eps_hat, ts.fit.r_squared, ts.fit.samples)};
}

Verdict final_profile(const fs::path& dir) {
    const auto& run = default_run(dir);
    const auto& P = run.config.params;
    const Snapshot& last = run.snapshots.back();
    const FitResult f = final_profile_check(last.u, last.t, run.T_est, P);
    const double target = -1.0 / (P.p - 1.0);
    const bool ok = std::abs(f.exponent - target) <= 0.1 * std::abs(target);
    return {ok, fmt::format("slope {:.5f} vs {:.1f} (10%), {} nodes on [{:.3g}, {:.3g}], R^2 {:.6f}", f.exponent, target,
                            f.samples, f.window_lo, f.window_hi, f.r_squared)};
}

Verdict lk_regimes(const fs::path& dir) {
    const auto& run = default_run(dir);
    const auto& P = run.config.params;
    std::map<double, std::vector<LkSample>> samples;
    for (const auto& sn : run.snapshots) {
        for (double k : {1.0, 1.5, 2.0}) samples[k].push_back({sn.t, sn.sup_u, lk_norm(sn.u, k, P)});
    }
    const LkFit k1 = fit_lk(samples[1.0], 1.0, run.T_est, P, LkRegime::subcritical);
    const LkFit k2 = fit_lk(samples[2.0], 2.0, run.T_est, P, LkRegime::supercritical);
    const LkFit k15 = fit_lk(samples[1.5], 1.5, run.T_est, P, LkRegime::critical);
    const bool ok = k1.verdict && k2.verdict && k15.verdict;
    return {ok, fmt::format("k=1: sup {:.4g}, trend slope {:.3f} [{}]; k=2: exponent {:.4f} vs -0.5 [{}]; "
                            "k=3/2: ratio {:.4g}, spread {:.3f} (allowed 1.10), log-slope {:.3f} vs 2.5 [{}]",
                            k1.sup_norm, k1.fit.exponent, k1.verdict ? "ok" : "fail", k2.fit.exponent,
                            k2.verdict ? "ok" : "fail", k15.last_ratio, k15.ratio_spread, k15.fit.exponent,
                            k15.verdict ? "ok" : "fail")};
}

Verdict membership(const fs::path& dir) {
    // Constructed data in its own frame (blowup time T).
    RunConfig c;
    const ModelParams& P = c.params;
    const GridPtr grid = build_grid(P.radius, c.grid.nodes, c.grid.min_spacing);
    const RadialField U0 = build_initial(InitialDataSpec{0.0, {}, P}, grid);
    const double s0 = -std::log(P.T);
    StateHistory h;
    h.T_est = P.T;
    h.U0 = U0;
    h.entries.push_back(make_history_entry(U0, 0.0, theta_of_U(U0, P), P.T, P,
                                           uniform_y_grid(frame_y_max(s0, P.K0))));
    const ShrinkingSetReport at0 = check_membership(h, std::size_t{0}, P);

    const json m = read_json_file(dir / "reports" / "membership.json");
    std::size_t frames = 0, failing = 0;
    double min_margin = INFINITY;
    std::string worst;
    for (const auto& f : m.at("frames")) {
        ++frames;
        bool frame_ok = true;
        for (const auto& r : f.at("records")) {
            const double margin = r.at("threshold").get<double>() - r.at("measured").get<double>();
            if (margin < min_margin) {
                min_margin = margin;
                worst = fmt::format("{} at s={:.2f}", r.at("clause").get<std::string>(), f.at("s").get<double>());
            }
            frame_ok = frame_ok && margin >= 0.0 && r.at("pass").get<bool>();
        }
        failing += frame_ok ? 0 : 1;
    }
    const bool ok = at0.pass() && frames > 0 && failing == 0;
    return {ok, fmt::format("t=0 data: {} (min margin {:.3g}); run: {}/{} frames pass, min margin {:.3g} ({}); "
                            "constants A={} delta0={} C0={} eta0={:g} alpha0={}",
                            at0.pass() ? "pass" : "FAIL", at0.min_margin(), frames - failing, frames, min_margin, worst,
                            P.A, P.delta0, P.C0, P.eta0, P.alpha0)};
}

Verdict symmetry(const fs::path& dir) {
    double q1 = 0.0, off = 0.0;
    std::size_t frames = 0;
    for (std::size_t i = 0;; ++i) {
        const fs::path path = dir / "reports" / fmt::format("decomposition_{:03}.json", i);
        if (!fs::exists(path)) break;
        ++frames;
        const json d = read_json_file(path);
        for (const auto& v : d.at("q1")) q1 = std::max(q1, std::abs(v.get<double>()));
        const auto& q2 = d.at("q2");
        for (std::size_t a = 0; a < q2.size(); ++a) {
            for (std::size_t b = 0; b < q2.size(); ++b) {
                if (a != b) off = std::max(off, std::abs(q2[a][b].get<double>()));
            }
        }
    }
    const bool ok = frames > 0 && q1 < 1e-10 && off < 1e-10;
    return {ok, fmt::format("{} frames: max |q1| {:.2e}, max off-diagonal |q2| {:.2e}", frames, q1, off)};
}

Verdict entry_asymptotics() {
    const ModelParams P;
    auto ratio = [&](double x) {
        const EntryTime e = t_of_x(x, P.T, P.K0);
        return e.varrho * P.K0 * P.K0 * std::abs(std::log(x)) / (8.0 * x * x);
    };
    const double r4 = ratio(1e-4), r6 = ratio(1e-6);
    const bool in_band = r4 >= 0.8 && r4 <= 1.2;
    const bool closer = std::abs(r6 - 1.0) < std::abs(r4 - 1.0);
    return {in_band && closer, fmt::format("ratio {:.4f} at |x|=1e-4 (band [0.8,1.2]: {}), {:.4f} at 1e-6 (closer: {})",
                                           r4, in_band ? "in" : "OUT", r6, closer ? "yes" : "no")};
}

Verdict g_decay(const fs::path& dir) {
    const json d = read_json_file(dir / "reports" / "diagnostics.json");
    const auto& g = d.at("G_decay");
    const double slope = g.at("slope").get<double>();
    return {slope <= -0.05, fmt::format("d ln||G|| / ds = {:.4f} (R^2 {:.4f}), required <= -0.05", slope,
                                        g.at("r_squared").get<double>())};
}

Verdict oracles() {
    // Antiderivatives of (-ln s)^n s^m with c = m + 1, L = -ln s:
    // n=0: s^c / c; n=1: s^c (L/c + 1/c^2); n=2: s^c (L^2/c + 2L/c^2 + 2/c^3).
    auto F = [](double s, int n, double m) {
        const double c = m + 1.0, L = -std::log(s), sc = std::pow(s, c);
        if (n == 0) return sc / c;
        if (n == 1) return sc * (L / c + 1.0 / (c * c));
        return sc * (L * L / c + 2.0 * L / (c * c) + 2.0 / (c * c * c));
    };
    struct Case {
        double a, b;
        int n;
        double m;
    };
    const std::vector<Case> cases = {
        {1e-6, 1e-2, 1, -0.5}, {1e-6, 1e-2, 0, -0.5}, {1e-4, 0.5, 2, -0.25}, {1e-3, 0.1, 1, -1.5}, {1e-5, 1e-3, 2, -0.9}};
    double fi = 0.0;
    for (const auto& k : cases) {
        const double exact = F(k.b, k.n, k.m) - F(k.a, k.n, k.m);
        fi = std::max(fi, std::abs(fundamental_integral(k.a, k.b, k.n, k.m).value - exact) / std::abs(exact));
    }

    const GridPtr g = build_grid(1.0, 4000, 1.0 / 4000.0);
    const double m1 = mean_power_integral(RadialField::sample(g, [](double r) { return r; }), 1.0, 3);
    const double m2 = mean_power_integral(RadialField::sample(g, [](double r) { return r * r; }), 2.0, 1);
    const double m3 = mean_power_integral(RadialField::sample(g, [](double) { return 2.5; }), 1.7, 3);
    const double mp = std::max({std::abs(m1 - 0.75), std::abs(m2 - 0.2), std::abs(m3 - std::pow(2.5, 1.7))});

    std::vector<double> green;
    for (std::size_t n = 200; n <= 3200; n *= 2) {
        const GridPtr gg = build_grid(1.0, n, 1.0 / static_cast<double>(n));
        const RadialField f = RadialField::sample(gg, [](double r) { return 2.0 + std::cos(std::numbers::pi * r); });
        green.push_back(std::abs(green_identity_residual(f, 0.5, 3)));
    }
    bool decays = true;
    for (std::size_t i = 1; i < green.size(); ++i) decays = decays && green[i] < green[i - 1];
    decays = decays && green.back() < 0.25 * green.front();

    const bool ok = fi < 1e-8 && mp < 1e-6 && decays;
    return {ok, fmt::format("fundamental integral max rel. error {:.2e}; mean power max error {:.2e}; Green residual "
                            "{:.2e} -> {:.2e} over 16x refinement",
                            fi, mp, green.front(), green.back())};
}

Verdict gamma_affinity(const fs::path& scratch) {
    RunConfig base;
    base.output_dir = fs::absolute(scratch);
    base.overwrite = true;
    const std::vector<double> d0 = {-0.5, 0.0, 0.5}, d1 = {-1.0, 0.0, 1.0};
    cmd_sweep(base, grid_d0_d1(d0, d1), true);

    // Parse the summary table the sweep wrote.
    std::ifstream in(base.output_dir / "summary.csv");
    std::string line;
    std::getline(in, line);
    std::vector<std::array<double, 3>> X;
    std::vector<double> q0, q1;
    while (std::getline(in, line)) {
        std::vector<std::string> f;
        std::stringstream ss(line);
        for (std::string tok; std::getline(ss, tok, ',');) f.push_back(tok);
        if (f.size() < 13 || f[6] != "ok") throw std::runtime_error("sweep cell failed: " + line);
        const double a = std::stod(f[1]);
        const double b = f[2].empty() ? 0.0 : std::stod(f[2].substr(0, f[2].find(';')));
        X.push_back({1.0, a, b});
        q0.push_back(std::stod(f[11]));
        q1.push_back(std::stod(f[12].substr(0, f[12].find(';'))));
    }
    Eigen::MatrixXd A(static_cast<Eigen::Index>(X.size()), 3);
    for (std::size_t i = 0; i < X.size(); ++i) {
        for (int j = 0; j < 3; ++j) A(static_cast<Eigen::Index>(i), j) = X[i][static_cast<std::size_t>(j)];
    }
    auto deviation = [&](const std::vector<double>& v) {
        const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
        const Eigen::VectorXd coef = A.colPivHouseholderQr().solve(y);
        return (A * coef - y).cwiseAbs().maxCoeff() / std::max(y.cwiseAbs().maxCoeff(), 1e-300);
    };
    const double dev0 = deviation(q0), dev1 = deviation(q1);
    const bool ok = X.size() == 9 && dev0 < 1e-8 && dev1 < 1e-8;
    return {ok, fmt::format("{} sweep cells; affine-fit deviation q0 {:.2e}, q1 {:.2e} (relative)", X.size(), dev0, dev1)};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Acceptance criteria for the blowup lab"};
    fs::path run_dir = "acceptance_runs/default";
    int only = 0;
    bool do_prepare = false;
    app.add_option("--run-dir", run_dir, "Default-run directory");
    app.add_option("--criterion", only, "Evaluate one criterion (1-13)")->check(CLI::Range(1, 13));
    app.add_flag("--prepare", do_prepare, "Run the default experiment into --run-dir and exit");
    CLI11_PARSE(app, argc, argv);

    try {
        if (do_prepare) return prepare(run_dir);
    } catch (const std::exception& e) {
        fmt::print("prepare failed: {}\n", e.what());
        return 1;
    }

    const fs::path sweep_dir = run_dir.parent_path() / "gamma_sweep";
    const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
        {"spectral correctness", spectral},
        {"homogeneous-mode oracle", homogeneous},
        {"blowup rate", [&] { return blowup_rate(run_dir); }},
        {"profile convergence", [&] { return profile_convergence(run_dir); }},
        {"theta dynamics", [&] { return theta_dynamics(run_dir); }},
        {"final profile", [&] { return final_profile(run_dir); }},
        {"L^k regimes", [&] { return lk_regimes(run_dir); }},
        {"shrinking-set membership", [&] { return membership(run_dir); }},
        {"radial symmetry null modes", [&] { return symmetry(run_dir); }},
        {"entry-time asymptotics", entry_asymptotics},
        {"G decay", [&] { return g_decay(run_dir); }},
        {"oracle suite", oracles},
        {"Gamma-map affinity", [&] { return gamma_affinity(sweep_dir); }},
    };

    bool all = true;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int id = static_cast<int>(i) + 1;
        if (only != 0 && id != only) continue;
        Verdict v;
        try {
            v = criteria[i].second();
        } catch (const std::exception& e) {
            v = {false, std::string("error: ") + e.what()};
        }
        all = all && v.pass;
        fmt::print("criterion {:>2} {} {}: {}\n", id, v.pass ? "PASS" : "FAIL", criteria[i].first, v.detail);
        std::fflush(stdout);
    }
    return all ? 0 : 1;
}
