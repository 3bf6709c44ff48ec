#include "shadowblow/nonlocal_solver.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <fmt/format.h>

#include "shadowblow/error.hpp"
#include "shadowblow/fit.hpp"

namespace shadowblow {

double effective_dt_max(const SolverControls& controls, const ModelParams& params) {
    return controls.dt_max > 0.0 ? controls.dt_max : 1e-4 * params.T;
}

double theta_of_u(const RadialField& u, const ModelParams& params) {
    const double m = mean_power_integral(u, params.r, params.dim);
    if (!(m > 0.0)) throw SingularThetaError("mean of u^r is not positive");
    return std::pow(m, -params.gamma);
}

double theta_of_U(const RadialField& U, const ModelParams& params) {
    const double a = theta_U_exponent(params);
    const double m = mean_power_integral(U, params.r, params.dim);
    if (!(m > 0.0)) throw SingularThetaError("mean of U^r is not positive");
    return std::pow(m, -a);
}

double theta_prime(const RadialField& U, const ModelParams& params) {
    const double theta = theta_of_U(U, params);
    const double r = params.r;
    const RadialOperator op(U.grid(), params.dim);
    const std::size_t n = U.size();
    std::vector<double> ur(n), reaction(n), green(n, 0.0);
    const bool need_gradient = r != 1.0;
    const RadialField g = need_gradient ? gradient(U) : U;
    for (std::size_t i = 0; i < n; ++i) {
        ur[i] = std::pow(U[i], r);
        reaction[i] = std::pow(U[i], params.p - 1.0 + r);
        if (need_gradient) green[i] = std::pow(U[i], r - 2.0) * g[i] * g[i];
    }
    const double m = op.mean(ur);
    const double x = (1.0 - r) * (need_gradient ? op.mean(green) : 0.0) + op.mean(reaction);
    return -r * params.gamma * theta * (x - m) / m;
}

SolverState make_state(RadialField u0, const ModelParams& params, double dt) {
    SolverState s;
    s.theta = theta_of_u(u0, params);
    s.u = std::move(u0);
    s.dt = dt;
    return s;
}

NonlocalSolver::NonlocalSolver(GridPtr grid, const ModelParams& params, double clamp_tolerance)
    : op_(std::move(grid), params.dim), params_(params), clamp_tolerance_(clamp_tolerance) {}

SolverState NonlocalSolver::step(const SolverState& state, double dt) const {
    if (!(dt > 0.0)) throw DomainError("time step must be positive");
    std::vector<double> v(state.u.values().begin(), state.u.values().end());
    for (double& x : v) x += dt * state.theta * std::pow(x, params_.p);
    op_.solve_shifted(1.0 + dt, dt, v);
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!std::isfinite(v[i])) {
            throw DivergenceError(fmt::format("non-finite value at node {} (t={:.17g}, step {})", i,
                                              state.t + dt, state.step_index + 1));
        }
        if (v[i] < 0.0) {
            if (v[i] < -clamp_tolerance_) {
                throw DivergenceError(fmt::format("negative undershoot {:.3e} at node {} (step {})", v[i], i,
                                                  state.step_index + 1));
            }
            v[i] = 0.0;
        }
    }
    SolverState next;
    next.t = state.t + dt;
    next.u = RadialField(state.u.grid(), std::move(v));
    next.theta = theta_of_u(next.u, params_);
    next.dt = dt;
    next.step_index = state.step_index + 1;
    return next;
}

SolverState step(const SolverState& state, const ModelParams& params) {
    NonlocalSolver solver(state.u.grid(), params);
    return solver.step(state, state.dt);
}

namespace {

TrajectoryRow make_row(const SolverState& s, const ModelParams& params) {
    TrajectoryRow row;
    row.step = s.step_index;
    row.t = s.t;
    row.dt = s.dt;
    row.sup_u = sup_norm(s.u);
    row.theta = s.theta;
    std::vector<double> U(s.u.values().begin(), s.u.values().end());
    const double scale = std::pow(s.theta, 1.0 / (params.p - 1.0));
    for (double& x : U) x *= scale;
    row.theta_prime_formula = theta_prime(RadialField(s.u.grid(), std::move(U)), params);
    return row;
}

Snapshot make_snapshot(const SolverState& s) {
    return Snapshot{s.step_index, s.t, s.theta, sup_norm(s.u), s.u};
}

long next_level(double sup_u, int per_decade) {
    return static_cast<long>(std::floor(std::log10(sup_u) * per_decade)) + 1;
}

void fill_theta_fd(std::vector<TrajectoryRow>& rows) {
    const std::size_t n = rows.size();
    if (n < 2) return;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t a = i == 0 ? 0 : i - 1;
        const std::size_t b = i + 1 < n ? i + 1 : n - 1;
        rows[i].theta_prime_fd = (rows[b].theta - rows[a].theta) / (rows[b].t - rows[a].t);
    }
}

}  // namespace

Trajectory run_to_blowup(const RadialField& u0, const ModelParams& params, const SolverControls& controls) {
    if (!check_turing(params).valid) throw ValidationError("params", "Turing condition violated");
    if (controls.snapshots_per_decade < 1) throw ValidationError("snapshots_per_decade", "must be positive");
    const double dt_max = effective_dt_max(controls, params);
    const NonlocalSolver solver(u0.grid(), params, controls.clamp_tolerance);

    Trajectory traj;
    SolverState state = make_state(u0, params, 0.0);
    traj.rows.push_back(make_row(state, params));
    traj.snapshots.push_back(make_snapshot(state));
    long level = next_level(traj.rows.back().sup_u, controls.snapshots_per_decade);

    while (true) {
        const double sup = traj.rows.back().sup_u;
        if (sup >= controls.blowup_threshold) {
            traj.outcome = RunOutcome::blowup;
            break;
        }
        if (state.t >= controls.t_max) {
            traj.outcome = RunOutcome::no_blowup;
            break;
        }
        double dt = std::min(dt_max, controls.c_dt / (state.theta * std::pow(sup, params.p - 1.0)));
        dt = std::min(dt, controls.t_max - state.t);
        state = solver.step(state, dt);
        traj.rows.push_back(make_row(state, params));
        const double now = traj.rows.back().sup_u;
        if (now >= std::pow(10.0, static_cast<double>(level) / controls.snapshots_per_decade)) {
            traj.snapshots.push_back(make_snapshot(state));
            level = next_level(now, controls.snapshots_per_decade);
        }
    }
    if (traj.snapshots.back().step != state.step_index) traj.snapshots.push_back(make_snapshot(state));
    fill_theta_fd(traj.rows);
    return traj;
}

BlowupFit estimate_blowup_time(std::span<const TrajectoryRow> rows, double p, double window_decades,
                               double exclude_decades) {
    if (rows.empty()) throw FitUnavailableError("empty trajectory");
    double lo = rows.front().sup_u, hi = rows.front().sup_u;
    for (const auto& r : rows) {
        lo = std::min(lo, r.sup_u);
        hi = std::max(hi, r.sup_u);
    }
    const double u_stop = rows.back().sup_u;
    const double needed = window_decades + exclude_decades;
    if (!(lo > 0.0) || std::log10(hi / lo) < needed) {
        throw FitUnavailableError(fmt::format("sup u spans {:.2f} decades, need {:.2f}",
                                              lo > 0.0 ? std::log10(hi / lo) : 0.0, needed));
    }
    const double u_min = u_stop * std::pow(10.0, -needed);
    const double u_max = u_stop * std::pow(10.0, -exclude_decades);
    std::vector<double> t, y;
    for (const auto& r : rows) {
        if (r.sup_u >= u_min && r.sup_u <= u_max) {
            t.push_back(r.t);
            y.push_back(std::pow(r.sup_u, 1.0 - p));
        }
    }
    if (t.size() < 3) throw FitUnavailableError("fewer than three samples in the fit window");
    const LinearFit line = fit_line(t, y);
    if (!(line.slope < 0.0)) throw FitUnavailableError("sup u^(1-p) is not decreasing in the window");
    BlowupFit out;
    out.slope = line.slope;
    out.intercept = line.intercept;
    out.T_est = -line.intercept / line.slope;
    if (!(out.T_est > rows.back().t)) {
        throw FitUnavailableError(fmt::format("fitted root {:.17g} precedes the last sample", out.T_est));
    }
    out.r_squared = line.r_squared;
    double mean = 0.0;
    for (double v : y) mean += v;
    mean /= static_cast<double>(y.size());
    out.fit_residual = line.rms / mean;
    out.t_begin = t.front();
    out.t_end = t.back();
    out.samples = t.size();
    return out;
}

}  // namespace shadowblow
