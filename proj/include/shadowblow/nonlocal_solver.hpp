/// @file nonlocal_solver.hpp
/// @brief Time integration of u_t = Lap u - u + theta(t) u^p with
///        theta = (mean u^r)^(-gamma), blowup detection and T estimation.
#pragma once

#include <functional>
#include <span>
#include <vector>

#include "shadowblow/model.hpp"
#include "shadowblow/radial_grid.hpp"

namespace shadowblow {

struct SolverControls {
    double c_dt = 1e-2;
    double dt_max = 0.0;  ///< 0 selects 1e-4 * T
    double blowup_threshold = 1e8;
    double t_max = 1.0;
    int snapshots_per_decade = 2;
    double clamp_tolerance = 1e-14;
};

double effective_dt_max(const SolverControls& controls, const ModelParams& params);

struct SolverState {
    double t = 0.0;
    RadialField u;
    double theta = 1.0;
    double dt = 0.0;
    long step_index = 0;
};

double theta_of_u(const RadialField& u, const ModelParams& params);
double theta_of_U(const RadialField& U, const ModelParams& params);

/// d theta/dt from the current U via the Green form of mean(Lap U U^{r-1}).
double theta_prime(const RadialField& U, const ModelParams& params);

SolverState make_state(RadialField u0, const ModelParams& params, double dt);

/// One step: diffusion and the linear term implicit, theta*u^p explicit.
class NonlocalSolver {
public:
    NonlocalSolver(GridPtr grid, const ModelParams& params, double clamp_tolerance = 1e-14);
    SolverState step(const SolverState& state, double dt) const;

private:
    RadialOperator op_;
    ModelParams params_;
    double clamp_tolerance_;
};

/// Advances by `state.dt`.
SolverState step(const SolverState& state, const ModelParams& params);

struct TrajectoryRow {
    long step = 0;
    double t = 0.0;
    double dt = 0.0;
    double sup_u = 0.0;
    double theta = 0.0;
    double theta_prime_fd = 0.0;
    double theta_prime_formula = 0.0;
};

struct Snapshot {
    long step = 0;
    double t = 0.0;
    double theta = 0.0;
    double sup_u = 0.0;
    RadialField u;
};

enum class RunOutcome { blowup, no_blowup };

struct Trajectory {
    std::vector<TrajectoryRow> rows;
    std::vector<Snapshot> snapshots;
    RunOutcome outcome = RunOutcome::no_blowup;
};

/// Integrates until sup u reaches the threshold or t reaches t_max.
/// Snapshots are taken at t = 0, whenever sup u crosses 10^(j/per_decade),
/// and at the final state.
Trajectory run_to_blowup(const RadialField& u0, const ModelParams& params,
                         const SolverControls& controls);

struct BlowupFit {
    double T_est = 0.0;
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    double fit_residual = 0.0;  ///< rms residual relative to the window mean
    double t_begin = 0.0;
    double t_end = 0.0;
    std::size_t samples = 0;
};

/// Linear fit of sup_u^{1-p} against t over sup_u in
/// [u_stop 10^-(window+exclude), u_stop 10^-exclude]. The default one-decade
/// window keeps the drift of theta from biasing the root; T_est must land
/// after the last row.
BlowupFit estimate_blowup_time(std::span<const TrajectoryRow> rows, double p,
                               double window_decades = 1.0, double exclude_decades = 0.5);

}  // namespace shadowblow
