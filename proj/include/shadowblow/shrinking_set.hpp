/// @file shrinking_set.hpp
/// @brief Regions P1/P2/P3, the entry time t(x), the intermediate rescaling
///        and the membership checker for the three-region shrinking set.
#pragma once

#include <string>
#include <vector>

#include "shadowblow/hermite.hpp"
#include "shadowblow/model.hpp"
#include "shadowblow/nonlocal_solver.hpp"
#include "shadowblow/radial_grid.hpp"
#include "shadowblow/similarity.hpp"

namespace shadowblow {

struct EntryTime {
    double t_x = 0.0;
    double varrho = 0.0;  ///< T_est - t(x)
};

/// Solves |x| = (K0/4) sqrt(v |ln v|) for v = T_est - t in (0, 1/e).
EntryTime t_of_x(double absx, double T_est, double K0);

struct RegionGeometry {
    double t = 0.0;
    double T_est = 0.0;
    double p1_outer = 0.0;  ///< K0 sqrt((T-t)|ln(T-t)|)
    double p2_inner = 0.0;  ///< p1_outer / 4
    double p2_outer = 0.0;  ///< eps0
    double p3_inner = 0.0;  ///< eps0 / 4
    bool in_p1(double x) const { return x <= p1_outer; }
    bool in_p2(double x) const { return x >= p2_inner && x <= p2_outer; }
    bool in_p3(double x) const { return x >= p3_inner; }
    bool covers(double x) const { return in_p1(x) || in_p2(x) || in_p3(x); }
};

RegionGeometry region_geometry(double t, double T_est, const ModelParams& params);

/// One stored time with everything the checker needs.
struct HistoryEntry {
    double t = 0.0;
    double theta = 0.0;
    double theta_prime = 0.0;
    RadialField U;
    SimilarityFrame frame;
    SpectralDecomposition decomposition;
};

struct StateHistory {
    double T_est = 0.0;
    RadialField U0;
    std::vector<HistoryEntry> entries;  ///< increasing t
};

HistoryEntry make_history_entry(const RadialField& U, double t, double theta, double T_est,
                                const ModelParams& params, const std::vector<double>& y_uniform);

/// Converts solver snapshots with t < T_est into history entries. The frame
/// abscissa reaches 2 K0 sqrt(s) of the last usable snapshot.
StateHistory build_history(const std::vector<Snapshot>& snapshots, double T_est, const ModelParams& params);

/// rho^{1/(p-1)} U(x + xi sqrt(rho), rho tau + t(x)), x and xi along one axis.
/// Linear in time between stored entries.
double rescaled_U(const StateHistory& history, double x, double xi, double tau, const ModelParams& params);

struct ClauseRecord {
    std::string clause;
    std::string region;
    double s_or_t = 0.0;
    double measured = 0.0;
    double threshold = 0.0;
    double margin = 0.0;  ///< threshold - measured
    bool pass = false;
};

struct ShrinkingSetReport {
    double t = 0.0;
    double s = 0.0;
    std::vector<ClauseRecord> records;
    bool pass() const;
    double min_margin() const;
};

struct MembershipOptions {
    double xi_multiplier = 1.0;
    int x_per_decade = 16;
    int xi_count = 17;
    double heat_max_step = 1e-5;
};

/// Item (i) records for a decomposition at similarity time s.
std::vector<ClauseRecord> clause_p1(const SpectralDecomposition& d, const ModelParams& params);

ShrinkingSetReport check_membership(const StateHistory& history, std::size_t index, const ModelParams& params,
                                    const MembershipOptions& options = {});

/// Uses the entry whose time matches t within 1e-12 relative (or 1e-15
/// absolute); otherwise UnavailableSampleError.
ShrinkingSetReport check_membership(const StateHistory& history, double t, const ModelParams& params,
                                    const MembershipOptions& options = {});

struct GrowthBoundReport {
    double s = 0.0;
    double C_global = 0.0;    ///< sup |q| sqrt(s) / A^2
    double C_weighted = 0.0;  ///< sup |q| s^2 / (A^2 ln s (1 + |y|^3))
    double C_core = 0.0;      ///< sup_{|y| <= K0 sqrt s} |q| sqrt(s) / A
};

GrowthBoundReport growth_bound_check(std::span<const double> y, std::span<const double> q, double s,
                                     const ModelParams& params);

struct ModeSample {
    double s = 0.0;
    double q0 = 0.0;
    std::vector<double> q1;
    std::vector<std::vector<double>> q2;
};

struct ModeResidualReport {
    double q0_scaled = 0.0;  ///< max |q0' - q0| s^2
    double q1_scaled = 0.0;  ///< max |q1' - q1/2| s^2
    double q2_scaled = 0.0;  ///< max |q2' + 2 q2/s| s^3 / A
    std::size_t samples = 0;
};

ModeResidualReport mode_ode_residuals(const std::vector<ModeSample>& series, const ModelParams& params);

}  // namespace shadowblow
