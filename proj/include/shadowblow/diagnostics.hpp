/// @file diagnostics.hpp
/// @brief Rate, profile, theta and L^k fits against the predicted blowup
///        behaviour, plus the fundamental-integral oracle.
#pragma once

#include <span>
#include <string>
#include <vector>

#include "shadowblow/model.hpp"
#include "shadowblow/nonlocal_solver.hpp"
#include "shadowblow/radial_grid.hpp"
#include "shadowblow/shrinking_set.hpp"

namespace shadowblow {

struct FitResult {
    double exponent = 0.0;
    double prefactor = 0.0;  ///< intercept of the log-log fit
    double residual = 0.0;   ///< rms residual
    double r_squared = 0.0;
    double window_lo = 0.0;
    double window_hi = 0.0;
    std::size_t samples = 0;
};

struct ThetaStar {
    double theta_star = 0.0;
    double eps_hat = 0.0;
    double theta_min = 0.0;
    double theta_max = 0.0;
    bool converged = false;
    std::string note;
    FitResult fit;
};

/// theta* = last sampled theta; eps_hat = slope of ln|theta - theta*| on
/// ln(T_est - t) over all rows except the last decade of T_est - t.
ThetaStar theta_star(std::span<const TrajectoryRow> rows, double T_est, int per_decade = 10);

/// sup_x |(T-t)^{1/(p-1)} u - theta*^{-1/(p-1)} phi0(x / sqrt((T-t)|ln(T-t)|))|
double intermediate_error(const RadialField& u, double t, double T_est, double theta_star, const ModelParams& params);

/// Regression of ln u against ln[(p-1)^2 x^2 / (8p |ln x|)] over
/// K0 sqrt((T-t_stop)|ln(T-t_stop)|) <= x <= eps0.
FitResult final_profile_check(const RadialField& u_final, double t_stop, double T_est, const ModelParams& params);

double lk_norm(const RadialField& u, double k, const ModelParams& params);

enum class LkRegime { subcritical, supercritical, critical };
std::string_view to_string(LkRegime r);
LkRegime lk_regime(double k, const ModelParams& params);

struct LkSample {
    double t = 0.0;
    double sup_u = 0.0;
    double norm = 0.0;  ///< ||u||_k^k
};

struct LkFit {
    LkRegime regime = LkRegime::subcritical;
    double k = 0.0;
    double expected_exponent = 0.0;
    FitResult fit;
    double sup_norm = 0.0;       ///< subcritical: sup over samples
    double last_ratio = 0.0;     ///< critical: ||u||_k^k / |ln(T-t)|^{N/2+1} at the last sample
    double ratio_spread = 0.0;   ///< critical: max/min of that ratio over the window
    bool verdict = false;
};

/// Fits in the window sup u in [u_stop 10^-(decades+0.5), u_stop 10^-0.5]
/// (`decades` = 3 for supercritical, 1 for the trend checks). Throws
/// RegimeMismatchError when `regime` does not match k.
///  - subcritical: slope of ln||u|| on ln|ln(T-t)| must stay below 1/2.
///  - supercritical: slope of ln(||u|| / |ln(T-t)|^{N/2}) on ln(T-t), within
///    15% of N/2 - k/(p-1).
///  - critical: the ratio ||u|| / |ln(T-t)|^{N/2+1} is positive and varies by
///    at most 10% over the window. The slope on ln|ln(T-t)| is reported.
LkFit fit_lk(std::span<const LkSample> samples, double k, double T_est, const ModelParams& params, LkRegime regime);

struct FundamentalIntegral {
    double value = 0.0;
    double bound_ratio = 0.0;
};

/// int_a^b (-ln s)^n s^m ds and value / ((-ln b)^n b^{1+m} + (-ln a)^n a^{1+m}).
FundamentalIntegral fundamental_integral(double a, double b, double n, double m);

struct EnvelopeRecord {
    std::string item;
    double t = 0.0;
    double measured = 0.0;
    double threshold = 0.0;
    bool pass = false;
};

/// P1 closeness scaled by (1 + sqrt|ln(T-t)|) (reported), P2 bounds on U and
/// grad U, and the lower bound 1/2 on |x| >= eps0.
std::vector<EnvelopeRecord> envelope_check(const StateHistory& history, const ModelParams& params);

}  // namespace shadowblow
