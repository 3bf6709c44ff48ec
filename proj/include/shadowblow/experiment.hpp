/// @file experiment.hpp
/// @brief Run configuration, the simulate/check/sweep/diagnose pipeline and
///        the run-directory layout.
#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "shadowblow/model.hpp"
#include "shadowblow/nonlocal_solver.hpp"
#include "shadowblow/shrinking_set.hpp"

namespace shadowblow {

namespace fs = std::filesystem;
using json = nlohmann::json;

/// Defaults resolve the core down to sup u ~ 1e12.
struct GridSpec {
    std::size_t nodes = 3000;
    double min_spacing = 1e-7;
};

struct DiagnosticsToggles {
    bool frames = true;
    bool membership = true;
    bool diagnostics = true;
};

struct RunConfig {
    ModelParams params;
    GridSpec grid;
    /// Runs past the solver's 1e8 default: the L^k exponents only settle
    /// within tolerance a few decades later.
    SolverControls controls{.blowup_threshold = 1e12};
    double d0 = 0.0;
    std::vector<double> d1;     ///< empty means zero
    std::string initial_file;   ///< radius,value CSV of u0; overrides (d0, d1)
    fs::path output_dir;        ///< relative paths resolve under output_root()
    bool overwrite = false;
    DiagnosticsToggles toggles;
};

/// All fields, defaults included.
json to_json(const RunConfig& config);
/// Missing keys keep their defaults; unknown keys are rejected.
RunConfig config_from_json(const json& j);
RunConfig load_config(const fs::path& path);

/// SHADOWBLOW_OUTPUT_ROOT when set, else "runs".
fs::path output_root();
fs::path resolve_output_dir(const RunConfig& config);

/// Refuses invalid parameters or Turing-violating configs before any compute.
void validate(const RunConfig& config);

struct StageRecord {
    std::string name;
    bool ok = false;
    std::string error;
};

struct RunSummary {
    fs::path dir;
    bool ok = false;
    std::vector<StageRecord> stages;
    double T_est = NAN;
    double theta_star = NAN;
    double membership_pass_rate = NAN;
    std::size_t frames = 0;
};

/// Full pipeline into the run directory. Stage failures are recorded in the
/// manifest and stop later stages; files already written are kept.
RunSummary cmd_simulate(const RunConfig& config);

/// Membership at the stored frame nearest to t (or s = -ln(T_est - t)).
/// Throws NotFoundError for a missing run and UnavailableSampleError when no
/// frame lies within 1% of the requested T_est - t.
ShrinkingSetReport cmd_check(const fs::path& run_dir, std::optional<double> t, std::optional<double> s);
std::string format_report(const ShrinkingSetReport& report);

/// Recomputes reports/diagnostics.json from stored artifacts and returns it.
json cmd_diagnose(const fs::path& run_dir);

struct SweepCell {
    double d0 = 0.0;
    std::vector<double> d1;
    std::optional<double> p, r, gamma;
};

struct SweepRow {
    std::size_t index = 0;
    SweepCell cell;
    bool ok = false;
    std::string error;
    double T_est = NAN;
    double theta_star = NAN;
    double membership_pass_rate = NAN;
    double gamma_q0 = NAN;
    std::vector<double> gamma_q1;
};

/// Runs cells concurrently (at most `threads`, 0 = hardware). With
/// `gamma_only` each cell only evaluates the Gamma map. Cell i writes to
/// <output_dir>/cell_<i>; the summary goes to <output_dir>/summary.csv.
std::vector<SweepRow> cmd_sweep(const RunConfig& base, const std::vector<SweepCell>& cells, bool gamma_only,
                                unsigned threads = 0);

/// Cartesian grid helpers for the CLI.
std::vector<SweepCell> grid_d0_d1(std::span<const double> d0, std::span<const double> d1);
std::vector<SweepCell> grid_exponents(std::span<const double> p, std::span<const double> r,
                                      std::span<const double> gamma);

/// Loaded run artifacts.
struct RunArtifacts {
    RunConfig config;
    std::vector<TrajectoryRow> rows;
    std::vector<Snapshot> snapshots;
    double T_est = NAN;
};

RunArtifacts load_run(const fs::path& run_dir);

std::string sha256_file(const fs::path& path);

}  // namespace shadowblow
