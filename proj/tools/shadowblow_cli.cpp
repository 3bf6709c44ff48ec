// Command-line front end: simulate, check, sweep, diagnose, oracle.
#include <cmath>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "shadowblow/diagnostics.hpp"
#include "shadowblow/error.hpp"
#include "shadowblow/experiment.hpp"
#include "shadowblow/hermite.hpp"
#include "shadowblow/radial_grid.hpp"

using namespace shadowblow;

namespace {

RunConfig config_or_default(const std::string& path) { return path.empty() ? RunConfig{} : load_config(path); }

int do_simulate(const std::string& config_path, const std::string& output, bool overwrite) {
    RunConfig c = config_or_default(config_path);
    if (!output.empty()) c.output_dir = output;
    if (overwrite) c.overwrite = true;
    const RunSummary s = cmd_simulate(c);
    fmt::print("run directory: {}\n", s.dir.string());
    for (const auto& st : s.stages) fmt::print("  {:<14} {}{}\n", st.name, st.ok ? "ok" : "FAILED", st.ok ? "" : ": " + st.error);
    fmt::print("T_est = {:.10g}  theta* = {:.8g}  frames = {}  membership pass rate = {:.3g}\n", s.T_est, s.theta_star,
               s.frames, s.membership_pass_rate);
    return s.ok ? 0 : 1;
}

int do_check(const std::string& dir, std::optional<double> t, std::optional<double> s) {
    const ShrinkingSetReport rep = cmd_check(dir, t, s);
    fmt::print("{}", format_report(rep));
    return rep.pass() ? 0 : 1;
}

int do_diagnose(const std::string& dir) {
    const json rep = cmd_diagnose(dir);
    const auto& b = rep["blowup"];
    fmt::print("T_est          {:.10g}\n", b["T_est"].get<double>());
    if (rep["rate_fit"].contains("slope_ratio")) {
        fmt::print("rate fit       R^2 = {:.8f}  |slope|/((p-1) theta) = {:.5f}\n",
                   rep["rate_fit"]["r_squared"].get<double>(), rep["rate_fit"]["slope_ratio"].get<double>());
    }
    fmt::print("theta*         {:.8g}  eps_hat = {:.4g}\n", rep["theta"]["theta_star"].get<double>(),
               rep["theta"]["eps_hat"].get<double>());
    if (rep["final_profile"].contains("exponent")) {
        fmt::print("final profile  slope = {:.5g} (expected {:.5g})\n", rep["final_profile"]["exponent"].get<double>(),
                   rep["final_profile"]["expected_exponent"].get<double>());
    }
    for (const auto& item : rep["lk"]) {
        if (item.contains("fit")) {
            fmt::print("L^{:<4} {:<13} slope = {:.5g} verdict = {}\n", item["k"].get<double>(),
                       item["regime"].get<std::string>(), item["fit"]["exponent"].get<double>(),
                       item["verdict"].get<bool>());
        } else {
            fmt::print("L^{:<4} {}\n", item["k"].get<double>(), item["error"].get<std::string>());
        }
    }
    if (rep["G_decay"].contains("slope")) fmt::print("G decay        slope = {:.5g}\n", rep["G_decay"]["slope"].get<double>());
    return 0;
}

int do_oracle(const std::string& what, double a, double b, double n, double m, int dim, std::size_t nodes) {
    if (what == "fundamental") {
        const FundamentalIntegral f = fundamental_integral(a, b, n, m);
        fmt::print("{{\"value\": {:.17g}, \"bound_ratio\": {:.17g}}}\n", f.value, f.bound_ratio);
    } else if (what == "hermite") {
        // Gram matrix of h_0..h_4 in L^2_rho, normalised.
        for (int i = 0; i <= 4; ++i) {
            for (int j = 0; j <= 4; ++j) {
                const double g = weighted_inner([i](std::span<const double> y) { return hermite(i, y[0]); },
                                                [j](std::span<const double> y) { return hermite(j, y[0]); }, 1);
                fmt::print("{:>12.3e}", g / std::sqrt(hermite_norm_sq(i) * hermite_norm_sq(j)));
            }
            fmt::print("\n");
        }
    } else if (what == "mean-power") {
        // mean of (x^2)^(k/2) over the unit ball against N/(N+k).
        const GridPtr grid = build_grid(1.0, nodes, 1.0 / static_cast<double>(nodes));
        const RadialField f = RadialField::sample(grid, [](double x) { return x * x; });
        const double k = n;
        const double got = mean_power_integral(f, k / 2.0, dim);
        fmt::print("{{\"mean\": {:.17g}, \"exact\": {:.17g}}}\n", got, dim / (dim + k));
    } else if (what == "green") {
        for (std::size_t nn = nodes; nn <= 8 * nodes; nn *= 2) {
            const GridPtr grid = build_grid(1.0, nn, 1.0 / static_cast<double>(nn));
            const RadialField f = RadialField::sample(grid, [](double x) { return std::cos(2.0 * x) + x * x * x; });
            fmt::print("nodes {:>6}  residual {:.6e}\n", nn, green_identity_residual(f, 0.7, dim));
        }
    } else {
        throw ValidationError("oracle", "unknown oracle '" + what + "' (fundamental, hermite, mean-power, green)");
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Numerical lab for non-local blowup in the shadow Gierer-Meinhardt system"};
    app.require_subcommand(1);

    std::string config_path, output, run_dir;
    bool overwrite = false;
    auto* sim = app.add_subcommand("simulate", "Run the full pipeline into a run directory");
    sim->add_option("-c,--config", config_path, "JSON run configuration")->check(CLI::ExistingFile);
    sim->add_option("-o,--output", output, "Output directory (relative paths go under SHADOWBLOW_OUTPUT_ROOT)");
    sim->add_flag("--overwrite", overwrite, "Clear a non-empty output directory");

    std::optional<double> t_opt, s_opt;
    auto* check = app.add_subcommand("check", "Shrinking-set membership at a stored frame");
    check->add_option("run_dir", run_dir, "Run directory")->required();
    auto* t_flag = check->add_option("-t,--time", t_opt, "Physical time t");
    check->add_option("-s,--similarity-time", s_opt, "Similarity time s = -ln(T_est - t)")->excludes(t_flag);

    std::vector<double> d0s, d1s, ps, rs, gammas;
    bool gamma_only = false;
    unsigned threads = 0;
    auto* sweep = app.add_subcommand("sweep", "Run a grid of configurations");
    sweep->add_option("-c,--config", config_path, "Base JSON configuration")->check(CLI::ExistingFile);
    sweep->add_option("-o,--output", output, "Sweep directory");
    sweep->add_option("--d0", d0s, "d0 values");
    sweep->add_option("--d1", d1s, "d1 values along the first axis");
    sweep->add_option("--p", ps, "p values");
    sweep->add_option("--r", rs, "r values");
    sweep->add_option("--gamma", gammas, "gamma values");
    sweep->add_flag("--gamma-only", gamma_only, "Only evaluate the Gamma map per cell");
    sweep->add_option("--threads", threads, "Worker threads (0 = hardware)");
    sweep->add_flag("--overwrite", overwrite, "Clear a non-empty sweep directory");

    auto* diag = app.add_subcommand("diagnose", "Recompute the diagnostics report of a run");
    diag->add_option("run_dir", run_dir, "Run directory")->required();

    std::string what;
    double a = 0.1, b = 0.5, n = 1.0, m = -0.5;
    int dim = 3;
    std::size_t nodes = 256;
    auto* oracle = app.add_subcommand("oracle", "Closed-form and quadrature oracles");
    oracle->add_option("which", what, "fundamental | hermite | mean-power | green")->required();
    oracle->add_option("--a", a, "Lower limit (fundamental)");
    oracle->add_option("--b", b, "Upper limit (fundamental)");
    oracle->add_option("--n", n, "Log power (fundamental) or k (mean-power)");
    oracle->add_option("--m", m, "Power of s (fundamental)");
    oracle->add_option("--dim", dim, "Dimension");
    oracle->add_option("--nodes", nodes, "Mesh nodes");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*sim) return do_simulate(config_path, output, overwrite);
        if (*check) {
            if (!t_opt && !s_opt) throw ValidationError("time", "give --time or --similarity-time");
            return do_check(run_dir, t_opt, s_opt);
        }
        if (*sweep) {
            RunConfig base = config_or_default(config_path);
            if (!output.empty()) base.output_dir = output;
            if (overwrite) base.overwrite = true;
            const bool exps = !ps.empty() || !rs.empty() || !gammas.empty();
            if (exps && (!d0s.empty() || !d1s.empty())) {
                throw ValidationError("sweep", "sweep either (d0, d1) or (p, r, gamma), not both");
            }
            std::vector<SweepCell> cells;
            if (exps) {
                if (ps.empty()) ps = {base.params.p};
                if (rs.empty()) rs = {base.params.r};
                if (gammas.empty()) gammas = {base.params.gamma};
                cells = grid_exponents(ps, rs, gammas);
            } else {
                if (d0s.empty()) d0s = {base.d0};
                if (d1s.empty()) d1s = {0.0};
                cells = grid_d0_d1(d0s, d1s);
            }
            const auto rows = cmd_sweep(base, cells, gamma_only, threads);
            std::size_t failed = 0;
            for (const auto& r : rows) {
                failed += r.ok ? 0 : 1;
                fmt::print("cell {:>3}  {:<6} {}\n", r.index, r.ok ? "ok" : "failed", r.error);
            }
            fmt::print("{} of {} cells completed\n", rows.size() - failed, rows.size());
            return failed == 0 ? 0 : 1;
        }
        if (*diag) return do_diagnose(run_dir);
        if (*oracle) return do_oracle(what, a, b, n, m, dim, nodes);
    } catch (const NotFoundError& e) {
        fmt::print(stderr, "not found: {}\n", e.what());
        return 3;
    } catch (const UnavailableSampleError& e) {
        fmt::print(stderr, "unavailable sample: {}\n", e.what());
        return 4;
    } catch (const ValidationError& e) {
        fmt::print(stderr, "invalid {}: {}\n", e.field(), e.what());
        return 2;
    } catch (const std::exception& e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return 1;
    }
    return 0;
}
