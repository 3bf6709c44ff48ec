#include "shadowblow/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <fmt/format.h>
#include <openssl/evp.h>

#include "shadowblow/blowup_data.hpp"
#include "shadowblow/diagnostics.hpp"
#include "shadowblow/error.hpp"
#include "shadowblow/similarity.hpp"

namespace shadowblow {

namespace {

constexpr int kFormatVersion = 1;

void check_keys(const json& j, std::string_view where, std::initializer_list<std::string_view> allowed) {
    if (!j.is_object()) throw ValidationError(std::string(where), "must be a JSON object");
    for (const auto& [key, _] : j.items()) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
            throw ValidationError(fmt::format("{}.{}", where, key), "unknown key");
        }
    }
}

template <class T>
void read_opt(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

std::string g17(double v) { return fmt::format("{:.17g}", v); }

std::string join(std::span<const double> v, char sep = ';') {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += sep;
        out += g17(v[i]);
    }
    return out;
}

std::string csv_quote(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c == '\n' ? ' ' : c;
    }
    return out + "\"";
}

void write_text(const fs::path& path, const std::string& text) {
    fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << text;
}

json read_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw NotFoundError("missing " + path.string());
    return json::parse(in);
}

json to_json(const ClauseRecord& r) {
    return {{"clause", r.clause}, {"region", r.region}, {"s_or_t", r.s_or_t}, {"measured", r.measured},
            {"threshold", r.threshold}, {"margin", r.margin}, {"pass", r.pass}};
}

json to_json(const ShrinkingSetReport& rep) {
    json recs = json::array();
    for (const auto& r : rep.records) recs.push_back(to_json(r));
    return {{"t", rep.t}, {"s", rep.s}, {"pass", rep.pass()}, {"min_margin", rep.min_margin()}, {"records", recs}};
}

json to_json(const FitResult& f) {
    return {{"exponent", f.exponent}, {"prefactor", f.prefactor}, {"residual", f.residual},
            {"r_squared", f.r_squared}, {"window_lo", f.window_lo}, {"window_hi", f.window_hi},
            {"samples", f.samples}};
}

json to_json(const BlowupFit& f) {
    return {{"T_est", f.T_est}, {"slope", f.slope}, {"intercept", f.intercept}, {"r_squared", f.r_squared},
            {"fit_residual", f.fit_residual}, {"t_begin", f.t_begin}, {"t_end", f.t_end}, {"samples", f.samples}};
}

json to_json(const SpectralDecomposition& d) {
    return {{"s", d.s},
            {"q0", d.q0},
            {"q1", d.q1},
            {"q2", d.q2},
            {"norms", {{"q_minus_weighted", d.q_minus_weighted()},
                       {"grad_perp_weighted", d.grad_perp_weighted()},
                       {"q_e_sup", d.q_e_sup()}}}};
}

/// Tracks stage outcomes and written files for the manifest.
class Manifest {
public:
    explicit Manifest(fs::path dir) : dir_(std::move(dir)) {}

    void add_file(const fs::path& rel) { files_.insert(rel.generic_string()); }

    void write_file(const fs::path& rel, const std::string& text) {
        write_text(dir_ / rel, text);
        add_file(rel);
    }

    void write_json(const fs::path& rel, const json& j) { write_file(rel, j.dump(2) + "\n"); }

    bool stage(const std::string& name, const std::function<void()>& body) {
        StageRecord rec{name, true, ""};
        try {
            body();
        } catch (const std::exception& e) {
            rec.ok = false;
            rec.error = e.what();
        }
        stages_.push_back(rec);
        return rec.ok;
    }

    void skip(const std::string& name, const std::string& why) { stages_.push_back({name, false, "skipped: " + why}); }

    const std::vector<StageRecord>& stages() const { return stages_; }

    void finish(const json& config, const std::string& outcome) const {
        json files = json::array();
        for (const auto& rel : files_) {
            const fs::path full = dir_ / rel;
            files.push_back({{"path", rel}, {"sha256", sha256_file(full)}, {"bytes", fs::file_size(full)}});
        }
        json stages = json::array();
        for (const auto& s : stages_) stages.push_back({{"name", s.name}, {"ok", s.ok}, {"error", s.error}});
        const json m = {{"format", kFormatVersion}, {"config", config}, {"outcome", outcome},
                        {"stages", stages}, {"files", files}};
        write_text(dir_ / "manifest.json", m.dump(2) + "\n");
    }

private:
    fs::path dir_;
    std::set<std::string> files_;
    std::vector<StageRecord> stages_;
};

std::string snapshot_name(std::size_t i) { return fmt::format("snapshots/snap_{:03}.csv", i); }
std::string frame_name(std::size_t i) { return fmt::format("frames/frame_{:03}.csv", i); }
std::string decomposition_name(std::size_t i) { return fmt::format("reports/decomposition_{:03}.json", i); }

std::string timeseries_csv(std::span<const TrajectoryRow> rows, double T_est) {
    std::string out = "step,t,dt,sup_u,theta,theta_prime_fd,theta_prime_formula,s\n";
    for (const auto& r : rows) {
        const std::string s = std::isfinite(T_est) && r.t < T_est ? g17(-std::log(T_est - r.t)) : "";
        out += fmt::format("{},{},{},{},{},{},{},{}\n", r.step, g17(r.t), g17(r.dt), g17(r.sup_u), g17(r.theta),
                           g17(r.theta_prime_fd), g17(r.theta_prime_formula), s);
    }
    return out;
}

std::vector<TrajectoryRow> parse_timeseries(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw NotFoundError("missing " + path.string());
    std::string line;
    std::getline(in, line);
    std::vector<TrajectoryRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<std::string> c;
        while (std::getline(ss, cell, ',')) c.push_back(cell);
        if (c.size() < 7) throw ValidationError("timeseries", "short row in " + path.string());
        TrajectoryRow r;
        r.step = std::stol(c[0]);
        r.t = std::stod(c[1]);
        r.dt = std::stod(c[2]);
        r.sup_u = std::stod(c[3]);
        r.theta = std::stod(c[4]);
        r.theta_prime_fd = std::stod(c[5]);
        r.theta_prime_formula = std::stod(c[6]);
        rows.push_back(r);
    }
    return rows;
}

std::string frame_csv(const SimilarityFrame& f, const ModelParams& params) {
    const auto G = G_term(f, params);
    std::string out = "y,W,w,q,V,R,G\n";
    for (std::size_t i = 0; i < f.y.size(); ++i) {
        out += fmt::format("{},{},{},{},{},{},{}\n", g17(f.y[i]), g17(f.W[i]), g17(f.w[i]), g17(f.q[i]),
                           g17(potential_V(f.y[i], f.s, params.p, params.dim)),
                           g17(remainder_R(f.y[i], f.s, params.p, params.dim)), g17(G[i]));
    }
    return out;
}

/// Everything computed from the trajectory once T_est is known.
json diagnostics_report(const RunArtifacts& run, const StateHistory& history, const BlowupFit& blowup,
                        std::string& intermediate_csv) {
    const ModelParams& P = run.config.params;
    json rep;
    rep["blowup"] = to_json(blowup);

    // Rate check over three decades of sup u.
    try {
        const BlowupFit rate = estimate_blowup_time(run.rows, P.p, 3.0, 0.5);
        json r = to_json(rate);
        r["theta_final"] = run.rows.back().theta;
        r["slope_ratio"] = std::abs(rate.slope) / ((P.p - 1.0) * run.rows.back().theta);
        rep["rate_fit"] = r;
    } catch (const Error& e) {
        rep["rate_fit"] = {{"error", e.what()}};
    }

    const ThetaStar ts = theta_star(run.rows, blowup.T_est);
    {
        // |theta'| (T - t)^{1 - e} with e = (N/2 - r/(p-1))/2.
        const double e = 0.5 * (0.5 * P.dim - P.r / (P.p - 1.0));
        double sup = 0.0;
        for (const auto& r : run.rows) {
            if (r.t < blowup.T_est) sup = std::max(sup, std::abs(r.theta_prime_formula) * std::pow(blowup.T_est - r.t, 1.0 - e));
        }
        rep["theta"] = {{"theta_star", ts.theta_star}, {"eps_hat", ts.eps_hat},        {"theta_min", ts.theta_min},
                        {"theta_max", ts.theta_max},   {"converged", ts.converged},    {"note", ts.note},
                        {"fit", to_json(ts.fit)},      {"theta_prime_scaled_sup", sup}, {"theta_prime_exponent", e}};
    }

    json inter = json::array();
    intermediate_csv = "s,intermediate_error,scaled_error\n";
    std::map<double, std::vector<LkSample>> lk;
    const std::vector<double> ks = {1.0, 1.5, 2.0};
    for (const auto& sn : run.snapshots) {
        for (double k : ks) lk[k].push_back({sn.t, sn.sup_u, lk_norm(sn.u, k, P)});
        if (!(sn.t < blowup.T_est)) continue;
        const double tau = blowup.T_est - sn.t;
        const double err = intermediate_error(sn.u, sn.t, blowup.T_est, ts.theta_star, P);
        const double scaled = err * (1.0 + std::sqrt(std::abs(std::log(tau))));
        inter.push_back({{"t", sn.t}, {"s", -std::log(tau)}, {"sup_u", sn.sup_u}, {"error", err}, {"scaled", scaled}});
        intermediate_csv += fmt::format("{},{},{}\n", g17(-std::log(tau)), g17(err), g17(scaled));
    }
    rep["intermediate_error"] = inter;

    try {
        const Snapshot& last = run.snapshots.back();
        const FitResult fp = final_profile_check(last.u, last.t, blowup.T_est, P);
        json j = to_json(fp);
        j["expected_exponent"] = -1.0 / (P.p - 1.0);
        j["theta_from_intercept"] = std::exp(-(P.p - 1.0) * fp.prefactor);
        j["theta_star"] = ts.theta_star;
        rep["final_profile"] = j;
    } catch (const Error& e) {
        rep["final_profile"] = {{"error", e.what()}};
    }

    json lkj = json::array();
    for (double k : ks) {
        json item = {{"k", k}, {"regime", std::string(to_string(lk_regime(k, P)))}};
        json norms = json::array();
        for (const auto& s : lk[k]) norms.push_back({{"t", s.t}, {"sup_u", s.sup_u}, {"norm", s.norm}});
        item["norms"] = norms;
        try {
            const LkFit f = fit_lk(lk[k], k, blowup.T_est, P, lk_regime(k, P));
            item["expected_exponent"] = f.expected_exponent;
            item["fit"] = to_json(f.fit);
            item["sup_norm"] = f.sup_norm;
            item["last_ratio"] = f.last_ratio;
            item["ratio_spread"] = f.ratio_spread;
            item["verdict"] = f.verdict;
        } catch (const Error& e) {
            item["error"] = e.what();
        }
        lkj.push_back(item);
    }
    rep["lk"] = lkj;

    std::vector<TermBoundReport> terms;
    json tj = json::array();
    json growth = json::array();
    std::vector<ModeSample> modes;
    for (const auto& e : history.entries) {
        const TermBoundReport tb = verify_term_bounds(e.frame, P);
        terms.push_back(tb);
        tj.push_back({{"s", tb.s},
                      {"sup_V", tb.sup_V},
                      {"V_expansion_scaled", tb.V_expansion_scaled},
                      {"B_quadratic_ratio", tb.B_quadratic_ratio},
                      {"R_scaled", tb.R_scaled},
                      {"R_c1", tb.R_c1},
                      {"G_sup", tb.G_sup},
                      {"F_sup", tb.F_sup}});
        const GrowthBoundReport g = growth_bound_check(e.frame.y, e.frame.q, e.frame.s, P);
        growth.push_back({{"s", g.s}, {"C_global", g.C_global}, {"C_weighted", g.C_weighted}, {"C_core", g.C_core}});
        modes.push_back({e.decomposition.s, e.decomposition.q0, e.decomposition.q1, e.decomposition.q2});
    }
    rep["term_bounds"] = tj;
    rep["growth_bounds"] = growth;
    try {
        const GDecayFit gd = fit_G_decay(terms);
        rep["G_decay"] = {{"slope", gd.slope}, {"eta", gd.eta}, {"scaled_sup", gd.scaled_sup}, {"r_squared", gd.r_squared}};
    } catch (const Error& e) {
        rep["G_decay"] = {{"error", e.what()}};
    }
    try {
        const ModeResidualReport mr = mode_ode_residuals(modes, P);
        rep["mode_residuals"] = {{"q0_scaled", mr.q0_scaled}, {"q1_scaled", mr.q1_scaled},
                                 {"q2_scaled", mr.q2_scaled}, {"samples", mr.samples}};
    } catch (const Error& e) {
        rep["mode_residuals"] = {{"error", e.what()}};
    }

    json env = json::array();
    for (const auto& r : envelope_check(history, P)) {
        env.push_back({{"item", r.item}, {"t", r.t}, {"measured", r.measured}, {"threshold", r.threshold}, {"pass", r.pass}});
    }
    rep["envelopes"] = env;

    double max_q1 = 0.0, max_offdiag = 0.0;
    for (const auto& e : history.entries) {
        for (double v : e.decomposition.q1) max_q1 = std::max(max_q1, std::abs(v));
        const auto& q2 = e.decomposition.q2;
        for (std::size_t i = 0; i < q2.size(); ++i) {
            for (std::size_t j = 0; j < q2[i].size(); ++j) {
                if (i != j) max_offdiag = std::max(max_offdiag, std::abs(q2[i][j]));
            }
        }
    }
    rep["symmetry"] = {{"max_abs_q1", max_q1}, {"max_abs_q2_offdiag", max_offdiag}};
    return rep;
}

RadialField initial_u(const RunConfig& config) {
    if (!config.initial_file.empty()) return read_field_csv(config.initial_file);
    InitialDataSpec spec{config.d0, config.d1, config.params};
    const GridPtr grid = build_grid(config.params.radius, config.grid.nodes, config.grid.min_spacing);
    const RadialField U0 = build_initial(spec, grid);
    return u_from_U(U0, theta_of_U(U0, config.params), config.params.p);
}

void prepare_dir(const fs::path& dir, bool overwrite) {
    if (fs::exists(dir)) {
        if (!fs::is_directory(dir)) throw ValidationError("output_dir", dir.string() + " is not a directory");
        if (!fs::is_empty(dir)) {
            if (!overwrite) throw ValidationError("output_dir", dir.string() + " is not empty (set overwrite)");
            for (const auto& entry : fs::directory_iterator(dir)) fs::remove_all(entry.path());
        }
    }
    fs::create_directories(dir);
}

}  // namespace

json to_json(const RunConfig& c) {
    const ModelParams& P = c.params;
    return {
        {"params",
         {{"p", P.p}, {"r", P.r}, {"gamma", P.gamma}, {"dim", P.dim}, {"radius", P.radius}, {"K0", P.K0}, {"A", P.A},
          {"delta0", P.delta0}, {"C0", P.C0}, {"eta0", P.eta0}, {"eps0", P.eps0}, {"alpha0", P.alpha0},
          {"M0", P.M0}, {"T", P.T}}},
        {"grid", {{"nodes", c.grid.nodes}, {"min_spacing", c.grid.min_spacing}}},
        {"controls",
         {{"c_dt", c.controls.c_dt}, {"dt_max", effective_dt_max(c.controls, P)},
          {"blowup_threshold", c.controls.blowup_threshold}, {"t_max", c.controls.t_max},
          {"snapshots_per_decade", c.controls.snapshots_per_decade},
          {"clamp_tolerance", c.controls.clamp_tolerance}}},
        {"initial", {{"d0", c.d0}, {"d1", c.d1}, {"file", c.initial_file}}},
        {"output_dir", c.output_dir.generic_string()},
        {"overwrite", c.overwrite},
        {"diagnostics",
         {{"frames", c.toggles.frames}, {"membership", c.toggles.membership}, {"diagnostics", c.toggles.diagnostics}}},
    };
}

RunConfig config_from_json(const json& j) {
    check_keys(j, "config", {"params", "grid", "controls", "initial", "output_dir", "overwrite", "diagnostics"});
    RunConfig c;
    if (j.contains("params")) {
        const json& p = j["params"];
        check_keys(p, "params",
                   {"p", "r", "gamma", "dim", "radius", "K0", "A", "delta0", "C0", "eta0", "eps0", "alpha0", "M0", "T"});
        ModelParams& P = c.params;
        read_opt(p, "p", P.p);
        read_opt(p, "r", P.r);
        read_opt(p, "gamma", P.gamma);
        read_opt(p, "dim", P.dim);
        read_opt(p, "radius", P.radius);
        read_opt(p, "K0", P.K0);
        read_opt(p, "A", P.A);
        read_opt(p, "delta0", P.delta0);
        read_opt(p, "C0", P.C0);
        read_opt(p, "eta0", P.eta0);
        read_opt(p, "eps0", P.eps0);
        read_opt(p, "alpha0", P.alpha0);
        read_opt(p, "M0", P.M0);
        read_opt(p, "T", P.T);
    }
    if (j.contains("grid")) {
        check_keys(j["grid"], "grid", {"nodes", "min_spacing"});
        read_opt(j["grid"], "nodes", c.grid.nodes);
        read_opt(j["grid"], "min_spacing", c.grid.min_spacing);
    }
    if (j.contains("controls")) {
        const json& k = j["controls"];
        check_keys(k, "controls",
                   {"c_dt", "dt_max", "blowup_threshold", "t_max", "snapshots_per_decade", "clamp_tolerance"});
        read_opt(k, "c_dt", c.controls.c_dt);
        read_opt(k, "dt_max", c.controls.dt_max);
        read_opt(k, "blowup_threshold", c.controls.blowup_threshold);
        read_opt(k, "t_max", c.controls.t_max);
        read_opt(k, "snapshots_per_decade", c.controls.snapshots_per_decade);
        read_opt(k, "clamp_tolerance", c.controls.clamp_tolerance);
    }
    if (j.contains("initial")) {
        check_keys(j["initial"], "initial", {"d0", "d1", "file"});
        read_opt(j["initial"], "d0", c.d0);
        read_opt(j["initial"], "d1", c.d1);
        read_opt(j["initial"], "file", c.initial_file);
    }
    if (j.contains("output_dir")) c.output_dir = j["output_dir"].get<std::string>();
    read_opt(j, "overwrite", c.overwrite);
    if (j.contains("diagnostics")) {
        check_keys(j["diagnostics"], "diagnostics", {"frames", "membership", "diagnostics"});
        read_opt(j["diagnostics"], "frames", c.toggles.frames);
        read_opt(j["diagnostics"], "membership", c.toggles.membership);
        read_opt(j["diagnostics"], "diagnostics", c.toggles.diagnostics);
    }
    return c;
}

RunConfig load_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw NotFoundError("config not found: " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ValidationError("config", e.what());
    }
    return config_from_json(j);
}

fs::path output_root() {
    const char* env = std::getenv("SHADOWBLOW_OUTPUT_ROOT");
    return env && *env ? fs::path(env) : fs::path("runs");
}

fs::path resolve_output_dir(const RunConfig& config) {
    const fs::path dir = config.output_dir.empty() ? fs::path("default") : config.output_dir;
    return dir.is_absolute() ? dir : output_root() / dir;
}

void validate(const RunConfig& c) {
    validate(c.params);
    const TuringCheck tc = check_turing(c.params);
    if (!tc.valid) {
        throw ValidationError("params", fmt::format("Turing condition violated (r/(p-1) = {:.6g}, N/2 = {:.6g}, "
                                                    "gamma r = {:.6g}, p - 1 = {:.6g})",
                                                    c.params.r / (c.params.p - 1.0), 0.5 * c.params.dim,
                                                    c.params.gamma * c.params.r, c.params.p - 1.0));
    }
    if (c.grid.nodes < 64) throw ValidationError("grid.nodes", "at least 64 nodes required");
    if (!(c.grid.min_spacing > 0.0) ||
        c.grid.min_spacing > c.params.radius / static_cast<double>(c.grid.nodes) * (1.0 + 1e-12)) {
        throw ValidationError("grid.min_spacing", "must lie in (0, radius/nodes]");
    }
    const SolverControls& k = c.controls;
    if (!(k.c_dt > 0.0)) throw ValidationError("controls.c_dt", "must be positive");
    if (!(k.dt_max >= 0.0)) throw ValidationError("controls.dt_max", "must be non-negative (0 selects 1e-4 T)");
    if (!(k.blowup_threshold > 1.0)) throw ValidationError("controls.blowup_threshold", "must exceed 1");
    if (!(k.t_max > 0.0)) throw ValidationError("controls.t_max", "must be positive");
    if (k.snapshots_per_decade < 1) throw ValidationError("controls.snapshots_per_decade", "must be positive");
    if (c.initial_file.empty()) validate(InitialDataSpec{c.d0, c.d1, c.params});
}

RunArtifacts load_run(const fs::path& run_dir) {
    if (!fs::is_directory(run_dir)) throw NotFoundError("run directory not found: " + run_dir.string());
    const json manifest = read_json(run_dir / "manifest.json");
    RunArtifacts run;
    run.config = config_from_json(manifest.at("config"));
    run.rows = parse_timeseries(run_dir / "timeseries.csv");
    const fs::path index = run_dir / "snapshots" / "index.csv";
    std::ifstream in(index);
    if (!in) throw NotFoundError("missing " + index.string());
    std::string line;
    std::getline(in, line);
    GridPtr grid;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string file, step, t, theta, sup;
        std::getline(ss, file, ',');
        std::getline(ss, step, ',');
        std::getline(ss, t, ',');
        std::getline(ss, theta, ',');
        std::getline(ss, sup, ',');
        RadialField u = grid ? read_field_csv(run_dir / file, grid) : read_field_csv(run_dir / file);
        grid = u.grid();
        run.snapshots.push_back(Snapshot{std::stol(step), std::stod(t), std::stod(theta), std::stod(sup), std::move(u)});
    }
    if (run.snapshots.empty()) throw InsufficientSamplesError("run has no snapshots");
    run.T_est = estimate_blowup_time(run.rows, run.config.params.p).T_est;
    return run;
}

RunSummary cmd_simulate(const RunConfig& config) {
    validate(config);
    RunSummary summary;
    summary.dir = resolve_output_dir(config);
    prepare_dir(summary.dir, config.overwrite);
    Manifest manifest(summary.dir);
    const json cfg = to_json(config);
    const ModelParams& P = config.params;
    manifest.write_json("config.json", cfg);

    RunArtifacts run;
    run.config = config;
    RadialField u0;
    BlowupFit blowup;
    StateHistory history;
    std::string outcome = "incomplete";

    auto finish = [&]() {
        manifest.finish(cfg, outcome);
        summary.stages = manifest.stages();
        summary.ok = std::all_of(summary.stages.begin(), summary.stages.end(), [](const StageRecord& s) { return s.ok; });
        return summary;
    };

    if (!manifest.stage("initial_data", [&] {
            u0 = initial_u(config);
            write_field_csv(summary.dir / "initial.csv", u0);
            manifest.add_file("initial.csv");
        })) {
        return finish();
    }
    if (config.initial_file.empty()) {
        manifest.stage("initial_forms", [&] {
            const InitialDataSpec spec{config.d0, config.d1, P};
            const InitialForms forms = initial_similarity_forms(spec, u0.grid());
            std::vector<double> d1 = config.d1;
            d1.resize(static_cast<std::size_t>(P.dim), 0.0);
            const GammaValue g = gamma_map(config.d0, d1, P);
            const GammaBox box = gamma_box(P);
            manifest.write_json("reports/initial.json",
                                {{"s0", forms.s0},
                                 {"consistency_error", forms.consistency_error},
                                 {"gamma", {{"q0", g.q0}, {"q1", g.q1}}},
                                 {"gamma_box",
                                  {{"d0_lo", box.d0_lo}, {"d0_hi", box.d0_hi}, {"d1_half_width", box.d1_half_width},
                                   {"encloses_zero", box.encloses_zero}, {"inside_admissible", box.inside_admissible}}}});
        });
    }
    if (!manifest.stage("solve", [&] {
            Trajectory tr = run_to_blowup(u0, P, config.controls);
            run.rows = std::move(tr.rows);
            run.snapshots = std::move(tr.snapshots);
            outcome = tr.outcome == RunOutcome::blowup ? "blowup" : "no_blowup";
            fs::create_directories(summary.dir / "snapshots");
            std::string index = "file,step,t,theta,sup_u\n";
            for (std::size_t i = 0; i < run.snapshots.size(); ++i) {
                const auto& sn = run.snapshots[i];
                write_field_csv(summary.dir / snapshot_name(i), sn.u);
                manifest.add_file(snapshot_name(i));
                index += fmt::format("{},{},{},{},{}\n", snapshot_name(i), sn.step, g17(sn.t), g17(sn.theta),
                                     g17(sn.sup_u));
            }
            manifest.write_file("snapshots/index.csv", index);
        })) {
        return finish();
    }
    const bool fitted = manifest.stage("blowup_fit", [&] {
        blowup = estimate_blowup_time(run.rows, P.p);
        run.T_est = blowup.T_est;
        summary.T_est = blowup.T_est;
    });
    manifest.write_file("timeseries.csv", timeseries_csv(run.rows, run.T_est));
    if (!fitted) return finish();

    const bool have_history = manifest.stage("frames", [&] {
        history = build_history(run.snapshots, blowup.T_est, P);
        summary.frames = history.entries.size();
        if (!config.toggles.frames) return;
        for (std::size_t i = 0; i < history.entries.size(); ++i) {
            const auto& e = history.entries[i];
            manifest.write_file(frame_name(i), frame_csv(e.frame, P));
            manifest.write_json(decomposition_name(i), to_json(e.decomposition));
        }
    });
    if (!have_history) return finish();

    if (config.toggles.membership) {
        manifest.stage("membership", [&] {
            json frames = json::array();
            std::size_t passed = 0;
            for (std::size_t i = 0; i < history.entries.size(); ++i) {
                const ShrinkingSetReport rep = check_membership(history, i, P);
                passed += rep.pass() ? 1 : 0;
                frames.push_back(to_json(rep));
            }
            summary.membership_pass_rate =
                static_cast<double>(passed) / static_cast<double>(std::max<std::size_t>(1, history.entries.size()));
            manifest.write_json("reports/membership.json",
                                {{"T_est", blowup.T_est}, {"pass_rate", summary.membership_pass_rate}, {"frames", frames}});
        });
    } else {
        manifest.skip("membership", "disabled in config");
    }
    if (config.toggles.diagnostics) {
        manifest.stage("diagnostics", [&] {
            std::string inter;
            const json rep = diagnostics_report(run, history, blowup, inter);
            summary.theta_star = rep["theta"]["theta_star"].get<double>();
            manifest.write_json("reports/diagnostics.json", rep);
            manifest.write_file("reports/intermediate_error.csv", inter);
        });
    } else {
        manifest.skip("diagnostics", "disabled in config");
    }
    return finish();
}

ShrinkingSetReport cmd_check(const fs::path& run_dir, std::optional<double> t, std::optional<double> s) {
    if (t.has_value() == s.has_value()) throw ValidationError("time", "give exactly one of t or s");
    const RunArtifacts run = load_run(run_dir);
    const ModelParams& P = run.config.params;
    const double tau = t ? run.T_est - *t : std::exp(-*s);
    if (!(tau > 0.0)) throw UnavailableSampleError("requested time is at or beyond T_est");
    const StateHistory history = build_history(run.snapshots, run.T_est, P);
    std::size_t best = 0;
    double gap = INFINITY;
    for (std::size_t i = 0; i < history.entries.size(); ++i) {
        const double g = std::abs(std::log((run.T_est - history.entries[i].t) / tau));
        if (g < gap) {
            gap = g;
            best = i;
        }
    }
    if (gap > std::log(1.01)) {
        throw UnavailableSampleError(fmt::format("no stored frame within 1% of T_est - t = {:.6g}", tau));
    }
    return check_membership(history, best, P);
}

std::string format_report(const ShrinkingSetReport& report) {
    std::string out = fmt::format("t = {:.10g}  s = {:.6g}\n", report.t, report.s);
    out += fmt::format("{:<22} {:<12} {:>14} {:>14} {:>14}  {}\n", "clause", "region", "measured", "threshold",
                       "margin", "pass");
    for (const auto& r : report.records) {
        out += fmt::format("{:<22} {:<12} {:>14.6e} {:>14.6e} {:>14.6e}  {}\n", r.clause, r.region, r.measured,
                           r.threshold, r.margin, r.pass ? "yes" : "NO");
    }
    out += fmt::format("verdict: {} (min margin {:.6e})\n", report.pass() ? "PASS" : "FAIL", report.min_margin());
    return out;
}

json cmd_diagnose(const fs::path& run_dir) {
    const RunArtifacts run = load_run(run_dir);
    const BlowupFit blowup = estimate_blowup_time(run.rows, run.config.params.p);
    const StateHistory history = build_history(run.snapshots, blowup.T_est, run.config.params);
    std::string inter;
    const json rep = diagnostics_report(run, history, blowup, inter);
    fs::create_directories(run_dir / "reports");
    write_text(run_dir / "reports" / "diagnostics.json", rep.dump(2) + "\n");
    write_text(run_dir / "reports" / "intermediate_error.csv", inter);
    return rep;
}

std::vector<SweepCell> grid_d0_d1(std::span<const double> d0, std::span<const double> d1) {
    std::vector<SweepCell> cells;
    for (double a : d0) {
        for (double b : d1) cells.push_back(SweepCell{a, {b}, {}, {}, {}});
    }
    return cells;
}

std::vector<SweepCell> grid_exponents(std::span<const double> p, std::span<const double> r,
                                      std::span<const double> gamma) {
    std::vector<SweepCell> cells;
    for (double a : p) {
        for (double b : r) {
            for (double c : gamma) cells.push_back(SweepCell{0.0, {}, a, b, c});
        }
    }
    return cells;
}

std::vector<SweepRow> cmd_sweep(const RunConfig& base, const std::vector<SweepCell>& cells, bool gamma_only,
                                unsigned threads) {
    if (cells.empty() || cells.size() > 1000) throw ValidationError("cells", "sweep needs 1 to 1000 cells");
    const fs::path root = fs::absolute(resolve_output_dir(base));
    prepare_dir(root, base.overwrite);
    std::vector<SweepRow> rows(cells.size());

    auto run_cell = [&](std::size_t i) {
        SweepRow& row = rows[i];
        row.index = i;
        row.cell = cells[i];
        try {
            RunConfig c = base;
            c.d0 = cells[i].d0;
            c.d1 = cells[i].d1;
            if (cells[i].p) c.params.p = *cells[i].p;
            if (cells[i].r) c.params.r = *cells[i].r;
            if (cells[i].gamma) c.params.gamma = *cells[i].gamma;
            // A length-1 d1 acts along the first axis.
            if (c.d1.size() == 1 && c.params.dim > 1) c.d1.resize(static_cast<std::size_t>(c.params.dim), 0.0);
            c.output_dir = root / fmt::format("cell_{:03}", i);
            c.overwrite = true;
            validate(c);
            std::vector<double> d1 = c.d1;
            d1.resize(static_cast<std::size_t>(c.params.dim), 0.0);
            const GammaValue g = gamma_map(c.d0, d1, c.params);
            row.gamma_q0 = g.q0;
            row.gamma_q1 = g.q1;
            if (gamma_only) {
                row.ok = true;
                return;
            }
            const RunSummary s = cmd_simulate(c);
            row.ok = s.ok;
            row.T_est = s.T_est;
            row.theta_star = s.theta_star;
            row.membership_pass_rate = s.membership_pass_rate;
            for (const auto& st : s.stages) {
                if (!st.ok) {
                    row.error = st.name + ": " + st.error;
                    break;
                }
            }
        } catch (const std::exception& e) {
            row.ok = false;
            row.error = e.what();
        }
    };

    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    const unsigned n = std::min<unsigned>(threads ? threads : hw, static_cast<unsigned>(cells.size()));
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < n; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < cells.size(); i = next++) run_cell(i);
        });
    }
    for (auto& th : pool) th.join();

    std::string csv = "index,d0,d1,p,r,gamma,status,error,T_est,theta_star,membership_pass_rate,gamma_q0,gamma_q1\n";
    for (const auto& row : rows) {
        const RunConfig& b = base;
        csv += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{}\n", row.index, g17(row.cell.d0), join(row.cell.d1),
                           g17(row.cell.p.value_or(b.params.p)), g17(row.cell.r.value_or(b.params.r)),
                           g17(row.cell.gamma.value_or(b.params.gamma)), row.ok ? "ok" : "failed",
                           csv_quote(row.error), g17(row.T_est), g17(row.theta_star), g17(row.membership_pass_rate),
                           g17(row.gamma_q0), join(row.gamma_q1));
    }
    write_text(root / "summary.csv", csv);
    return rows;
}

std::string sha256_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw NotFoundError("cannot read " + path.string());
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
    char buf[1 << 15];
    while (in.read(buf, sizeof buf) || in.gcount() > 0) EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(in.gcount()));
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned len = 0;
    EVP_DigestFinal_ex(ctx, md, &len);
    EVP_MD_CTX_free(ctx);
    std::string hex;
    for (unsigned i = 0; i < len; ++i) hex += fmt::format("{:02x}", md[i]);
    return hex;
}

}  // namespace shadowblow
