#include <CLI11.hpp>
#include <bcpatch/io.hpp>

#include <chrono>
#include <iostream>
#include <map>

using namespace bcpatch;

namespace {

class UsageError : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "usage"; }
};

enum Exit : int { kOk = 0, kUsage = 1, kNonconvergence = 2, kPrecondition = 3 };

void emit_error(const std::string& kind, const std::string& message, int code) {
    std::cerr << json{{"error", kind}, {"message", message}, {"exit_code", code}}.dump() << std::endl;
}

class Stopwatch {
public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

struct Global {
    int threads = 0;
    std::uint64_t seed = 0;
    std::string config;
    std::vector<std::string> argv;
    std::vector<CLI::App*> chain;  // selected app path, root first

    // argv without --threads, so sidecars do not depend on the thread count
    std::string echo() const {
        std::string out;
        for (std::size_t k = 0; k < argv.size(); ++k) {
            if (argv[k] == "--threads") {
                ++k;
                continue;
            }
            if (argv[k].rfind("--threads=", 0) == 0) continue;
            if (!out.empty()) out += ' ';
            out += argv[k];
        }
        return out;
    }

    // Effective option values of the selected command path.
    json effective_config() const {
        json j = json::object();
        for (const CLI::App* app : chain)
            for (const CLI::Option* opt : app->get_options()) {
                if (opt->get_lnames().empty() || opt->get_expected_min() == 0) continue;
                const std::string& key = opt->get_lnames().front();
                if (key == "config" || key == "threads" || key == "help") continue;
                if (opt->count() > 0) {
                    const auto& res = opt->results();
                    j[key] = res.size() == 1 ? json(res.front()) : json(res);
                } else {
                    j[key] = opt->get_default_str();
                }
            }
        return j;
    }

    Manifest manifest() const {
        Manifest m;
        m.argv = argv;
        m.config = effective_config();
        m.seed = seed;
        m.threads = bcpatch::threads();
        return m;
    }
};

void write_manifest(const std::string& primary, Manifest m) {
    const std::string path = primary + ".manifest.json";
    m.outputs.push_back(path);
    write_json(path, m.to_json());
}

void need(const std::string& value, const char* flag) {
    if (value.empty()) throw UsageError(std::string("missing required option ") + flag);
}

// Flat JSON config: keys are long flag names without dashes. Applied only to
// options of the selected command path that were not given on the command line.
void apply_config(const json& cfg, const std::vector<CLI::App*>& chain) {
    if (!cfg.is_object()) throw UsageError("config file must hold a flat JSON object");
    for (CLI::App* app : chain)
        for (CLI::Option* opt : app->get_options()) {
            if (opt->count() > 0 || opt->get_lnames().empty()) continue;
            const std::string& key = opt->get_lnames().front();
            if (key == "config" || key == "help") continue;
            auto it = cfg.find(key);
            if (it == cfg.end()) continue;
            auto add = [&](const json& v) {
                if (v.is_string()) opt->add_result(v.get<std::string>());
                else if (v.is_number_float()) opt->add_result(format17(v.get<double>()));
                else opt->add_result(v.dump());
            };
            if (it->is_array())
                for (const auto& e : *it) add(e);
            else
                add(*it);
            opt->run_callback();
        }
}

// Field plus the s and eps recorded next to it; flags override the sidecar.
struct LoadedField {
    SymmetricField phi;
    double s;
    double eps;
};

LoadedField load_phi(const std::string& path, double s_flag, double eps_flag) {
    const RawField raw = read_field(path);
    double s = s_flag, eps = eps_flag;
    if (s <= 0.0 || eps <= 0.0) {
        const FieldMeta m = read_sidecar(path);
        if (m.n != raw.n) throw IoError("sidecar n does not match field file: " + path);
        if (s <= 0.0) s = m.s;
        if (eps <= 0.0) eps = m.eps;
    }
    if (!(s > 0.0 && s < 1.0)) throw UsageError("s unknown for " + path + "; pass --s");
    if (!(eps > 0.0)) throw UsageError("eps unknown for " + path + "; pass --eps");
    return {to_symmetric(raw), s, eps};
}

// ------------------------------------------------------------------ psi0

struct Psi0Opts {
    int modes = 0;
    int grid = 1024;
    std::string out;
};

void setup_psi0(CLI::App& app, Psi0Opts& o) {
    app.add_option("--modes", o.modes, "Spectral truncation M (default: grid)");
    app.add_option("--grid", o.grid, "Quarter grid cells n (power of two)");
    app.add_option("--out", o.out, "Output field file");
}

int run_psi0(const Global& G, const Psi0Opts& o) {
    need(o.out, "--out");
    Stopwatch sw;
    const int M = o.modes > 0 ? o.modes : o.grid;
    const auto f = compute_psi0(M, QuarterGrid(o.grid));
    write_field(o.out, o.grid, f.values());
    write_sidecar(o.out, {o.grid, 0.0, 0.0, "psi0", G.echo()});
    auto m = G.manifest();
    m.outputs = {o.out, sidecar_path(o.out)};
    m.wall_times = {{"psi0", sw.seconds()}};
    write_manifest(o.out, m);
    return kOk;
}

// --------------------------------------------------------------- barrier

struct ProfileOpts {
    double s = 0.5;
    int nodes = 1024;
    std::string out;
};

struct BarrierFieldOpts {
    double s = 0.5;
    double eps = 1e-3;
    int grid = 1024;
    int nodes = 1024;
    std::string out;
};

int run_profile(const Global& G, const ProfileOpts& o) {
    need(o.out, "--out");
    Stopwatch sw;
    const auto P = solve_profile(o.s, o.nodes);
    json j = profile_json(P);
    j["schema_version"] = kSchemaVersion;
    write_json(o.out, j);
    auto m = G.manifest();
    m.outputs = {o.out};
    m.wall_times = {{"profile", sw.seconds()}};
    write_manifest(o.out, m);
    return kOk;
}

int run_barrier_field(const Global& G, const BarrierFieldOpts& o) {
    need(o.out, "--out");
    Stopwatch sw;
    const auto P = solve_profile(o.s, o.nodes);
    const auto f = barrier_field(P, o.eps, QuarterGrid(o.grid));
    write_field(o.out, o.grid, f.values());
    write_sidecar(o.out, {o.grid, o.s, o.eps, "barrier", G.echo()});
    auto m = G.manifest();
    m.outputs = {o.out, sidecar_path(o.out)};
    m.wall_times = {{"barrier_field", sw.seconds()}};
    write_manifest(o.out, m);
    return kOk;
}

// ---------------------------------------------------------------- steady

struct SteadyOpts {
    double s = 0.5;
    double eps = 1e-3;
    int grid = 1024;
    double omega = 0.5;
    double tol = 1e-8;
    int max_iter = 5000;
    std::string init = "psi0";
    std::string init_file;
    int nodes = 1024;
    std::string out;
    std::string report;
};

void setup_steady(CLI::App& app, SteadyOpts& o) {
    app.add_option("--s", o.s, "Nonlinearity exponent s in (0,1)");
    app.add_option("--eps", o.eps, "Patch parameter eps");
    app.add_option("--grid", o.grid, "Quarter grid cells n");
    app.add_option("--omega", o.omega, "Damping in (0,1]");
    app.add_option("--tol", o.tol, "Relative residual tolerance");
    app.add_option("--max-iter", o.max_iter, "Iteration cap");
    app.add_option("--init", o.init, "Initial field")->check(CLI::IsMember({"psi0", "barrier", "file"}));
    app.add_option("--init-file", o.init_file, "Initial field file for --init file");
    app.add_option("--nodes", o.nodes, "Angular profile nodes");
    app.add_option("--out", o.out, "Output field file");
    app.add_option("--report", o.report, "Output report JSON");
}

int run_steady(const Global& G, const SteadyOpts& o) {
    need(o.out, "--out");
    need(o.report, "--report");
    Manifest m = G.manifest();
    SolveConfig cfg;
    cfg.s = o.s;
    cfg.eps = o.eps;
    cfg.n = o.grid;
    cfg.omega = o.omega;
    cfg.tol = o.tol;
    cfg.max_iter = o.max_iter;
    cfg.init = init_kind_from(o.init);
    cfg.profile_nodes = o.nodes;
    if (cfg.init == InitKind::File) {
        need(o.init_file, "--init-file");
        cfg.init_field = to_symmetric(read_field(o.init_file));
        m.inputs.push_back({o.init_file, file_hash(o.init_file)});
    }
    Stopwatch sw;
    const SolveReport rep = solve_steady(cfg);
    for (const auto& w : rep.warnings) emit_error("warning", w, 0);
    write_field(o.out, o.grid, rep.phi.values());
    write_sidecar(o.out, {o.grid, o.s, o.eps, "phi", G.echo()});
    write_json(o.report, solve_report_json(rep));
    m.outputs = {o.out, sidecar_path(o.out), o.report};
    m.wall_times = {{"solve", rep.wall_time}, {"total", sw.seconds()}};
    write_manifest(o.report, m);
    return kOk;
}

// --------------------------------------------------------------- analyze

struct FieldOpts {
    std::string field;
    double s = 0.0;
    double eps = 0.0;
    int nodes = 1024;
    std::string report;
};

void setup_field(CLI::App& app, FieldOpts& o) {
    app.add_option("--field", o.field, "Input phi field file");
    app.add_option("--s", o.s, "Override s from the sidecar");
    app.add_option("--eps", o.eps, "Override eps from the sidecar");
    app.add_option("--nodes", o.nodes, "Angular profile nodes");
    app.add_option("--report", o.report, "Output report JSON");
}

struct SandwichOpts : FieldOpts {
    double barrier_scale = 1.0;
};

int run_sandwich(const Global& G, const SandwichOpts& o) {
    need(o.field, "--field");
    need(o.report, "--report");
    Stopwatch sw;
    const auto F = load_phi(o.field, o.s, o.eps);
    const auto P = solve_profile(F.s, o.nodes);
    json j = sandwich_json(sandwich_check(F.phi, P, F.eps, o.barrier_scale));
    j["barrier_scale"] = o.barrier_scale;
    write_json(o.report, j);
    auto m = G.manifest();
    m.inputs = {{o.field, file_hash(o.field)}};
    m.outputs = {o.report};
    m.wall_times = {{"sandwich", sw.seconds()}};
    write_manifest(o.report, m);
    return kOk;
}

struct RatioOpts : FieldOpts {
    std::string out;
    double r_min = 4.0;  // in grid spacings
};

int run_ratio(const Global& G, const RatioOpts& o) {
    need(o.field, "--field");
    need(o.report, "--report");
    Stopwatch sw;
    const auto F = load_phi(o.field, o.s, o.eps);
    const auto P = solve_profile(F.s, o.nodes);
    const QuarterGrid& g = F.phi.grid();
    const double h = g.h();
    const auto W = ratio_field(F.phi, P, F.eps, o.r_min * h);
    const double R = sandwich_radius(F.eps);
    double wmin = 1e300, wmax = -1e300, wmin_in = 1e300, wmax_in = -1e300;
    for (int j = 0; j <= g.n(); ++j)
        for (int i = 0; i <= g.n(); ++i) {
            if (W.masked(i, j)) continue;
            const double v = W.at(i, j);
            wmin = std::min(wmin, v);
            wmax = std::max(wmax, v);
            if (std::hypot(g.x(i), g.x(j)) <= R) {
                wmin_in = std::min(wmin_in, v);
                wmax_in = std::max(wmax_in, v);
            }
        }
    json j{{"schema_version", kSchemaVersion},
           {"kind", "ratio"},
           {"eps", F.eps},
           {"s", F.s},
           {"n", g.n()},
           {"r_min", W.r_min},
           {"w_min", wmin},
           {"w_max", wmax},
           {"region_radius", R},
           {"region_w_min", wmin_in < 1e300 ? json(wmin_in) : json(nullptr)},
           {"region_w_max", wmax_in > -1e300 ? json(wmax_in) : json(nullptr)},
           {"ratio_l2", ratio_l2_check(F.phi.nodes(), P, F.eps)},
           {"f_zero", degenerate_f(0.0, F.s)},
           {"f_one", degenerate_f(1.0, F.s)}};
    if (grid_resolves(F.eps, g)) {
        j["degenerate"] = degenerate_json(degenerate_residual(F.phi, P, F.eps, R));
        auto nodes = std::make_shared<NodeField>(F.phi.nodes());
        const double eps = F.eps;
        auto w = [nodes, &P, eps](double x, double y) {
            return interpolate(*nodes, x, y) / eval_barrier(P, eps, x, y) - 1.0;
        };
        const auto sc = scaling_invariance_check(w, P, 0.5, h, 64.0 * h, R, 8.0 * h);
        j["scaling"] = {{"R", 0.5}, {"mismatch", sc.mismatch}, {"points", sc.points}};
    } else {
        j["degenerate"] = nullptr;
        j["scaling"] = nullptr;
    }
    write_json(o.report, j);
    auto m = G.manifest();
    m.inputs = {{o.field, file_hash(o.field)}};
    m.outputs = {o.report};
    if (!o.out.empty()) {
        write_field(o.out, g.n(), W.W);
        write_sidecar(o.out, {g.n(), F.s, F.eps, "ratio", G.echo()});
        m.outputs.push_back(o.out);
        m.outputs.push_back(sidecar_path(o.out));
    }
    m.wall_times = {{"ratio", sw.seconds()}};
    write_manifest(o.report, m);
    return kOk;
}

struct HolderOpts : FieldOpts {
    int radii = 32;
    int theta_samples = 65;
};

int run_holder(const Global& G, const HolderOpts& o) {
    need(o.field, "--field");
    need(o.report, "--report");
    Stopwatch sw;
    const auto F = load_phi(o.field, o.s, o.eps);
    const QuarterGrid& g = F.phi.grid();
    if (!grid_resolves(F.eps, g)) throw ResolutionError("holder fit region is below 20 grid spacings");
    const auto P = solve_profile(F.s, o.nodes);
    const double h = g.h();
    const auto radii = log_radii(8.0 * h, sandwich_radius(F.eps), o.radii);
    json cal = json::array();
    bool trusted = true;
    for (const auto& c : holder_calibration(g, {0.1, 0.3, 0.5}, radii, 4.0 * h)) {
        cal.push_back({{"target", c.target}, {"estimate", c.fit.exponent}, {"r_squared", c.fit.r_squared}});
        trusted = trusted && c.error() <= 0.02;
    }
    json j{{"schema_version", kSchemaVersion}, {"kind", "holder"}, {"eps", F.eps},         {"s", F.s},
           {"n", g.n()},                       {"calibration", cal}, {"calibration_ok", trusted}};
    try {
        const auto W = ratio_field(F.phi, P, F.eps, 4.0 * h);
        const auto fit = origin_holder_fit(W, radii, o.theta_samples);
        j["fit"] = holder_json(fit);
        j["sigma_positive"] = fit.exponent > 0.0 && fit.r_squared >= 0.9;
    } catch (const FitError& e) {
        j["fit"] = nullptr;
        j["fit_error"] = e.what();
        j["sigma_positive"] = false;
    }
    write_json(o.report, j);
    auto m = G.manifest();
    m.inputs = {{o.field, file_hash(o.field)}};
    m.outputs = {o.report};
    m.wall_times = {{"holder", sw.seconds()}};
    write_manifest(o.report, m);
    return kOk;
}

// ----------------------------------------------------------------- sweep

struct SweepOpts {
    double s = 0.5;
    std::vector<double> eps{1e-2, 1e-3, 1e-4};
    int grid = 1024;
    double omega = 0.5;
    double tol = 1e-8;
    int max_iter = 5000;
    int pairs = 20000;
    int nodes = 1024;
    std::string report;
    std::string csv;
};

void setup_sweep(CLI::App& app, SweepOpts& o) {
    app.add_option("--s", o.s, "Nonlinearity exponent");
    app.add_option("--eps", o.eps, "Strictly decreasing eps list");
    app.add_option("--grid", o.grid, "Quarter grid cells n");
    app.add_option("--omega", o.omega, "Damping in (0,1]");
    app.add_option("--tol", o.tol, "Relative residual tolerance");
    app.add_option("--max-iter", o.max_iter, "Iteration cap");
    app.add_option("--pairs", o.pairs, "Pair samples per seminorm");
    app.add_option("--nodes", o.nodes, "Angular profile nodes");
    app.add_option("--report", o.report, "Output report JSON");
    app.add_option("--csv", o.csv, "Output CSV table");
}

int run_sweep(const Global& G, const SweepOpts& o) {
    need(o.report, "--report");
    Stopwatch sw;
    SweepConfig cfg;
    cfg.s = o.s;
    cfg.eps = o.eps;
    cfg.n = o.grid;
    cfg.omega = o.omega;
    cfg.tol = o.tol;
    cfg.max_iter = o.max_iter;
    cfg.pairs = o.pairs;
    cfg.seed = G.seed;
    cfg.profile_nodes = o.nodes;
    for (double e : cfg.eps)
        if (!grid_resolves(e, QuarterGrid(cfg.n)))
            emit_error("warning", "sweep: eps=" + format17(e) + " is not resolved at n=" + std::to_string(cfg.n), 0);
    const auto rows = convergence_sweep(cfg);
    write_json(o.report, sweep_json(cfg, rows));
    auto m = G.manifest();
    m.outputs = {o.report};
    if (!o.csv.empty()) {
        write_text(o.csv, sweep_csv(rows));
        m.outputs.push_back(o.csv);
    }
    m.wall_times = {{"sweep", sw.seconds()}};
    write_manifest(o.report, m);
    return kOk;
}

// ------------------------------------------------------------------- lab

struct LabOpts {
    std::string id = "sobolev_h1";
    int trials = 500;
    int grid = 128;
    double delta = 0.1;
    int stability_trials = 10;
    double s = 0.5;
    int nodes = 1024;
    std::string report;
};

void setup_lab(CLI::App& app, LabOpts& o) {
    app.add_option("--id", o.id, "Inequality")
        ->check(CLI::IsMember({"caccioppoli", "sobolev_h1", "sobolev_w11", "isoperimetric", "linf_rescale"}));
    app.add_option("--trials", o.trials, "Ensemble size (>= 100)");
    app.add_option("--grid", o.grid, "Cells per side of [0,1]^2");
    app.add_option("--delta", o.delta, "Isoperimetric mass fraction");
    app.add_option("--stability-trials", o.stability_trials, "Trials rerun at 2n");
    app.add_option("--s", o.s, "Weight exponent s");
    app.add_option("--nodes", o.nodes, "Angular profile nodes");
    app.add_option("--report", o.report, "Output report JSON");
}

int run_lab(const Global& G, const LabOpts& o) {
    need(o.report, "--report");
    Stopwatch sw;
    LabConfig cfg;
    cfg.id = lab_id_from(o.id);
    cfg.trials = o.trials;
    cfg.seed = G.seed;
    cfg.n = o.grid;
    cfg.delta = o.delta;
    cfg.stability_trials = o.stability_trials;
    const auto rep = inequality_lab(cfg, solve_profile(o.s, o.nodes));
    write_json(o.report, lab_json(rep));
    auto m = G.manifest();
    m.outputs = {o.report};
    m.wall_times = {{"lab", sw.seconds()}};
    write_manifest(o.report, m);
    return kOk;
}

// ----------------------------------------------------------------- green

struct GreenOpts {
    std::vector<double> x{0.1, 0.2};
    std::vector<double> y{0.3, 0.4};
    int terms = 24;
    std::string report;
};

int run_green(const Global& G, const GreenOpts& o) {
    if (o.x.size() != 2 || o.y.size() != 2) throw UsageError("--x and --y take two coordinates each");
    Stopwatch sw;
    const auto gs = torus_green({o.x[0], o.x[1]}, {o.y[0], o.y[1]}, o.terms);
    const json j{{"schema_version", kSchemaVersion},
                 {"kind", "green"},
                 {"x", o.x},
                 {"y", o.y},
                 {"terms", o.terms},
                 {"total", gs.total},
                 {"log_part", gs.log_part},
                 {"regular_part", gs.regular_part}};
    if (o.report.empty()) {
        std::cout << dump_json(j) << "\n";
        return kOk;
    }
    write_json(o.report, j);
    auto m = G.manifest();
    m.outputs = {o.report};
    m.wall_times = {{"green", sw.seconds()}};
    write_manifest(o.report, m);
    return kOk;
}

std::string pre_scan_config(int argc, char** argv) {
    for (int k = 1; k < argc; ++k) {
        const std::string a = argv[k];
        if (a == "--config" && k + 1 < argc) return argv[k + 1];
        if (a.rfind("--config=", 0) == 0) return a.substr(9);
    }
    return {};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"bcpatch: singular steady Euler states on the torus, barriers and diagnostics"};
    app.option_defaults()->always_capture_default();
    app.fallthrough();  // global options may follow the subcommand
    Global G;
    for (int k = 0; k < argc; ++k) G.argv.emplace_back(argv[k]);

    bool show_version = false;
    app.add_flag("--version", show_version, "Print the build identifier");
    app.add_option("--threads", G.threads, "Thread cap for data-parallel loops");
    app.add_option("--seed", G.seed, "Seed for every random stream");
    app.add_option("--config", G.config, "Flat JSON config; flags override it");

    Psi0Opts psi0_o;
    auto* psi0 = app.add_subcommand("psi0", "Stream function of the patch");
    setup_psi0(*psi0, psi0_o);

    auto* barrier = app.add_subcommand("barrier", "Self-similar barrier");
    barrier->require_subcommand(1);
    ProfileOpts prof_o;
    auto* profile = barrier->add_subcommand("profile", "Angular profile JSON");
    profile->add_option("--s", prof_o.s, "Exponent s");
    profile->add_option("--nodes", prof_o.nodes, "Profile nodes K");
    profile->add_option("--out", prof_o.out, "Output JSON");
    BarrierFieldOpts bf_o;
    auto* bfield = barrier->add_subcommand("field", "Barrier sampled on the quarter grid");
    bfield->add_option("--s", bf_o.s, "Exponent s");
    bfield->add_option("--eps", bf_o.eps, "Patch parameter eps");
    bfield->add_option("--grid", bf_o.grid, "Quarter grid cells n");
    bfield->add_option("--nodes", bf_o.nodes, "Profile nodes K");
    bfield->add_option("--out", bf_o.out, "Output field file");

    auto* steady = app.add_subcommand("steady", "Steady states");
    steady->require_subcommand(1);
    SteadyOpts st_o;
    auto* solve = steady->add_subcommand("solve", "Damped fixed-point solve");
    setup_steady(*solve, st_o);

    auto* analyze = app.add_subcommand("analyze", "Diagnostics on solved fields");
    analyze->require_subcommand(1);
    SandwichOpts sw_o;
    auto* sandwich = analyze->add_subcommand("sandwich", "Barrier sandwich check");
    setup_field(*sandwich, sw_o);
    sandwich->add_option("--barrier-scale", sw_o.barrier_scale, "Multiplier on the barrier");
    RatioOpts ra_o;
    auto* ratio = analyze->add_subcommand("ratio", "Ratio field, L2 check, degenerate equation");
    setup_field(*ratio, ra_o);
    ratio->add_option("--out", ra_o.out, "Optional ratio field output");
    ratio->add_option("--r-min", ra_o.r_min, "Mask radius in grid spacings (>= 4)");
    HolderOpts ho_o;
    auto* holder = analyze->add_subcommand("holder", "Origin Holder fit of the ratio");
    setup_field(*holder, ho_o);
    holder->add_option("--radii", ho_o.radii, "Number of fit radii");
    holder->add_option("--theta-samples", ho_o.theta_samples, "Angular samples per radius");
    SweepOpts asw_o, sw2_o;
    setup_sweep(*analyze->add_subcommand("sweep", "Convergence and continuity sweep"), asw_o);
    LabOpts alab_o, lab2_o;
    setup_lab(*analyze->add_subcommand("lab", "Weighted inequality lab"), alab_o);

    setup_sweep(*app.add_subcommand("sweep", "Convergence and continuity sweep"), sw2_o);
    setup_lab(*app.add_subcommand("lab", "Weighted inequality lab"), lab2_o);

    GreenOpts gr_o;
    auto* green = app.add_subcommand("green", "Torus Green function split");
    green->add_option("--x", gr_o.x, "Point x (two coordinates)")->expected(2);
    green->add_option("--y", gr_o.y, "Point y (two coordinates)")->expected(2);
    green->add_option("--terms", gr_o.terms, "Series terms");
    green->add_option("--report", gr_o.report, "Output JSON (default: stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        std::cerr << app.help() << std::endl;
        emit_error("usage", e.what(), kUsage);
        return kUsage;
    }
    if (show_version) {
        std::cout << "bcpatch " << version() << std::endl;
        return kOk;
    }

    try {
        G.chain.push_back(&app);
        for (CLI::App* cur = &app; !cur->get_subcommands().empty();) {
            cur = cur->get_subcommands().front();
            G.chain.push_back(cur);
        }
        if (G.chain.size() == 1) throw UsageError("a subcommand is required\n" + app.help());
        const std::string cfg_path = pre_scan_config(argc, argv);
        if (!cfg_path.empty()) apply_config(read_json(cfg_path), G.chain);
        if (G.threads > 0) set_threads(G.threads);

        const CLI::App* leaf = G.chain.back();
        const CLI::App* parent = G.chain[G.chain.size() - 2];
        const std::string name = leaf->get_name();
        if (leaf == psi0) return run_psi0(G, psi0_o);
        if (leaf == profile) return run_profile(G, prof_o);
        if (leaf == bfield) return run_barrier_field(G, bf_o);
        if (leaf == solve) return run_steady(G, st_o);
        if (leaf == sandwich) return run_sandwich(G, sw_o);
        if (leaf == ratio) return run_ratio(G, ra_o);
        if (leaf == holder) return run_holder(G, ho_o);
        if (leaf == green) return run_green(G, gr_o);
        if (name == "sweep") return run_sweep(G, parent == analyze ? asw_o : sw2_o);
        if (name == "lab") return run_lab(G, parent == analyze ? alab_o : lab2_o);
        throw UsageError("unhandled command " + name);
    } catch (const UsageError& e) {
        emit_error(e.kind(), e.what(), kUsage);
        return kUsage;
    } catch (const CLI::ParseError& e) {
        emit_error("usage", e.what(), kUsage);
        return kUsage;
    } catch (const ConvergenceError& e) {
        emit_error(e.kind(), e.what(), kNonconvergence);
        return kNonconvergence;
    } catch (const IoError& e) {
        emit_error(e.kind(), e.what(), kUsage);
        return kUsage;
    } catch (const Error& e) {
        // resolution, domain, shape, fit and construction failures
        emit_error(e.kind(), e.what(), kPrecondition);
        return kPrecondition;
    } catch (const std::exception& e) {
        emit_error("internal", e.what(), kUsage);
        return kUsage;
    }
}
