#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <nlohmann/json.hpp>
#include <sstream>
#include <string>
#include <vector>

#include "analysis.hpp"
#include "barrier.hpp"
#include "core.hpp"
#include "grid.hpp"
#include "lab.hpp"
#include "steady.hpp"

namespace bcpatch {

using json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

#ifndef BCPATCH_VERSION
#define BCPATCH_VERSION "0.1.0"
#endif
inline const char* version() { return BCPATCH_VERSION; }

class IoError : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "io"; }
};

// ------------------------------------------------------------ number format

inline std::string format17(double v) {
    if (!std::isfinite(v)) return "null";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace detail {

inline void dump_into(const json& j, std::string& out, int indent, int depth) {
    const std::string pad(static_cast<std::size_t>(indent * (depth + 1)), ' ');
    const std::string pad_end(static_cast<std::size_t>(indent * depth), ' ');
    const char* nl = indent > 0 ? "\n" : "";
    switch (j.type()) {
        case json::value_t::number_float: out += format17(j.get<double>()); return;
        case json::value_t::object: {
            if (j.empty()) {
                out += "{}";
                return;
            }
            out += "{";
            out += nl;
            bool first = true;
            for (auto it = j.begin(); it != j.end(); ++it) {
                if (!first) {
                    out += ",";
                    out += nl;
                }
                first = false;
                out += pad;
                out += json(it.key()).dump();
                out += indent > 0 ? ": " : ":";
                dump_into(it.value(), out, indent, depth + 1);
            }
            out += nl;
            out += pad_end;
            out += "}";
            return;
        }
        case json::value_t::array: {
            if (j.empty()) {
                out += "[]";
                return;
            }
            // numeric arrays stay on one line
            const bool flat = std::all_of(j.begin(), j.end(), [](const json& e) { return e.is_primitive(); });
            out += "[";
            bool first = true;
            for (const auto& e : j) {
                if (!first) out += flat ? ", " : ",";
                if (!flat) {
                    out += nl;
                    out += pad;
                }
                first = false;
                dump_into(e, out, indent, depth + 1);
            }
            if (!flat) {
                out += nl;
                out += pad_end;
            }
            out += "]";
            return;
        }
        default: out += j.dump(); return;
    }
}

}  // namespace detail

// JSON text with every float printed to 17 significant digits.
inline std::string dump_json(const json& j, int indent = 2) {
    std::string out;
    detail::dump_into(j, out, indent, 0);
    return out;
}

inline void write_text(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open for writing: " + path);
    f << text;
    if (!f) throw IoError("write failed: " + path);
}

inline std::string read_text(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open for reading: " + path);
    return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

inline void write_json(const std::string& path, const json& j) { write_text(path, dump_json(j) + "\n"); }

inline json read_json(const std::string& path) {
    try {
        return json::parse(read_text(path));
    } catch (const json::exception& e) {
        throw IoError("invalid JSON in " + path + ": " + e.what());
    }
}

inline std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

inline std::string file_hash(const std::string& path) { return hex64(fnv1a64(read_text(path))); }

// ------------------------------------------------------------- field files

inline constexpr char kFieldMagic[8] = {'B', 'C', 'F', 'I', 'E', 'L', 'D', '1'};

struct RawField {
    int n = 0;
    std::vector<double> values;  // (n+1)^2, i fastest
};

inline void write_field(const std::string& path, int n, const std::vector<double>& values) {
    const std::size_t m = static_cast<std::size_t>(n) + 1;
    if (values.size() != m * m) throw ShapeError("field size does not match n");
    std::string buf(kFieldMagic, 8);
    const auto un = static_cast<std::uint32_t>(n);
    for (int b = 0; b < 4; ++b) buf.push_back(static_cast<char>((un >> (8 * b)) & 0xff));
    for (double v : values) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, 8);
        for (int b = 0; b < 8; ++b) buf.push_back(static_cast<char>((bits >> (8 * b)) & 0xff));
    }
    write_text(path, buf);
}

inline RawField read_field(const std::string& path) {
    const std::string buf = read_text(path);
    if (buf.size() < 12 || std::memcmp(buf.data(), kFieldMagic, 8) != 0) throw IoError("not a BCFIELD1 file: " + path);
    auto byte = [&](std::size_t k) { return static_cast<std::uint64_t>(static_cast<unsigned char>(buf[k])); };
    std::uint32_t n = 0;
    for (int b = 0; b < 4; ++b) n |= static_cast<std::uint32_t>(byte(8 + b) << (8 * b));
    const std::size_t m = static_cast<std::size_t>(n) + 1;
    if (buf.size() != 12 + 8 * m * m) throw IoError("truncated or oversized field file: " + path);
    RawField f;
    f.n = static_cast<int>(n);
    f.values.resize(m * m);
    for (std::size_t k = 0; k < m * m; ++k) {
        std::uint64_t bits = 0;
        for (int b = 0; b < 8; ++b) bits |= byte(12 + 8 * k + b) << (8 * b);
        std::memcpy(&f.values[k], &bits, 8);
    }
    return f;
}

struct FieldMeta {
    int n = 0;
    double s = 0.0;
    double eps = 0.0;
    std::string kind = "other";  // psi0 | barrier | phi | ratio | other
    std::string generator;
};

inline std::string sidecar_path(const std::string& field_path) { return field_path + ".json"; }

inline void write_sidecar(const std::string& field_path, const FieldMeta& m) {
    write_json(sidecar_path(field_path),
               json{{"n", m.n}, {"s", m.s}, {"eps", m.eps}, {"kind", m.kind}, {"generator", m.generator}});
}

inline FieldMeta read_sidecar(const std::string& field_path) {
    const json j = read_json(sidecar_path(field_path));
    FieldMeta m;
    try {
        m.n = j.at("n").get<int>();
        m.s = j.at("s").get<double>();
        m.eps = j.at("eps").get<double>();
        m.kind = j.at("kind").get<std::string>();
        m.generator = j.value("generator", std::string());
    } catch (const json::exception& e) {
        throw IoError("malformed sidecar for " + field_path + ": " + e.what());
    }
    return m;
}

inline SymmetricField to_symmetric(const RawField& f) { return SymmetricField(QuarterGrid(f.n), f.values); }

// ----------------------------------------------------------- report JSON

inline json profile_json(const AngularProfile& P) {
    return json{{"s", P.s}, {"beta", P.beta}, {"a", P.a}, {"theta", P.theta}, {"g", P.g}};
}

inline json opt_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

inline json solve_report_json(const SolveReport& r) {
    json j{{"schema_version", kSchemaVersion},
           {"kind", "steady_solve"},
           {"config",
            {{"eps", r.config.eps},
             {"s", r.config.s},
             {"n", r.config.n},
             {"omega", r.config.omega},
             {"tol", r.config.tol},
             {"max_iter", r.config.max_iter},
             {"init", to_string(r.config.init)},
             {"profile_nodes", r.config.profile_nodes}}},
           {"iterations", r.iterations},
           {"final_residual", r.final_residual},
           {"fd_residual", r.fd_residual},
           {"residual_history", r.residual_history},
           {"certified",
            {{"phi_ge_psi0_margin", r.psi0_margin},
             {"phi_ge_psi0", r.psi0_margin >= -1e-10},
             {"max_psi0", r.max_psi0},
             {"small_eps_regime", r.small_eps_regime}}},
           {"clamped_nodes", r.clamped_nodes},
           {"resolved", r.resolved},
           {"warnings", r.warnings}};
    j["bracketing_ok"] = r.bracketing_ok ? json(*r.bracketing_ok) : json(nullptr);
    return j;
}

inline json sandwich_json(const SandwichReport& r) {
    return json{{"schema_version", kSchemaVersion},
                {"kind", "sandwich"},
                {"eps", r.eps},
                {"radius", r.radius},
                {"tol", r.tol},
                {"nodes", r.nodes},
                {"lower", {{"margin", r.lower_margin}, {"at", r.lower_at}, {"ok", r.lower_ok}}},
                {"upper", {{"margin", r.upper_margin}, {"at", r.upper_at}, {"ok", r.upper_ok}}},
                {"pass", r.pass()}};
}

inline json holder_json(const HolderEstimate& h) {
    return json{{"exponent", h.exponent}, {"log_constant", h.log_constant}, {"r_lo", h.r_lo},
                {"r_hi", h.r_hi},         {"r_squared", h.r_squared},       {"n_samples", h.n_samples}};
}

inline json degenerate_json(const DegenerateReport& d) {
    return json{{"residual", d.residual}, {"r_lo", d.r_lo},       {"r_hi", d.r_hi},
                {"nodes", d.nodes},       {"max_lhs", d.max_lhs}, {"max_rhs", d.max_rhs}};
}

inline json lab_json(const InequalityReport& r) {
    json j{{"schema_version", kSchemaVersion},
           {"kind", "inequality_lab"},
           {"id", r.id},
           {"trials", r.trials},
           {"seed", r.seed},
           {"n", r.n},
           {"empirical_constant", r.empirical_constant},
           {"min_ratio", r.min_ratio},
           {"stability_factor", r.stability_factor},
           {"all_finite", r.all_finite}};
    if (r.delta) {
        j["delta"] = *r.delta;
        j["sigma_half_delta"] = opt_json(r.sigma_half_delta);
        j["trials_half_delta"] = *r.trials_half_delta;
    }
    if (r.constant_quarter) {
        j["constant_quarter"] = *r.constant_quarter;
        j["constant_half"] = *r.constant_half;
    }
    return j;
}

inline json sweep_json(const SweepConfig& cfg, const std::vector<SweepRow>& rows) {
    json arr = json::array();
    for (const auto& r : rows)
        arr.push_back({{"eps", r.eps},
                       {"c1_norm_diff", r.c1_norm_diff},
                       {"c1alpha_seminorm_diff", r.c1alpha_seminorm_diff},
                       {"c1alphaplus_seminorm_residual", r.c1alphaplus_seminorm_residual},
                       {"barrier_c1alpha", r.barrier_c1alpha},
                       {"continuity_diff", opt_json(r.continuity_diff)},
                       {"sigma_est", opt_json(r.sigma_est)},
                       {"sigma_used", r.sigma_used},
                       {"resolved", r.resolved},
                       {"iterations", r.iterations},
                       {"final_residual", r.final_residual}});
    return json{{"schema_version", kSchemaVersion},
                {"kind", "sweep"},
                {"s", cfg.s},
                {"n", cfg.n},
                {"pairs", cfg.pairs},
                {"seed", cfg.seed},
                {"rows", arr}};
}

inline std::string sweep_csv(const std::vector<SweepRow>& rows) {
    std::string out = "eps,c1_norm_diff,c1alpha_seminorm_diff,c1alphaplus_seminorm_residual,barrier_c1alpha,continuity_diff\n";
    for (const auto& r : rows) {
        out += format17(r.eps) + "," + format17(r.c1_norm_diff) + "," + format17(r.c1alpha_seminorm_diff) + "," +
               format17(r.c1alphaplus_seminorm_residual) + "," + format17(r.barrier_c1alpha) + "," +
               (r.continuity_diff ? format17(*r.continuity_diff) : std::string()) + "\n";
    }
    return out;
}

// --------------------------------------------------------------- manifest

struct Manifest {
    std::vector<std::string> argv;
    json config;
    std::vector<std::pair<std::string, std::string>> inputs;  // path, hash
    std::vector<std::string> outputs;
    std::uint64_t seed = 0;
    std::vector<std::pair<std::string, double>> wall_times;
    int threads = 1;

    json to_json() const {
        json in = json::array();
        for (const auto& [p, h] : inputs) in.push_back({{"path", p}, {"fnv1a64", h}});
        json wt = json::object();
        for (const auto& [k, v] : wall_times) wt[k] = v;
        return json{{"schema_version", kSchemaVersion},
                    {"tool", "bcpatch"},
                    {"version", version()},
                    {"command_line", argv},
                    {"config", config},
                    {"config_hash", hex64(fnv1a64(config.dump()))},
                    {"inputs", in},
                    {"outputs", outputs},
                    {"seeds", {{"seed", seed}}},
                    {"threads", threads},
                    {"wall_time_seconds", wt}};
    }
};

}  // namespace bcpatch
