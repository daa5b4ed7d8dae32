#include "hindex/cli.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "hindex/error.hpp"
#include "hindex/kcycle.hpp"
#include "hindex/ktheory.hpp"
#include "hindex/parallel.hpp"
#include "hindex/toeplitz.hpp"

namespace hindex::cli {

using nlohmann::json;

namespace {

constexpr double kPi = 3.14159265358979323846;

// Current pipeline stage, reported with any error. One command runs at a time.
std::string g_stage;
void stage(const char* s) { g_stage = s; }

json complex_json(cplx c) { return {{"re", c.real()}, {"im", c.imag()}}; }

void check_keys(const json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
    if (!obj.is_object()) throw Error(ErrorKind::InvalidInput, where + " must be an object");
    for (const auto& [key, _] : obj.items()) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || key == a;
        if (!ok) throw Error(ErrorKind::InvalidInput, "unknown key '" + key + "' in " + where);
    }
}

template <class T>
void read(const json& obj, const char* key, T& dst, const std::string& where) {
    if (!obj.contains(key)) return;
    try {
        dst = obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw Error(ErrorKind::InvalidInput, where + "." + key + " has the wrong type");
    }
}

double kappa(const RunConfig& cfg) { return kFrameKappa * cfg.kappa_scale; }

Expr parse_expr(const RunConfig& cfg) {
    if (!cfg.has_operator) throw Error(ErrorKind::InvalidInput, "config has no operator section");
    return parse_symbol(cfg.expr, {cfg.n, cfg.r});
}

MatrixSymbolField pgamma_field(const RunConfig& cfg) {
    if (cfg.kind != "pgamma") throw Error(ErrorKind::InvalidInput, "this command needs operator.kind = pgamma");
    if (cfg.n != 1) throw Error(ErrorKind::Unsupported, "P_gamma is supported on S^3 only (manifold.n = 1)");
    return MatrixSymbolField::from_expr(parse_expr(cfg), cfg.n, cfg.r);
}

Expr toeplitz_symbol(const RunConfig& cfg) {
    if (cfg.kind != "toeplitz") throw Error(ErrorKind::InvalidInput, "this command needs operator.kind = toeplitz");
    const Expr f = parse_expr(cfg);
    if (f->rows != f->cols) throw Error(ErrorKind::InvalidInput, "Toeplitz symbol must be square");
    return f;
}

QuadratureRule rule(const RunConfig& cfg) {
    return cfg.n == 0 ? quadrature_s1(cfg.resolution) : quadrature_s3(cfg.resolution);
}

json winding_json(const WindingResult& w) {
    return {{"beta", w.beta},
            {"raw", complex_json(w.raw)},
            {"normalized", complex_json(w.normalized)},
            {"residual", w.residual},
            {"resolution", w.resolution},
            {"min_abs_det", w.min_abs_det}};
}

json ellipticity_json(const EllipticityReport& e) {
    return {{"elliptic", e.elliptic},
            {"margin", e.worst_margin},
            {"witness", {{"x", e.witness.coords}, {"lambda", e.witness_lambda}}},
            {"thresholds", e.thresholds},
            {"sup_norm", e.sup_norm},
            {"tol", e.tol},
            {"grid_points", e.grid_points}};
}

json rows_json(const SpectralReport& rep) {
    json rows = json::array();
    for (const auto& r : rep.rows)
        rows.push_back({{"cutoff", r.cutoff},
                        {"nullity_P", r.nullity},
                        {"nullity_Pstar", r.nullity_adj},
                        {"index", r.index},
                        {"min_singular_gap", r.min_singular_gap},
                        {"max_kernel_sv", r.max_kernel_sv},
                        {"min_nonkernel_sv", r.min_nonkernel_sv},
                        {"unresolved", r.unresolved},
                        {"min_unresolved_sv", r.min_unresolved_sv},
                        {"low_interior", r.low_interior}});
    json out = {{"rows", rows}, {"stable", rep.stable}};
    out["index"] = rep.index ? json(*rep.index) : json(nullptr);
    if (!rep.stable) out["reason"] = rep.reason;
    return out;
}

// Elliptic P_gamma with its truncation, or an error.
struct Prepared {
    MatrixSymbolField field;
    QuadratureRule quad;
    EllipticityReport ell;
    FockModel fock;
};

Prepared prepare_pgamma(const RunConfig& cfg) {
    stage("parse");
    Prepared p{pgamma_field(cfg), {}, {}, {}};
    stage("quadrature");
    p.quad = rule(cfg);
    stage("ellipticity");
    p.ell = check_heisenberg_elliptic(p.field, p.quad);
    if (!p.ell.elliptic)
        throw Error(ErrorKind::NotElliptic, "symbol is not Heisenberg-elliptic: margin " +
                                                std::to_string(p.ell.worst_margin) + " at lambda = " +
                                                std::to_string(p.ell.witness_lambda));
    stage("truncation");
    p.fock = choose_truncation(p.field, p.quad);
    return p;
}

json topological_json(const TopIndexReport& rep) {
    json table = json::array();
    for (const auto& c : rep.contributions)
        table.push_back({{"branch", c.sign > 0 ? "plus" : "minus"},
                         {"k", c.sign * (rep.n + 2 * c.j)},
                         {"j", c.j},
                         {"multiplicity", c.multiplicity},
                         {"beta", c.beta},
                         {"residual", c.residual},
                         {"raw", complex_json(c.raw)}});
    return table;
}

// Min σ_min of f over the rule nodes (S¹ invertibility report).
double circle_min_singular(const Expr& f, const QuadratureRule& q) {
    const auto v = evaluate_on_rule(Evaluator(f), q, 0, q.size());
    double mn = INFINITY;
    for (std::size_t k = 0; k < q.size(); ++k) {
        Eigen::MatrixXcd m(f->rows, f->cols);
        for (int i = 0; i < f->rows; ++i)
            for (int j = 0; j < f->cols; ++j) m(i, j) = v[0].at(i, j, k);
        mn = std::min(mn, Eigen::JacobiSVD<Eigen::MatrixXcd>(m).singularValues().minCoeff());
    }
    return mn;
}

std::string iso_timestamp() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

}  // namespace

int exit_code_for(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::InvalidInput:
        case ErrorKind::Unsupported:
        case ErrorKind::NonInvertible:
        case ErrorKind::NotElliptic: return kExitInvalid;
        case ErrorKind::ResolutionInsufficient:
        case ErrorKind::Inconclusive: return kExitInconclusive;
        case ErrorKind::NormalizationFailure:
        case ErrorKind::InternalConsistency: return kExitFailure;
    }
    return kExitFailure;
}

RunConfig parse_config(const json& doc) {
    RunConfig cfg;
    check_keys(doc, {"schema", "manifold", "operator", "compute", "output", "test_hooks", "seed"}, "config");
    if (!doc.contains("schema") || doc.at("schema") != kConfigSchema)
        throw Error(ErrorKind::InvalidInput, std::string("config.schema must be \"") + kConfigSchema + "\"");
    read(doc, "seed", cfg.seed, "config");

    if (doc.contains("manifold")) {
        const json& m = doc.at("manifold");
        check_keys(m, {"type", "n"}, "manifold");
        read(m, "type", cfg.manifold_type, "manifold");
        read(m, "n", cfg.n, "manifold");
        if (cfg.manifold_type != "sphere")
            throw Error(ErrorKind::Unsupported, "manifold.type '" + cfg.manifold_type + "' is not supported");
        if (cfg.n != 0 && cfg.n != 1)
            throw Error(ErrorKind::Unsupported, "manifold.n must be 0 (circle) or 1 (S^3)");
    }
    if (doc.contains("operator")) {
        const json& o = doc.at("operator");
        check_keys(o, {"kind", "r", "gamma", "f"}, "operator");
        read(o, "kind", cfg.kind, "operator");
        read(o, "r", cfg.r, "operator");
        if (cfg.kind != "pgamma" && cfg.kind != "toeplitz")
            throw Error(ErrorKind::InvalidInput, "operator.kind must be pgamma or toeplitz");
        if (cfg.r < 1) throw Error(ErrorKind::InvalidInput, "operator.r must be positive");
        const char* key = cfg.kind == "pgamma" ? "gamma" : "f";
        if (o.contains(cfg.kind == "pgamma" ? "f" : "gamma"))
            throw Error(ErrorKind::InvalidInput, std::string("operator.") + (cfg.kind == "pgamma" ? "f" : "gamma") +
                                                     " does not belong to kind " + cfg.kind);
        if (!o.contains(key)) throw Error(ErrorKind::InvalidInput, std::string("operator.") + key + " is missing");
        read(o, key, cfg.expr, "operator");
        cfg.has_operator = true;
        // Parse and shape-check before anything else runs.
        try {
            const Expr e = parse_symbol(cfg.expr, {cfg.n, cfg.r});
            if (cfg.kind == "pgamma" && cfg.n == 1) (void)MatrixSymbolField::from_expr(e, cfg.n, cfg.r);
            if (cfg.kind == "toeplitz" && e->rows != e->cols)
                throw Error(ErrorKind::InvalidInput, "Toeplitz symbol must be square");
        } catch (const ParseError& e) {
            std::string msg = e.what();
            const std::string pos = std::to_string(e.line()) + ":" + std::to_string(e.column()) + ": ";
            if (msg.rfind(pos, 0) == 0) msg.erase(0, pos.size());
            throw ParseError(std::string("operator.") + key + ": " + msg, e.line(), e.column());
        }
    }
    if (doc.contains("compute")) {
        const json& c = doc.at("compute");
        check_keys(c, {"topological", "analytic", "L_list", "D", "resolution", "threshold_scan", "spectral"},
                   "compute");
        read(c, "topological", cfg.topological, "compute");
        read(c, "analytic", cfg.analytic, "compute");
        read(c, "L_list", cfg.L_list, "compute");
        read(c, "D", cfg.D, "compute");
        read(c, "resolution", cfg.resolution, "compute");
        if (cfg.analytic != "none" && cfg.analytic != "spectral" && cfg.analytic != "toeplitz")
            throw Error(ErrorKind::InvalidInput, "compute.analytic must be none, spectral or toeplitz");
        if (c.contains("threshold_scan")) {
            const json& t = c.at("threshold_scan");
            check_keys(t, {"lo", "hi", "steps", "L"}, "compute.threshold_scan");
            ThresholdParams p;
            read(t, "lo", p.lo, "compute.threshold_scan");
            read(t, "hi", p.hi, "compute.threshold_scan");
            read(t, "steps", p.steps, "compute.threshold_scan");
            read(t, "L", p.L, "compute.threshold_scan");
            cfg.threshold_scan = p;
        }
        if (c.contains("spectral")) {
            const json& s = c.at("spectral");
            check_keys(s,
                       {"svd_threshold", "min_gap_factor", "interior_mass", "top_shells", "drift_tol", "drift_count",
                        "drift_mass", "boundary_mass", "unresolved_ratio"},
                       "compute.spectral");
            auto& o = cfg.spectral;
            const std::string w = "compute.spectral";
            read(s, "svd_threshold", o.svd_threshold, w);
            read(s, "min_gap_factor", o.min_gap_factor, w);
            read(s, "interior_mass", o.interior_mass, w);
            read(s, "top_shells", o.top_shells, w);
            read(s, "drift_tol", o.drift_tol, w);
            read(s, "drift_count", o.drift_count, w);
            read(s, "drift_mass", o.drift_mass, w);
            read(s, "boundary_mass", o.boundary_mass, w);
            read(s, "unresolved_ratio", o.unresolved_ratio, w);
            if (!(o.svd_threshold > 0.0) || !(o.min_gap_factor > 0.0) || o.top_shells < 1)
                throw Error(ErrorKind::InvalidInput, "compute.spectral values out of range");
        }
    }
    if (doc.contains("output")) {
        const json& o = doc.at("output");
        check_keys(o, {"path", "format"}, "output");
        read(o, "path", cfg.out_path, "output");
        read(o, "format", cfg.format, "output");
        if (cfg.format != "json" && cfg.format != "csv" && cfg.format != "table")
            throw Error(ErrorKind::InvalidInput, "output.format must be json, csv or table");
    }
    if (doc.contains("test_hooks")) {
        const json& h = doc.at("test_hooks");
        check_keys(h, {"kappa_scale", "quadrature_resolution"}, "test_hooks");
        read(h, "kappa_scale", cfg.kappa_scale, "test_hooks");
        if (h.contains("quadrature_resolution")) {
            int q = 0;
            read(h, "quadrature_resolution", q, "test_hooks");
            cfg.quadrature_resolution = q;
        }
        if (!(cfg.kappa_scale > 0.0)) throw Error(ErrorKind::InvalidInput, "test_hooks.kappa_scale must be positive");
    }
    return cfg;
}

json provenance(const RunConfig& cfg) {
    const auto& c = calibration();
    const auto& s = cfg.spectral;
    return {
        {"calibration",
         {{"c1", complex_json(c.c1)},
          {"c3", complex_json(c.c3)},
          {"sign_convention", {{"S1", c.sign_s1}, {"S3", c.sign_s3}}}}},
        {"tolerances",
         {{"ellipticity", kEllipticTol},
          {"winding_residual", kResidualTol},
          {"invertibility", kInvertibleTol},
          {"inverse_fourier_tail", kInverseTail},
          {"svd_threshold", s.svd_threshold},
          {"min_gap_factor", s.min_gap_factor},
          {"interior_mass", s.interior_mass},
          {"top_shells", s.top_shells},
          {"drift_tol", s.drift_tol},
          {"drift_count", s.drift_count},
          {"drift_mass", s.drift_mass},
          {"boundary_mass", s.boundary_mass},
          {"unresolved_ratio", s.unresolved_ratio}}},
        {"resolution", cfg.resolution},
        {"L_list", cfg.L_list},
        {"D", cfg.D},
        {"kappa", kappa(cfg)},
        {"seed", cfg.seed},
    };
}

CommandOutput cmd_elliptic(const RunConfig& cfg) {
    CommandOutput out;
    out.body["command"] = "elliptic";
    if (cfg.kind == "toeplitz") {
        // For Toeplitz operators the Fredholm condition is invertibility of f.
        stage("parse");
        const Expr f = toeplitz_symbol(cfg);
        stage("quadrature");
        const QuadratureRule q = rule(cfg);
        stage("invertibility");
        if (cfg.n == 1) {
            const auto inv = check_invertible(MatrixSymbolField::from_expr(f, 1, f->rows), q);
            out.body["invertible"] = inv.certified;
            out.body["min_singular"] = inv.min_singular;
            out.body["slack"] = inv.slack;
        } else {
            const double mn = circle_min_singular(f, q);
            out.body["invertible"] = mn > kInvertibleTol;
            out.body["min_singular"] = mn;
        }
    } else {
        stage("parse");
        const auto field = pgamma_field(cfg);
        stage("quadrature");
        const QuadratureRule q = rule(cfg);
        stage("ellipticity");
        out.body["ellipticity"] = ellipticity_json(check_heisenberg_elliptic(field, q));
    }
    out.body["provenance"] = provenance(cfg);
    return out;
}

CommandOutput cmd_index(const RunConfig& cfg) {
    CommandOutput out;
    json& b = out.body;
    b["command"] = "index";
    b["kind"] = cfg.kind;
    std::optional<long long> topo, analytic;
    int sign = 1;

    if (cfg.kind == "pgamma") {
        const Prepared p = prepare_pgamma(cfg);
        b["ellipticity"] = ellipticity_json(p.ell);
        b["truncation"] = {{"N", p.fock.N},
                           {"multiplicities", p.fock.multiplicities},
                           {"sup_norm_grid", p.fock.sup_norm_grid},
                           {"lipschitz_slack", p.fock.lipschitz_slack}};
        sign = calibration().sign_convention(cfg.n);
        if (cfg.topological) {
            stage("topological");
            const auto rep = index_topological(p.field, p.fock, p.quad);
            const auto simple = index_s3_simple(p.field, p.fock, p.quad);
            stage("kcycle");
            const auto kc = build_kcycle(p.field, p.fock, p.quad);
            const long long pairing = kcycle_pairing(kc);
            if (pairing != rep.index)
                throw Error(ErrorKind::InternalConsistency, "K-cycle pairing " + std::to_string(pairing) +
                                                                " differs from the topological index");
            b["winding_table"] = topological_json(rep);
            b["index_s3_simple"] = simple.index;
            b["kcycle_pairing"] = pairing;
            topo = rep.index;
        }
        if (cfg.analytic == "spectral") {
            stage("analytic");
            const auto rep = spectral_index_s3(p.field, cfg.L_list, cfg.spectral, kappa(cfg));
            b["analytic"] = rows_json(rep);
            b["analytic"]["method"] = "spectral";
            if (rep.stable) analytic = *rep.index;
        } else if (cfg.analytic == "toeplitz") {
            throw Error(ErrorKind::InvalidInput, "analytic = toeplitz needs operator.kind = toeplitz");
        }
        b["index_topological"] = topo ? json(*topo) : json(nullptr);
    } else {
        stage("parse");
        const Expr f = toeplitz_symbol(cfg);
        stage("quadrature");
        const QuadratureRule q = rule(cfg);
        sign = calibration().sign_convention(cfg.n);
        if (cfg.topological) {
            stage("topological");
            const auto t = toeplitz_topological_index(f, cfg.n, q);
            b["winding"] = winding_json(t.winding);
            b["index_topological"] = t.winding.beta;
            topo = t.index;  // sign_convention · β
        } else {
            b["index_topological"] = nullptr;
        }
        if (cfg.analytic == "toeplitz") {
            stage("analytic");
            if (cfg.n == 0) {
                const auto r = toeplitz_s1_index(f, cfg.D, cfg.spectral);
                b["analytic"] = {{"method", "parametrix-trace"},
                                 {"trace_D", r.trace_D},
                                 {"trace_2D", r.trace_2D},
                                 {"inverse_order", r.inverse_order},
                                 {"inverse_tail", r.inverse_tail},
                                 {"svd", rows_json(r.svd)}};
                b["analytic"]["svd_agrees"] = r.svd_agrees ? json(*r.svd_agrees) : json("unresolved");
                analytic = r.index;
            } else {
                const auto r = toeplitz_s3_index(f, cfg.D, cfg.spectral);
                b["analytic"] = rows_json(r.report);
                b["analytic"]["method"] = "hardy-sections";
                analytic = r.index;
            }
        } else if (cfg.analytic == "spectral") {
            throw Error(ErrorKind::InvalidInput, "analytic = spectral needs operator.kind = pgamma");
        }
    }
    b["sign_convention"] = sign;
    if (cfg.kind == "toeplitz") b["index_topological_signed"] = topo ? json(*topo) : json(nullptr);
    b["index_analytic"] = analytic ? json(*analytic) : json(nullptr);
    if (cfg.analytic == "none" || !topo) {
        b["agree"] = "not-computed";
    } else if (!analytic) {
        b["agree"] = "not-computed";
        b["analytic_status"] = "inconclusive";
        out.exit_code = kExitInconclusive;
    } else {
        const bool agree = *analytic == *topo;
        b["agree"] = agree;
        if (!agree) out.exit_code = kExitDisagree;
    }
    b["provenance"] = provenance(cfg);
    return out;
}

CommandOutput cmd_kcycle(const RunConfig& cfg) {
    CommandOutput out;
    KCycleDescriptor kc;
    if (cfg.kind == "pgamma") {
        const Prepared p = prepare_pgamma(cfg);
        stage("kcycle");
        kc = build_kcycle(p.field, p.fock, p.quad);
    } else {
        stage("parse");
        const Expr f = toeplitz_symbol(cfg);
        stage("quadrature");
        const QuadratureRule q = rule(cfg);
        stage("kcycle");
        kc = build_toeplitz_kcycle(f, cfg.n, q);
    }
    out.body["command"] = "kcycle";
    out.body["kcycle"] = serialize_kcycle(kc);
    out.body["pairing"] = kcycle_pairing(kc);
    out.body["provenance"] = provenance(cfg);
    out.text = kcycle_table(kc);
    return out;
}

CommandOutput cmd_toeplitz(const RunConfig& cfg) {
    stage("parse");
    const Expr f = toeplitz_symbol(cfg);
    stage("analytic");
    CommandOutput out;
    json& b = out.body;
    b["command"] = "toeplitz";
    SpectralReport sections;
    if (cfg.n == 0) {
        const auto r = toeplitz_s1_index(f, cfg.D, cfg.spectral);
        b["method"] = "parametrix-trace";
        b["index"] = r.index;
        b["trace_D"] = r.trace_D;
        b["trace_2D"] = r.trace_2D;
        b["laurent_degrees"] = {r.degree_minus, r.degree_plus};
        b["inverse_order"] = r.inverse_order;
        b["inverse_tail"] = r.inverse_tail;
        b["samples"] = r.samples;
        b["svd"] = rows_json(r.svd);
        b["svd_agrees"] = r.svd_agrees ? json(*r.svd_agrees) : json("unresolved");
        sections = r.svd;
    } else {
        const auto r = toeplitz_s3_index(f, cfg.D, cfg.spectral);
        b["method"] = "hardy-sections";
        b["index"] = r.index;
        b["sections"] = rows_json(r.report);
        sections = r.report;
    }
    b["provenance"] = provenance(cfg);
    out.text = section_csv(sections, "D");
    return out;
}

CommandOutput cmd_spectrum(const RunConfig& cfg) {
    CommandOutput out;
    json& b = out.body;
    b["command"] = "spectrum";
    if (cfg.threshold_scan) {
        // Sweeps constant scalar γ; operator.gamma is not used.
        stage("threshold-scan");
        const auto& t = *cfg.threshold_scan;
        const auto scan = threshold_scan(t.lo, t.hi, t.steps, t.L, kappa(cfg));
        json table = json::array(), crossings = json::array();
        for (const auto& r : scan.table) table.push_back({{"gamma", r.gamma}, {"min_abs_eigenvalue", r.min_abs_eig}});
        for (const auto& c : scan.crossings)
            crossings.push_back({{"gamma", c.gamma}, {"level", c.level}, {"branch", c.branch}});
        b["threshold_scan"] = {{"lo", t.lo},         {"hi", t.hi},
                               {"steps", t.steps},   {"L", t.L},
                               {"table", table},     {"crossings", crossings},
                               {"max_slope_error", scan.max_slope_error}};
        out.text = threshold_csv(scan);
    } else {
        stage("parse");
        const auto field = pgamma_field(cfg);
        stage("analytic");
        const auto rep = spectral_index_s3(field, cfg.L_list, cfg.spectral, kappa(cfg));
        b["spectral"] = rows_json(rep);
        if (!rep.stable) out.exit_code = kExitInconclusive;
        out.text = section_csv(rep, "L");
    }
    b["provenance"] = provenance(cfg);
    return out;
}

CommandOutput cmd_selftest(const RunConfig& cfg) {
    CommandOutput out;
    json checks = json::array();
    std::ostringstream text;
    bool all = true;
    const int qres = cfg.quadrature_resolution.value_or(cfg.resolution);

    auto run = [&](const char* name, const std::function<std::string()>& fn) {
        std::string detail;
        bool pass = true;
        try {
            detail = fn();
        } catch (const Error& e) {
            pass = false;
            detail = std::string(to_string(e.kind())) + ": " + e.what();
        }
        if (!detail.empty() && detail.rfind("FAIL ", 0) == 0) {
            pass = false;
            detail = detail.substr(5);
        }
        all = all && pass;
        checks.push_back({{"name", name}, {"pass", pass}, {"detail", detail}});
        text << (pass ? "PASS " : "FAIL ") << name << ": " << detail << '\n';
    };
    auto fmt = [](const char* f, double a, double b = 0.0) {
        char buf[160];
        std::snprintf(buf, sizeof buf, f, a, b);
        return std::string(buf);
    };

    run("calibration anchors", [&] {
        const auto z = winding_s1(parse_symbol("z", {0, 1}), 64);
        const auto s = winding_s3(parse_symbol("su2(x)", {1, 2}), quadrature_s3(qres));
        const double res = std::max(std::abs(z.normalized - 1.0), std::abs(s.normalized - 1.0));
        return (res < 1e-6 ? "" : "FAIL ") + fmt("beta(z) = %.12f, beta(su2) = %.12f", z.normalized.real(),
                                                 s.normalized.real());
    });
    run("contact frame", [&] {
        const auto r = validate_contact_frame(make_sphere(1), 2000, cfg.seed, kappa(cfg));
        const bool ok = r.max_violation <= 1e-9 && r.min_abs_volume > 0.0 && r.volume_sign != 0;
        return (ok ? "" : "FAIL ") + fmt("max violation %.3g, min |theta^dtheta| %.6f", r.max_violation,
                                         r.min_abs_volume);
    });
    run("quadrature volume", [&] {
        const auto q3 = quadrature_s3(qres);
        const auto q1 = quadrature_s1(qres);
        double v3 = 0.0, v1 = 0.0;
        for (double w : q3.weights) v3 += w;
        for (double w : q1.weights) v1 += w;
        const double e = std::max(std::abs(v3 - 2 * kPi * kPi), std::abs(v1 - 2 * kPi));
        return (e <= 1e-10 ? "" : "FAIL ") + fmt("volume error %.3g at resolution %.0f", e, qres);
    });
    run("gram vs quadrature", [&] {
        const auto q = quadrature_s3(qres);
        double worst = 0.0;
        for (int a = 0; a <= 6; ++a)
            for (int b2 = 0; a + b2 <= 6; ++b2) {
                std::vector<double> v(q.size());
                for (std::size_t k = 0; k < q.size(); ++k) {
                    const double r1 = q.x[0][k] * q.x[0][k] + q.x[1][k] * q.x[1][k];
                    const double r2 = q.x[2][k] * q.x[2][k] + q.x[3][k] * q.x[3][k];
                    v[k] = std::pow(r1, a) * std::pow(r2, b2);
                }
                const double quad = integrate(q, v);
                worst = std::max({worst, std::abs(quad - beta_integral_s3(a, b2)),
                                  std::abs(quad - hardy_s3_gram(a, b2))});
            }
        return (worst <= 1e-8 ? "" : "FAIL ") + fmt("max deviation %.3g", worst);
    });
    run("fock sum identity", [&] {
        const auto f = MatrixSymbolField::parse("2*su2(x)", 1, 2);
        SpherePoint p;
        p.coords = {0.5, 0.5, 0.5, -0.5};  // dyadic, so sums are exact
        for (int j = 0; j <= 6; ++j) {
            const Eigen::MatrixXcd s = fock_action(f, FockSign::Plus, j, p) + fock_action(f, FockSign::Minus, j, p);
            if (s != 2.0 * (2 * j + 1) * Eigen::MatrixXcd::Identity(2, 2)) return std::string("FAIL a_j + b_j");
        }
        for (int N = 0; N <= 10; ++N) {
            long long sum = 0;
            for (int j = 0; j <= N; ++j) sum += multiplicity(2, j);
            if (sum != (N + 1LL) * (N + 2) / 2) return std::string("FAIL multiplicity sum");
        }
        return std::string("exact for j <= 6");
    });
    run("kcycle structure", [&] {
        const auto f = MatrixSymbolField::parse("2*su2(x)", 1, 2);
        const auto q = quadrature_s3(qres);
        FockModel fm = choose_truncation(f, q);
        const auto kc = build_kcycle(f, fm, q);
        const long long pairing = kcycle_pairing(kc);
        fm.N += 1;
        fm.multiplicities.push_back(multiplicity(1, fm.N));
        const auto kc2 = build_kcycle(f, fm, q);
        const bool ok = kc.components.size() == 2 && kc2.components.size() == 2 && kcycle_pairing(kc2) == pairing &&
                        pairing == 2;
        return (ok ? "" : "FAIL ") + fmt("pairing %.0f, after N+1 %.0f", double(pairing), double(kcycle_pairing(kc2)));
    });
    run("threshold normalization", [&] {
        const auto scan = threshold_scan(0.5, 3.5, 60, 30, kappa(cfg));
        const bool ok = scan.crossings.size() == 2 && std::abs(scan.crossings[0].gamma - 1.0) <= 1e-6 &&
                        std::abs(scan.crossings[1].gamma - 3.0) <= 1e-6;
        return (ok ? "" : "FAIL ") + fmt("crossings at %.9f, %.9f", scan.crossings.empty() ? NAN : scan.crossings[0].gamma,
                                         scan.crossings.size() < 2 ? NAN : scan.crossings[1].gamma);
    });

    out.body["command"] = "selftest";
    out.body["checks"] = checks;
    out.body["passed"] = all;
    out.body["provenance"] = provenance(cfg);
    out.text = text.str();
    out.exit_code = all ? kExitOk : kExitFailure;
    return out;
}

CommandOutput run_command(const std::string& command, const RunConfig& cfg) {
    g_stage = "setup";
    try {
        if (command == "elliptic") return cmd_elliptic(cfg);
        if (command == "index") return cmd_index(cfg);
        if (command == "kcycle") return cmd_kcycle(cfg);
        if (command == "toeplitz") return cmd_toeplitz(cfg);
        if (command == "spectrum") return cmd_spectrum(cfg);
        if (command == "selftest") return cmd_selftest(cfg);
        throw Error(ErrorKind::InvalidInput, "unknown command '" + command + "'");
    } catch (const Error& e) {
        CommandOutput out;
        out.body["command"] = command;
        json err = {{"stage", g_stage}, {"kind", to_string(e.kind())}, {"message", e.what()}};
        if (const auto* pe = dynamic_cast<const ParseError*>(&e)) {
            err["line"] = pe->line();
            err["column"] = pe->column();
        }
        out.body["error"] = err;
        out.body["provenance"] = provenance(cfg);
        out.text = std::string("error [") + g_stage + "] " + to_string(e.kind()) + ": " + e.what() + "\n";
        out.exit_code = exit_code_for(e.kind());
        return out;
    }
}

std::string render_json(const std::string& command, const CommandOutput& out) {
    json doc;
    doc["metadata"] = {{"tool", "hindex"},
                       {"schema", kReportSchema},
                       {"command", command},
                       {"timestamp", iso_timestamp()},
                       {"threads", thread_count()}};
    doc["report"] = out.body;
    return doc.dump(2) + "\n";
}

int main(int argc, char** argv) {
    CLI::App app{"hindex: index computations for Heisenberg-elliptic operators on contact spheres"};
    app.require_subcommand(1, 1);
    std::string config_path, out_path;
    std::optional<int> resolution;
    std::optional<std::uint64_t> seed;
    for (const char* name : {"elliptic", "index", "kcycle", "toeplitz", "spectrum", "selftest"}) {
        auto* sub = app.add_subcommand(name);
        auto* c = sub->add_option("--config", config_path, "JSON config (schema hindex.config/1)");
        if (std::string(name) != "selftest") c->required();
        sub->add_option("--out", out_path, "write the report here instead of stdout");
        sub->add_option("--resolution", resolution, "quadrature nodes per axis");
        sub->add_option("--seed", seed, "seed for sampled checks");
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitInvalid;
    }
    const std::string command = app.get_subcommands().front()->get_name();

    RunConfig cfg;
    try {
        if (!config_path.empty()) {
            std::ifstream in(config_path);
            if (!in) throw Error(ErrorKind::InvalidInput, "cannot read config " + config_path);
            json doc;
            try {
                doc = json::parse(in);
            } catch (const json::parse_error& e) {
                throw Error(ErrorKind::InvalidInput, std::string("config is not valid JSON: ") + e.what());
            }
            cfg = parse_config(doc);
        }
    } catch (const Error& e) {
        std::cerr << "hindex: config: " << to_string(e.kind()) << ": " << e.what() << '\n';
        return kExitInvalid;
    }
    if (resolution) cfg.resolution = *resolution;
    if (seed) cfg.seed = *seed;
    if (!out_path.empty()) cfg.out_path = out_path;

    const CommandOutput out = run_command(command, cfg);
    if (out.body.contains("error")) std::cerr << "hindex: " << out.text;

    const bool as_text = cfg.format != "json" && !out.text.empty() && !out.body.contains("error");
    const std::string payload = as_text ? out.text : render_json(command, out);
    if (cfg.out_path.empty()) {
        std::cout << payload;
    } else {
        std::ofstream f(cfg.out_path, std::ios::binary);
        if (!f) {
            std::cerr << "hindex: cannot write " << cfg.out_path << '\n';
            return kExitInvalid;
        }
        f << payload;
    }
    return out.exit_code;
}

}  // namespace hindex::cli
