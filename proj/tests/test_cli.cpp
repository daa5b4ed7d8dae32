#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>
#include <unistd.h>

#include "doctest.h"
#include "hindex/cli.hpp"

using namespace hindex;
using namespace hindex::cli;
using nlohmann::json;

namespace {

json base(const std::string& kind, int r, const std::string& expr, int n = 1) {
    json op = {{"kind", kind}, {"r", r}};
    op[kind == "pgamma" ? "gamma" : "f"] = expr;
    return {{"schema", kConfigSchema}, {"manifold", {{"type", "sphere"}, {"n", n}}}, {"operator", op}};
}

struct Run {
    int code = -1;
    std::string out;
};

std::filesystem::path scratch() {
    const auto dir = std::filesystem::temp_directory_path() / ("hindex_cli_" + std::to_string(::getpid()));
    std::filesystem::create_directories(dir);
    return dir;
}

Run run_bin(const std::string& command, const json& cfg, const std::string& extra = "") {
    static int counter = 0;
    const auto dir = scratch();
    const auto cfg_path = dir / ("cfg" + std::to_string(counter) + ".json");
    const auto out_path = dir / ("out" + std::to_string(counter++) + ".txt");
    std::ofstream(cfg_path) << cfg.dump();
    const std::string cmd = std::string(HINDEX_BIN) + " " + command + " --config " + cfg_path.string() + " --out " +
                            out_path.string() + " " + extra + " 2>/dev/null";
    const int status = std::system(cmd.c_str());
    Run r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    std::ifstream in(out_path);
    std::stringstream ss;
    ss << in.rdbuf();
    r.out = ss.str();
    return r;
}

}  // namespace

TEST_CASE("config parsing rejects unknown keys and bad shapes") {
    CHECK_NOTHROW(parse_config(base("pgamma", 2, "2*su2(x)")));

    json bad = base("pgamma", 2, "2*su2(x)");
    bad["extra"] = 1;
    CHECK_THROWS_AS(parse_config(bad), Error);
    bad = base("pgamma", 2, "2*su2(x)");
    bad["compute"] = {{"L_list", {12, 16, 20}}, {"Lmax", 3}};
    CHECK_THROWS_AS(parse_config(bad), Error);
    bad = base("pgamma", 2, "2*su2(x)");
    bad["schema"] = "hindex.config/0";
    CHECK_THROWS_AS(parse_config(bad), Error);
    bad = base("pgamma", 2, "2*su2(x)");
    bad["compute"] = {{"analytic", "magic"}};
    CHECK_THROWS_AS(parse_config(bad), Error);
    bad = base("pgamma", 2, "2*su2(x)");
    bad["compute"] = {{"resolution", "high"}};
    CHECK_THROWS_AS(parse_config(bad), Error);
    // f belongs to toeplitz operators
    bad = base("pgamma", 2, "2*su2(x)");
    bad["operator"]["f"] = "z1";
    CHECK_THROWS_AS(parse_config(bad), Error);

    // shape check: a 2×2 literal for r = 3
    CHECK_THROWS_AS(parse_config(base("pgamma", 3, "[[1, 0], [0, 1]]")), Error);
    // parse errors carry their position
    try {
        parse_config(base("pgamma", 1, "2*su2(x"));
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line() == 1);
        CHECK(e.column() == 8);
        CHECK(std::string(e.what()).find("operator.gamma") != std::string::npos);
    }
}

TEST_CASE("config fields land in RunConfig") {
    json doc = base("toeplitz", 1, "z^2", 0);
    doc["compute"] = {{"analytic", "toeplitz"}, {"D", 24}, {"resolution", 32}, {"spectral", {{"svd_threshold", 1e-7}}}};
    doc["output"] = {{"format", "csv"}};
    doc["test_hooks"] = {{"kappa_scale", 1.01}};
    doc["seed"] = 9;
    const auto cfg = parse_config(doc);
    CHECK(cfg.n == 0);
    CHECK(cfg.kind == "toeplitz");
    CHECK(cfg.expr == "z^2");
    CHECK(cfg.D == 24);
    CHECK(cfg.resolution == 32);
    CHECK(cfg.spectral.svd_threshold == 1e-7);
    CHECK(cfg.format == "csv");
    CHECK(cfg.kappa_scale == 1.01);
    CHECK(cfg.seed == 9);
}

TEST_CASE("exit codes follow the error kinds") {
    CHECK(exit_code_for(ErrorKind::InvalidInput) == 4);
    CHECK(exit_code_for(ErrorKind::NotElliptic) == 4);
    CHECK(exit_code_for(ErrorKind::Unsupported) == 4);
    CHECK(exit_code_for(ErrorKind::Inconclusive) == 3);
    CHECK(exit_code_for(ErrorKind::ResolutionInsufficient) == 3);
    CHECK(exit_code_for(ErrorKind::InternalConsistency) == 1);
}

TEST_CASE("elliptic command examples") {
    auto cfg = parse_config(base("pgamma", 1, "0"));
    cfg.resolution = 32;
    auto out = run_command("elliptic", cfg);
    CHECK(out.exit_code == 0);
    CHECK(out.body["ellipticity"]["elliptic"] == true);

    cfg = parse_config(base("pgamma", 1, "1"));
    cfg.resolution = 32;
    out = run_command("elliptic", cfg);
    CHECK(out.body["ellipticity"]["elliptic"] == false);
    CHECK(out.body["ellipticity"]["witness"]["lambda"] == 1);

    cfg = parse_config(base("pgamma", 2, "2*su2(x)"));
    cfg.resolution = 32;
    out = run_command("elliptic", cfg);
    CHECK(out.body["ellipticity"]["elliptic"] == true);
    CHECK(out.body["ellipticity"]["margin"].get<double>() == doctest::Approx(1.0).epsilon(0.005));
}

TEST_CASE("index command: constant and non-elliptic symbols") {
    json doc = base("pgamma", 1, "2");
    doc["compute"] = {{"analytic", "spectral"}, {"L_list", {6, 8, 10}}, {"resolution", 32}};
    auto out = run_command("index", parse_config(doc));
    CHECK(out.exit_code == 0);
    CHECK(out.body["index_topological"] == 0);
    CHECK(out.body["index_analytic"] == 0);
    CHECK(out.body["agree"] == true);

    // odd integers are exactly the non-elliptic constants
    for (const char* g : {"1", "3", "-3"}) {
        doc = base("pgamma", 1, g);
        doc["compute"] = {{"resolution", 32}};
        out = run_command("index", parse_config(doc));
        CHECK(out.exit_code == 4);
        CHECK(out.body["error"]["stage"] == "ellipticity");
        CHECK(out.body["error"]["kind"] == "not-elliptic");
    }
    doc = base("pgamma", 1, "0.5");
    doc["compute"] = {{"resolution", 32}};
    CHECK(run_command("index", parse_config(doc)).body["index_topological"] == 0);

    doc = base("pgamma", 1, "1");
    doc["compute"] = {{"resolution", 32}};
    out = run_command("index", parse_config(doc));
    CHECK(out.exit_code == 4);
    CHECK(out.body["error"]["stage"] == "ellipticity");
    CHECK(out.body["error"]["kind"] == "not-elliptic");

    doc = base("pgamma", 1, "2");
    doc["compute"] = {{"resolution", 4}};
    out = run_command("index", parse_config(doc));
    CHECK(out.exit_code == 4);
    CHECK(out.body["error"]["stage"] == "quadrature");
}

TEST_CASE("index command: Toeplitz operators report the sign convention") {
    json doc = base("toeplitz", 2, "su2(x)");
    doc["compute"] = {{"analytic", "toeplitz"}, {"resolution", 32}};
    auto out = run_command("index", parse_config(doc));
    CHECK(out.exit_code == 0);
    CHECK(out.body["index_topological"] == 1);
    CHECK(out.body["sign_convention"] == 1);
    CHECK(out.body["index_analytic"] == 1);
    CHECK(out.body["agree"] == true);

    doc = base("toeplitz", 1, "z^3", 0);
    doc["compute"] = {{"analytic", "toeplitz"}, {"resolution", 64}, {"D", 16}};
    out = run_command("index", parse_config(doc));
    CHECK(out.exit_code == 0);
    CHECK(out.body["index_topological"] == 3);
    CHECK(out.body["sign_convention"] == -1);
    CHECK(out.body["index_topological_signed"] == -3);
    CHECK(out.body["index_analytic"] == -3);
    CHECK(out.body["agree"] == true);
}

TEST_CASE("kcycle command examples") {
    json doc = base("pgamma", 2, "2*su2(x)");
    doc["compute"] = {{"resolution", 32}};
    auto out = run_command("kcycle", parse_config(doc));
    REQUIRE(out.exit_code == 0);
    const auto& kc = out.body["kcycle"];
    CHECK(kc["components"].size() == 2);
    for (const auto& c : kc["components"]) CHECK(c["summands"].size() == 2);
    CHECK(out.body["pairing"] == 2);

    doc = base("pgamma", 1, "0");
    doc["compute"] = {{"resolution", 32}};
    out = run_command("kcycle", parse_config(doc));
    for (const auto& c : out.body["kcycle"]["components"])
        for (const auto& s : c["summands"]) CHECK(s["beta"] == 0);
    CHECK(out.body["pairing"] == 0);

    doc = base("toeplitz", 2, "su2(x)");
    doc["compute"] = {{"resolution", 32}};
    out = run_command("kcycle", parse_config(doc));
    int nontrivial = 0;
    for (const auto& c : out.body["kcycle"]["components"]) {
        bool any = false;
        for (const auto& s : c["summands"]) any = any || s["beta"] != 0;
        nontrivial += any;
    }
    CHECK(nontrivial == 1);
    CHECK(out.body["pairing"] == 1);
}

TEST_CASE("spectrum command: inconclusive instead of a wrong integer") {
    json doc = base("pgamma", 2, "2*su2(x)");
    doc["compute"] = {{"L_list", {8, 10, 12}}, {"spectral", {{"svd_threshold", 0.5}}}};
    auto out = run_command("spectrum", parse_config(doc));
    CHECK(out.exit_code == 3);
    CHECK(out.body["spectral"]["index"].is_null());
    CHECK(out.text.rfind("L,nullity_P,nullity_Pstar,index,min_singular_gap\n", 0) == 0);

    doc = base("pgamma", 1, "0");
    doc["compute"] = {{"threshold_scan", {{"lo", 0.5}, {"hi", 1.5}, {"steps", 4}, {"L", 10}}}};
    out = run_command("spectrum", parse_config(doc));
    CHECK(out.exit_code == 0);
    CHECK(out.body["threshold_scan"]["crossings"].size() == 1);
    CHECK(out.text.rfind("gamma,min_abs_eigenvalue\n", 0) == 0);

    doc["test_hooks"] = {{"kappa_scale", 1.01}};
    out = run_command("spectrum", parse_config(doc));
    CHECK(out.exit_code == 1);
    CHECK(out.body["error"]["kind"] == "normalization-failure");
}

TEST_CASE("every report carries provenance") {
    RunConfig cfg;
    const auto p = provenance(cfg);
    CHECK(p["calibration"]["sign_convention"]["S1"] == -1);
    CHECK(p["calibration"]["sign_convention"]["S3"] == 1);
    CHECK(p["calibration"]["c1"]["im"].get<double>() == doctest::Approx(-1.0 / (2 * M_PI)));
    CHECK(p["tolerances"]["svd_threshold"] == 1e-6);
    CHECK(p["tolerances"]["min_gap_factor"] == 100.0);
    CHECK(p["tolerances"].contains("winding_residual"));
}

TEST_CASE("binary: exit codes, formats and determinism") {
    json doc = base("toeplitz", 1, "z^(-2)", 0);
    doc["compute"] = {{"analytic", "toeplitz"}, {"D", 16}};
    const Run a = run_bin("index", doc);
    const Run b = run_bin("index", doc, "--resolution 64");
    CHECK(a.code == 0);
    const json ja = json::parse(a.out), jb = json::parse(b.out);
    CHECK(ja["report"]["index_analytic"] == 2);
    CHECK(ja["metadata"].contains("timestamp"));
    // the body is byte-identical; only metadata may differ
    CHECK(ja["report"].dump() == jb["report"].dump());

    json bad = base("pgamma", 1, "(1");
    CHECK(run_bin("index", bad).code == 4);
    CHECK(run_bin("index", {{"schema", kConfigSchema}, {"nonsense", true}}).code == 4);

    doc["output"] = {{"format", "csv"}};
    const Run csv = run_bin("toeplitz", doc);
    CHECK(csv.code == 0);
    CHECK(csv.out.rfind("D,nullity_P,nullity_Pstar,index,min_singular_gap\n16,", 0) == 0);

    json spec = base("pgamma", 2, "2*su2(x)");
    spec["compute"] = {{"L_list", {8, 10, 12}}, {"spectral", {{"svd_threshold", 0.5}}}};
    CHECK(run_bin("spectrum", spec).code == 3);

    std::filesystem::remove_all(scratch());
}

TEST_CASE("binary: selftest and its negative controls") {
    CHECK(run_bin("selftest", {{"schema", kConfigSchema}}).code == 0);
    const Run k = run_bin("selftest", {{"schema", kConfigSchema}, {"test_hooks", {{"kappa_scale", 1.01}}}});
    CHECK(k.code == 1);
    const json jk = json::parse(k.out);
    bool threshold_failed = false;
    for (const auto& c : jk["report"]["checks"])
        if (c["name"] == "threshold normalization")
            threshold_failed = c["pass"] == false &&
                               c["detail"].get<std::string>().find("normalization-failure") != std::string::npos;
    CHECK(threshold_failed);

    const Run r = run_bin("selftest", {{"schema", kConfigSchema}, {"test_hooks", {{"quadrature_resolution", 4}}}});
    CHECK(r.code == 1);
    CHECK(r.out.find("below the floor") != std::string::npos);
    std::filesystem::remove_all(scratch());
}
