#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "hindex/error.hpp"
#include "hindex/spectral.hpp"

namespace hindex::cli {

inline constexpr const char* kConfigSchema = "hindex.config/1";
inline constexpr const char* kReportSchema = "hindex.report/1";

enum ExitCode : int {
    kExitOk = 0,
    kExitFailure = 1,  // internal consistency, normalization, failed selftest
    kExitDisagree = 2,
    kExitInconclusive = 3,
    kExitInvalid = 4,
};

int exit_code_for(ErrorKind kind);

struct ThresholdParams {
    double lo = 0.5, hi = 3.5;
    int steps = 60;
    int L = 30;
};

struct RunConfig {
    std::string manifold_type = "sphere";
    int n = 1;

    std::string kind = "pgamma";  // or "toeplitz"
    int r = 1;
    std::string expr;             // operator.gamma or operator.f
    bool has_operator = false;

    bool topological = true;
    std::string analytic = "none";  // none | spectral | toeplitz
    std::vector<int> L_list{12, 16, 20};
    int D = 16;
    int resolution = 64;
    std::optional<ThresholdParams> threshold_scan;
    SpectralOptions spectral;

    std::string out_path;
    std::string format = "json";  // json | csv | table

    // Negative-control hooks, off by default.
    double kappa_scale = 1.0;
    std::optional<int> quadrature_resolution;

    std::uint64_t seed = 1;
};

// Validates schema, rejects unknown keys and parses/shape-checks the
// expression. Throws Error(InvalidInput) or ParseError.
RunConfig parse_config(const nlohmann::json& doc);

struct CommandOutput {
    nlohmann::json body;
    std::string text;  // CSV or table rendering when requested
    int exit_code = kExitOk;
};

CommandOutput cmd_elliptic(const RunConfig& cfg);
CommandOutput cmd_index(const RunConfig& cfg);
CommandOutput cmd_kcycle(const RunConfig& cfg);
CommandOutput cmd_toeplitz(const RunConfig& cfg);
CommandOutput cmd_spectrum(const RunConfig& cfg);
CommandOutput cmd_selftest(const RunConfig& cfg);

// Calibration constants and every tolerance a command may use.
nlohmann::json provenance(const RunConfig& cfg);

// Dispatches a command, converting errors into a report with a stage tag.
CommandOutput run_command(const std::string& command, const RunConfig& cfg);

// {"metadata": {...}, "report": body}; only metadata carries wall-clock data.
std::string render_json(const std::string& command, const CommandOutput& out);

int main(int argc, char** argv);

}  // namespace hindex::cli
