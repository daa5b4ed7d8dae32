#pragma once

#include <optional>
#include <string>
#include <vector>

#include "hindex/peter_weyl.hpp"

namespace hindex {

struct SpectralOptions {
    double svd_threshold = 1e-6;
    double min_gap_factor = 100.0;
    double interior_mass = 0.01;  // max share of a kernel vector in the top shells
    int top_shells = 2;
    double drift_tol = 0.01;      // relative drift of low interior singular values
    int drift_count = 6;
    double drift_mass = 0.1;      // max top-shell share for drift candidates
    double boundary_mass = 0.5;   // min top-shell share of the partner in an unresolved pair
    double unresolved_ratio = 0.5;  // such a pair counts only below this share of the lowest interior value
};

// Singular-value census of a square truncation whose basis carries a shell
// index (spin m or polynomial degree).
struct NullityCount {
    int nullity = 0;       // interior right vectors below threshold: kernel of the operator
    int nullity_adj = 0;   // interior left vectors below threshold: kernel of the adjoint
    int candidates = 0;    // all singular values below threshold
    double max_kernel_sv = 0.0;
    double min_nonkernel_sv = 0.0;
    double gap = 0.0;      // min_nonkernel_sv / max(max_kernel_sv, threshold if none)
    std::vector<double> low_interior;  // ascending
    // Pairs above threshold with one interior vector and the other in the top
    // shells: kernel vectors the cutoff has not resolved yet.
    int unresolved = 0;
    double min_unresolved_sv = 0.0;
    std::vector<double> boundary_sv;  // all one-sided pairs above threshold
};

NullityCount count_nullities(const Eigen::MatrixXcd& block, const std::vector<int>& shell, int top_shell,
                             const SpectralOptions& opt);
// Merges per-block counts in order.
NullityCount merge_counts(const std::vector<NullityCount>& parts, const SpectralOptions& opt);

struct SectionRow {
    int cutoff = 0;  // L or D
    int nullity = 0;
    int nullity_adj = 0;
    int index = 0;
    double min_singular_gap = 0.0;
    double max_kernel_sv = 0.0;
    double min_nonkernel_sv = 0.0;
    std::vector<double> low_interior;
    int unresolved = 0;
    double min_unresolved_sv = 0.0;
};

struct SpectralReport {
    std::vector<SectionRow> rows;
    bool stable = false;
    std::optional<int> index;
    std::string reason;  // why the result is inconclusive
};

// Decides stability of the last three rows: gap, equal index, drift.
void judge_stability(SpectralReport& rep, const SpectralOptions& opt, bool check_drift);

std::string section_csv(const SpectralReport& rep, const char* cutoff_name);

SectionRow spectral_row(const MatrixSymbolField& field, int L, const SpectralOptions& opt,
                        double kappa = kFrameKappa);
SpectralReport spectral_index_s3(const MatrixSymbolField& field, const std::vector<int>& L_list,
                                 const SpectralOptions& opt = {}, double kappa = kFrameKappa);

struct ThresholdRow {
    double gamma = 0.0;
    double min_abs_eig = 0.0;  // over spins 1..L
};

struct Crossing {
    double gamma = 0.0;
    int level = 0;       // p (or q) of the branch
    std::string branch;  // "a": λ(p,q+1) − λ(p,q), "b": λ(p+1,q) − λ(p,q)
};

struct ThresholdScan {
    std::vector<ThresholdRow> table;
    std::vector<Crossing> crossings;
    double max_slope_error = 0.0;  // |λ(p,1) − λ(p,0) − (2p+1−γ)| over the table
};

// Sweeps constant scalar γ over [lo, hi] in `steps` intervals. Throws
// NormalizationFailure when a crossing misses the odd integers by more than
// 1e−6 or the low-spin slopes miss 2j+1−γ by more than 1e−8.
ThresholdScan threshold_scan(double lo, double hi, int steps, int L, double kappa = kFrameKappa);

std::string threshold_csv(const ThresholdScan& scan);

}  // namespace hindex
