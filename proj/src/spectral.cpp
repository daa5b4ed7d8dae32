#include "hindex/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "hindex/error.hpp"
#include "hindex/parallel.hpp"

namespace hindex {

namespace {

double top_mass(const Eigen::VectorXcd& v, const std::vector<int>& shell, int top_shell) {
    double s = 0.0;
    for (int i = 0; i < v.size(); ++i)
        if (shell[i] >= top_shell) s += std::norm(v(i));
    return s / v.squaredNorm();
}

// Eigenvalues of the top-shell projector compressed to span(cols) that stay
// below `mass`.
int interior_dimension(const Eigen::MatrixXcd& cols, const std::vector<int>& shell, int top_shell, double mass) {
    Eigen::MatrixXcd top = Eigen::MatrixXcd::Zero(cols.rows(), cols.cols());
    for (int i = 0; i < cols.rows(); ++i)
        if (shell[i] >= top_shell) top.row(i) = cols.row(i);
    const Eigen::MatrixXcd g = cols.adjoint() * top;
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(g, Eigen::EigenvaluesOnly);
    int k = 0;
    for (int i = 0; i < es.eigenvalues().size(); ++i)
        if (es.eigenvalues()(i) <= mass) ++k;
    return k;
}

// One-sided pairs well below the interior spectrum are kernel vectors that
// leak through the cutoff; pairs comparable to it are ordinary edge modes.
void classify_boundary(NullityCount& c, const SpectralOptions& opt) {
    const double bound = c.low_interior.empty() ? std::numeric_limits<double>::infinity()
                                                : opt.unresolved_ratio * c.low_interior.front();
    c.unresolved = 0;
    c.min_unresolved_sv = 0.0;
    for (double s : c.boundary_sv)
        if (s < bound) {
            c.min_unresolved_sv = c.unresolved ? std::min(c.min_unresolved_sv, s) : s;
            ++c.unresolved;
        }
}

}  // namespace

NullityCount count_nullities(const Eigen::MatrixXcd& block, const std::vector<int>& shell, int top_shell,
                             const SpectralOptions& opt) {
    NullityCount c;
    c.min_nonkernel_sv = std::numeric_limits<double>::infinity();
    if (block.size() == 0) return c;
    Eigen::BDCSVD<Eigen::MatrixXcd> svd(block, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    for (int k = 0; k < sv.size(); ++k) {
        const double mu = top_mass(svd.matrixV().col(k), shell, top_shell);
        const double ml = top_mass(svd.matrixU().col(k), shell, top_shell);
        if (sv(k) < opt.svd_threshold) {
            ++c.candidates;
            c.max_kernel_sv = std::max(c.max_kernel_sv, sv(k));
        } else {
            c.min_nonkernel_sv = std::min(c.min_nonkernel_sv, sv(k));
            if (mu <= opt.drift_mass && ml <= opt.drift_mass) c.low_interior.push_back(sv(k));
            if (std::min(mu, ml) <= opt.interior_mass && std::max(mu, ml) >= opt.boundary_mass)
                c.boundary_sv.push_back(sv(k));
        }
    }
    // Near-zero singular values are often degenerate, so the split into
    // interior and edge directions is taken on the whole candidate subspace.
    if (c.candidates > 0) {
        c.nullity = interior_dimension(svd.matrixV().rightCols(c.candidates), shell, top_shell, opt.interior_mass);
        c.nullity_adj =
            interior_dimension(svd.matrixU().rightCols(c.candidates), shell, top_shell, opt.interior_mass);
    }
    std::sort(c.low_interior.begin(), c.low_interior.end());
    if (c.low_interior.size() > static_cast<std::size_t>(opt.drift_count)) c.low_interior.resize(opt.drift_count);
    classify_boundary(c, opt);
    return c;
}

NullityCount merge_counts(const std::vector<NullityCount>& parts, const SpectralOptions& opt) {
    NullityCount c;
    c.min_nonkernel_sv = std::numeric_limits<double>::infinity();
    for (const auto& p : parts) {
        c.nullity += p.nullity;
        c.nullity_adj += p.nullity_adj;
        c.candidates += p.candidates;
        c.max_kernel_sv = std::max(c.max_kernel_sv, p.max_kernel_sv);
        c.min_nonkernel_sv = std::min(c.min_nonkernel_sv, p.min_nonkernel_sv);
        c.low_interior.insert(c.low_interior.end(), p.low_interior.begin(), p.low_interior.end());
        c.boundary_sv.insert(c.boundary_sv.end(), p.boundary_sv.begin(), p.boundary_sv.end());
    }
    std::sort(c.low_interior.begin(), c.low_interior.end());
    if (c.low_interior.size() > static_cast<std::size_t>(opt.drift_count)) c.low_interior.resize(opt.drift_count);
    classify_boundary(c, opt);
    const double below = c.candidates > 0 ? std::max(c.max_kernel_sv, 1e-300) : opt.svd_threshold;
    c.gap = c.min_nonkernel_sv / below;
    return c;
}

void judge_stability(SpectralReport& rep, const SpectralOptions& opt, bool check_drift) {
    rep.stable = false;
    rep.index.reset();
    if (rep.rows.size() < 3) {
        rep.reason = "need at least three cutoffs";
        return;
    }
    const std::size_t first = rep.rows.size() - 3;
    for (std::size_t i = first; i < rep.rows.size(); ++i) {
        const auto& row = rep.rows[i];
        if (row.min_singular_gap < opt.min_gap_factor) {
            char buf[160];
            std::snprintf(buf, sizeof buf, "singular gap %.3g below %.3g at cutoff %d", row.min_singular_gap,
                          opt.min_gap_factor, row.cutoff);
            rep.reason = buf;
            return;
        }
        if (row.unresolved > 0) {
            char buf[200];
            std::snprintf(buf, sizeof buf,
                          "%d unresolved boundary pair(s) at cutoff %d, smallest singular value %.3g",
                          row.unresolved, row.cutoff, row.min_unresolved_sv);
            rep.reason = buf;
            return;
        }
        if (row.index != rep.rows[first].index) {
            rep.reason = "index changes between cutoffs " + std::to_string(rep.rows[first].cutoff) + " and " +
                         std::to_string(row.cutoff);
            return;
        }
    }
    if (check_drift)
        for (std::size_t i = first + 1; i < rep.rows.size(); ++i) {
            const auto& a = rep.rows[i - 1].low_interior;
            const auto& b = rep.rows[i].low_interior;
            for (std::size_t k = 0; k < std::min(a.size(), b.size()); ++k)
                if (std::abs(a[k] - b[k]) > opt.drift_tol * std::max(a[k], b[k])) {
                    char buf[200];
                    std::snprintf(buf, sizeof buf,
                                  "low interior singular value %zu drifts from %.6g to %.6g between cutoffs %d and %d",
                                  k, a[k], b[k], rep.rows[i - 1].cutoff, rep.rows[i].cutoff);
                    rep.reason = buf;
                    return;
                }
        }
    rep.stable = true;
    rep.index = rep.rows.back().index;
    rep.reason.clear();
}

std::string section_csv(const SpectralReport& rep, const char* cutoff_name) {
    std::ostringstream out;
    out << cutoff_name << ",nullity_P,nullity_Pstar,index,min_singular_gap\n";
    char buf[64];
    for (const auto& r : rep.rows) {
        std::snprintf(buf, sizeof buf, "%.6e", r.min_singular_gap);
        out << r.cutoff << ',' << r.nullity << ',' << r.nullity_adj << ',' << r.index << ',' << buf << '\n';
    }
    return out.str();
}

SectionRow spectral_row(const MatrixSymbolField& field, int L, const SpectralOptions& opt, double kappa) {
    const auto op = assemble_pgamma(field, L, kappa);
    std::vector<NullityCount> parts(op.components.size());
    const int top = L - opt.top_shells + 1;
    parallel_for(op.components.size(), [&](std::size_t c) {
        const auto& idx = op.components[c];
        std::vector<int> shell(idx.size());
        for (std::size_t k = 0; k < idx.size(); ++k) shell[k] = op.spin[idx[k]];
        parts[c] = count_nullities(dense_block(op.P, idx), shell, top, opt);
    });
    const NullityCount total = merge_counts(parts, opt);
    SectionRow row;
    row.cutoff = L;
    row.nullity = total.nullity;
    row.nullity_adj = total.nullity_adj;
    row.index = total.nullity - total.nullity_adj;
    row.min_singular_gap = total.gap;
    row.max_kernel_sv = total.max_kernel_sv;
    row.min_nonkernel_sv = total.min_nonkernel_sv;
    row.low_interior = total.low_interior;
    row.unresolved = total.unresolved;
    row.min_unresolved_sv = total.min_unresolved_sv;
    return row;
}

SpectralReport spectral_index_s3(const MatrixSymbolField& field, const std::vector<int>& L_list,
                                 const SpectralOptions& opt, double kappa) {
    if (L_list.size() < 3) throw Error(ErrorKind::InvalidInput, "L_list needs at least three entries");
    for (std::size_t i = 0; i < L_list.size(); ++i)
        if (L_list[i] < opt.top_shells || (i > 0 && L_list[i] <= L_list[i - 1]))
            throw Error(ErrorKind::InvalidInput, "L_list must be ascending and exceed the filtered shells");
    SpectralReport rep;
    for (int L : L_list) rep.rows.push_back(spectral_row(field, L, opt, kappa));
    judge_stability(rep, opt, true);
    return rep;
}

namespace {

// λ(p, q) for constant scalar γ, read from the assembled operator, which is
// diagonal with 1×1 blocks; lam[p][q] for p + q ≤ L.
std::vector<std::vector<double>> branch_values(double gamma, int L, double kappa) {
    char text[64];
    std::snprintf(text, sizeof text, "%.17g", gamma);
    const auto op = assemble_pgamma(MatrixSymbolField::parse(text, 1, 1), L, kappa);
    if (op.components.size() != static_cast<std::size_t>(op.basis.dim()))
        throw Error(ErrorKind::InternalConsistency, "constant scalar symbol did not give 1x1 blocks");
    std::vector<std::vector<double>> lam(L + 1);
    for (int m = 0; m <= L; ++m)
        for (int b = 0; b <= m; ++b) {
            const cplx v = op.P.coeff(op.basis.index(m, 0, b, 0), op.basis.index(m, 0, b, 0));
            if (std::abs(v.imag()) > 1e-12)
                throw Error(ErrorKind::InternalConsistency, "non-real eigenvalue for real constant symbol");
            const int p = m - b, q = b;
            if (lam[p].size() <= static_cast<std::size_t>(q)) lam[p].resize(q + 1);
            lam[p][q] = v.real();
        }
    return lam;
}

double slope(const std::vector<std::vector<double>>& lam, char branch, int level) {
    if (branch == 'a') return lam[level][1] - lam[level][0];
    return lam[1][level] - lam[0][level];
}

}  // namespace

ThresholdScan threshold_scan(double lo, double hi, int steps, int L, double kappa) {
    if (!(hi > lo) || steps < 1) throw Error(ErrorKind::InvalidInput, "threshold scan needs lo < hi and steps >= 1");
    if (L < 2) throw Error(ErrorKind::InvalidInput, "threshold scan needs L >= 2");
    ThresholdScan scan;
    const int levels = L - 1;  // slopes need p + q + 1 ≤ L
    std::vector<double> gammas(steps + 1);
    for (int k = 0; k <= steps; ++k) gammas[k] = lo + (hi - lo) * k / steps;
    std::vector<std::vector<std::vector<double>>> lams(gammas.size());
    parallel_for(gammas.size(), [&](std::size_t k) { lams[k] = branch_values(gammas[k], L, kappa); });

    for (std::size_t k = 0; k < gammas.size(); ++k) {
        const auto& lam = lams[k];
        double mn = std::numeric_limits<double>::infinity();
        for (int p = 0; p <= L; ++p)
            for (std::size_t q = 0; q < lam[p].size(); ++q)
                if (p + static_cast<int>(q) >= 1) mn = std::min(mn, std::abs(lam[p][q]));
        scan.table.push_back({gammas[k], mn});
        for (int j = 0; j <= std::min(3, levels); ++j)
            scan.max_slope_error =
                std::max(scan.max_slope_error, std::abs(slope(lam, 'a', j) - (2 * j + 1 - gammas[k])));
    }

    for (char branch : {'a', 'b'})
        for (int level = 0; level <= levels; ++level) {
            auto sgn = [](double v) { return (v > 0) - (v < 0); };
            std::vector<int> s(gammas.size());
            for (std::size_t k = 0; k < gammas.size(); ++k) s[k] = sgn(slope(lams[k], branch, level));
            for (std::size_t k = 0; k < gammas.size(); ++k) {
                if (s[k] == 0) {
                    scan.crossings.push_back({gammas[k], level, std::string(1, branch)});
                    continue;
                }
                if (k == 0 || s[k - 1] == 0 || s[k - 1] == s[k]) continue;
                double a = gammas[k - 1], b = gammas[k];
                const int sa = s[k - 1];
                while (b - a > 1e-12) {
                    const double mid = 0.5 * (a + b);
                    const int sm = sgn(slope(branch_values(mid, L, kappa), branch, level));
                    if (sm == 0) a = b = mid;
                    else if (sm == sa) a = mid;
                    else b = mid;
                }
                scan.crossings.push_back({0.5 * (a + b), level, std::string(1, branch)});
            }
        }
    std::sort(scan.crossings.begin(), scan.crossings.end(),
              [](const Crossing& x, const Crossing& y) { return x.gamma < y.gamma; });

    for (const auto& c : scan.crossings) {
        const double odd = 2.0 * std::floor(c.gamma / 2.0) + 1.0;
        if (std::abs(c.gamma - odd) > 1e-6) {
            char buf[200];
            std::snprintf(buf, sizeof buf,
                          "branch %s level %d crosses zero at gamma = %.9f, not at an odd integer (kappa = %.9f)",
                          c.branch.c_str(), c.level, c.gamma, kappa);
            throw Error(ErrorKind::NormalizationFailure, buf);
        }
    }
    if (scan.max_slope_error > 1e-8) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "low-spin slopes miss 2j+1-gamma by %.3g (kappa = %.9f)",
                      scan.max_slope_error, kappa);
        throw Error(ErrorKind::NormalizationFailure, buf);
    }
    return scan;
}

std::string threshold_csv(const ThresholdScan& scan) {
    std::ostringstream out;
    out << "gamma,min_abs_eigenvalue\n";
    char buf[96];
    for (const auto& r : scan.table) {
        std::snprintf(buf, sizeof buf, "%.9f,%.12e\n", r.gamma, r.min_abs_eig);
        out << buf;
    }
    return out.str();
}

}  // namespace hindex
