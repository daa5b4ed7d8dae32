#pragma once

#include <string>
#include <vector>

#include "hindex/contact_models.hpp"
#include "hindex/symbol.hpp"

namespace hindex {

// γ: X → M(r, ℂ) on a model sphere. P_γ = I_r⊗Δ_H + iγ(I_r⊗T) is determined
// by (sphere, γ, r), so this type also stands for the operator.
struct MatrixSymbolField {
    ContactSphere sphere;
    int r = 1;
    Expr expr;
    std::string source;

    // Parses text in the DSL of sphere n; a 1×1 result is read as scalar·I_r.
    static MatrixSymbolField parse(const std::string& text, int n, int r);
    static MatrixSymbolField from_expr(const Expr& e, int n, int r);
};

Eigen::MatrixXcd eval_gamma(const MatrixSymbolField& field, const SpherePoint& x);

enum class FockSign { Plus, Minus };

// a_j = (2j+n)I − γ(x) for Plus, b_j = (2j+n)I + γ(x) for Minus.
Eigen::MatrixXcd fock_action(const MatrixSymbolField& field, FockSign sign, int j, const SpherePoint& x);

long long multiplicity(int n, int j);

struct FockModel {
    int n = 1;
    int N = 0;
    std::vector<long long> multiplicities;  // m_j, j = 0..N
    double sup_norm_grid = 0.0;             // max over the grid of ‖γ‖₂
    double lipschitz_slack = 0.0;           // grid spacing × max ‖dγ‖
};

struct EllipticityReport {
    bool elliptic = true;
    double worst_margin = 0.0;
    SpherePoint witness;
    int witness_lambda = 0;
    std::vector<int> thresholds;  // scanned λ values
    double sup_norm = 0.0;
    double tol = 0.0;
    std::size_t grid_points = 0;
};

inline constexpr double kEllipticTol = 1e-8;
inline constexpr int kEllipticResolution = 32;

EllipticityReport check_heisenberg_elliptic(const MatrixSymbolField& field, const QuadratureRule& grid,
                                            double tol = kEllipticTol);

// Throws Error(NotElliptic) for non-elliptic fields.
FockModel choose_truncation(const MatrixSymbolField& field, const QuadratureRule& grid, double tol = kEllipticTol);

// min σ_min(f) on a grid against the grid spacing × max ‖df‖; f(x) is
// invertible everywhere when min_singular > slack.
struct InvertibilityReport {
    double min_singular = 0.0;
    double slack = 0.0;
    bool certified = false;
};
InvertibilityReport check_invertible(const MatrixSymbolField& field, const QuadratureRule& grid);

// Evaluates a compiled program on nodes [begin, begin+count) of a rule.
std::vector<BatchValues> evaluate_on_rule(const Evaluator& ev, const QuadratureRule& rule, std::size_t begin,
                                          std::size_t count);

// Splits a rule into fixed blocks (independent of the thread count).
inline constexpr std::size_t kNodeBlock = 1024;
inline std::size_t block_count(const QuadratureRule& rule) { return (rule.size() + kNodeBlock - 1) / kNodeBlock; }

}  // namespace hindex
