#pragma once

#include <string>
#include <vector>

#include "json.hpp"

#include "hindex/ktheory.hpp"

namespace hindex {

inline constexpr const char* kKCycleSchema = "hindex.kcycle/1";

// ν(clutch) ⊗ φ*Sym^j H^{1,0}. The symmetric power is kept as rank data only.
struct ClutchedBundle {
    int j = 0;
    long long multiplicity = 1;  // rank of Sym^j H^{1,0}
    long long rank = 1;          // r · multiplicity
    std::string clutch_expr;
    int beta = 0;

    bool operator==(const ClutchedBundle&) const = default;
};

struct KCycleComponent {
    std::string base;  // "X+xS1" or "X-xS1"
    int orientation = +1;
    std::vector<ClutchedBundle> summands;

    bool operator==(const KCycleComponent&) const = default;
};

struct KCycleDescriptor {
    std::string kind;  // "pgamma" or "toeplitz"
    int n = 1;
    int r = 1;
    int N = 0;
    std::string phi = "proj1";
    std::string equatorial_trivialization = "identity";
    std::vector<KCycleComponent> components;  // always X⁺×S¹ then X⁻×S¹
    long long pairing = 0;

    bool operator==(const KCycleDescriptor&) const = default;
};

KCycleDescriptor build_kcycle(const MatrixSymbolField& field, const FockModel& fock, const QuadratureRule& quad);
// n = 0 uses the S¹ winding at quad.resolution, n = 1 the S³ quadrature.
KCycleDescriptor build_toeplitz_kcycle(const Expr& f, int n, const QuadratureRule& quad);

// Σ_{X⁺} m_j β + (−1)^{n+1} Σ_{X⁻} m_j β.
long long kcycle_pairing(const KCycleDescriptor& kc);
// Throws InternalConsistency when the pairing differs from the index.
void check_pairing(const KCycleDescriptor& kc, const TopIndexReport& rep);

nlohmann::json serialize_kcycle(const KCycleDescriptor& kc);
KCycleDescriptor parse_kcycle(const nlohmann::json& doc);
std::string kcycle_table(const KCycleDescriptor& kc);

}  // namespace hindex
