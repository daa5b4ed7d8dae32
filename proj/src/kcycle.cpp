#include "hindex/kcycle.hpp"

#include <cstdio>
#include <sstream>

#include "hindex/error.hpp"

namespace hindex {

namespace {

int minus_orientation(int n) { return (n + 1) % 2 == 0 ? +1 : -1; }

std::string clutch_text(const std::string& gamma, char op, int k) {
    return "(" + gamma + ") " + op + " " + std::to_string(k) + "*I";
}

}  // namespace

KCycleDescriptor build_kcycle(const MatrixSymbolField& field, const FockModel& fock, const QuadratureRule& quad) {
    if (field.sphere.n != 1) throw Error(ErrorKind::Unsupported, "K-cycles of P_gamma are built numerically on S^3 only");
    KCycleDescriptor kc;
    kc.kind = "pgamma";
    kc.n = field.sphere.n;
    kc.r = field.r;
    kc.N = fock.N;
    kc.components = {{"X+xS1", +1, {}}, {"X-xS1", minus_orientation(kc.n), {}}};
    const std::string g = sym::to_string(field.expr);
    for (int j = 0; j <= fock.N; ++j) {
        const int k = kc.n + 2 * j;
        const long long m = multiplicity(kc.n, j);
        for (int c = 0; c < 2; ++c) {
            const Expr clutch = sym::sub(field.expr, sym::constant(cplx(c == 0 ? k : -k, 0.0)));
            ClutchedBundle b;
            b.j = j;
            b.multiplicity = m;
            b.rank = field.r * m;
            b.clutch_expr = clutch_text(g, c == 0 ? '-' : '+', k);
            b.beta = winding_s3(clutch, quad).beta;
            kc.components[c].summands.push_back(b);
        }
    }
    kc.pairing = kcycle_pairing(kc);
    return kc;
}

KCycleDescriptor build_toeplitz_kcycle(const Expr& f, int n, const QuadratureRule& quad) {
    if (n != 0 && n != 1) throw Error(ErrorKind::Unsupported, "Toeplitz K-cycles are built on S^1 and S^3");
    if (f->rows != f->cols) throw Error(ErrorKind::InvalidInput, "Toeplitz symbol must be square");
    KCycleDescriptor kc;
    kc.kind = "toeplitz";
    kc.n = n;
    kc.r = f->rows;
    kc.N = 0;
    const int beta = n == 0 ? winding_s1(f, quad.resolution).beta : winding_s3(f, quad).beta;
    const long long r = kc.r;
    kc.components = {{"X+xS1", +1, {{0, 1, r, sym::to_string(f), beta}}},
                     {"X-xS1", minus_orientation(n), {{0, 1, r, "I", 0}}}};
    kc.pairing = kcycle_pairing(kc);
    return kc;
}

long long kcycle_pairing(const KCycleDescriptor& kc) {
    if (kc.components.size() != 2) throw Error(ErrorKind::InvalidInput, "a K-cycle has exactly two components");
    if (kc.components[0].orientation != 1 || kc.components[1].orientation != minus_orientation(kc.n))
        throw Error(ErrorKind::InvalidInput, "component orientations do not match the sphere dimension");
    long long s = 0;
    for (const auto& c : kc.components)
        for (const auto& b : c.summands) s += c.orientation * b.multiplicity * b.beta;
    return s;
}

void check_pairing(const KCycleDescriptor& kc, const TopIndexReport& rep) {
    const long long p = kcycle_pairing(kc);
    if (p != rep.index || p != kc.pairing)
        throw Error(ErrorKind::InternalConsistency, "K-cycle pairing " + std::to_string(p) +
                                                        " differs from the topological index " +
                                                        std::to_string(rep.index));
}

nlohmann::json serialize_kcycle(const KCycleDescriptor& kc) {
    nlohmann::json comps = nlohmann::json::array();
    for (const auto& c : kc.components) {
        nlohmann::json sums = nlohmann::json::array();
        for (const auto& b : c.summands)
            sums.push_back({{"j", b.j},
                            {"multiplicity", b.multiplicity},
                            {"rank", b.rank},
                            {"clutch_expr", b.clutch_expr},
                            {"beta", b.beta}});
        comps.push_back({{"base", c.base}, {"orientation", c.orientation}, {"summands", sums}});
    }
    return {{"schema", kKCycleSchema},
            {"kind", kc.kind},
            {"n", kc.n},
            {"r", kc.r},
            {"N", kc.N},
            {"phi", kc.phi},
            {"equatorial_trivialization", kc.equatorial_trivialization},
            {"components", comps},
            {"pairing", kc.pairing}};
}

KCycleDescriptor parse_kcycle(const nlohmann::json& doc) {
    try {
        if (doc.at("schema").get<std::string>() != kKCycleSchema)
            throw Error(ErrorKind::InvalidInput, "unknown K-cycle schema");
        KCycleDescriptor kc;
        kc.kind = doc.at("kind").get<std::string>();
        kc.n = doc.at("n").get<int>();
        kc.r = doc.at("r").get<int>();
        kc.N = doc.at("N").get<int>();
        kc.phi = doc.at("phi").get<std::string>();
        kc.equatorial_trivialization = doc.at("equatorial_trivialization").get<std::string>();
        for (const auto& c : doc.at("components")) {
            KCycleComponent comp;
            comp.base = c.at("base").get<std::string>();
            comp.orientation = c.at("orientation").get<int>();
            for (const auto& b : c.at("summands"))
                comp.summands.push_back({b.at("j").get<int>(), b.at("multiplicity").get<long long>(),
                                         b.at("rank").get<long long>(), b.at("clutch_expr").get<std::string>(),
                                         b.at("beta").get<int>()});
            kc.components.push_back(std::move(comp));
        }
        kc.pairing = doc.at("pairing").get<long long>();
        if (kc.components.size() != 2) throw Error(ErrorKind::InvalidInput, "a K-cycle has exactly two components");
        if (kc.phi != "proj1") throw Error(ErrorKind::InvalidInput, "phi must be the first-factor projection");
        return kc;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::InvalidInput, std::string("malformed K-cycle document: ") + e.what());
    }
}

std::string kcycle_table(const KCycleDescriptor& kc) {
    std::ostringstream out;
    char line[160];
    std::snprintf(line, sizeof line, "%-7s %3s %12s %8s %5s  %s\n", "base", "j", "multiplicity", "rank", "beta",
                  "clutching");
    out << line;
    for (const auto& c : kc.components)
        for (const auto& b : c.summands) {
            std::snprintf(line, sizeof line, "%-7s %3d %12lld %8lld %5d  ", c.base.c_str(), b.j, b.multiplicity,
                          b.rank, b.beta);
            out << line << b.clutch_expr << '\n';
        }
    out << "pairing " << kc.pairing << '\n';
    return out.str();
}

}  // namespace hindex
