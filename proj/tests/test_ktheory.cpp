#include <cmath>
#include <random>

#include "doctest.h"
#include "hindex/error.hpp"
#include "hindex/ktheory.hpp"

using namespace hindex;

namespace {

constexpr double kPi = 3.14159265358979323846;

const QuadratureRule& q32() {
    static const QuadratureRule q = quadrature_s3(32);
    return q;
}
const QuadratureRule& q64() {
    static const QuadratureRule q = quadrature_s3(64);
    return q;
}

Expr s3(const std::string& text, int r = 2) { return parse_symbol(text, {1, r}); }

// Hand-written su2 and central differences, independent of the symbol code.
Eigen::Matrix2cd su2_at(const Vec4& x) {
    Eigen::Matrix2cd g;
    g << cplx(x[0], x[1]), -cplx(x[2], -x[3]), cplx(x[2], x[3]), cplx(x[0], -x[1]);
    return g;
}

double fd_integrand(double eta, double xi1, double xi2) {
    const double h = 1e-5;
    auto g = [](double e, double a, double b) { return su2_at(hopf_point(e, a, b).coords); };
    const Eigen::Matrix2cd ginv = g(eta, xi1, xi2).inverse();
    const double scale[3] = {1.0, 1.0 / std::cos(eta), 1.0 / std::sin(eta)};
    Eigen::Matrix2cd a[3];
    a[0] = ginv * (g(eta + h, xi1, xi2) - g(eta - h, xi1, xi2)) / (2 * h) * scale[0];
    a[1] = ginv * (g(eta, xi1 + h, xi2) - g(eta, xi1 - h, xi2)) / (2 * h) * scale[1];
    a[2] = ginv * (g(eta, xi1, xi2 + h) - g(eta, xi1, xi2 - h)) / (2 * h) * scale[2];
    return (3.0 * (a[0] * (a[1] * a[2] - a[2] * a[1])).trace()).real();
}

// Argument principle: unwrap the phase of det f around the circle.
int phase_wraps(const std::function<cplx(cplx)>& f, int samples) {
    double total = 0.0;
    cplx prev = f(1.0);
    for (int k = 1; k <= samples; ++k) {
        const cplx cur = f(std::polar(1.0, 2 * kPi * k / samples));
        total += std::arg(cur / prev);
        prev = cur;
    }
    return static_cast<int>(std::lround(total / (2 * kPi)));
}

Eigen::Matrix2cd random_unitary(std::mt19937& rng) {
    std::normal_distribution<double> g;
    Eigen::Matrix2cd m;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) m(i, j) = cplx(g(rng), g(rng));
    return Eigen::HouseholderQR<Eigen::Matrix2cd>(m).householderQ();
}

std::string literal(const Eigen::Matrix2cd& m) {
    char buf[512];
    std::snprintf(buf, sizeof buf, "[[(%.17g+%.17g*i), (%.17g+%.17g*i)], [(%.17g+%.17g*i), (%.17g+%.17g*i)]]",
                  m(0, 0).real(), m(0, 0).imag(), m(0, 1).real(), m(0, 1).imag(), m(1, 0).real(),
                  m(1, 0).imag(), m(1, 1).real(), m(1, 1).imag());
    return buf;
}

}  // namespace

TEST_CASE("calibration constants") {
    const auto& c = calibration();
    CHECK(c.c1 == cplx(0, -1 / (2 * kPi)));
    CHECK(std::abs(c.c3) == doctest::Approx(1 / (24 * kPi * kPi)));
    CHECK(c.sign_convention(0) == -1);
    CHECK(c.sign_convention(1) == +1);
    CHECK_THROWS_AS(c.sign_convention(2), Error);
    CHECK_NOTHROW(verify_calibration());
}

TEST_CASE("su2 integrand magnitude against finite differences") {
    // |raw| / vol(S³) = 24π² / 2π² = 12 pointwise for the degree-one map.
    std::mt19937 rng(2);
    std::uniform_real_distribution<double> e(0.2, 1.3), a(0, 2 * kPi);
    for (int k = 0; k < 20; ++k)
        CHECK(std::abs(fd_integrand(e(rng), a(rng), a(rng))) == doctest::Approx(12).epsilon(1e-6));
    const auto w = winding_s3(sym::su2(), q32());
    CHECK(std::abs(w.raw) == doctest::Approx(24 * kPi * kPi).epsilon(1e-12));
    CHECK(w.beta == 1);
    CHECK(std::abs(w.normalized.imag()) < 1e-6);
}

TEST_CASE("S1 windings") {
    CHECK(winding_s1(parse_symbol("2", {0, 1}), 32).beta == 0);
    CHECK(winding_s1(parse_symbol("2", {0, 1}), 32).raw == cplx(0, 0));
    const auto z = winding_s1(parse_symbol("z", {0, 1}), 32);
    CHECK(z.beta == 1);
    CHECK(std::abs(z.raw - cplx(0, 2 * kPi)) < 1e-12);
    CHECK(winding_s1(parse_symbol("z^3", {0, 1}), 64).beta == 3);

    std::mt19937 rng(4);
    std::uniform_real_distribution<double> u(-1, 1);
    for (int t = 0; t < 20; ++t) {
        const double c0 = u(rng), c1 = u(rng), c2 = u(rng), cm = u(rng);
        char buf[256];
        std::snprintf(buf, sizeof buf, "%.17g + %.17g*z + %.17g*z^2 + %.17g*z^-1", c0, c1, c2, cm);
        auto f = [&](cplx z) { return c0 + c1 * z + c2 * z * z + cm / z; };
        double mind = 1e9;
        for (int k = 0; k < 4096; ++k) mind = std::min(mind, std::abs(f(std::polar(1.0, 2 * kPi * k / 4096))));
        if (mind < 0.05) continue;
        CHECK(winding_s1(parse_symbol(buf, {0, 1}), 256).beta == phase_wraps(f, 4096));
    }
    CHECK_THROWS_AS(winding_s1(parse_symbol("z - 1", {0, 1}), 32), Error);
}

TEST_CASE("S3 winding examples") {
    const auto id = winding_s3(s3("I"), q32());
    CHECK(id.beta == 0);
    CHECK(id.raw == cplx(0, 0));
    CHECK(winding_s3(s3("su2(x)*su2(x)"), q64()).beta == 2);
    CHECK(winding_s3(s3("adj(su2(x))"), q32()).beta == -1);
    CHECK(winding_s3(s3("inv(su2(x))"), q32()).beta == -1);
    CHECK(winding_s3(s3("2*su2(x) - 1"), q64()).beta == 1);
    CHECK(winding_s3(s3("2*su2(x) + 3"), q64()).beta == 0);
    try {
        winding_s3(s3("su2(x) - 1"), q32());
        FAIL("expected NonInvertible");
    } catch (const Error& e) {
        // the grid misses x = (1,0,0,0) exactly; min |det| is small but resolvable
        CHECK((e.kind() == ErrorKind::NonInvertible || e.kind() == ErrorKind::ResolutionInsufficient));
    }
}

TEST_CASE("scalar symbols have identically zero integrand") {
    for (const char* t : {"3", "x1 + 4", "z1*z1 + 2*i", "conj(z2) - 5"}) {
        const auto w = winding_s3(s3(t, 1), q32());
        CHECK(w.beta == 0);
        CHECK(std::abs(w.raw) == 0.0);
    }
}

TEST_CASE("homotopy invariance along (1-t)3I + t(3I + su2)") {
    for (int k = 0; k <= 10; ++k) {
        const double t = k / 10.0;
        char buf[128];
        std::snprintf(buf, sizeof buf, "%.17g*3 + %.17g*(3 + su2(x))", 1 - t, t);
        CHECK(winding_s3(s3(buf), q32()).beta == 0);
    }
    // su2 + 0.5 stays invertible and keeps the degree of su2.
    CHECK(winding_s3(s3("su2(x) + 0.5"), q64()).beta == 1);
}

TEST_CASE("conjugation invariance") {
    std::mt19937 rng(8);
    for (int k = 0; k < 3; ++k) {
        const auto U = random_unitary(rng);
        const std::string t = literal(U) + "*(su2(x)*su2(x))*" + literal(Eigen::Matrix2cd(U.adjoint()));
        CHECK(winding_s3(s3(t), q64()).beta == 2);
    }
}

TEST_CASE("residual decreases with resolution") {
    double prev = 1.0;
    for (int res : {8, 12, 16, 24, 32}) {
        try {
            const auto w = winding_s3(s3("2*su2(x) - 1 + 0.4*x3"), quadrature_s3(res));
            CHECK(w.beta == 1);
            CHECK(w.residual <= prev + 1e-12);
            prev = w.residual;
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::ResolutionInsufficient);
            CHECK(prev == 1.0);
        }
    }
    CHECK(prev < 1e-6);
}

TEST_CASE("topological index of P_gamma") {
    auto run = [](const std::string& g, int r) {
        const auto f = MatrixSymbolField::parse(g, 1, r);
        const auto fm = choose_truncation(f, q32());
        return std::make_pair(index_topological(f, fm, q32()), index_s3_simple(f, fm, q32()));
    };
    const auto [two, two_s] = run("2*su2(x)", 2);
    CHECK(two.index == 2);
    CHECK(two_s.index == 2);
    REQUIRE(two.contributions.size() == 4);
    CHECK(two.contributions[0].sign == +1);
    CHECK(two.contributions[0].beta == 1);
    CHECK(two.contributions[1].beta == 1);
    CHECK(two.contributions[2].beta == 0);
    CHECK(two.contributions[3].beta == 0);

    const auto [four, four_s] = run("4*su2(x)", 2);
    CHECK(four.index == 4);
    for (const auto& c : four_s.contributions) CHECK(c.beta == ((c.j <= 1) ? 1 : 0));

    CHECK(run("0", 2).first.index == 0);
    CHECK(run("2.5", 2).first.index == 0);
    CHECK(run("2*x1 + 0.3*z2", 1).first.index == 0);
}

TEST_CASE("index from supplied betas for n >= 2") {
    // n = 2: minus branch enters with (−1)^{n+1} = −1, m_j = j + 1.
    const auto rep = index_topological(2, 2, {1, 2}, {1, 0});
    CHECK(rep.index == 1 * 1 + 2 * 2 - 1 * 1);
    CHECK(index_topological(3, 1, {1}, {1}).index == 2);
    CHECK_THROWS_AS(index_topological(2, 2, {1}, {1, 2}), Error);
    CHECK_THROWS_AS(index_topological(MatrixSymbolField::parse("z", 0, 1), FockModel{}, q32()), Error);
}

TEST_CASE("Toeplitz topological index and twisted index") {
    CHECK(toeplitz_topological_index(parse_symbol("1", {0, 1}), 0, quadrature_s1(32)).index == 0);
    CHECK(toeplitz_topological_index(parse_symbol("z", {0, 1}), 0, quadrature_s1(32)).index == -1);
    CHECK(toeplitz_topological_index(sym::su2(), 1, q32()).index == 1);

    const auto f = MatrixSymbolField::parse("2*su2(x)", 1, 2);
    const auto fm = choose_truncation(f, q32());
    const auto rep = index_topological(f, fm, q32());
    const auto ks = odd_k_range(1, fm.N);
    CHECK(ks == std::vector<int>{-3, -1, 1, 3});
    CHECK(twisted_index(rep, 3, std::vector<double>(ks.size(), 0.0)) == 6.0);
    CHECK(twisted_index(rep, 1, std::vector<double>(ks.size(), 0.0)) == 2.0);
    CHECK_THROWS_AS(twisted_index(rep, 1, {1.0, -1.0}), Error);

    const auto g = MatrixSymbolField::parse("0.5*su2(x)", 1, 2);
    const auto g_rep = index_topological(g, choose_truncation(g, q32()), q32());
    CHECK(g_rep.N == 0);
    CHECK(twisted_index(g_rep, 2, {1.0, -1.0}) == 2.0 * g_rep.index);
}
