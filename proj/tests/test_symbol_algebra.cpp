#include <cmath>
#include <random>

#include "doctest.h"
#include "hindex/error.hpp"
#include "hindex/symbol_algebra.hpp"

using namespace hindex;

namespace {

const QuadratureRule& grid32() {
    static const QuadratureRule q = quadrature_s3(kEllipticResolution);
    return q;
}

// Pascal-triangle oracle for binomials.
long long binom(int a, int b) {
    std::vector<std::vector<long long>> t(a + 1, std::vector<long long>(a + 1, 0));
    for (int i = 0; i <= a; ++i) {
        t[i][0] = 1;
        for (int k = 1; k <= i; ++k) t[i][k] = t[i - 1][k - 1] + (k <= i - 1 ? t[i - 1][k] : 0);
    }
    return t[a][b];
}

Eigen::Matrix2cd random_unitary(std::mt19937& rng) {
    std::normal_distribution<double> g;
    Eigen::Matrix2cd m;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) m(i, j) = cplx(g(rng), g(rng));
    return Eigen::HouseholderQR<Eigen::Matrix2cd>(m).householderQ();
}

std::string matrix_literal(const Eigen::Matrix2cd& m) {
    char buf[512];
    std::snprintf(buf, sizeof buf, "[[(%.17g+%.17g*i), (%.17g+%.17g*i)], [(%.17g+%.17g*i), (%.17g+%.17g*i)]]",
                  m(0, 0).real(), m(0, 0).imag(), m(0, 1).real(), m(0, 1).imag(), m(1, 0).real(),
                  m(1, 0).imag(), m(1, 1).real(), m(1, 1).imag());
    return buf;
}

}  // namespace

TEST_CASE("multiplicities and their sum identity") {
    CHECK(multiplicity(1, 0) == 1);
    CHECK(multiplicity(1, 7) == 1);
    CHECK(multiplicity(2, 3) == 4);
    CHECK(multiplicity(3, 2) == 6);
    for (int n = 1; n <= 5; ++n)
        for (int N = 0; N <= 8; ++N) {
            long long s = 0;
            for (int j = 0; j <= N; ++j) {
                CHECK(multiplicity(n, j) == binom(n + j - 1, j));
                s += multiplicity(n, j);
            }
            CHECK(s == binom(n + N, N));
        }
    CHECK_THROWS_AS(multiplicity(0, 1), Error);
}

TEST_CASE("field parsing and broadcasting") {
    const auto f = MatrixSymbolField::parse("3", 1, 2);
    CHECK(f.expr->rows == 2);
    SpherePoint p;
    p.coords = {0.6, 0, 0.8, 0};
    CHECK(eval_gamma(f, p).isApprox(3.0 * Eigen::Matrix2cd::Identity()));
    CHECK_THROWS_AS(MatrixSymbolField::parse("su2(x)", 1, 3), Error);
    CHECK_THROWS_AS(MatrixSymbolField::parse("x1", 1, 0), Error);
}

TEST_CASE("Fock actions a_j and b_j") {
    const auto f = MatrixSymbolField::parse("2*su2(x)", 1, 2);
    const auto p = hopf_point(0.7, 0.3, -1.1);
    for (int j = 0; j < 4; ++j) {
        const auto a = fock_action(f, FockSign::Plus, j, p);
        const auto b = fock_action(f, FockSign::Minus, j, p);
        CHECK((a + b).isApprox(2.0 * (2 * j + 1) * Eigen::Matrix2cd::Identity()));
        CHECK((b - a).isApprox(2.0 * eval_gamma(f, p)));
    }
}

TEST_CASE("ellipticity examples") {
    const auto zero = check_heisenberg_elliptic(MatrixSymbolField::parse("0", 1, 1), grid32());
    CHECK(zero.elliptic);
    CHECK(zero.worst_margin == doctest::Approx(1.0));
    CHECK(zero.thresholds == std::vector<int>{-1, 1});

    const auto one = check_heisenberg_elliptic(MatrixSymbolField::parse("1", 1, 1), grid32());
    CHECK_FALSE(one.elliptic);
    CHECK(one.witness_lambda == 1);
    CHECK(one.worst_margin == 0.0);

    const auto two = check_heisenberg_elliptic(MatrixSymbolField::parse("2*su2(x)", 1, 2), grid32());
    CHECK(two.elliptic);
    // The exact minimum 1 sits at x = (1,0,0,0), which is not a node.
    CHECK(two.worst_margin >= 1.0);
    CHECK(two.worst_margin < 1.005);
    CHECK(two.sup_norm == doctest::Approx(2.0).epsilon(1e-12));

    QuadratureRule empty;
    CHECK_THROWS_AS(check_heisenberg_elliptic(MatrixSymbolField::parse("0", 1, 1), empty), Error);
    CHECK_THROWS_AS(check_heisenberg_elliptic(MatrixSymbolField::parse("0", 1, 1), grid32(), 0.0), Error);
}

TEST_CASE("constant symbols: ellipticity matches a direct eigenvalue test") {
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> u(-4.0, 4.0);
    const auto coarse = quadrature_s3(8);
    for (int trial = 0; trial < 40; ++trial) {
        Eigen::Matrix2cd m;
        m << cplx(u(rng), u(rng) * 0.1), cplx(u(rng), 0) * 0.3, cplx(u(rng), 0) * 0.3, cplx(u(rng), u(rng) * 0.1);
        if (trial % 4 == 0) m(0, 0) = m(1, 1) = 3.0, m(0, 1) = m(1, 0) = 0.0;  // exact threshold hit
        const auto rep = check_heisenberg_elliptic(MatrixSymbolField::parse(matrix_literal(m), 1, 2), coarse);
        const Eigen::Vector2cd ev = m.eigenvalues();
        bool hits = false;
        for (int k = -9; k <= 9; k += 2)
            for (int i = 0; i < 2; ++i) hits = hits || std::abs(ev(i) - double(k)) < 1e-10;
        CHECK(rep.elliptic == !hits);
    }
}

TEST_CASE("ellipticity is invariant under constant unitary conjugation") {
    std::mt19937 rng(9);
    const auto base = check_heisenberg_elliptic(MatrixSymbolField::parse("2*su2(x) + 0.3*x3", 1, 2), grid32());
    for (int trial = 0; trial < 3; ++trial) {
        const Eigen::Matrix2cd U = random_unitary(rng);
        const std::string text =
            matrix_literal(U) + " * (2*su2(x) + 0.3*x3) * " + matrix_literal(Eigen::Matrix2cd(U.adjoint()));
        const auto rep = check_heisenberg_elliptic(MatrixSymbolField::parse(text, 1, 2), grid32());
        CHECK(rep.elliptic == base.elliptic);
        CHECK(rep.worst_margin == doctest::Approx(base.worst_margin).epsilon(1e-10));
    }
}

TEST_CASE("truncation level") {
    const auto fm = choose_truncation(MatrixSymbolField::parse("2*su2(x)", 1, 2), grid32());
    // sup‖γ‖ = 2 plus a small slack: (2 + ε − 1)/2 rounds up to 1.
    CHECK(fm.N == 1);
    CHECK(fm.multiplicities == std::vector<long long>{1, 1});
    CHECK(fm.lipschitz_slack > 0.0);

    const auto c = choose_truncation(MatrixSymbolField::parse("2", 1, 1), grid32());
    CHECK(c.lipschitz_slack == 0.0);
    CHECK(c.N == 1);
    CHECK(choose_truncation(MatrixSymbolField::parse("0", 1, 1), grid32()).N == 0);

    try {
        choose_truncation(MatrixSymbolField::parse("1", 1, 1), grid32());
        FAIL("expected NotElliptic");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::NotElliptic);
    }
}

TEST_CASE("truncation is monotone in the symbol scale") {
    int prev = 0;
    for (double s : {0.5, 2.0, 4.5, 6.5, 8.5}) {
        const auto fm = choose_truncation(MatrixSymbolField::parse(std::to_string(s) + "*su2(x)", 1, 2), grid32());
        CHECK(fm.N >= prev);
        CHECK(2 * fm.N + 1 > fm.sup_norm_grid + fm.lipschitz_slack);
        CHECK(2 * fm.N - 1 <= fm.sup_norm_grid + fm.lipschitz_slack);
        prev = fm.N;
    }
    CHECK(prev >= 4);
}

TEST_CASE("ellipticity needs S3 geometry") {
    CHECK_THROWS_AS(check_heisenberg_elliptic(MatrixSymbolField::parse("z", 0, 1), quadrature_s1(16)), Error);
}
