#include <cmath>
#include <random>

#include "doctest.h"
#include "hindex/contact_models.hpp"
#include "hindex/error.hpp"

using namespace hindex;

namespace {

constexpr double kPi = 3.14159265358979323846;

double factorial(int k) {
    double f = 1.0;
    for (int i = 2; i <= k; ++i) f *= i;
    return f;
}

// Beta-integral oracle: ∫_{S³} |z₁|^{2a}|z₂|^{2b} = 2π² a! b! / (a+b+1)!.
double beta_oracle(int a, int b) { return 2.0 * kPi * kPi * factorial(a) * factorial(b) / factorial(a + b + 1); }

// Integrates z^α z̄^β over the rule.
cplx integrate_monomial(const QuadratureRule& q, const std::array<int, 4>& e) {
    std::vector<double> re(q.size()), im(q.size());
    for (std::size_t k = 0; k < q.size(); ++k) {
        const cplx z1(q.x[0][k], q.x[1][k]), z2(q.x[2][k], q.x[3][k]);
        const cplx v = std::pow(z1, e[0]) * std::pow(z2, e[1]) * std::pow(std::conj(z1), e[2]) *
                       std::pow(std::conj(z2), e[3]);
        re[k] = v.real();
        im[k] = v.imag();
    }
    return integrate(q, re, im);
}

}  // namespace

TEST_CASE("sphere descriptors") {
    CHECK(make_sphere(1).volume == doctest::Approx(2 * kPi * kPi).epsilon(1e-15));
    CHECK(make_sphere(1).volume == doctest::Approx(19.7392).epsilon(1e-5));
    CHECK(make_sphere(0).volume == doctest::Approx(2 * kPi).epsilon(1e-15));
    CHECK(make_sphere(2).volume == doctest::Approx(kPi * kPi * kPi).epsilon(1e-15));
    CHECK(make_sphere(2).ambient_dim == 6);
    CHECK_THROWS_AS(make_sphere(-1), Error);
}

TEST_CASE("S3 quadrature volume and Beta integrals") {
    const auto q = quadrature_s3(32);
    double total = 0;
    for (double w : q.weights) {
        CHECK(w > 0.0);
        total += w;
    }
    CHECK(std::abs(total - 2 * kPi * kPi) < 1e-10);
    CHECK(std::abs(integrate_monomial(q, {1, 0, 1, 0}).real() - kPi * kPi) < 1e-10);
    CHECK(std::abs(integrate_monomial(q, {1, 1, 1, 1}).real() - 2 * kPi * kPi / 6) < 1e-10);
    CHECK(std::abs(integrate_monomial(q, {1, 1, 1, 1}).real() - 3.2899) < 1e-4);
    for (std::size_t k = 0; k < q.size(); ++k) {
        CHECK(q.eta[k] > 0.0);
        CHECK(q.eta[k] < kPi / 2);
    }
}

TEST_CASE("S3 quadrature is exact for polynomials of degree <= resolution/2") {
    std::mt19937 rng(3);
    for (int res : {8, 12, 16}) {
        const auto q = quadrature_s3(res);
        const int dmax = res / 2;
        for (int trial = 0; trial < 60; ++trial) {
            std::array<int, 4> e{};
            int budget = std::uniform_int_distribution<int>(0, dmax)(rng);
            for (int k = 0; k < 4 && budget > 0; ++k) {
                e[k] = std::uniform_int_distribution<int>(0, budget)(rng);
                budget -= e[k];
            }
            if (trial % 3 == 0) {  // force a nonvanishing diagonal monomial
                e[2] = e[0] = std::min(e[0], dmax / 2);
                e[3] = e[1] = std::min(e[1], (dmax - 2 * e[0]) / 2);
            }
            const cplx got = integrate_monomial(q, e);
            const double want = (e[0] == e[2] && e[1] == e[3]) ? beta_oracle(e[0], e[1]) : 0.0;
            CHECK(std::abs(got - want) < 1e-8);
        }
    }
}

TEST_CASE("S1 trapezoid rule") {
    const auto q = quadrature_s1(16);
    double total = 0;
    for (double w : q.weights) total += w;
    CHECK(std::abs(total - 2 * kPi) < 1e-12);
    CHECK_THROWS_AS(quadrature_s1(4), Error);
}

TEST_CASE("resolution floor is refused") {
    try {
        quadrature_s3(4);
        FAIL("expected refusal");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::InvalidInput);
        CHECK(std::string(e.what()).find("below the floor") != std::string::npos);
    }
}

TEST_CASE("Reeb field and frame at the base point") {
    const auto s3 = make_sphere(1);
    SpherePoint p;
    p.coords = {1, 0, 0, 0};
    const auto f = frame_at(s3, p);
    CHECK(f.T == Vec4{0, -1, 0, 0});
    CHECK(theta(p.coords, f.T) == doctest::Approx(1.0));
    CHECK(dtheta(f.X2, f.X1) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(f.kappa == doctest::Approx(1 / std::sqrt(2.0)));
    CHECK_THROWS_AS(frame_at(make_sphere(0), p), Error);
    CHECK_THROWS_AS(frame_at(make_sphere(2), p), Error);
}

TEST_CASE("frame identities at random points") {
    const auto s3 = make_sphere(1);
    const auto rep = validate_contact_frame(s3, 1000, 11);
    CHECK(rep.samples == 1000);
    CHECK(rep.max_violation < 1e-9);
    // X₂ = JX₁ with dθ(X₂, X₁) = 1 forces θ∧dθ(T, X₁, X₂) = −1: the volume
    // form is nowhere zero and positive on (T, X₂, X₁).
    CHECK(rep.min_abs_volume == doctest::Approx(1.0));
    CHECK(rep.volume_sign == -1);

    const auto none = validate_contact_frame(s3, 0);
    CHECK(none.samples == 0);
    CHECK(none.max_violation == 0.0);

    // Doubling kappa scales dθ(JX, X) by four.
    const auto bad = validate_contact_frame(s3, 50, 11, 2 * kFrameKappa);
    CHECK(bad.max_violation >= 1.0);
    CHECK(bad.max_violation == doctest::Approx(3.0).epsilon(1e-9));
}

TEST_CASE("[X1, X2] = T for the linear frame fields") {
    // X(x) = Mx for constant M, so [X, Y](x) = (M_Y M_X − M_X M_Y) x.
    auto field_matrix = [](auto&& field) {
        std::array<Vec4, 4> cols;
        for (int j = 0; j < 4; ++j) {
            SpherePoint p;
            p.coords = {0, 0, 0, 0};
            p.coords[j] = 1.0;
            cols[j] = field(p);
        }
        return cols;  // cols[j] = M e_j
    };
    const auto s3 = make_sphere(1);
    const auto m1 = field_matrix([&](const SpherePoint& p) { return frame_at(s3, p).X1; });
    const auto m2 = field_matrix([&](const SpherePoint& p) { return frame_at(s3, p).X2; });
    const auto mt = field_matrix([&](const SpherePoint& p) { return frame_at(s3, p).T; });
    auto apply = [](const std::array<Vec4, 4>& m, const Vec4& v) {
        Vec4 out{};
        for (int j = 0; j < 4; ++j)
            for (int i = 0; i < 4; ++i) out[i] += m[j][i] * v[j];
        return out;
    };
    for (int j = 0; j < 4; ++j) {
        Vec4 e{};
        e[j] = 1.0;
        const Vec4 lhs = apply(m2, apply(m1, e));
        const Vec4 rhs = apply(m1, apply(m2, e));
        const Vec4 t = apply(mt, e);
        for (int i = 0; i < 4; ++i) CHECK(lhs[i] - rhs[i] == doctest::Approx(t[i]).epsilon(1e-14));
    }
}

TEST_CASE("Hopf tangent frame is orthonormal and tangent") {
    const auto p = hopf_point(0.4, 1.3, -2.2);
    const auto e = hopf_tangents(p.eta, p.xi1, p.xi2);
    for (int a = 0; a < 3; ++a) {
        double nx = 0;
        for (int k = 0; k < 4; ++k) nx += e[a][k] * p.coords[k];
        CHECK(std::abs(nx) < 1e-15);
        for (int b = 0; b < 3; ++b) {
            double d = 0;
            for (int k = 0; k < 4; ++k) d += e[a][k] * e[b][k];
            CHECK(d == doctest::Approx(a == b ? 1.0 : 0.0));
        }
    }
    CHECK(std::abs(hopf_orientation()) == 1);
}
