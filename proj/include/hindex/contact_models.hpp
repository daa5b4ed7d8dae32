#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <vector>

namespace hindex {

using Vec4 = std::array<double, 4>;
using cplx = std::complex<double>;

// Rescaling of the quaternionic H-fields that makes the frame orthonormal for
// dθ(J·,·). Validated end to end by the threshold scan.
inline constexpr double kFrameKappa = 0.70710678118654752440;

struct ContactSphere {
    int n = 1;            // dim X = 2n+1
    int ambient_dim = 4;  // 2n+2
    double volume = 0.0;  // 2π^{n+1}/n!
};

ContactSphere make_sphere(int n);

// For n = 0 only coords[0..1] are used. Hopf parameters are filled for points
// produced by the S³ quadrature (η, ξ₁, ξ₂), and ξ₁ holds the angle on S¹.
struct SpherePoint {
    Vec4 coords{};
    double eta = 0.0, xi1 = 0.0, xi2 = 0.0;
};

SpherePoint hopf_point(double eta, double xi1, double xi2);

struct ContactFrame {
    Vec4 T{};
    Vec4 X1{};
    Vec4 X2{};
    double kappa = kFrameKappa;
};

// θ = Σ x_{2i} dx_{2i−1} − x_{2i−1} dx_{2i}
double theta(const Vec4& x, const Vec4& v);
// dθ(v, w), constant coefficients
double dtheta(const Vec4& v, const Vec4& w);
// Compatible complex structure: multiplication by i on (z₁, z₂) = (x1+ix2, x3+ix4).
Vec4 apply_J(const Vec4& v);
double theta_dtheta(const Vec4& x, const Vec4& a, const Vec4& b, const Vec4& c);

ContactFrame frame_at(const ContactSphere& sphere, const SpherePoint& x, double kappa = kFrameKappa);

struct FrameReport {
    int samples = 0;
    double max_violation = 0.0;
    // θ∧dθ(T, X₁, X₂): smallest magnitude seen and its sign (+1/−1 when
    // constant over the samples, 0 when it changes or no samples ran).
    double min_abs_volume = 0.0;
    int volume_sign = 0;
};

FrameReport validate_contact_frame(const ContactSphere& sphere, int sample_count, std::uint64_t seed = 1,
                                   double kappa = kFrameKappa);

struct QuadratureRule {
    int n = 1;
    int resolution = 0;
    // Split storage so the SIMD kernels can stream over nodes.
    std::array<std::vector<double>, 4> x;
    std::vector<double> weights;
    std::vector<double> eta, xi1, xi2;
    // Number of distinct nodes along each axis (t, ξ₁, ξ₂).
    int n_eta = 0, n_xi = 0;

    std::size_t size() const { return weights.size(); }
    SpherePoint point(std::size_t i) const;
    // Largest ambient distance from any sphere point to its nearest node.
    double spacing = 0.0;
};

inline constexpr int kMinResolution = 8;

// Gauss–Legendre in t = cos²η (density sin η cos η absorbed) times uniform
// trapezoid rules in ξ₁, ξ₂; resolution nodes per axis.
QuadratureRule quadrature_s3(int resolution);
// Uniform trapezoid rule on the unit circle.
QuadratureRule quadrature_s1(int resolution);

// Σ wᵢ fᵢ with the deterministic pairwise reduction.
cplx integrate(const QuadratureRule& rule, const std::vector<double>& re, const std::vector<double>& im);
double integrate(const QuadratureRule& rule, const std::vector<double>& values);

// Unit tangent vectors along ∂η, ∂ξ₁/cos η, ∂ξ₂/sin η.
std::array<Vec4, 3> hopf_tangents(double eta, double xi1, double xi2);
// Sign of θ∧dθ on the Hopf tangent frame (constant over the chart).
int hopf_orientation();

// Gauss–Legendre nodes/weights on [a, b].
void gauss_legendre(int count, double a, double b, std::vector<double>& nodes, std::vector<double>& weights);

double beta_integral_s3(int a, int b);  // ∫ |z₁|^{2a} |z₂|^{2b} over S³

}  // namespace hindex
