#include "hindex/contact_models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "hindex/error.hpp"
#include "hindex/kernels.hpp"

namespace hindex {

namespace {

constexpr double kPi = 3.14159265358979323846;

Vec4 scaled(const Vec4& v, double s) { return {v[0] * s, v[1] * s, v[2] * s, v[3] * s}; }

double dot(const Vec4& a, const Vec4& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3]; }

}  // namespace

ContactSphere make_sphere(int n) {
    if (n < 0) throw Error(ErrorKind::InvalidInput, "sphere dimension parameter n must be nonnegative");
    ContactSphere s;
    s.n = n;
    s.ambient_dim = 2 * n + 2;
    s.volume = 2.0 * std::pow(kPi, n + 1) / std::tgamma(n + 1.0);
    return s;
}

SpherePoint hopf_point(double eta, double xi1, double xi2) {
    SpherePoint p;
    const double c = std::cos(eta), s = std::sin(eta);
    p.coords = {c * std::cos(xi1), c * std::sin(xi1), s * std::cos(xi2), s * std::sin(xi2)};
    p.eta = eta;
    p.xi1 = xi1;
    p.xi2 = xi2;
    return p;
}

double theta(const Vec4& x, const Vec4& v) { return x[1] * v[0] - x[0] * v[1] + x[3] * v[2] - x[2] * v[3]; }

double dtheta(const Vec4& v, const Vec4& w) {
    return 2.0 * (v[1] * w[0] - v[0] * w[1] + v[3] * w[2] - v[2] * w[3]);
}

Vec4 apply_J(const Vec4& v) { return {-v[1], v[0], -v[3], v[2]}; }

double theta_dtheta(const Vec4& x, const Vec4& a, const Vec4& b, const Vec4& c) {
    return theta(x, a) * dtheta(b, c) - theta(x, b) * dtheta(a, c) + theta(x, c) * dtheta(a, b);
}

ContactFrame frame_at(const ContactSphere& sphere, const SpherePoint& p, double kappa) {
    if (sphere.n != 1) throw Error(ErrorKind::Unsupported, "contact frame is only modelled on S^3 (n = 1)");
    const Vec4& x = p.coords;
    ContactFrame f;
    f.kappa = kappa;
    f.T = {x[1], -x[0], x[3], -x[2]};
    const Vec4 a = {-x[2], x[3], x[0], -x[1]};
    f.X1 = scaled(a, kappa);
    f.X2 = apply_J(f.X1);
    return f;
}

FrameReport validate_contact_frame(const ContactSphere& sphere, int sample_count, std::uint64_t seed,
                                   double kappa) {
    if (sphere.n != 1) throw Error(ErrorKind::Unsupported, "frame validation is only modelled on S^3 (n = 1)");
    FrameReport rep;
    rep.samples = std::max(sample_count, 0);
    if (rep.samples == 0) return rep;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    double worst = 0.0;
    double min_abs = std::numeric_limits<double>::infinity();
    int pos = 0, negs = 0;
    for (int s = 0; s < rep.samples; ++s) {
        Vec4 x;
        double r = 0.0;
        do {
            for (auto& c : x) c = gauss(rng);
            r = std::sqrt(dot(x, x));
        } while (r < 1e-8);
        for (auto& c : x) c /= r;
        SpherePoint p;
        p.coords = x;
        const ContactFrame f = frame_at(sphere, p, kappa);
        const Vec4 frame[2] = {f.X1, f.X2};
        auto bump = [&](double v) { worst = std::max(worst, std::abs(v)); };
        bump(theta(x, f.T) - 1.0);
        bump(dot(x, f.T));
        for (int i = 0; i < 2; ++i) {
            bump(dtheta(f.T, frame[i]));
            bump(theta(x, frame[i]));
            bump(dot(x, frame[i]));
            for (int j = 0; j < 2; ++j) bump(dtheta(apply_J(frame[i]), frame[j]) - (i == j ? 1.0 : 0.0));
        }
        const Vec4 jx1 = apply_J(f.X1);
        bump(std::sqrt(dot({jx1[0] - f.X2[0], jx1[1] - f.X2[1], jx1[2] - f.X2[2], jx1[3] - f.X2[3]},
                           {jx1[0] - f.X2[0], jx1[1] - f.X2[1], jx1[2] - f.X2[2], jx1[3] - f.X2[3]})));
        const double vol = theta_dtheta(x, f.T, f.X1, f.X2);
        min_abs = std::min(min_abs, std::abs(vol));
        (vol > 0 ? pos : negs) += 1;
    }
    rep.max_violation = worst;
    rep.min_abs_volume = min_abs;
    rep.volume_sign = pos == rep.samples ? 1 : (negs == rep.samples ? -1 : 0);
    return rep;
}

SpherePoint QuadratureRule::point(std::size_t i) const {
    SpherePoint p;
    p.coords = {x[0][i], x[1][i], x[2][i], x[3][i]};
    p.eta = eta[i];
    p.xi1 = xi1[i];
    p.xi2 = xi2[i];
    return p;
}

void gauss_legendre(int count, double a, double b, std::vector<double>& nodes, std::vector<double>& weights) {
    nodes.assign(count, 0.0);
    weights.assign(count, 0.0);
    for (int i = 0; i < count; ++i) {
        double t = std::cos(kPi * (i + 0.75) / (count + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = t;
            for (int k = 2; k <= count; ++k) {
                const double p2 = ((2.0 * k - 1.0) * t * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = count * (t * p1 - p0) / (t * t - 1.0);
            const double step = p1 / dp;
            t -= step;
            if (std::abs(step) < 1e-16) break;
        }
        // Recompute the derivative at the converged node.
        double p0 = 1.0, p1 = t;
        for (int k = 2; k <= count; ++k) {
            const double p2 = ((2.0 * k - 1.0) * t * p1 - (k - 1.0) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        dp = count * (t * p1 - p0) / (t * t - 1.0);
        const double w = 2.0 / ((1.0 - t * t) * dp * dp);
        // Ascending order in [a, b].
        nodes[count - 1 - i] = 0.5 * (b - a) * t + 0.5 * (b + a);
        weights[count - 1 - i] = 0.5 * (b - a) * w;
    }
}

QuadratureRule quadrature_s3(int resolution) {
    if (resolution < kMinResolution)
        throw Error(ErrorKind::InvalidInput, "quadrature resolution " + std::to_string(resolution) +
                                                 " is below the floor of " + std::to_string(kMinResolution));
    QuadratureRule q;
    q.n = 1;
    q.resolution = resolution;
    q.n_eta = resolution;
    q.n_xi = resolution;
    std::vector<double> t, wt;
    gauss_legendre(resolution, 0.0, 1.0, t, wt);
    const double dxi = 2.0 * kPi / resolution;
    const std::size_t total = static_cast<std::size_t>(resolution) * resolution * resolution;
    for (auto& v : q.x) v.reserve(total);
    q.weights.reserve(total);
    q.eta.reserve(total);
    q.xi1.reserve(total);
    q.xi2.reserve(total);
    // t ascends, so η descends from near π/2 towards 0.
    double max_deta = 0.0;
    double prev = 0.5 * kPi;
    for (int a = 0; a < resolution; ++a) {
        // t = cos²η, so dt = −2 sin η cos η dη.
        const double eta = std::acos(std::sqrt(t[a]));
        max_deta = std::max(max_deta, std::abs(eta - prev));
        prev = eta;
        const double w = 0.5 * wt[a] * dxi * dxi;
        for (int b = 0; b < resolution; ++b) {
            for (int c = 0; c < resolution; ++c) {
                const SpherePoint p = hopf_point(eta, b * dxi, c * dxi);
                for (int k = 0; k < 4; ++k) q.x[k].push_back(p.coords[k]);
                q.weights.push_back(w);
                q.eta.push_back(eta);
                q.xi1.push_back(p.xi1);
                q.xi2.push_back(p.xi2);
            }
        }
    }
    max_deta = std::max(max_deta, prev);
    q.spacing = 0.5 * std::sqrt(max_deta * max_deta + 2.0 * dxi * dxi);
    return q;
}

QuadratureRule quadrature_s1(int resolution) {
    if (resolution < kMinResolution)
        throw Error(ErrorKind::InvalidInput, "quadrature resolution " + std::to_string(resolution) +
                                                 " is below the floor of " + std::to_string(kMinResolution));
    QuadratureRule q;
    q.n = 0;
    q.resolution = resolution;
    q.n_xi = resolution;
    const double dxi = 2.0 * kPi / resolution;
    for (int b = 0; b < resolution; ++b) {
        const double xi = b * dxi;
        q.x[0].push_back(std::cos(xi));
        q.x[1].push_back(std::sin(xi));
        q.x[2].push_back(0.0);
        q.x[3].push_back(0.0);
        q.weights.push_back(dxi);
        q.eta.push_back(0.0);
        q.xi1.push_back(xi);
        q.xi2.push_back(0.0);
    }
    q.spacing = 0.5 * dxi;
    return q;
}

cplx integrate(const QuadratureRule& rule, const std::vector<double>& re, const std::vector<double>& im) {
    return kernels::weighted_sum(rule.size(), rule.weights.data(), re.data(), im.data());
}

double integrate(const QuadratureRule& rule, const std::vector<double>& values) {
    const std::vector<double> zeros(values.size(), 0.0);
    return integrate(rule, values, zeros).real();
}

std::array<Vec4, 3> hopf_tangents(double eta, double xi1, double xi2) {
    const double c = std::cos(eta), s = std::sin(eta);
    return {Vec4{-s * std::cos(xi1), -s * std::sin(xi1), c * std::cos(xi2), c * std::sin(xi2)},
            Vec4{-std::sin(xi1), std::cos(xi1), 0.0, 0.0}, Vec4{0.0, 0.0, -std::sin(xi2), std::cos(xi2)}};
}

int hopf_orientation() {
    const SpherePoint p = hopf_point(0.6, 0.3, 1.1);
    const auto e = hopf_tangents(p.eta, p.xi1, p.xi2);
    return theta_dtheta(p.coords, e[0], e[1], e[2]) > 0.0 ? 1 : -1;
}

double beta_integral_s3(int a, int b) {
    return 2.0 * kPi * kPi * std::exp(std::lgamma(a + 1.0) + std::lgamma(b + 1.0) - std::lgamma(a + b + 2.0));
}

}  // namespace hindex
