// hyperbolic.hpp -- Poincare disc primitives, radial cone profiles f_p,
// comparison-with-cones checkers, and the normal-angle Lipschitz bound for
// disjoint geodesic families.
//
// Distance convention (single source of truth for every formula here):
// d(0, r) = atanh(r), i.e. the metric |dz| / (1 - |z|^2). All bounds below
// are stated in this normalization.
#pragma once

#include "laminate/common.hpp"

#include <complex>
#include <functional>
#include <optional>

namespace laminate {

inline double disc_distance(std::complex<double> z, std::complex<double> w) {
    if (!(std::abs(z) < 1.0) || !(std::abs(w) < 1.0))
        throw std::invalid_argument("disc_distance: points must lie strictly inside the unit disc");
    const double m = std::abs((z - w) / (1.0 - std::conj(z) * w));
    return std::atanh(m);
}

namespace detail {

template <typename F>
double adaptive_simpson_rec(const F& f, double a, double b, double fa, double fm, double fb,
                            double whole, double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double err = left + right - whole;
    if (depth <= 0 || std::abs(err) < 15.0 * tol) return left + right + err / 15.0;
    return adaptive_simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           adaptive_simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

template <typename F>
double adaptive_simpson(const F& f, double a, double b, double tol, int max_depth = 24) {
    if (a == b) return 0.0;
    const double m = 0.5 * (a + b);
    const double fa = f(a), fm = f(m), fb = f(b);
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return adaptive_simpson_rec(f, a, b, fa, fm, fb, whole, tol, max_depth);
}

} // namespace detail

// Radial p-harmonic profile in hyperbolic n-space: f_p' = (sinh t)^{-beta},
// beta = (n-1)/(p-1), normalized to f_p(0) = 0.
struct ConeProfile {
    int n = 2;
    double p = 0.0;
    double t_max = 0.0;
    std::vector<double> grid;    // increasing nodes in (0, t_max]
    std::vector<double> values;  // f_p at the nodes
    std::vector<double> slope;   // (sinh t)^{-beta} at the nodes
    double lower_const = 0.0;    // a_p: f_p(t) >= a_p t^{1-beta} on the grid range
    double upper_const = 0.0;    // b_p: f_p(t) <= b_p t^{1-beta}

    double beta() const { return static_cast<double>(n - 1) / (p - 1.0); }
};

// The integrand has an integrable endpoint singularity s^{-beta}; the
// substitution s = sigma^{1/(1-beta)} removes it on the first panel.
inline ConeProfile cone_profile(int n, double p, double t_max, int steps) {
    if (n < 2) throw std::invalid_argument("cone_profile: dimension must be >= 2");
    if (!(p > n)) throw std::invalid_argument("cone_profile: need p > n (integral diverges otherwise)");
    if (!(t_max > 0.0) || steps < 2) throw std::invalid_argument("cone_profile: bad grid request");

    ConeProfile prof;
    prof.n = n;
    prof.p = p;
    prof.t_max = t_max;
    const double beta = prof.beta();
    const double quad_tol = 1e-12;

    const double h = t_max / steps;
    double accumulated = 0.0;
    for (int k = 1; k <= steps; ++k) {
        const double t0 = (k - 1) * h, t1 = k * h;
        double panel;
        if (k == 1) {
            const double expo = 1.0 / (1.0 - beta);
            const auto transformed = [&](double sigma) {
                const double s = std::pow(sigma, expo);
                const double ratio = s > 0.0 ? s / std::sinh(s) : 1.0;
                return std::pow(ratio, beta) / (1.0 - beta);
            };
            panel = detail::adaptive_simpson(transformed, 0.0, std::pow(t1, 1.0 - beta), quad_tol);
        } else {
            const auto direct = [&](double s) { return std::pow(std::sinh(s), -beta); };
            panel = detail::adaptive_simpson(direct, t0, t1, quad_tol);
        }
        accumulated += panel;
        prof.grid.push_back(t1);
        prof.values.push_back(accumulated);
        prof.slope.push_back(std::pow(std::sinh(t1), -beta));
    }

    // Sandwich constants from sup/inf of (t/sinh t)^beta over the grid range.
    prof.upper_const = 1.0 / (1.0 - beta);  // sup attained as t -> 0
    prof.lower_const = std::pow(t_max / std::sinh(t_max), beta) / (1.0 - beta);
    return prof;
}

// Grid invariants: strictly increasing values, sandwich bounds at every node.
inline void check_cone_profile(const ConeProfile& prof) {
    double prev = 0.0;
    const double beta = prof.beta();
    for (std::size_t k = 0; k < prof.grid.size(); ++k) {
        if (!(prof.values[k] > prev))
            throw InvariantViolation("cone.increasing", "profile not strictly increasing at node " +
                                                            std::to_string(k));
        prev = prof.values[k];
        const double envelope = std::pow(prof.grid[k], 1.0 - beta);
        if (prof.values[k] < prof.lower_const * envelope - 1e-10 ||
            prof.values[k] > prof.upper_const * envelope + 1e-10)
            throw InvariantViolation("cone.sandwich", "bound violated at node " + std::to_string(k));
    }
}

// Flux (sinh t)^{n-1} (f_p')^{p-1} is constant for the exact profile; returns
// the max finite-difference derivative of the flux over the grid.
inline double cone_radial_residual(const ConeProfile& prof) {
    double worst = 0.0;
    std::vector<double> flux(prof.grid.size());
    for (std::size_t k = 0; k < prof.grid.size(); ++k)
        flux[k] = std::pow(std::sinh(prof.grid[k]), prof.n - 1) * std::pow(prof.slope[k], prof.p - 1.0);
    for (std::size_t k = 1; k < prof.grid.size(); ++k)
        worst = std::max(worst, std::abs(flux[k] - flux[k - 1]) / (prof.grid[k] - prof.grid[k - 1]));
    return worst;
}

// ---------------------------------------------------------------------------
// Comparison with cones (checker over sampled data, not a solver feature)

struct ConeSample {
    Vec2 point;
    double value = 0.0;
};

using DistanceFn = std::function<double(const Vec2&, const Vec2&)>;

inline double euclidean_distance(const Vec2& a, const Vec2& b) { return (a - b).norm(); }

struct ConeComparisonReport {
    int violations = 0;
    double worst_margin = 0.0;  // max of u - c over interior samples (<= tol when clean)
    std::vector<std::size_t> offenders;
};

// Checks u(x) <= c(x) = A + B d(x, x0) at interior samples of the disc of
// radius r about x0, given that the inequality holds on the boundary band and
// at the center (otherwise the input is rejected, which is a different
// failure than an interior violation).
inline ConeComparisonReport cone_comparison_check(const std::vector<ConeSample>& samples,
                                                  const Vec2& center, double center_value, double A,
                                                  double B, double r, double tol,
                                                  double boundary_band = 0.0,
                                                  const DistanceFn& dist = euclidean_distance) {
    if (samples.empty()) throw std::invalid_argument("cone_comparison_check: no samples");
    if (center_value > A + tol)
        throw std::invalid_argument("cone_comparison_check: center precondition u(x0) <= A fails");
    const double band = boundary_band > 0.0 ? boundary_band : 0.05 * r;
    for (const ConeSample& s : samples) {
        const double d = dist(s.point, center);
        if (d > r) continue;
        if (d >= r - band && s.value > A + B * d + tol)
            throw std::invalid_argument("cone_comparison_check: boundary precondition u <= c fails");
    }
    ConeComparisonReport report;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double d = dist(samples[i].point, center);
        if (d > r) continue;
        const double margin = samples[i].value - (A + B * d);
        report.worst_margin = std::max(report.worst_margin, margin);
        if (margin > tol) {
            ++report.violations;
            report.offenders.push_back(i);
        }
    }
    return report;
}

// Per-radius max of (u(x) - u(x0)) / r over the ring samples; the continuum
// statement is that this trace is non-decreasing in r.
inline std::vector<double> cone_ratio_trace(const std::vector<ConeSample>& samples, const Vec2& center,
                                            double center_value, const std::vector<double>& radii,
                                            double ring_width, int min_ring_samples = 8,
                                            const DistanceFn& dist = euclidean_distance) {
    if (radii.size() < 2) throw std::invalid_argument("cone_ratio_trace: need at least two radii");
    std::vector<double> trace;
    for (double r : radii) {
        int count = 0;
        double best = -std::numeric_limits<double>::infinity();
        for (const ConeSample& s : samples) {
            const double d = dist(s.point, center);
            if (std::abs(d - r) > ring_width) continue;
            ++count;
            best = std::max(best, (s.value - center_value) / r);
        }
        if (count < min_ring_samples)
            throw std::invalid_argument("cone_ratio_trace: ring at r=" + std::to_string(r) +
                                        " has fewer than " + std::to_string(min_ring_samples) +
                                        " samples");
        trace.push_back(best);
    }
    return trace;
}

// ---------------------------------------------------------------------------
// Normal-angle Lipschitz bound along a geodesic transversal

// Sample of a lamination leaf crossing the diameter transversal: position on
// the real axis and the unit-normal angle of the leaf there.
struct NormalAngleSample {
    double position = 0.0;  // in (-1, 1)
    double kappa = 0.0;     // radians
};

struct NormalAngleReport {
    double max_ratio = 0.0;  // max |d kappa| / d over pairs
    int violations = 0;      // pairs beyond the derived bound
    int flagged = 0;         // pairs within 10% of the bound (not failures)
};

inline double angle_distance(double a, double b) {
    double d = std::fmod(std::abs(a - b), 2.0 * std::numbers::pi);
    if (d > std::numbers::pi) d = 2.0 * std::numbers::pi - d;
    return d;
}

// Pairwise check of |kappa(k) - kappa(k')| against the bound obtained from
// |1 - e^{i d kappa}| <= 2k'/(1-k') with k' = tanh d(k, k'):
// |d kappa| <= 2 asin(min(1, tanh d / (1 - tanh d))). Positions coincide only
// for a single leaf, so d = 0 with distinct angles is rejected.
inline NormalAngleReport normal_angle_bound(const std::vector<NormalAngleSample>& samples) {
    if (samples.size() < 2)
        throw std::invalid_argument("normal_angle_bound: need at least two samples");
    for (const NormalAngleSample& s : samples)
        if (!(std::abs(s.position) < 1.0))
            throw std::invalid_argument("normal_angle_bound: positions must lie in (-1, 1)");
    NormalAngleReport report;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        for (std::size_t j = i + 1; j < samples.size(); ++j) {
            const double dk = angle_distance(samples[i].kappa, samples[j].kappa);
            const double d = disc_distance(samples[i].position, samples[j].position);
            if (d == 0.0) {
                if (dk > 1e-12)
                    throw std::invalid_argument(
                        "normal_angle_bound: two leaves through one point (d = 0, angles differ)");
                continue;
            }
            report.max_ratio = std::max(report.max_ratio, dk / d);
            const double kp = std::tanh(d);
            const double rhs = kp / (1.0 - kp);
            if (rhs >= 1.0) continue;  // bound vacuous at this separation
            const double limit = 2.0 * std::asin(rhs);
            if (dk > limit + 1e-12)
                ++report.violations;
            else if (dk > 0.9 * limit)
                ++report.flagged;
        }
    }
    return report;
}

// ---------------------------------------------------------------------------
// Disc geodesics (ideal endpoints on the unit circle)

struct DiscGeodesic {
    std::complex<double> a, b;  // distinct ideal endpoints, |a| = |b| = 1
};

// Chord interleaving test: two complete geodesics cross iff exactly one
// endpoint of the second lies on the arc from a to b (counterclockwise).
inline bool geodesics_cross(const DiscGeodesic& g1, const DiscGeodesic& g2) {
    const auto angle = [](std::complex<double> z) { return std::arg(z); };
    const double a = angle(g1.a);
    auto arc_pos = [&](std::complex<double> z) {
        double t = angle(z) - a;
        while (t < 0) t += 2.0 * std::numbers::pi;
        return t;
    };
    const double tb = arc_pos(g1.b);
    const double t1 = arc_pos(g2.a), t2 = arc_pos(g2.b);
    const bool in1 = t1 > 0 && t1 < tb;
    const bool in2 = t2 > 0 && t2 < tb;
    return in1 != in2;
}

struct AxisCrossing {
    double x = 0.0;      // crossing point on the real axis
    double kappa = 0.0;  // normal angle there, normalized so normal.x > 0
};

// Crossing of a geodesic with the real-axis diameter, if any.
inline std::optional<AxisCrossing> real_axis_crossing(const DiscGeodesic& geo) {
    const std::complex<double> u = geo.a, v = geo.b;
    const double det = u.real() * v.imag() - u.imag() * v.real();
    if (std::abs(det) < 1e-14) {
        // Diameter through the origin.
        if (std::abs(u.imag()) < 1e-14) return std::nullopt;  // the axis itself
        AxisCrossing c;
        c.x = 0.0;
        double kappa = std::arg(u) + std::numbers::pi / 2.0;  // normal to the chord direction
        if (std::cos(kappa) < 0.0) kappa += std::numbers::pi;
        c.kappa = std::atan2(std::sin(kappa), std::cos(kappa));
        return c;
    }
    // Center C of the circle orthogonal to the unit circle through u, v:
    // Re(conj(u) C) = 1 and Re(conj(v) C) = 1.
    const double cx = (v.imag() - u.imag()) / det;
    const double cy = (u.real() - v.real()) / det;
    if (cx * cx < 1.0) return std::nullopt;  // does not reach the real axis
    const double root = std::sqrt(cx * cx - 1.0);
    const double x = cx > 0.0 ? cx - root : cx + root;
    if (!(std::abs(x) < 1.0)) return std::nullopt;
    AxisCrossing c;
    c.x = x;
    const Vec2 radial{x - cx, -cy};
    double kappa = std::atan2(radial.y, radial.x);
    if (std::cos(kappa) < 0.0) kappa += std::numbers::pi;
    c.kappa = std::atan2(std::sin(kappa), std::cos(kappa));
    return c;
}

} // namespace laminate
