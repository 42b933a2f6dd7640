// common.hpp -- small fixed-size linear algebra and shared utilities.
#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace laminate {

struct Vec2 {
    double x = 0.0, y = 0.0;

    Vec2() = default;
    Vec2(double x_, double y_) : x(x_), y(y_) {}

    Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double a) const { return {a * x, a * y}; }
    Vec2 operator/(double a) const { return {x / a, y / a}; }
    Vec2& operator+=(const Vec2& o) { x += o.x; y += o.y; return *this; }
    Vec2& operator-=(const Vec2& o) { x -= o.x; y -= o.y; return *this; }

    double dot(const Vec2& o) const { return x * o.x + y * o.y; }
    double norm() const { return std::hypot(x, y); }
    double squared_norm() const { return x * x + y * y; }
};

inline Vec2 operator*(double a, const Vec2& v) { return {a * v.x, a * v.y}; }

// Counterclockwise quarter turn.
inline Vec2 rot90(const Vec2& v) { return {-v.y, v.x}; }

// Scalar cross product a_x b_y - a_y b_x.
inline double cross(const Vec2& a, const Vec2& b) { return a.x * b.y - a.y * b.x; }

// Symmetric 2x2 tensor, used for per-triangle metrics g = [[a, b], [b, c]].
struct Sym2 {
    double a = 1.0, b = 0.0, c = 1.0;

    Sym2() = default;
    Sym2(double a_, double b_, double c_) : a(a_), b(b_), c(c_) {}

    static Sym2 identity() { return {1.0, 0.0, 1.0}; }

    double det() const { return a * c - b * b; }
    double trace() const { return a + c; }

    // Eigenvalues of a symmetric 2x2 matrix, smaller first.
    std::array<double, 2> eigenvalues() const {
        const double m = 0.5 * trace();
        const double d = std::sqrt(std::max(0.0, m * m - det()));
        return {m - d, m + d};
    }

    bool positive_definite(double floor = 1e-12) const {
        return eigenvalues()[0] > floor;
    }

    Sym2 inverse() const {
        const double d = det();
        return {c / d, -b / d, a / d};
    }

    Vec2 apply(const Vec2& v) const { return {a * v.x + b * v.y, b * v.x + c * v.y}; }
};

// Metric norm squared of a covector: w . g^{-1} w.
inline double covector_norm_sq(const Sym2& g, const Vec2& w) {
    return g.inverse().apply(w).dot(w);
}

inline double covector_norm(const Sym2& g, const Vec2& w) {
    return std::sqrt(std::max(0.0, covector_norm_sq(g, w)));
}

// Hodge star on covectors: rotation by +90 degrees in the metric, with the
// chart orientation (x then y positive). Satisfies *(*w) = -w and |*w| = |w|.
inline Vec2 hodge(const Sym2& g, const Vec2& w) {
    const Vec2 raised = g.inverse().apply(w);   // index raised
    const double s = std::sqrt(g.det());
    return {-s * raised.y, s * raised.x};
}

inline bool finite(const Vec2& v) { return std::isfinite(v.x) && std::isfinite(v.y); }

// Deterministic 64-bit generator; the single RNG used across the project.
using Rng = std::mt19937_64;

inline double uniform(Rng& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

// Thread cap from the LAMINATE_THREADS environment variable; defaults to the
// machine parallelism. Parallel sections must keep deterministic reductions.
inline unsigned thread_count() {
    if (const char* env = std::getenv("LAMINATE_THREADS")) {
        const long n = std::strtol(env, nullptr, 10);
        if (n >= 1) return static_cast<unsigned>(n);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw ? hw : 1;
}

struct InvariantViolation : std::runtime_error {
    std::string invariant;
    InvariantViolation(std::string name, const std::string& detail)
        : std::runtime_error(name + ": " + detail), invariant(std::move(name)) {}
};

struct SolverStall : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace laminate
