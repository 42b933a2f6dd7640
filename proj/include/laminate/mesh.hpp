// mesh.hpp -- triangulated flat tori and annuli with edge identifications,
// per-triangle metrics, homology bases and equivariant PL scalar fields.
//
// The surface is stored as a quotient: vertices are orbit representatives and
// each triangle corner carries integer deck shifts, so a corner's position is
//     vertices[v] + sum_k shift[k] * deck_translations[k]
// and an equivariant field evaluates there as values[v] + shift . rho.
// Period bookkeeping is exact integer arithmetic by construction.
#pragma once

#include "laminate/common.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <tuple>
#include <vector>

namespace laminate {

constexpr int kMaxGenerators = 2;
using Shift = std::array<int, kMaxGenerators>;

inline Shift shift_add(const Shift& a, const Shift& b) { return {a[0] + b[0], a[1] + b[1]}; }
inline Shift shift_sub(const Shift& a, const Shift& b) { return {a[0] - b[0], a[1] - b[1]}; }
inline bool shift_zero(const Shift& s) { return s[0] == 0 && s[1] == 0; }

// Homomorphism pi_1(M) -> R, stored by its values on the homology basis.
struct Homomorphism {
    std::vector<double> periods;

    Homomorphism() = default;
    explicit Homomorphism(std::vector<double> p) : periods(std::move(p)) {}

    double on_shift(const Shift& s) const {
        double v = 0.0;
        for (std::size_t k = 0; k < periods.size(); ++k) v += s[k] * periods[k];
        return v;
    }
};

struct Triangle {
    std::array<int, 3> v{};
    std::array<Shift, 3> shift{};
    Sym2 metric = Sym2::identity();
};

// One step of an edge path: walk to `vertex`, crossing deck translations
// `shift` (relative to the previous position's lift).
struct LoopStep {
    int vertex = 0;
    Shift shift{};
};

struct EdgeLoop {
    int start = 0;
    std::vector<LoopStep> steps;

    bool closed() const { return !steps.empty() && steps.back().vertex == start; }

    Shift total_shift() const {
        Shift s{};
        for (const auto& st : steps) s = shift_add(s, st.shift);
        return s;
    }
};

enum class MeshKind { torus, annulus, custom };

// Canonical undirected edge key in the quotient complex. The shift delta
// distinguishes multi-edges that wrap differently around the surface.
struct EdgeKey {
    int a, b;
    Shift d;
    bool operator<(const EdgeKey& o) const {
        return std::tie(a, b, d) < std::tie(o.a, o.b, o.d);
    }
};

inline EdgeKey canonical_edge(int va, const Shift& sa, int vb, const Shift& sb) {
    Shift d = shift_sub(sb, sa);
    if (va < vb) return {va, vb, d};
    if (vb < va) return {vb, va, {-d[0], -d[1]}};
    // Self-edge around a handle: canonicalize the sign of the shift.
    if (d[0] < 0 || (d[0] == 0 && d[1] < 0)) d = {-d[0], -d[1]};
    return {va, vb, d};
}

struct Gluing {
    std::array<int, 2> edge;   // vertex pair of the identified edge
    Shift shift{};             // deck translation crossed by the identification
};

struct SurfaceMesh {
    MeshKind kind = MeshKind::custom;
    std::vector<Vec2> vertices;
    std::vector<Triangle> triangles;
    std::vector<Vec2> deck_translations;      // one per homology generator
    std::vector<EdgeLoop> homology_basis;
    std::vector<Gluing> gluings;              // derived; identifications across seams
    std::vector<EdgeKey> boundary_edges;      // derived; annulus only

    // Derived per-triangle data (filled by finalize()).
    std::vector<double> param_area;           // area of the chart triangle
    std::vector<double> area;                 // metric area = param_area * sqrt(det g)
    std::vector<std::array<Vec2, 3>> basis_grad;  // P1 hat gradients (chart covectors)
    std::vector<Vec2> centroid;               // chart centroid
    std::map<EdgeKey, std::vector<int>> edge_map;

    int generator_count() const { return static_cast<int>(deck_translations.size()); }

    Vec2 corner_position(int t, int c) const {
        Vec2 p = vertices[triangles[t].v[c]];
        for (int k = 0; k < generator_count(); ++k)
            p += triangles[t].shift[c][k] * deck_translations[k];
        return p;
    }

    double total_area() const {
        double s = 0.0;
        for (double a : area) s += a;
        return s;
    }

    // Representative chart length scale, used for defaults.
    double mesh_scale() const { return std::sqrt(total_area()); }

    void finalize();
};

// Real equivariant scalar field: one value per quotient vertex plus periods.
struct EquivariantField {
    std::vector<double> values;
    Homomorphism rho;
};

// Per-triangle constant covector field (chart components).
struct PLOneForm {
    std::vector<Vec2> covectors;
};

inline double field_corner_value(const SurfaceMesh& mesh, const EquivariantField& u, int t, int c) {
    const Triangle& tri = mesh.triangles[t];
    return u.values[tri.v[c]] + u.rho.on_shift(tri.shift[c]);
}

inline void validate_field(const SurfaceMesh& mesh, const EquivariantField& u) {
    if (u.values.size() != mesh.vertices.size())
        throw std::invalid_argument("equivariant field: value count does not match mesh vertices");
    if (u.rho.periods.size() != mesh.deck_translations.size())
        throw std::invalid_argument("equivariant field: period count does not match homology basis");
    for (double v : u.values)
        if (!std::isfinite(v)) throw std::invalid_argument("equivariant field: non-finite value");
    for (double p : u.rho.periods)
        if (!std::isfinite(p)) throw std::invalid_argument("equivariant field: non-finite period");
}

inline void SurfaceMesh::finalize() {
    const std::size_t nt = triangles.size();
    param_area.assign(nt, 0.0);
    area.assign(nt, 0.0);
    basis_grad.assign(nt, {});
    centroid.assign(nt, Vec2{});
    edge_map.clear();

    for (std::size_t t = 0; t < nt; ++t) {
        const Vec2 p0 = corner_position(t, 0), p1 = corner_position(t, 1), p2 = corner_position(t, 2);
        const double twoA = cross(p1 - p0, p2 - p0);
        if (!(twoA > 0.0))
            throw InvariantViolation("mesh.orientation", "triangle " + std::to_string(t) + " is not counterclockwise");
        param_area[t] = 0.5 * twoA;
        const Sym2& g = triangles[t].metric;
        if (!g.positive_definite())
            throw InvariantViolation("mesh.metric-spd", "triangle " + std::to_string(t) + " metric not SPD");
        area[t] = param_area[t] * std::sqrt(g.det());
        if (!(area[t] > 0.0))
            throw InvariantViolation("mesh.positive-area", "triangle " + std::to_string(t) + " has nonpositive metric area");
        basis_grad[t][0] = rot90(p2 - p1) / twoA;
        basis_grad[t][1] = rot90(p0 - p2) / twoA;
        basis_grad[t][2] = rot90(p1 - p0) / twoA;
        centroid[t] = (p0 + p1 + p2) / 3.0;

        for (int c = 0; c < 3; ++c) {
            const int cn = (c + 1) % 3;
            const EdgeKey key = canonical_edge(triangles[t].v[c], triangles[t].shift[c],
                                               triangles[t].v[cn], triangles[t].shift[cn]);
            edge_map[key].push_back(static_cast<int>(t));
        }
    }

    gluings.clear();
    boundary_edges.clear();
    for (const auto& [key, tris] : edge_map) {
        if (tris.size() == 1) {
            boundary_edges.push_back(key);
        } else if (tris.size() != 2) {
            throw InvariantViolation("mesh.edge-manifold",
                                     "edge shared by " + std::to_string(tris.size()) + " triangles");
        } else if (!shift_zero(key.d)) {
            // Interior edge whose two triangles see each other across a deck
            // translation: the identification locus of the cut domain.
            gluings.push_back({{key.a, key.b}, key.d});
        }
    }
}

// ---------------------------------------------------------------------------
// Invariant suite

inline long euler_characteristic(const SurfaceMesh& mesh) {
    return static_cast<long>(mesh.vertices.size()) - static_cast<long>(mesh.edge_map.size()) +
           static_cast<long>(mesh.triangles.size());
}

inline void check_mesh_invariants(const SurfaceMesh& mesh) {
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        if (!mesh.triangles[t].metric.positive_definite())
            throw InvariantViolation("mesh.metric-spd", "triangle " + std::to_string(t));
        if (!(mesh.area[t] > 0.0))
            throw InvariantViolation("mesh.positive-area", "triangle " + std::to_string(t));
    }
    // Each glued edge identifies exactly two triangle sides, one on each side
    // of the seam: the identification is its own inverse.
    for (const auto& g : mesh.gluings) {
        const EdgeKey key{std::min(g.edge[0], g.edge[1]), std::max(g.edge[0], g.edge[1]),
                          g.edge[0] <= g.edge[1] ? g.shift : Shift{-g.shift[0], -g.shift[1]}};
        auto it = mesh.edge_map.find(key);
        if (it == mesh.edge_map.end() || it->second.size() != 2)
            throw InvariantViolation("mesh.gluing-involution",
                                     "glued edge is not a two-sided identification");
    }
    if (mesh.kind != MeshKind::custom && euler_characteristic(mesh) != 0)
        throw InvariantViolation("mesh.euler-characteristic",
                                 "chi = " + std::to_string(euler_characteristic(mesh)));
    for (const auto& loop : mesh.homology_basis)
        if (!loop.closed())
            throw InvariantViolation("mesh.homology-loop", "basis path is not closed after gluing");
}

// ---------------------------------------------------------------------------
// Connected components of a triangle subset

struct TriangleComponents {
    std::vector<int> component;        // per mesh triangle: component id, -1 outside the set
    std::vector<Shift> unroll;         // per mesh triangle: deck shift unrolling it in its component
    std::vector<std::vector<int>> members;  // per component, ascending triangle ids
};

// Components across shared (possibly glued) edges; deck shifts are
// accumulated so positions and equivariant values unroll consistently within
// each component.
inline TriangleComponents split_components(const SurfaceMesh& mesh, const std::vector<int>& subset) {
    TriangleComponents out;
    out.component.assign(mesh.triangles.size(), -1);
    out.unroll.assign(mesh.triangles.size(), Shift{});
    std::vector<char> in_set(mesh.triangles.size(), 0);
    for (int t : subset) in_set[t] = 1;

    std::map<int, std::vector<std::pair<int, Shift>>> adj;
    for (const auto& [key, tris] : mesh.edge_map) {
        if (tris.size() != 2) continue;
        const int t0 = tris[0], t1 = tris[1];
        if (!in_set[t0] || !in_set[t1]) continue;
        auto corner_shift = [&](int t, int v) {
            for (int c = 0; c < 3; ++c)
                if (mesh.triangles[t].v[c] == v) return mesh.triangles[t].shift[c];
            return Shift{};
        };
        const Shift off = shift_sub(corner_shift(t0, key.a), corner_shift(t1, key.a));
        adj[t0].push_back({t1, off});
        adj[t1].push_back({t0, Shift{-off[0], -off[1]}});
    }

    for (int root : subset) {
        if (out.component[root] != -1) continue;
        const int id = static_cast<int>(out.members.size());
        out.members.push_back({});
        std::vector<std::pair<int, Shift>> stack{{root, Shift{}}};
        out.component[root] = id;
        while (!stack.empty()) {
            auto [t, off] = stack.back();
            stack.pop_back();
            out.members[id].push_back(t);
            out.unroll[t] = off;
            auto it = adj.find(t);
            if (it == adj.end()) continue;
            for (const auto& [nb, rel] : it->second) {
                if (out.component[nb] != -1) continue;
                out.component[nb] = id;
                stack.push_back({nb, shift_add(off, rel)});
            }
        }
        std::sort(out.members[id].begin(), out.members[id].end());
    }
    return out;
}

// ---------------------------------------------------------------------------
// Construction

// Uniform triangulation of the flat torus R^2 / (Z e1 + Z e2).
inline SurfaceMesh build_torus(const Vec2& e1, const Vec2& e2, int resolution) {
    const double det = cross(e1, e2);
    if (std::abs(det) < 1e-12) throw std::invalid_argument("degenerate lattice: |det| below 1e-12");
    if (resolution < 2) throw std::invalid_argument("resolution must be at least 2");

    SurfaceMesh mesh;
    mesh.kind = MeshKind::torus;
    const int n = resolution;
    mesh.vertices.resize(static_cast<std::size_t>(n) * n);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i)
            mesh.vertices[static_cast<std::size_t>(j) * n + i] =
                (static_cast<double>(i) / n) * e1 + (static_cast<double>(j) / n) * e2;
    mesh.deck_translations = {e1, e2};

    auto corner = [&](int i, int j) {
        const int ci = ((i % n) + n) % n, cj = ((j % n) + n) % n;
        Shift s{(i - ci) / n, (j - cj) / n};
        return std::pair<int, Shift>(cj * n + ci, s);
    };
    // Corner order keeps chart triangles counterclockwise for either basis
    // handedness.
    const bool ccw = det > 0;
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            const auto A = corner(i, j), B = corner(i + 1, j), C = corner(i + 1, j + 1), D = corner(i, j + 1);
            Triangle t1, t2;
            if (ccw) {
                t1.v = {A.first, B.first, C.first};
                t1.shift = {A.second, B.second, C.second};
                t2.v = {A.first, C.first, D.first};
                t2.shift = {A.second, C.second, D.second};
            } else {
                t1.v = {A.first, C.first, B.first};
                t1.shift = {A.second, C.second, B.second};
                t2.v = {A.first, D.first, C.first};
                t2.shift = {A.second, D.second, C.second};
            }
            mesh.triangles.push_back(t1);
            mesh.triangles.push_back(t2);
        }
    }

    EdgeLoop g1, g2;
    g1.start = 0;
    for (int i = 1; i <= n; ++i) g1.steps.push_back({i % n, Shift{i == n ? 1 : 0, 0}});
    g2.start = 0;
    for (int j = 1; j <= n; ++j) g2.steps.push_back({(j % n) * n, Shift{0, j == n ? 1 : 0}});
    mesh.homology_basis = {g1, g2};

    mesh.finalize();
    check_mesh_invariants(mesh);
    return mesh;
}

// Flat annulus r0 < r < r1, built in the (theta, r) chart with the polar
// metric diag(r^2, 1) assigned per triangle. The two triangles of each radial
// cell take the metric at the cell's two Gauss radii, so ring-wise energy
// sums are the 2-point Gauss quadrature of the radial integral.
inline SurfaceMesh build_annulus(double r0, double r1, int n_theta, int n_r) {
    if (!(r0 > 0.0) || !(r0 < r1)) throw std::invalid_argument("annulus radii: need 0 < r0 < r1");
    if (n_theta < 3) throw std::invalid_argument("n_theta must be at least 3");
    if (n_r < 2) throw std::invalid_argument("n_r must be at least 2");

    SurfaceMesh mesh;
    mesh.kind = MeshKind::annulus;
    const double two_pi = 2.0 * std::numbers::pi;
    const double ht = two_pi / n_theta, hr = (r1 - r0) / n_r;
    mesh.vertices.resize(static_cast<std::size_t>(n_theta) * (n_r + 1));
    for (int j = 0; j <= n_r; ++j)
        for (int i = 0; i < n_theta; ++i)
            mesh.vertices[static_cast<std::size_t>(j) * n_theta + i] = {i * ht, r0 + j * hr};

    auto corner = [&](int i, int j) {
        const int ci = i % n_theta;
        return std::pair<int, Shift>(j * n_theta + ci, Shift{(i - ci) / n_theta, 0});
    };
    const double gauss_off = hr / (2.0 * std::sqrt(3.0));
    for (int j = 0; j < n_r; ++j) {
        const double rmid = r0 + (j + 0.5) * hr;
        const double r_low = rmid - gauss_off, r_high = rmid + gauss_off;
        for (int i = 0; i < n_theta; ++i) {
            const auto A = corner(i, j), B = corner(i + 1, j), C = corner(i + 1, j + 1), D = corner(i, j + 1);
            Triangle t1, t2;
            t1.v = {A.first, B.first, C.first};
            t1.shift = {A.second, B.second, C.second};
            t1.metric = Sym2{r_low * r_low, 0.0, 1.0};
            t2.v = {A.first, C.first, D.first};
            t2.shift = {A.second, C.second, D.second};
            t2.metric = Sym2{r_high * r_high, 0.0, 1.0};
            mesh.triangles.push_back(t1);
            mesh.triangles.push_back(t2);
        }
    }
    mesh.deck_translations = {Vec2{two_pi, 0.0}};

    EdgeLoop theta_loop;
    theta_loop.start = 0;
    for (int i = 1; i <= n_theta; ++i)
        theta_loop.steps.push_back({i % n_theta, Shift{i == n_theta ? 1 : 0, 0}});
    mesh.homology_basis = {theta_loop};

    mesh.finalize();
    check_mesh_invariants(mesh);
    return mesh;
}

// ---------------------------------------------------------------------------
// Operations

// Per-triangle gradient covector of the affine interpolant. Period shifts
// cancel inside each triangle, so the form is single-valued on M.
inline PLOneForm differential(const SurfaceMesh& mesh, const EquivariantField& u) {
    validate_field(mesh, u);
    PLOneForm form;
    form.covectors.resize(mesh.triangles.size());
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        Vec2 du{};
        for (int c = 0; c < 3; ++c)
            du += field_corner_value(mesh, u, static_cast<int>(t), c) * mesh.basis_grad[t][c];
        form.covectors[t] = du;
    }
    return form;
}

inline void validate_form(const SurfaceMesh& mesh, const PLOneForm& form) {
    if (form.covectors.size() != mesh.triangles.size())
        throw std::invalid_argument("one-form: covector count does not match mesh triangles");
    for (const Vec2& w : form.covectors)
        if (!finite(w)) throw std::invalid_argument("one-form: non-finite covector");
}

// Sum of covector . edge-vector contributions along a closed edge path.
// Forms are per-triangle; along an interior edge the two adjacent values are
// averaged (they agree exactly for differentials of PL fields).
inline double period_integral(const SurfaceMesh& mesh, const PLOneForm& form, const EdgeLoop& loop) {
    validate_form(mesh, form);
    if (!loop.closed()) throw std::invalid_argument("period integral: path is not a closed loop");
    double sum = 0.0;
    int prev = loop.start;
    for (const auto& step : loop.steps) {
        Vec2 disp = mesh.vertices[step.vertex] - mesh.vertices[prev];
        for (int k = 0; k < mesh.generator_count(); ++k)
            disp += step.shift[k] * mesh.deck_translations[k];
        const EdgeKey key = canonical_edge(prev, Shift{}, step.vertex, step.shift);
        auto it = mesh.edge_map.find(key);
        if (it == mesh.edge_map.end())
            throw std::invalid_argument("period integral: path step is not a mesh edge");
        Vec2 w{};
        for (int t : it->second) w += form.covectors[t];
        w = w / static_cast<double>(it->second.size());
        sum += w.dot(disp);
        prev = step.vertex;
    }
    return sum;
}

// Per-triangle Hodge star (+90 degree rotation in the triangle metric).
inline PLOneForm hodge_star(const SurfaceMesh& mesh, const PLOneForm& form) {
    validate_form(mesh, form);
    PLOneForm out;
    out.covectors.resize(form.covectors.size());
    for (std::size_t t = 0; t < form.covectors.size(); ++t)
        out.covectors[t] = hodge(mesh.triangles[t].metric, form.covectors[t]);
    return out;
}

inline double form_norm(const SurfaceMesh& mesh, const PLOneForm& form, std::size_t t) {
    return covector_norm(mesh.triangles[t].metric, form.covectors[t]);
}

// Wedge pairing of two per-triangle covectors against the area form; the
// sqrt(det g) factors cancel, leaving the chart cross product times the
// chart area.
inline double wedge_pairing(const SurfaceMesh& mesh, const PLOneForm& a, const PLOneForm& b) {
    validate_form(mesh, a);
    validate_form(mesh, b);
    double sum = 0.0;
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t)
        sum += cross(a.covectors[t], b.covectors[t]) * mesh.param_area[t];
    return sum;
}

} // namespace laminate
