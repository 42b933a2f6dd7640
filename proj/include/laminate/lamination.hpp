// lamination.hpp -- topology-side constructions: plaque decompositions,
// admissible transversals with good subdivisions, transverse cocycles and
// measures, BV decomposition of traces, and Ruelle-Sullivan currents of
// weighted parallel closed geodesics on flat tori.
//
// Desk-scale laminations are parallel families, so a single global flow-box
// chart exists: one transverse coordinate s = normal . x. Crossing patterns,
// good subdivisions and cocycle values are computed exactly in s; triangle
// labelings are produced for artifacts and plots.
#pragma once

#include "laminate/mesh.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace laminate {

// ---------------------------------------------------------------------------
// Plaque decomposition (triangle level)

struct PlaqueDecomposition {
    std::vector<int> labels;                 // per triangle: plaque id, -1 inside the band
    std::vector<double> constants;           // per plaque: area-weighted mean of v
    std::vector<double> spreads;             // per plaque: max - min of v over the plaque
    std::vector<std::vector<int>> adjacency; // per plaque: adjacent band component ids
    double plaque_tol = 0.0;
    bool flagged = false;      // some plaque spread exceeds plaque_tol (unconverged run)
    bool degenerate = false;   // the band is everything: no plaques
};

// Connected-component labeling of the complement of the band; per-plaque
// constants come from v with deck shifts unrolled, so plaques that wrap a
// handle with nonzero holonomy of alpha are flagged by their spread.
inline PlaqueDecomposition plaques(const SurfaceMesh& mesh, const std::vector<int>& band,
                                   const EquivariantField& v, double plaque_tol) {
    validate_field(mesh, v);
    PlaqueDecomposition dec;
    dec.plaque_tol = plaque_tol;
    dec.labels.assign(mesh.triangles.size(), -1);

    std::vector<char> in_band(mesh.triangles.size(), 0);
    for (int t : band) in_band[t] = 1;
    std::vector<int> complement;
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t)
        if (!in_band[t]) complement.push_back(static_cast<int>(t));
    if (complement.empty()) {
        dec.degenerate = true;
        return dec;
    }

    const TriangleComponents comps = split_components(mesh, complement);
    const TriangleComponents band_comps = split_components(mesh, band);
    dec.constants.assign(comps.members.size(), 0.0);
    dec.spreads.assign(comps.members.size(), 0.0);
    dec.adjacency.assign(comps.members.size(), {});

    for (std::size_t id = 0; id < comps.members.size(); ++id) {
        double num = 0.0, den = 0.0;
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (int t : comps.members[id]) {
            dec.labels[t] = static_cast<int>(id);
            double avg = 0.0;
            for (int c = 0; c < 3; ++c) {
                const double val = field_corner_value(mesh, v, t, c) +
                                   v.rho.on_shift(comps.unroll[t]);
                avg += val;
                lo = std::min(lo, val);
                hi = std::max(hi, val);
            }
            num += mesh.area[t] * avg / 3.0;
            den += mesh.area[t];
        }
        dec.constants[id] = num / den;
        dec.spreads[id] = hi - lo;
        if (dec.spreads[id] > plaque_tol) dec.flagged = true;
    }

    // Plaque <-> band-component adjacency across shared edges.
    for (const auto& [key, tris] : mesh.edge_map) {
        if (tris.size() != 2) continue;
        for (int a = 0; a < 2; ++a) {
            const int tp = tris[a], tb = tris[1 - a];
            if (dec.labels[tp] >= 0 && in_band[tb]) {
                auto& adj = dec.adjacency[dec.labels[tp]];
                const int bc = band_comps.component[tb];
                if (std::find(adj.begin(), adj.end(), bc) == adj.end()) adj.push_back(bc);
            }
        }
    }
    for (auto& adj : dec.adjacency) std::sort(adj.begin(), adj.end());
    return dec;
}

// ---------------------------------------------------------------------------
// Flow-box chart: the one-dimensional shadow of a parallel lamination

struct TransverseBand {
    double lo = 0.0, hi = 0.0;  // closed interval in s; lo == hi for a leaf line
};

struct TransversalPath {
    std::vector<Vec2> points;  // polyline in lifted (unreduced) plane coordinates
};

struct FlowBoxChart {
    Vec2 normal{0.0, 1.0};  // unit transverse covector; s(x) = normal . x
    bool periodic = false;
    double window_lo = 0.0, window_hi = 0.0;  // one fundamental window in s
    double period_value = 0.0;                // value shift per +period lift
    std::vector<TransverseBand> bands;        // sorted, disjoint, inside the window
    std::vector<double> plaque_values;        // one per plaque (see finalize)

    struct Segment {
        double lo, hi;
        int plaque;
        long lift_off;
    };
    std::vector<Segment> segments;  // derived plaque intervals within the window

    double s(const Vec2& x) const { return normal.dot(x); }
    double period() const { return window_hi - window_lo; }

    // Periodic charts have exactly one plaque per band (the gap above it);
    // bounded charts have one plaque per gap, including the window ends.
    void finalize() {
        for (std::size_t b = 1; b < bands.size(); ++b)
            if (!(bands[b].lo > bands[b - 1].hi))
                throw std::invalid_argument("flow box: bands must be sorted and disjoint");
        segments.clear();
        if (periodic) {
            if (bands.empty()) throw std::invalid_argument("flow box: periodic chart needs bands");
            if (plaque_values.size() != bands.size())
                throw std::invalid_argument("flow box: periodic chart needs one value per band gap");
            const std::size_t B = bands.size();
            for (std::size_t j = 0; j + 1 < B; ++j)
                segments.push_back({bands[j].hi, bands[j + 1].lo, static_cast<int>(j), 0});
            segments.push_back({bands[B - 1].hi, window_hi, static_cast<int>(B - 1), 0});
            if (window_lo < bands[0].lo)
                segments.push_back({window_lo, bands[0].lo, static_cast<int>(B - 1), -1});
        } else {
            int id = 0;
            double cursor = window_lo;
            for (const TransverseBand& b : bands) {
                if (b.lo > cursor) segments.push_back({cursor, b.lo, id++, 0});
                cursor = b.hi;
            }
            if (cursor < window_hi) segments.push_back({cursor, window_hi, id++, 0});
            if (plaque_values.size() != static_cast<std::size_t>(id))
                throw std::invalid_argument("flow box: plaque value count does not match the gaps");
        }
    }

    struct Location {
        bool in_band = false;
        int index = 0;  // band index or plaque id
        long lift = 0;
    };

    Location locate(double s_value) const {
        long lift = 0;
        double s0 = s_value;
        if (periodic) {
            const double delta = period();
            lift = static_cast<long>(std::floor((s_value - window_lo) / delta));
            s0 = s_value - static_cast<double>(lift) * delta;
            if (s0 < window_lo) { s0 += delta; --lift; }
            if (s0 >= window_hi) { s0 -= delta; ++lift; }
        } else if (s_value < window_lo || s_value > window_hi) {
            throw std::invalid_argument("flow box: coordinate outside the chart window");
        }
        for (std::size_t b = 0; b < bands.size(); ++b)
            if (s0 >= bands[b].lo && s0 <= bands[b].hi)
                return {true, static_cast<int>(b), lift};
        for (const Segment& seg : segments)
            if (s0 >= seg.lo && s0 <= seg.hi) return {false, seg.plaque, lift + seg.lift_off};
        throw std::logic_error("flow box: locate fell through");
    }

    double plaque_value(const Location& loc) const {
        return plaque_values[loc.index] + static_cast<double>(loc.lift) * period_value;
    }
};

// Radial flow-box chart of an annulus mesh: one band spanning the given
// triangles, plaque values taken from the decomposition's components in
// radial order.
inline FlowBoxChart annulus_flow_box(const SurfaceMesh& mesh, const std::vector<int>& band,
                                     const PlaqueDecomposition& dec) {
    if (mesh.kind != MeshKind::annulus)
        throw std::invalid_argument("annulus_flow_box: needs an annulus mesh");
    if (dec.degenerate || band.empty())
        throw std::invalid_argument("annulus_flow_box: band and plaques must be nonempty");
    double r0 = std::numeric_limits<double>::infinity(), r1 = -r0;
    for (const Vec2& v : mesh.vertices) {
        r0 = std::min(r0, v.y);
        r1 = std::max(r1, v.y);
    }
    double band_lo = r1, band_hi = r0;
    for (int t : band)
        for (int c = 0; c < 3; ++c) {
            const double r = mesh.corner_position(t, c).y;
            band_lo = std::min(band_lo, r);
            band_hi = std::max(band_hi, r);
        }
    FlowBoxChart chart;
    chart.normal = {0.0, 1.0};
    chart.periodic = false;
    chart.window_lo = r0;
    chart.window_hi = r1;
    chart.bands = {{band_lo, band_hi}};
    // Gap values in radial order: plaque components sorted by mean centroid r.
    std::vector<std::pair<double, double>> by_radius;
    for (std::size_t id = 0; id < dec.constants.size(); ++id) {
        double rsum = 0.0;
        int count = 0;
        for (std::size_t t = 0; t < dec.labels.size(); ++t)
            if (dec.labels[t] == static_cast<int>(id)) {
                rsum += mesh.centroid[t].y;
                ++count;
            }
        by_radius.push_back({rsum / std::max(count, 1), dec.constants[id]});
    }
    std::sort(by_radius.begin(), by_radius.end());
    for (const auto& [r, c] : by_radius) chart.plaque_values.push_back(c);
    chart.finalize();
    return chart;
}

// ---------------------------------------------------------------------------
// Good subdivisions and the transverse cocycle

struct SubdivisionPiece {
    std::size_t begin = 0, end = 0;  // node range of the polyline
    int sign = 0;                    // +1 with increasing s, -1 against
};

// Maximal alternating decomposition into s-monotone sub-paths whose division
// points lie in plaques. Reversals inside a band are tangential contact with
// the lamination and reject the path; endpoints must lie in plaques.
inline std::vector<SubdivisionPiece> good_subdivision(const FlowBoxChart& chart,
                                                      const TransversalPath& path) {
    if (path.points.size() < 2)
        throw std::invalid_argument("transversal: need at least two points");
    std::vector<double> s(path.points.size());
    for (std::size_t k = 0; k < path.points.size(); ++k) {
        if (k > 0 && (path.points[k] - path.points[k - 1]).norm() == 0.0)
            throw std::invalid_argument("transversal: consecutive points must be distinct");
        s[k] = chart.s(path.points[k]);
    }
    if (chart.locate(s.front()).in_band || chart.locate(s.back()).in_band)
        throw std::invalid_argument("transversal: endpoints must lie in plaques");

    std::vector<SubdivisionPiece> pieces;
    std::size_t begin = 0;
    int sign = 0;
    for (std::size_t k = 1; k < s.size(); ++k) {
        const double ds = s[k] - s[k - 1];
        int dir = 0;
        if (ds > 0.0) dir = 1;
        if (ds < 0.0) dir = -1;
        if (dir == 0) {
            // Sliding along the band is tangential contact.
            if (chart.locate(s[k]).in_band)
                throw std::invalid_argument("transversal: tangential to the lamination band");
            continue;
        }
        if (sign == 0) {
            sign = dir;
        } else if (dir != sign) {
            if (chart.locate(s[k - 1]).in_band)
                throw std::invalid_argument("transversal: tangential to the lamination band");
            pieces.push_back({begin, k - 1, sign});
            begin = k - 1;
            sign = dir;
        }
    }
    pieces.push_back({begin, s.size() - 1, sign == 0 ? 1 : sign});
    return pieces;
}

// Transverse cocycle: signed sum of plaque-constant differences per monotone
// piece (positively oriented pieces count +beta(end, start), negatively
// oriented ones -beta, so a measure is crossed positively either way).
// The value depends only on the endpoint plaque lifts, which makes reversal
// and homotopy invariance exact; contributions are accumulated in sorted
// order so equal piece multisets sum bit-identically.
inline double cocycle(const FlowBoxChart& chart, const TransversalPath& path) {
    const std::vector<SubdivisionPiece> pieces = good_subdivision(chart, path);
    std::vector<double> contributions;
    contributions.reserve(pieces.size());
    for (const SubdivisionPiece& piece : pieces) {
        const auto start = chart.locate(chart.s(path.points[piece.begin]));
        const auto end = chart.locate(chart.s(path.points[piece.end]));
        contributions.push_back(piece.sign * (chart.plaque_value(end) - chart.plaque_value(start)));
    }
    std::sort(contributions.begin(), contributions.end());
    double nu = 0.0;
    for (double c : contributions) nu += c;
    return nu;
}

// ---------------------------------------------------------------------------
// Bounded-variation decomposition of a sampled trace

struct BVTrace {
    std::vector<double> s, g;
    double total_variation = 0.0;
    std::vector<std::pair<double, double>> atoms;  // (location, |increment|)
    double atom_mass = 0.0;
    double cantor_mass = 0.0;
    double ac_mass = 0.0;
    double resolution = 0.0;  // max sampling gap: classification is scale-declared
    double atom_tol = 0.0;
    double slope_factor = 0.0;
};

// Atoms are single-gap increments above atom_tol * TV; the absolutely
// continuous part collects increments whose density stays within
// slope_factor times the mean slope; the remainder is labeled Cantor.
inline BVTrace bv_decompose(const std::vector<double>& s, const std::vector<double>& g,
                            double atom_tol, double slope_factor = 10.0) {
    if (s.size() != g.size()) throw std::invalid_argument("bv_decompose: size mismatch");
    if (s.size() < 3) throw std::invalid_argument("bv_decompose: need at least three samples");
    for (std::size_t k = 1; k < s.size(); ++k)
        if (!(s[k] > s[k - 1])) throw std::invalid_argument("bv_decompose: s must be increasing");

    BVTrace trace;
    trace.s = s;
    trace.g = g;
    trace.atom_tol = atom_tol;
    trace.slope_factor = slope_factor;
    for (std::size_t k = 1; k < s.size(); ++k) {
        trace.total_variation += std::abs(g[k] - g[k - 1]);
        trace.resolution = std::max(trace.resolution, s[k] - s[k - 1]);
    }
    if (trace.total_variation == 0.0) return trace;
    const double mean_slope = trace.total_variation / (s.back() - s.front());
    for (std::size_t k = 1; k < s.size(); ++k) {
        const double inc = std::abs(g[k] - g[k - 1]);
        if (inc == 0.0) continue;
        const double slope = inc / (s[k] - s[k - 1]);
        if (inc > atom_tol * trace.total_variation) {
            trace.atom_mass += inc;
            trace.atoms.push_back({0.5 * (s[k] + s[k - 1]), inc});
        } else if (slope <= slope_factor * mean_slope) {
            trace.ac_mass += inc;
        } else {
            trace.cantor_mass += inc;
        }
    }
    return trace;
}

// ---------------------------------------------------------------------------
// Measured laminations: weighted parallel closed geodesics on a flat torus

struct MeasuredLamination {
    std::array<int, 2> leaf_class{0, 1};  // primitive homology class (m, n)
    std::vector<double> offsets;          // transverse coordinates in [0, spacing)
    std::vector<double> weights;          // nonnegative
    int orientation = 1;                  // +-1 global normal direction
};

struct LeafFrame {
    Vec2 direction{};  // unit leaf direction (orientation applied)
    Vec2 normal{};     // rot90(direction): transversals increase across it
    double length = 0.0;   // closed-leaf length
    double spacing = 0.0;  // transverse distance between consecutive lifts
};

inline LeafFrame leaf_frame(const SurfaceMesh& mesh, const MeasuredLamination& lam) {
    if (mesh.kind != MeshKind::torus)
        throw std::invalid_argument("lamination: leaves live on a torus mesh");
    const auto [m, n] = lam.leaf_class;
    if (m == 0 && n == 0) throw std::invalid_argument("lamination: zero leaf class");
    if (std::gcd(std::abs(m), std::abs(n)) != 1)
        throw std::invalid_argument("lamination: leaf class must be primitive");
    const Vec2 e1 = mesh.deck_translations[0], e2 = mesh.deck_translations[1];
    const Vec2 gamma = static_cast<double>(m) * e1 + static_cast<double>(n) * e2;
    LeafFrame frame;
    frame.length = gamma.norm();
    frame.direction = (lam.orientation >= 0 ? 1.0 : -1.0) * gamma / frame.length;
    frame.normal = rot90(frame.direction);
    frame.spacing = std::abs(cross(e1, e2)) / frame.length;
    return frame;
}

inline void validate_lamination(const SurfaceMesh& mesh, const MeasuredLamination& lam) {
    const LeafFrame frame = leaf_frame(mesh, lam);
    if (lam.offsets.size() != lam.weights.size())
        throw std::invalid_argument("lamination: offsets and weights must pair up");
    if (lam.offsets.empty()) throw std::invalid_argument("lamination: no leaves");
    for (double w : lam.weights)
        if (!(w >= 0.0)) throw std::invalid_argument("lamination: weights must be nonnegative");
    std::vector<double> sorted = lam.offsets;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        if (sorted[i] < 0.0 || sorted[i] >= frame.spacing)
            throw std::invalid_argument("lamination: offsets must lie in [0, spacing)");
        if (i > 0 && !(sorted[i] > sorted[i - 1]))
            throw std::invalid_argument("lamination: leaves must be disjoint (distinct offsets)");
    }
}

inline double total_weight(const MeasuredLamination& lam) {
    double w = 0.0;
    for (double x : lam.weights) w += x;
    return w;
}

inline nlohmann::ordered_json lamination_to_json(const MeasuredLamination& lam) {
    nlohmann::ordered_json leaves = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < lam.offsets.size(); ++i)
        leaves.push_back({{"class", {lam.leaf_class[0], lam.leaf_class[1]}},
                          {"offset", lam.offsets[i]},
                          {"weight", lam.weights[i]}});
    return {{"leaves", leaves}, {"orientation", lam.orientation}};
}

inline MeasuredLamination lamination_from_json(const nlohmann::ordered_json& j) {
    MeasuredLamination lam;
    lam.orientation = j.at("orientation").get<int>();
    const auto& leaves = j.at("leaves");
    if (leaves.empty()) throw std::invalid_argument("lamination: no leaves");
    lam.leaf_class = {leaves.at(0).at("class").at(0).get<int>(),
                      leaves.at(0).at("class").at(1).get<int>()};
    for (const auto& leaf : leaves) {
        if (leaf.at("class").at(0).get<int>() != lam.leaf_class[0] ||
            leaf.at("class").at(1).get<int>() != lam.leaf_class[1])
            throw std::invalid_argument("lamination: mixed leaf classes are unsupported");
        lam.offsets.push_back(leaf.at("offset").get<double>());
        lam.weights.push_back(leaf.at("weight").get<double>());
    }
    return lam;
}

inline nlohmann::ordered_json transversal_to_json(const TransversalPath& path) {
    nlohmann::ordered_json pts = nlohmann::ordered_json::array();
    for (const Vec2& p : path.points) pts.push_back({p.x, p.y});
    return {{"polyline", pts}};
}

inline TransversalPath transversal_from_json(const nlohmann::ordered_json& j) {
    TransversalPath path;
    for (const auto& p : j.at("polyline"))
        path.points.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
    return path;
}

// Transverse staircase (measure CDF) over one fundamental window [0, spacing).
inline double transverse_cdf(const MeasuredLamination& lam, double s) {
    double g = 0.0;
    for (std::size_t i = 0; i < lam.offsets.size(); ++i)
        if (lam.offsets[i] <= s) g += lam.weights[i];
    return g;
}

namespace detail {

// Straight-line tracer through a uniform torus triangulation: splits the
// segment at every grid-line crossing and returns (triangle, displacement)
// pieces. Exact for per-triangle-constant integrands.
struct LeafSegmentPiece {
    int triangle = 0;
    Vec2 displacement{};
};

inline std::vector<LeafSegmentPiece> trace_torus_line(const SurfaceMesh& mesh, const Vec2& start,
                                                      const Vec2& direction, double length) {
    const int res = static_cast<int>(std::lround(std::sqrt(static_cast<double>(mesh.vertices.size()))));
    if (static_cast<std::size_t>(res) * res != mesh.vertices.size())
        throw std::invalid_argument("leaf tracer: mesh is not a uniform torus grid");
    const Vec2 e1 = mesh.deck_translations[0], e2 = mesh.deck_translations[1];
    const double det = cross(e1, e2);

    auto to_lattice = [&](const Vec2& x) {
        return Vec2{(x.x * e2.y - x.y * e2.x) / det, (x.y * e1.x - x.x * e1.y) / det};
    };
    const Vec2 lam0 = to_lattice(start) * static_cast<double>(res);
    const Vec2 vel = to_lattice(direction) * static_cast<double>(res);

    std::vector<double> cuts{0.0, length};
    auto add_family = [&](double c0, double ct) {
        if (std::abs(ct) < 1e-14) return;
        const double tmin = 0.0, tmax = length;
        const double k_lo = c0 + ct * tmin, k_hi = c0 + ct * tmax;
        const long kmin = static_cast<long>(std::ceil(std::min(k_lo, k_hi) - 1e-9));
        const long kmax = static_cast<long>(std::floor(std::max(k_lo, k_hi) + 1e-9));
        for (long k = kmin; k <= kmax; ++k) {
            const double t = (static_cast<double>(k) - c0) / ct;
            if (t > 1e-13 && t < length - 1e-13) cuts.push_back(t);
        }
    };
    add_family(lam0.x, vel.x);
    add_family(lam0.y, vel.y);
    add_family(lam0.x - lam0.y, vel.x - vel.y);
    std::sort(cuts.begin(), cuts.end());

    std::vector<LeafSegmentPiece> pieces;
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
        if (cuts[k + 1] - cuts[k] < 1e-13 * std::max(1.0, length)) continue;
        const double tm = 0.5 * (cuts[k] + cuts[k + 1]);
        Vec2 lam = lam0 + tm * vel;
        double fa = lam.x - std::floor(lam.x);
        double fb = lam.y - std::floor(lam.y);
        int i = static_cast<int>(std::floor(lam.x)) % res;
        int j = static_cast<int>(std::floor(lam.y)) % res;
        if (i < 0) i += res;
        if (j < 0) j += res;
        const int tri = 2 * (j * res + i) + (fb <= fa ? 0 : 1);
        pieces.push_back({tri, (cuts[k + 1] - cuts[k]) * direction});
    }
    return pieces;
}

} // namespace detail

// Triangles met by any leaf line (the discrete band of the lamination).
inline std::vector<int> leaf_band(const SurfaceMesh& mesh, const MeasuredLamination& lam) {
    validate_lamination(mesh, lam);
    const LeafFrame frame = leaf_frame(mesh, lam);
    std::vector<char> hit(mesh.triangles.size(), 0);
    for (double s : lam.offsets) {
        const Vec2 start = s * frame.normal;
        for (const auto& piece : detail::trace_torus_line(mesh, start, frame.direction, frame.length))
            hit[piece.triangle] = 1;
    }
    std::vector<int> band;
    for (std::size_t t = 0; t < hit.size(); ++t)
        if (hit[t]) band.push_back(static_cast<int>(t));
    return band;
}

// Ruelle-Sullivan current applied to a PL test form: the flow-box definition
// collapses to weighted leaf line integrals for atomic transverse measures.
inline double ruelle_sullivan(const SurfaceMesh& mesh, const MeasuredLamination& lam,
                              const PLOneForm& test_form) {
    validate_lamination(mesh, lam);
    validate_form(mesh, test_form);
    const LeafFrame frame = leaf_frame(mesh, lam);
    double value = 0.0;
    for (std::size_t i = 0; i < lam.offsets.size(); ++i) {
        const Vec2 start = lam.offsets[i] * frame.normal;
        double line_integral = 0.0;
        for (const auto& piece :
             detail::trace_torus_line(mesh, start, frame.direction, frame.length))
            line_integral += test_form.covectors[piece.triangle].dot(piece.displacement);
        value += lam.weights[i] * line_integral;
    }
    return value;
}

// Constant covector duals of the homology basis: period_integral(form_k,
// gamma_j) = delta_kj.
inline std::vector<PLOneForm> basis_dual_forms(const SurfaceMesh& mesh) {
    std::vector<PLOneForm> forms;
    if (mesh.kind == MeshKind::torus) {
        const Vec2 e1 = mesh.deck_translations[0], e2 = mesh.deck_translations[1];
        const double det = cross(e1, e2);
        const Vec2 duals[2] = {Vec2{e2.y, -e2.x} / det, Vec2{-e1.y, e1.x} / det};
        for (const Vec2& d : duals) {
            PLOneForm f;
            f.covectors.assign(mesh.triangles.size(), d);
            forms.push_back(std::move(f));
        }
    } else {
        // Annulus chart: theta covector normalized to unit period.
        PLOneForm f;
        f.covectors.assign(mesh.triangles.size(), Vec2{1.0 / mesh.deck_translations[0].x, 0.0});
        forms.push_back(std::move(f));
    }
    return forms;
}

struct RSPrimitive {
    EquivariantField v;       // staircase of the transverse measure
    Homomorphism alpha;       // periods: weighted intersection numbers
    std::vector<double> current_values;  // T_Lambda of each basis dual form
    std::vector<double> pairing_values;  // pairing(form, dv) for the same forms
    double max_mismatch = 0.0;
    FlowBoxChart chart;       // plaque structure of the staircase
};

// Primitive of the Ruelle-Sullivan current for a parallel family: v is the
// staircase of the transverse measure (constant on plaques, jump = weight
// across each leaf), with periods alpha = weighted intersection numbers.
inline RSPrimitive rs_primitive(const SurfaceMesh& mesh, const MeasuredLamination& lam) {
    validate_lamination(mesh, lam);
    const LeafFrame frame = leaf_frame(mesh, lam);
    const Vec2 e1 = mesh.deck_translations[0], e2 = mesh.deck_translations[1];
    const double delta = frame.spacing;

    // Lattice translation counts: crossing e_k moves s by an exact integer
    // multiple of the spacing.
    const long step1 = std::lround(e1.dot(frame.normal) / delta);
    const long step2 = std::lround(e2.dot(frame.normal) / delta);
    if (std::abs(e1.dot(frame.normal) / delta - static_cast<double>(step1)) > 1e-9 ||
        std::abs(e2.dot(frame.normal) / delta - static_cast<double>(step2)) > 1e-9)
        throw std::logic_error("rs_primitive: lattice steps are not integral");

    RSPrimitive result;
    const double W = total_weight(lam);
    result.alpha.periods = {W * static_cast<double>(step1), W * static_cast<double>(step2)};

    result.v.rho = result.alpha;
    result.v.values.resize(mesh.vertices.size());
    for (std::size_t vi = 0; vi < mesh.vertices.size(); ++vi) {
        const double s = mesh.vertices[vi].dot(frame.normal);
        double val = 0.0;
        for (std::size_t i = 0; i < lam.offsets.size(); ++i)
            val += lam.weights[i] * std::floor((s - lam.offsets[i]) / delta + 1.0);
        result.v.values[vi] = val;
    }

    // Plaque chart of the staircase: bands at the leaf offsets, constants from
    // the cumulative weights.
    FlowBoxChart chart;
    chart.normal = frame.normal;
    chart.periodic = true;
    chart.window_lo = 0.0;
    chart.window_hi = delta;
    chart.period_value = W;
    std::vector<std::size_t> order(lam.offsets.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return lam.offsets[a] < lam.offsets[b]; });
    double cumulative = 0.0;
    for (std::size_t idx : order) {
        chart.bands.push_back({lam.offsets[idx], lam.offsets[idx]});
        cumulative += lam.weights[idx];
        chart.plaque_values.push_back(cumulative);
    }
    chart.finalize();
    result.chart = chart;

    // Round trip against the current on the basis dual forms.
    const PLOneForm dv = differential(mesh, result.v);
    const double scale = std::max(W, 1e-300);
    for (const PLOneForm& form : basis_dual_forms(mesh)) {
        const double t_val = ruelle_sullivan(mesh, lam, form);
        const double pair_val = wedge_pairing(mesh, form, dv);
        result.current_values.push_back(t_val);
        result.pairing_values.push_back(pair_val);
        result.max_mismatch = std::max(result.max_mismatch, std::abs(t_val - pair_val) / scale);
    }
    return result;
}

} // namespace laminate
