// duality.hpp -- conjugate field v_q from u_p: normalized dual form V_q,
// periods alpha_q, least-squares primitive, and duality diagnostics.
//
// V_q = |U_p|^{p-2} * (star U_p) with U_p = k_p du_p. V_q is not exactly
// closed in the discrete complex; the primitive is the least-squares PL field
// with the prescribed periods, and the L2 mismatch is a first-class output.
#pragma once

#include "laminate/penergy.hpp"

#include <Eigen/Sparse>

#include <cmath>
#include <string>
#include <vector>

namespace laminate {

struct DualField {
    EquivariantField v;   // least-squares primitive, mean-zero on the cut domain
    Homomorphism alpha;   // dual periods
    PLOneForm V;          // dual form V_q
    double q = 0.0;       // conjugate exponent, 1/p + 1/q = 1
    double residual = 0.0;  // sqrt(sum |dv - V_q|^2 area)
    double mass = 0.0;      // sum |V_q| area
};

inline double conjugate_exponent(double p) { return p / (p - 1.0); }

// V_q = |k_p du_p|^{p-2} * star(k_p du_p). Zero-gradient triangles produce the
// zero covector (the map x -> |x|^{p-2} x extends continuously by 0 for p > 2).
inline PLOneForm dual_form(const SurfaceMesh& mesh, const EquivariantField& u_p, double p, double k_p) {
    if (!(std::isfinite(k_p)) || k_p <= 0.0)
        throw std::invalid_argument("dual_form: k_p must be positive and finite");
    const PLOneForm du = differential(mesh, u_p);
    PLOneForm V;
    V.covectors.resize(mesh.triangles.size());
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        const Vec2 U = k_p * du.covectors[t];
        const double mag = covector_norm(mesh.triangles[t].metric, U);
        if (mag == 0.0) {
            V.covectors[t] = Vec2{};
            continue;
        }
        V.covectors[t] = std::pow(mag, p - 2.0) * hodge(mesh.triangles[t].metric, U);
    }
    return V;
}

inline Homomorphism dual_periods(const SurfaceMesh& mesh, const PLOneForm& V) {
    Homomorphism alpha;
    alpha.periods.reserve(mesh.homology_basis.size());
    for (const EdgeLoop& loop : mesh.homology_basis)
        alpha.periods.push_back(period_integral(mesh, V, loop));
    return alpha;
}

inline double form_mass(const SurfaceMesh& mesh, const PLOneForm& V) {
    double m = 0.0;
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) m += form_norm(mesh, V, t) * mesh.area[t];
    return m;
}

// Mean over the cut fundamental domain (corner values carry their shifts).
inline double field_mean(const SurfaceMesh& mesh, const EquivariantField& u) {
    double num = 0.0;
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        double avg = 0.0;
        for (int c = 0; c < 3; ++c) avg += field_corner_value(mesh, u, static_cast<int>(t), c);
        num += mesh.area[t] * avg / 3.0;
    }
    return num / mesh.total_area();
}

// Least-squares primitive: the equivariant field v with periods alpha
// minimizing sum |dv - V|^2 area, normalized to zero mean over the cut
// fundamental domain. Unique minimizer of a convex quadratic.
inline DualField primitive(const SurfaceMesh& mesh, const PLOneForm& V, const Homomorphism& alpha) {
    validate_form(mesh, V);
    if (alpha.periods.size() != mesh.deck_translations.size())
        throw std::invalid_argument("primitive: period count does not match homology basis");
    const Homomorphism measured = dual_periods(mesh, V);
    const double scale = std::max(1.0, form_mass(mesh, V));
    for (std::size_t k = 0; k < alpha.periods.size(); ++k)
        if (std::abs(measured.periods[k] - alpha.periods[k]) > 1e-8 * scale)
            throw std::invalid_argument("primitive: alpha is inconsistent with the loop integrals of V");

    const std::size_t nv = mesh.vertices.size();
    const std::size_t nfree = nv - 1;  // vertex 0 pinned, mean fixed afterwards

    EquivariantField v;
    v.values.assign(nv, 0.0);
    v.rho = alpha;

    // Normal equations: sum_T area * grad_phi_c . g^{-1} (dv - V) = 0.
    std::vector<Eigen::Triplet<double>> trips;
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(static_cast<long>(nfree));
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        const Sym2 ginv = mesh.triangles[t].metric.inverse();
        const double A = mesh.area[t];
        // Period offsets contribute a fixed part to dv on wrapped triangles.
        Vec2 fixed{};
        for (int c = 0; c < 3; ++c)
            fixed += alpha.on_shift(mesh.triangles[t].shift[c]) * mesh.basis_grad[t][c];
        const Vec2 target = ginv.apply(V.covectors[t] - fixed);
        for (int c = 0; c < 3; ++c) {
            const int vc = mesh.triangles[t].v[c];
            if (vc == 0) continue;
            rhs[vc - 1] += A * target.dot(mesh.basis_grad[t][c]);
            for (int d = 0; d < 3; ++d) {
                const int vd = mesh.triangles[t].v[d];
                if (vd == 0) continue;
                trips.emplace_back(vc - 1, vd - 1,
                                   A * ginv.apply(mesh.basis_grad[t][c]).dot(mesh.basis_grad[t][d]));
            }
        }
    }
    Eigen::SparseMatrix<double> L(static_cast<long>(nfree), static_cast<long>(nfree));
    L.setFromTriplets(trips.begin(), trips.end());
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(L);
    if (ldlt.info() != Eigen::Success)
        throw std::runtime_error("primitive: least-squares factorization failed");
    const Eigen::VectorXd x = ldlt.solve(rhs);
    for (std::size_t i = 1; i < nv; ++i) v.values[i] = x[static_cast<long>(i - 1)];

    const double mean = field_mean(mesh, v);
    for (double& val : v.values) val -= mean;

    DualField dual;
    dual.v = v;
    dual.alpha = alpha;
    dual.V = V;
    dual.mass = form_mass(mesh, V);
    const PLOneForm dv = differential(mesh, v);
    double r2 = 0.0;
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        const Vec2 diff = dv.covectors[t] - V.covectors[t];
        r2 += covector_norm_sq(mesh.triangles[t].metric, diff) * mesh.area[t];
    }
    dual.residual = std::sqrt(r2);
    return dual;
}

// Wedge pairing sum_T (a_T ^ b_T) area(T); antisymmetric, metric-free.
inline double pairing(const SurfaceMesh& mesh, const PLOneForm& a, const PLOneForm& b) {
    return wedge_pairing(mesh, a, b);
}

// Full dual construction from a converged p-solve.
inline DualField make_dual(const SurfaceMesh& mesh, const EquivariantField& u_p, double p, double k_p) {
    const PLOneForm V = dual_form(mesh, u_p, p, k_p);
    DualField dual = primitive(mesh, V, dual_periods(mesh, V));
    dual.q = conjugate_exponent(p);
    return dual;
}

// Max relative error of the conjugate involution |V|^{q-2} star V = -U_p over
// triangles with |U_p| > 0.
inline double conjugacy_error(const SurfaceMesh& mesh, const EquivariantField& u_p, double p,
                              double k_p, const PLOneForm& V) {
    const double q = conjugate_exponent(p);
    const PLOneForm du = differential(mesh, u_p);
    double worst = 0.0;
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        const Vec2 U = k_p * du.covectors[t];
        const double magU = covector_norm(mesh.triangles[t].metric, U);
        if (magU <= 0.0) continue;
        const double magV = form_norm(mesh, V, t);
        const Vec2 back = std::pow(magV, q - 2.0) * hodge(mesh.triangles[t].metric, V.covectors[t]);
        const Vec2 err = back + U;
        worst = std::max(worst, covector_norm(mesh.triangles[t].metric, err) / magU);
    }
    return worst;
}

struct RegionMass {
    std::string name;
    double mass = 0.0;
    double fraction = 0.0;
};

struct ConcentrationDiagnostics {
    double g2 = 0.0;    // sum |U_p|^{p-2} |U_p - U_ref|^2 area
    double orth = 0.0;  // sum |star(du_ref) ^ V_q| area
    std::vector<RegionMass> regions;
};

struct Region {
    std::string name;
    std::vector<int> triangles;
};

inline ConcentrationDiagnostics concentration_diagnostics(const SurfaceMesh& mesh,
                                                          const EquivariantField& u_p, double p,
                                                          double k_p, const PLOneForm& V,
                                                          const EquivariantField& u_ref,
                                                          const std::vector<Region>& regions = {}) {
    const PLOneForm du = differential(mesh, u_p);
    const PLOneForm du_ref = differential(mesh, u_ref);
    ConcentrationDiagnostics diag;
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        const Sym2& g = mesh.triangles[t].metric;
        const Vec2 U = k_p * du.covectors[t];
        const double magU = covector_norm(g, U);
        const Vec2 diff = U - du_ref.covectors[t];
        if (magU > 0.0)
            diag.g2 += std::pow(magU, p - 2.0) * covector_norm_sq(g, diff) * mesh.area[t];
        const Vec2 star_ref = hodge(g, du_ref.covectors[t]);
        diag.orth += std::abs(cross(star_ref, V.covectors[t])) * mesh.param_area[t];
    }
    const double total = form_mass(mesh, V);
    for (const Region& region : regions) {
        RegionMass rm;
        rm.name = region.name;
        for (int t : region.triangles) rm.mass += form_norm(mesh, V, t) * mesh.area[t];
        rm.fraction = total > 0.0 ? rm.mass / total : 0.0;
        diag.regions.push_back(rm);
    }
    return diag;
}

// Triangles of an annulus mesh whose centroid radius exceeds the threshold.
inline Region annulus_region_outside(const SurfaceMesh& mesh, double radius, std::string name) {
    Region region;
    region.name = std::move(name);
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t)
        if (mesh.centroid[t].y > radius) region.triangles.push_back(static_cast<int>(t));
    return region;
}

} // namespace laminate
