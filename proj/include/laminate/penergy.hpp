// penergy.hpp -- assembly and minimization of the p-energy over equivariant
// PL fields, with p-continuation. Produces the approximating family u_p.
//
// The discrete energy is sum_T (|du_T|_g^2 + delta^2)^{p/2} area(T), exact for
// PL fields at delta = 0. Minimization is damped Newton with backtracking;
// constants are gauge-fixed by pinning vertex 0 during solves.
#pragma once

#include "laminate/mesh.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cmath>
#include <limits>
#include <optional>
#include <vector>

namespace laminate {

struct SolverConfig {
    std::vector<double> p_schedule{2, 4, 8, 16, 32, 64};
    // Regularizer in (|du|^2 + delta^2)^{p/2}; negative means 1e-8 * mesh scale.
    double delta = -1.0;
    // Convergence scale: a p-solve stops when sup|grad| <= grad_tol * p * area.
    double grad_tol = 1e-9;
    int max_iters = 200;
    double ls_shrink = 0.5;
    double ls_c1 = 1e-4;
    int ls_max_backtracks = 60;
    bool record_trace = false;

    void validate() const {
        if (p_schedule.empty()) throw std::invalid_argument("solver config: empty p schedule");
        if (p_schedule.front() < 2.0)
            throw std::invalid_argument("solver config: first schedule entry must be >= 2");
        for (std::size_t i = 1; i < p_schedule.size(); ++i)
            if (!(p_schedule[i] > p_schedule[i - 1]))
                throw std::invalid_argument("solver config: p schedule must be strictly increasing");
        if (!(grad_tol > 0.0)) throw std::invalid_argument("solver config: grad_tol must be positive");
        if (max_iters < 1) throw std::invalid_argument("solver config: max_iters must be positive");
        if (!(ls_shrink > 0.0 && ls_shrink < 1.0))
            throw std::invalid_argument("solver config: line search shrink must be in (0,1)");
    }

    double resolved_delta(const SurfaceMesh& mesh) const {
        return delta >= 0.0 ? delta : 1e-8 * mesh.mesh_scale();
    }
};

struct IterationRecord {
    int iter = 0;
    double energy = 0.0;
    double grad_norm = 0.0;
    double step = 0.0;
};

struct SolveReport {
    double p = 0.0;
    double energy = 0.0;             // J_p re-evaluated at delta = 0
    double energy_regularized = 0.0; // value actually minimized
    double grad_norm = 0.0;
    int iterations = 0;
    double max_du = 0.0;
    double lp_mean = 0.0;            // (J_p / area)^{1/p}
    double k_p = 0.0;                // J_p^{-1/(p-1)}; NaN when J_p = 0
    double delta = 0.0;
    bool converged = false;
    bool stalled = false;
    std::vector<IterationRecord> trace;
};

inline double energy(const SurfaceMesh& mesh, const EquivariantField& u, double p, double delta) {
    if (p < 2.0) throw std::invalid_argument("energy: p must be >= 2");
    const PLOneForm du = differential(mesh, u);
    double sum = 0.0;
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        const double s = covector_norm_sq(mesh.triangles[t].metric, du.covectors[t]) + delta * delta;
        sum += std::pow(s, 0.5 * p) * mesh.area[t];
    }
    return sum;
}

// Exact gradient of the discrete energy with respect to vertex values
// (periods held fixed). Zero at discrete p-harmonic points.
inline std::vector<double> gradient(const SurfaceMesh& mesh, const EquivariantField& u, double p,
                                    double delta) {
    if (p < 2.0) throw std::invalid_argument("gradient: p must be >= 2");
    const PLOneForm du = differential(mesh, u);
    std::vector<double> grad(mesh.vertices.size(), 0.0);
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        const Sym2 ginv = mesh.triangles[t].metric.inverse();
        const Vec2 raised = ginv.apply(du.covectors[t]);
        const double s = raised.dot(du.covectors[t]) + delta * delta;
        const double w = p * std::pow(s, 0.5 * p - 1.0) * mesh.area[t];
        for (int c = 0; c < 3; ++c)
            grad[mesh.triangles[t].v[c]] += w * raised.dot(mesh.basis_grad[t][c]);
    }
    return grad;
}

inline double sup_norm(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

// k_p from the normalization sum |k_p du_p|^p = k_p: closed form J_p^{-1/(p-1)}.
inline double normalization_kp(const SolveReport& report) {
    if (!(report.energy > 0.0)) return std::numeric_limits<double>::quiet_NaN();
    return std::pow(report.energy, -1.0 / (report.p - 1.0));
}

inline double max_gradient_norm(const SurfaceMesh& mesh, const PLOneForm& du) {
    double m = 0.0;
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t)
        m = std::max(m, form_norm(mesh, du, t));
    return m;
}

namespace detail {

// One Newton solve at fixed p. Pins vertex 0; damps with mu*I when the
// factorization fails or the direction is not a descent direction.
inline SolveReport newton_solve(const SurfaceMesh& mesh, EquivariantField& u, double p, double delta,
                                const SolverConfig& cfg) {
    const std::size_t nv = mesh.vertices.size();
    const std::size_t nfree = nv - 1;  // vertex 0 pinned
    const double tol = cfg.grad_tol * p * mesh.total_area();

    SolveReport rep;
    rep.p = p;
    rep.delta = delta;

    double E = energy(mesh, u, p, delta);
    std::vector<double> grad = gradient(mesh, u, p, delta);
    double gnorm = sup_norm(grad);

    Eigen::SparseMatrix<double> H(static_cast<long>(nfree), static_cast<long>(nfree));
    std::vector<Eigen::Triplet<double>> trips;

    int iter = 0;
    for (; iter < cfg.max_iters && gnorm > tol; ++iter) {
        // Assemble the Hessian on the free vertices.
        trips.clear();
        const PLOneForm du = differential(mesh, u);
        for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
            const Sym2 ginv = mesh.triangles[t].metric.inverse();
            const Vec2 raised = ginv.apply(du.covectors[t]);
            const double s = raised.dot(du.covectors[t]) + delta * delta;
            const double w1 = p * std::pow(s, 0.5 * p - 1.0) * mesh.area[t];
            const double w2 = p * (p - 2.0) * (s > 0.0 ? std::pow(s, 0.5 * p - 2.0) : 0.0) * mesh.area[t];
            std::array<double, 3> proj{};
            for (int c = 0; c < 3; ++c) proj[c] = raised.dot(mesh.basis_grad[t][c]);
            for (int c = 0; c < 3; ++c) {
                const int vc = mesh.triangles[t].v[c];
                if (vc == 0) continue;
                for (int d = 0; d < 3; ++d) {
                    const int vd = mesh.triangles[t].v[d];
                    if (vd == 0) continue;
                    const double hcd =
                        w1 * ginv.apply(mesh.basis_grad[t][c]).dot(mesh.basis_grad[t][d]) +
                        w2 * proj[c] * proj[d];
                    trips.emplace_back(vc - 1, vd - 1, hcd);
                }
            }
        }
        H.setFromTriplets(trips.begin(), trips.end());

        Eigen::VectorXd g(nfree);
        for (std::size_t v = 1; v < nv; ++v) g[static_cast<long>(v - 1)] = grad[v];

        // Factor, damping if needed.
        Eigen::VectorXd dir;
        double mu = 0.0;
        bool have_dir = false;
        for (int attempt = 0; attempt < 12 && !have_dir; ++attempt) {
            Eigen::SparseMatrix<double> Hd = H;
            if (mu > 0.0) {
                for (long i = 0; i < Hd.rows(); ++i) Hd.coeffRef(i, i) += mu;
            }
            Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(Hd);
            if (ldlt.info() == Eigen::Success) {
                dir = -ldlt.solve(g);
                if (ldlt.info() == Eigen::Success && dir.allFinite() && g.dot(dir) < 0.0) {
                    have_dir = true;
                    break;
                }
            }
            const double scale = std::max(1e-300, std::abs(H.coeff(0, 0)));
            mu = mu == 0.0 ? 1e-10 * scale : mu * 100.0;
        }
        if (!have_dir)
            throw SolverStall("p-solve stalled at p=" + std::to_string(p) +
                              ": no descent direction after damping (grad_norm=" +
                              std::to_string(gnorm) + ")");

        // Backtracking line search (Armijo). The epsilon-level slack keeps
        // full Newton steps acceptable once the energy decrease drops below
        // floating-point resolution; without it the step collapses and the
        // gradient stalls just above tolerance.
        const double slope = g.dot(dir);
        const double eps_slack = 8.0 * std::numeric_limits<double>::epsilon() * std::abs(E);
        double step = 1.0;
        EquivariantField trial = u;
        bool accepted = false;
        for (int bt = 0; bt <= cfg.ls_max_backtracks; ++bt) {
            for (std::size_t v = 1; v < nv; ++v)
                trial.values[v] = u.values[v] + step * dir[static_cast<long>(v - 1)];
            const double Et = energy(mesh, trial, p, delta);
            if (Et <= E + cfg.ls_c1 * step * slope + eps_slack) {
                accepted = true;
                break;
            }
            step *= cfg.ls_shrink;
        }
        if (!accepted)
            throw SolverStall("p-solve stalled at p=" + std::to_string(p) +
                              ": line search failed after " + std::to_string(cfg.ls_max_backtracks) +
                              " backtracks (energy=" + std::to_string(E) + ", grad_norm=" +
                              std::to_string(gnorm) + ")");

        u = trial;
        E = energy(mesh, u, p, delta);
        grad = gradient(mesh, u, p, delta);
        gnorm = sup_norm(grad);
        if (cfg.record_trace) rep.trace.push_back({iter + 1, E, gnorm, step});
    }

    rep.iterations = iter;
    rep.converged = gnorm <= tol;
    rep.stalled = !rep.converged;
    rep.grad_norm = gnorm;
    rep.energy_regularized = E;
    rep.energy = energy(mesh, u, p, 0.0);
    const PLOneForm du = differential(mesh, u);
    rep.max_du = max_gradient_norm(mesh, du);
    rep.lp_mean = rep.energy > 0.0 ? std::pow(rep.energy / mesh.total_area(), 1.0 / p) : 0.0;
    rep.k_p = normalization_kp(rep);
    return rep;
}

} // namespace detail

struct MinimizeResult {
    EquivariantField field;  // minimizer at the last scheduled p
    std::vector<SolveReport> reports;
    std::vector<EquivariantField> fields;  // minimizer per scheduled p
};

// Minimize J_p along the continuation schedule; each solution warm-starts the
// next exponent.
inline MinimizeResult minimize(const SurfaceMesh& mesh, const Homomorphism& rho,
                               const SolverConfig& config,
                               std::optional<EquivariantField> warm_start = std::nullopt) {
    config.validate();
    if (rho.periods.size() != mesh.deck_translations.size())
        throw std::invalid_argument("minimize: period count does not match homology basis");
    for (double r : rho.periods)
        if (!std::isfinite(r)) throw std::invalid_argument("minimize: non-finite period");

    const double delta = config.resolved_delta(mesh);

    EquivariantField u;
    if (warm_start) {
        u = *warm_start;
        u.rho = rho;
        validate_field(mesh, u);
    } else {
        u.values.assign(mesh.vertices.size(), 0.0);
        u.rho = rho;
        // Quadratic presolve seeds the continuation when no warm start given.
        if (config.p_schedule.front() > 2.0) {
            SolverConfig pre = config;
            pre.record_trace = false;
            detail::newton_solve(mesh, u, 2.0, delta, pre);
        }
    }

    MinimizeResult result;
    for (double p : config.p_schedule) {
        SolveReport rep = detail::newton_solve(mesh, u, p, delta, config);
        result.reports.push_back(std::move(rep));
        result.fields.push_back(u);
    }
    result.field = u;
    return result;
}

} // namespace laminate
