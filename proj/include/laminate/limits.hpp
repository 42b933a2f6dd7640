// limits.hpp -- extraction of the p -> infinity / q -> 1 limit objects:
// best Lipschitz constant, the topological ratio invariant K, the maximum
// stretch set, and least-gradient perturbation checks.
#pragma once

#include "laminate/duality.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <vector>

namespace laminate {

struct LEstimate {
    double L_hat = 0.0;        // max |du_p| at the largest scheduled p
    double from_lp_mean = 0.0; // (J_p / area)^{1/p} at the largest p
    double from_inv_kp = 0.0;  // 1 / k_p at the largest p
    double spread = 0.0;       // relative spread of the three estimates
    bool trace_monotone = true;  // false flags an unconverged family
};

inline LEstimate estimate_L(const std::vector<SolveReport>& reports) {
    if (reports.size() < 2) throw std::invalid_argument("estimate_L: need at least two reports");
    for (std::size_t i = 1; i < reports.size(); ++i)
        if (!(reports[i].p > reports[i - 1].p))
            throw std::invalid_argument("estimate_L: reports must have increasing p");
    LEstimate est;
    const SolveReport& last = reports.back();
    est.L_hat = last.max_du;
    est.from_lp_mean = last.lp_mean;
    est.from_inv_kp = std::isnan(last.k_p) ? 0.0 : 1.0 / last.k_p;
    const double lo = std::min({est.L_hat, est.from_lp_mean, est.from_inv_kp});
    const double hi = std::max({est.L_hat, est.from_lp_mean, est.from_inv_kp});
    est.spread = hi > 0.0 ? (hi - lo) / hi : 0.0;
    for (std::size_t i = 1; i < reports.size(); ++i) {
        if (reports[i].max_du > reports[i - 1].max_du * 1.05) est.trace_monotone = false;
        if (reports[i].lp_mean < reports[i - 1].lp_mean - 1e-10) est.trace_monotone = false;
    }
    return est;
}

struct KResult {
    double K = 0.0;
    std::array<int, 2> argmax_class{0, 0};  // primitive representative
};

// Brute-force sup over integer classes of |m rho_1 + n rho_2| / |m e1 + n e2|
// on a flat torus; the geodesic length of class (m, n) is the lattice norm.
inline KResult compute_K(const Vec2& e1, const Vec2& e2, const Homomorphism& rho, int search_radius) {
    if (search_radius < 1) throw std::invalid_argument("compute_K: search radius must be >= 1");
    if (rho.periods.size() != 2) throw std::invalid_argument("compute_K: torus case needs two periods");
    KResult best;
    for (int m = -search_radius; m <= search_radius; ++m) {
        for (int n = -search_radius; n <= search_radius; ++n) {
            if (m == 0 && n == 0) continue;
            const double num = std::abs(m * rho.periods[0] + n * rho.periods[1]);
            const double len = (static_cast<double>(m) * e1 + static_cast<double>(n) * e2).norm();
            const double value = num / len;
            if (value > best.K) {
                best.K = value;
                const int g = std::gcd(std::abs(m), std::abs(n));
                int pm = m / g, pn = n / g;
                if (pm < 0 || (pm == 0 && pn < 0)) { pm = -pm; pn = -pn; }
                best.argmax_class = {pm, pn};
            }
        }
    }
    return best;
}

// Annulus case has a single free homotopy class; its geodesic representative
// is the inner boundary circle of length 2*pi*r0.
inline double annulus_K(double rho_theta, double r0) {
    return std::abs(rho_theta) / (2.0 * std::numbers::pi * r0);
}

struct StretchComponent {
    std::vector<int> triangles;
    double straightness_deviation = 0.0;  // max TLS-line deviation of barycenters
    double deviation_in_h = 0.0;          // same, in units of the local mesh size
    Vec2 direction{};                     // fitted line direction (chart)
};

struct StretchSet {
    double eps = 0.0;
    double threshold = 0.0;      // (1 - eps) * L_hat
    double max_ratio = 0.0;      // max |du| / L_hat over all triangles
    std::vector<int> triangles;  // members, ascending
    std::vector<StretchComponent> components;
};

namespace detail {

// Straightness scoring of component barycenters: total least squares line
// through the unrolled positions, max orthogonal deviation reported.
inline std::vector<StretchComponent> label_components(const SurfaceMesh& mesh,
                                                      const std::vector<int>& members) {
    const TriangleComponents split = split_components(mesh, members);
    std::vector<StretchComponent> components;
    for (const auto& tri_ids : split.members) {
        StretchComponent comp;
        comp.triangles = tri_ids;
        std::vector<Vec2> pts;
        for (int t : tri_ids) {
            Vec2 pos = mesh.centroid[t];
            for (int k = 0; k < mesh.generator_count(); ++k)
                pos += split.unroll[t][k] * mesh.deck_translations[k];
            pts.push_back(pos);
        }
        Vec2 mean{};
        for (const Vec2& p : pts) mean += p;
        mean = mean / static_cast<double>(pts.size());
        double sxx = 0.0, sxy = 0.0, syy = 0.0;
        for (const Vec2& p : pts) {
            const Vec2 d = p - mean;
            sxx += d.x * d.x;
            sxy += d.x * d.y;
            syy += d.y * d.y;
        }
        const Sym2 cov{sxx, sxy, syy};
        // Principal axis (largest eigenvalue).
        Vec2 dir{1.0, 0.0};
        const double lam = cov.eigenvalues()[1];
        if (std::abs(cov.b) > 1e-30)
            dir = Vec2{lam - cov.c, cov.b};
        else if (cov.c > cov.a)
            dir = Vec2{0.0, 1.0};
        const double dn = dir.norm();
        if (dn > 0.0) dir = dir / dn;
        comp.direction = dir;
        double worst = 0.0;
        for (const Vec2& p : pts) worst = std::max(worst, std::abs(cross(dir, p - mean)));
        comp.straightness_deviation = worst;
        double area_sum = 0.0;
        for (int t : comp.triangles) area_sum += mesh.param_area[t];
        const double h = std::sqrt(2.0 * area_sum / static_cast<double>(comp.triangles.size()));
        comp.deviation_in_h = h > 0.0 ? worst / h : 0.0;
        components.push_back(std::move(comp));
    }
    return components;
}

} // namespace detail

// Triangles with |du| >= (1 - eps) L_hat, with connected components and a
// straightness score per component (scored, not asserted: PL solutions carry
// O(h) wobble).
inline StretchSet stretch_set(const SurfaceMesh& mesh, const EquivariantField& u_final, double L_hat,
                              double eps) {
    if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument("stretch_set: eps must be in (0,1)");
    if (!(L_hat > 0.0)) throw std::invalid_argument("stretch_set: L_hat must be positive");
    const PLOneForm du = differential(mesh, u_final);
    StretchSet set;
    set.eps = eps;
    set.threshold = (1.0 - eps) * L_hat;
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        const double mag = form_norm(mesh, du, t);
        set.max_ratio = std::max(set.max_ratio, mag / L_hat);
        if (mag >= set.threshold) set.triangles.push_back(static_cast<int>(t));
    }
    set.components = detail::label_components(mesh, set.triangles);
    return set;
}

struct LeastGradientTrialResult {
    int trials = 0;
    int violations = 0;
    double worst_margin = 0.0;   // most negative observed F(t) - F(0)
    double mass = 0.0;           // sum |dv| area of the tested field
    double tol = 0.0;
    std::vector<double> offending_phi;  // first violating perturbation, if any
};

// Convexity probe of the least-gradient property: for seeded random mean-zero
// PL perturbations phi of unit BV norm, checks
//   sum |dv + t dphi| area >= sum |dv| area - tol for t in {+-1, +-0.1}.
// Trials run in parallel (capped by LAMINATE_THREADS) with per-trial
// generators and per-trial result slots, so the outcome is independent of the
// thread count.
inline LeastGradientTrialResult least_gradient_test(const SurfaceMesh& mesh, const DualField& v,
                                                    int trials, std::uint64_t seed,
                                                    double tol = 1e-8) {
    if (trials < 1) throw std::invalid_argument("least_gradient_test: trials must be >= 1");
    const PLOneForm dv = differential(mesh, v.v);
    LeastGradientTrialResult result;
    result.trials = trials;
    result.tol = tol;
    double base = 0.0;
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t)
        base += form_norm(mesh, dv, t) * mesh.area[t];
    result.mass = base;

    std::vector<double> trial_margin(trials, 0.0);
    std::vector<std::vector<double>> trial_offender(trials);
    auto run_trial = [&](int trial) {
        Rng rng(seed + 0x9e3779b97f4a7c15ull * static_cast<std::uint64_t>(trial + 1));
        EquivariantField phi;
        phi.values.resize(mesh.vertices.size());
        for (double& x : phi.values) x = uniform(rng, -1.0, 1.0);
        phi.rho.periods.assign(mesh.deck_translations.size(), 0.0);
        const double mean = field_mean(mesh, phi);
        for (double& x : phi.values) x -= mean;
        PLOneForm dphi = differential(mesh, phi);
        double bv = 0.0;
        for (std::size_t t = 0; t < mesh.triangles.size(); ++t)
            bv += form_norm(mesh, dphi, t) * mesh.area[t];
        if (bv > 0.0)
            for (Vec2& w : dphi.covectors) w = w / bv;

        double worst = 0.0;
        for (double t : {1.0, -1.0, 0.1, -0.1}) {
            double perturbed = 0.0;
            for (std::size_t k = 0; k < mesh.triangles.size(); ++k) {
                const Vec2 w = dv.covectors[k] + t * dphi.covectors[k];
                perturbed += covector_norm(mesh.triangles[k].metric, w) * mesh.area[k];
            }
            const double margin = perturbed - base;
            if (margin < worst) worst = margin;
            if (margin < -tol && trial_offender[trial].empty())
                for (double x : phi.values)
                    trial_offender[trial].push_back(t * x / std::max(bv, 1e-300));
        }
        trial_margin[trial] = worst;
    };

    const unsigned workers =
        std::min<unsigned>(thread_count(), static_cast<unsigned>(trials));
    if (workers <= 1) {
        for (int trial = 0; trial < trials; ++trial) run_trial(trial);
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < workers; ++w)
            pool.emplace_back([&, w] {
                for (int trial = static_cast<int>(w); trial < trials;
                     trial += static_cast<int>(workers))
                    run_trial(trial);
            });
        for (std::thread& th : pool) th.join();
    }

    for (int trial = 0; trial < trials; ++trial) {
        if (trial_margin[trial] < -tol) {
            ++result.violations;
            if (result.offending_phi.empty()) result.offending_phi = trial_offender[trial];
        }
        result.worst_margin = std::min(result.worst_margin, trial_margin[trial]);
    }
    return result;
}

struct LimitReport {
    LEstimate estimate;
    double L_hat = 0.0;
    double K_hat = 0.0;
    std::array<int, 2> argmax_class{0, 0};
    std::vector<double> p_trace, max_du_trace, lp_mean_trace, inv_kp_trace, mass_trace;
    StretchSet stretch;                      // at the default eps = 0.1
    std::vector<std::pair<double, std::size_t>> eps_sweep;  // (eps, member count)
};

// Assembles the limit report from per-p solves and dual masses. K_hat comes
// from brute force on tori and from the single-class formula on annuli.
inline LimitReport build_limit_report(const SurfaceMesh& mesh, const std::vector<SolveReport>& reports,
                                      const std::vector<double>& mass_trace,
                                      const EquivariantField& u_final, int search_radius = 50) {
    LimitReport rep;
    rep.estimate = estimate_L(reports);
    rep.L_hat = rep.estimate.L_hat;
    for (const SolveReport& r : reports) {
        rep.p_trace.push_back(r.p);
        rep.max_du_trace.push_back(r.max_du);
        rep.lp_mean_trace.push_back(r.lp_mean);
        rep.inv_kp_trace.push_back(std::isnan(r.k_p) ? 0.0 : 1.0 / r.k_p);
    }
    rep.mass_trace = mass_trace;
    if (mesh.kind == MeshKind::torus) {
        const KResult k = compute_K(mesh.deck_translations[0], mesh.deck_translations[1],
                                    u_final.rho, search_radius);
        rep.K_hat = k.K;
        rep.argmax_class = k.argmax_class;
    } else if (mesh.kind == MeshKind::annulus) {
        double r0 = std::numeric_limits<double>::infinity();
        for (const Vec2& v : mesh.vertices) r0 = std::min(r0, v.y);
        rep.K_hat = annulus_K(u_final.rho.periods[0], r0);
    }
    rep.stretch = stretch_set(mesh, u_final, rep.L_hat, 0.1);
    for (double eps : {0.05, 0.1, 0.2})
        rep.eps_sweep.push_back({eps, stretch_set(mesh, u_final, rep.L_hat, eps).triangles.size()});
    return rep;
}

} // namespace laminate
