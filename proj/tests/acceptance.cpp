// Acceptance suite: every criterion below runs against analytic oracles or
// property checks at desk scale and prints one pass/fail line. The binary
// exits nonzero if any criterion fails.
#include "laminate/experiment.hpp"

#include <cstdio>
#include <filesystem>
#include <numbers>

using namespace laminate;
namespace fs = std::filesystem;

namespace {

struct Harness {
    int failures = 0;

    void check(const std::string& id, const std::string& title, bool pass,
               const std::string& detail) {
        std::printf("%-6s %-30s %s  %s\n", id.c_str(), title.c_str(), pass ? "PASS" : "FAIL",
                    detail.c_str());
        std::fflush(stdout);
        if (!pass) ++failures;
    }
};

std::string fmt(double x) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.6g", x);
    return buf;
}

double annulus_J(double p) {
    return 2.0 * std::numbers::pi * (1.0 - std::pow(2.0, 2.0 - p)) / (p - 2.0);
}

ExperimentConfig annulus_config(const std::string& dir, std::uint64_t seed) {
    json j{{"schema_version", 1},
           {"domain", {{"type", "annulus"}, {"r0", 1.0}, {"r1", 2.0}, {"n_theta", 64}, {"n_r", 32}}},
           {"rho", {2.0 * std::numbers::pi}},
           {"solver", {{"p_schedule", {2, 4, 8, 16, 32, 64}}}},
           {"regions", {1.25}},
           {"transversal_trials", 200},
           {"output_dir", dir},
           {"seed", seed}};
    return parse_config(j);
}

MinimizeResult solve_mesh(const SurfaceMesh& mesh, std::vector<double> rho,
                          std::vector<double> schedule) {
    SolverConfig cfg;
    cfg.p_schedule = std::move(schedule);
    return minimize(mesh, Homomorphism{std::move(rho)}, cfg);
}

} // namespace

int main() {
    Harness h;
    const fs::path work = fs::temp_directory_path() / "laminate_acceptance";
    fs::remove_all(work);

    // Shared solves ------------------------------------------------------------
    const ExperimentConfig acfg = annulus_config((work / "annulus").string(), 2024);
    const RunResult annulus = run(acfg);
    const SurfaceMesh amesh = build_domain(acfg);
    const MinimizeResult asolve = solve_mesh(amesh, {2.0 * std::numbers::pi}, {2, 4, 8, 16, 32, 64});

    const SurfaceMesh tmesh = build_torus({1, 0}, {0, 1}, 16);
    const MinimizeResult torus = solve_mesh(tmesh, {1.0, 0.0}, {2, 4, 8, 16, 32, 64});

    // AC-1: annulus exactness ----------------------------------------------------
    {
        bool ok = true;
        double worst_j = 0.0, worst_du = 0.0;
        for (std::size_t i = 0; i < asolve.reports.size(); ++i) {
            const SolveReport& rep = asolve.reports[i];
            if (rep.p < 8.0) continue;
            const double rel = std::abs(rep.energy - annulus_J(rep.p)) / annulus_J(rep.p);
            worst_j = std::max(worst_j, rel);
            const PLOneForm du = differential(amesh, asolve.fields[i]);
            for (std::size_t t = 0; t < amesh.triangles.size(); ++t) {
                const double target = 1.0 / std::sqrt(amesh.triangles[t].metric.a);
                worst_du =
                    std::max(worst_du, std::abs(form_norm(amesh, du, t) - target) / target);
            }
        }
        if (worst_j > 0.01 || worst_du > 0.02) ok = false;
        h.check("AC-1", "annulus exactness", ok,
                "max J_p err " + fmt(worst_j) + ", max |du| err " + fmt(worst_du));
    }

    // AC-2: k_p law and limit ------------------------------------------------------
    {
        bool law_ok = true;
        for (const auto& reports : {std::cref(asolve.reports), std::cref(torus.reports)})
            for (const SolveReport& rep : reports.get())
                if (std::abs(rep.k_p - std::pow(rep.energy, -1.0 / (rep.p - 1.0))) > 1e-12 * rep.k_p)
                    law_ok = false;
        const double ka = asolve.reports.back().k_p, kt = torus.reports.back().k_p;
        // L = 1 analytically for both cases (1/r0 and |B^{-T} rho|).
        const bool limit_ok = std::abs(ka - 1.0) <= 0.05 && std::abs(kt - 1.0) <= 0.05;
        h.check("AC-2", "k_p law and limit", law_ok && limit_ok,
                "k_64(annulus)=" + fmt(ka) + " k_64(torus)=" + fmt(kt));
    }

    // AC-3: duality pairing ----------------------------------------------------------
    {
        double worst_pair = 0.0, worst_conj = 0.0;
        for (const auto& [mesh_ref, solved] :
             {std::pair<const SurfaceMesh*, const MinimizeResult*>(&amesh, &asolve),
              std::pair<const SurfaceMesh*, const MinimizeResult*>(&tmesh, &torus)}) {
            for (std::size_t i = 0; i < solved->reports.size(); ++i) {
                const SolveReport& rep = solved->reports[i];
                const PLOneForm du = differential(*mesh_ref, solved->fields[i]);
                const PLOneForm V = dual_form(*mesh_ref, solved->fields[i], rep.p, rep.k_p);
                worst_pair = std::max(worst_pair, std::abs(pairing(*mesh_ref, du, V) - 1.0));
                worst_conj = std::max(
                    worst_conj, conjugacy_error(*mesh_ref, solved->fields[i], rep.p, rep.k_p, V));
            }
        }
        h.check("AC-3", "duality pairing", worst_pair <= 1e-3 && worst_conj <= 1e-10,
                "max |pairing-1| " + fmt(worst_pair) + ", max conjugacy err " + fmt(worst_conj));
    }

    // AC-4: mass and least gradient ------------------------------------------------
    {
        const double mass_a = annulus.duals.back().mass;
        const DualField dual_t = make_dual(tmesh, torus.field, 64.0, torus.reports.back().k_p);
        const bool mass_ok = std::abs(mass_a - 1.0) <= 0.05 && std::abs(dual_t.mass - 1.0) <= 0.05;

        const LeastGradientTrialResult lg_t = least_gradient_test(tmesh, dual_t, 100, 99);
        const SurfaceMesh smesh = build_torus({1, 0}, {0.5, 1}, 12);
        const MinimizeResult ssolve = solve_mesh(smesh, {1.0, 0.0}, {2, 8, 32, 64});
        const DualField dual_s = make_dual(smesh, ssolve.field, 64.0, ssolve.reports.back().k_p);
        const LeastGradientTrialResult lg_s = least_gradient_test(smesh, dual_s, 100, 100);
        const bool lg_ok = lg_t.violations == 0 && lg_s.violations == 0 &&
                           lg_t.worst_margin > -1e-8 && lg_s.worst_margin > -1e-8;
        h.check("AC-4", "mass and least gradient", mass_ok && lg_ok,
                "mass(annulus)=" + fmt(mass_a) + " mass(torus)=" + fmt(dual_t.mass) +
                    ", violations=" + std::to_string(lg_t.violations + lg_s.violations));
    }

    // AC-5: concentration ------------------------------------------------------------
    {
        std::vector<double> fractions;
        for (std::size_t i = 0; i < asolve.reports.size(); ++i) {
            const SolveReport& rep = asolve.reports[i];
            if (rep.p < 16.0) continue;
            const PLOneForm V = dual_form(amesh, asolve.fields[i], rep.p, rep.k_p);
            const std::vector<Region> regions = {annulus_region_outside(amesh, 1.25, "r>1.25")};
            const ConcentrationDiagnostics diag = concentration_diagnostics(
                amesh, asolve.fields[i], rep.p, rep.k_p, V, asolve.field, regions);
            fractions.push_back(diag.regions[0].fraction);
        }
        bool ok = fractions.size() == 3 && fractions.back() < 0.05;
        for (std::size_t i = 1; i < fractions.size(); ++i)
            if (!(fractions[i] < fractions[i - 1] + 1e-15)) ok = false;
        std::string detail = "fractions";
        for (double f : fractions) detail += " " + fmt(f);
        h.check("AC-5", "concentration", ok, detail);
    }

    // AC-6: K = L on sheared tori ------------------------------------------------------
    {
        bool ok = true;
        std::string detail;
        Rng rng(7777);
        for (int trial = 0; trial < 3; ++trial) {
            const Vec2 e1{1.0, 0.0};
            const Vec2 e2{uniform(rng, 0.2, 0.8), uniform(rng, 0.9, 1.3)};
            const double rho1 = std::round(uniform(rng, 1.0, 3.0));
            const double rho2 = std::round(uniform(rng, -2.0, 2.0));
            const SurfaceMesh mesh = build_torus(e1, e2, 12);
            const MinimizeResult solved = solve_mesh(mesh, {rho1, rho2}, {2, 8, 32, 64});
            const double L_hat = estimate_L(solved.reports).L_hat;
            const KResult K = compute_K(e1, e2, Homomorphism{{rho1, rho2}}, 50);
            if (std::abs(K.K - L_hat) / L_hat > 0.02) ok = false;
            if (K.K > L_hat + 1e-8) ok = false;
            detail += " [K=" + fmt(K.K) + " L=" + fmt(L_hat) + "]";
        }
        h.check("AC-6", "K equals L (sheared tori)", ok, detail);
    }

    // AC-7: maximum estimate --------------------------------------------------------
    {
        bool ok = true;
        std::string detail;
        for (const auto& reports : {std::cref(asolve.reports), std::cref(torus.reports)}) {
            const auto& reps = reports.get();
            const double L_analytic = 1.0;
            const double final_max = reps.back().max_du;
            if (std::abs(final_max - L_analytic) / L_analytic > 0.05) ok = false;
            const std::size_t n = reps.size();
            for (std::size_t i = n - 3; i + 1 < n; ++i) {
                if (reps[i + 1].max_du > reps[i].max_du + 1e-9) ok = false;
                if (std::abs(reps[i + 1].max_du - L_analytic) >
                    std::abs(reps[i].max_du - L_analytic) + 1e-9)
                    ok = false;
            }
            detail += " " + fmt(final_max);
        }
        h.check("AC-7", "maximum estimate", ok, "max_du(64):" + detail);
    }

    // AC-8: cone profiles -------------------------------------------------------------
    {
        bool ok = true;
        std::string detail;
        for (int n : {2, 3}) {
            double prev_sup = std::numeric_limits<double>::infinity();
            for (double p : {8.0, 32.0, 128.0}) {
                const ConeProfile prof = cone_profile(n, p, 2.0, 100);
                try {
                    check_cone_profile(prof);  // sandwich holds at every node
                } catch (const InvariantViolation&) {
                    ok = false;
                }
                if (cone_radial_residual(prof) > 1e-8) ok = false;
                double sup = 0.0;
                for (std::size_t k = 0; k < prof.grid.size(); ++k)
                    sup = std::max(sup, std::abs(prof.values[k] - prof.grid[k]));
                if (!(sup < prev_sup)) ok = false;
                prev_sup = sup;
            }
            const ConeProfile tall = cone_profile(n, 512.0, 1.0, 50);
            const double err = std::abs(tall.values.back() - 1.0);
            if (err > 1e-2) ok = false;
            detail += " |f_512(1)-1|=" + fmt(err);
        }
        h.check("AC-8", "cone profiles", ok, detail);
    }

    // AC-9: cocycle axioms ---------------------------------------------------------------
    {
        bool ok = true;
        int checked = 0;

        // Annulus run chart: stretch band plus a single outer plaque.
        const DualField& dual = annulus.duals.back();
        const double range = *std::max_element(dual.v.values.begin(), dual.v.values.end()) -
                             *std::min_element(dual.v.values.begin(), dual.v.values.end());
        const double plaque_tol = 0.15 * range;
        const PlaqueDecomposition adec =
            plaques(amesh, annulus.limits.stretch.triangles, dual.v, plaque_tol);
        const FlowBoxChart achart = annulus_flow_box(amesh, annulus.limits.stretch.triangles, adec);
        const double band_hi = achart.bands.front().hi;

        // Staircase chart on a torus for nonzero cocycle content.
        const SurfaceMesh lam_mesh = build_torus({1, 0}, {0, 1}, 16);
        MeasuredLamination lam;
        lam.leaf_class = {0, 1};
        lam.orientation = -1;
        lam.offsets = {0.15, 0.45, 0.8};
        lam.weights = {0.2, 0.3, 0.5};
        const RSPrimitive rs = rs_primitive(lam_mesh, lam);

        Rng rng(909);
        for (int trial = 0; trial < 200 && ok; ++trial) {
            const bool use_annulus = trial % 2 == 0;
            const FlowBoxChart& chart = use_annulus ? achart : rs.chart;
            const double lo = use_annulus ? band_hi + 1e-6 : -2.0;
            const double hi = 2.0;
            auto random_plaque_coord = [&]() {
                for (;;) {
                    const double s = uniform(rng, lo, hi);
                    if (!chart.locate(s).in_band) return s;
                }
            };
            std::vector<double> waypoints;
            const int n_pts = 2 + static_cast<int>(uniform(rng, 0.0, 4.0));
            for (int k = 0; k < n_pts; ++k) waypoints.push_back(random_plaque_coord());
            const Vec2 tangent = rot90(chart.normal) * -1.0;
            TransversalPath path;
            double drift = 0.0;
            for (double s : waypoints) {
                drift += uniform(rng, -0.3, 0.3);
                path.points.push_back(s * chart.normal + drift * tangent);
            }
            const double nu = cocycle(chart, path);

            // Non-negativity for measures, with the plaque-tolerance slack on
            // solver-produced fields.
            const double slack = use_annulus ? 3.0 * plaque_tol : 3e-12;
            if (nu < -slack) ok = false;

            // Reversal invariance (bit-exact).
            TransversalPath reversed = path;
            std::reverse(reversed.points.begin(), reversed.points.end());
            if (cocycle(chart, reversed) != nu) ok = false;

            // Additivity under splitting.
            if (path.points.size() > 2) {
                const std::size_t cut =
                    1 + static_cast<std::size_t>(uniform(rng, 0.0, static_cast<double>(n_pts - 2)));
                TransversalPath first, second;
                first.points.assign(path.points.begin(), path.points.begin() + cut + 1);
                second.points.assign(path.points.begin() + cut, path.points.end());
                if (std::abs(cocycle(chart, first) + cocycle(chart, second) - nu) > 1e-13)
                    ok = false;
            }

            // Homotopy invariance: same waypoints, different wandering.
            TransversalPath homotopic;
            drift = 0.0;
            for (double s : waypoints) {
                drift += uniform(rng, -0.3, 0.3);
                homotopic.points.push_back(s * chart.normal + drift * tangent);
            }
            if (cocycle(chart, homotopic) != nu) ok = false;
            ++checked;
        }
        h.check("AC-9", "cocycle axioms", ok, std::to_string(checked) + " transversals");
    }

    // AC-10: Ruelle-Sullivan round trip -----------------------------------------------
    {
        double worst_closed = 0.0, worst_trip = 0.0;
        Rng rng(1234);
        const SurfaceMesh mesh = build_torus({1, 0}, {0, 1}, 16);
        const std::array<std::array<int, 2>, 5> classes{{{0, 1}, {1, 0}, {1, 1}, {1, -1}, {2, 1}}};
        for (int trial = 0; trial < 10; ++trial) {
            MeasuredLamination lam;
            lam.leaf_class = classes[trial % classes.size()];
            lam.orientation = trial % 2 == 0 ? 1 : -1;
            const LeafFrame frame = leaf_frame(mesh, lam);
            const int leaves = 1 + static_cast<int>(uniform(rng, 0.0, 3.0));
            std::vector<double> offsets;
            for (int i = 0; i < leaves; ++i)
                offsets.push_back(uniform(rng, 0.0, frame.spacing * 0.999));
            std::sort(offsets.begin(), offsets.end());
            lam.offsets = offsets;
            for (int i = 0; i < leaves; ++i) lam.weights.push_back(uniform(rng, 0.1, 2.0));

            EquivariantField f;
            f.values.resize(mesh.vertices.size());
            for (double& v : f.values) v = uniform(rng, -1.0, 1.0);
            f.rho.periods = {0.0, 0.0};
            worst_closed = std::max(
                worst_closed, std::abs(ruelle_sullivan(mesh, lam, differential(mesh, f))));

            const RSPrimitive rs = rs_primitive(mesh, lam);
            worst_trip = std::max(worst_trip, rs.max_mismatch);
        }
        h.check("AC-10", "Ruelle-Sullivan round trip", worst_closed <= 1e-10 && worst_trip <= 1e-8,
                "closedness " + fmt(worst_closed) + ", round trip " + fmt(worst_trip));
    }

    // AC-11: BV decomposition --------------------------------------------------------
    {
        std::vector<double> s, g;
        for (int k = 0; k <= 1000; ++k) {
            s.push_back(k / 1000.0);
            g.push_back(k / 1000.0 < 0.5 ? 0.0 : 1.0);
        }
        const BVTrace step = bv_decompose(s, g, 0.1);
        const bool step_ok = step.atoms.size() == 1 && std::abs(step.atom_mass - 1.0) <= 1e-12;

        auto devil = [](double x, int depth) {
            double value = 0.0, scale = 0.5;
            for (int d = 0; d < depth; ++d) {
                if (x < 1.0 / 3.0) {
                    x *= 3.0;
                } else if (x > 2.0 / 3.0) {
                    value += scale;
                    x = 3.0 * x - 2.0;
                } else {
                    return value + scale;
                }
                scale *= 0.5;
            }
            return value + 2.0 * scale * x;
        };
        const int N = 59049;
        std::vector<double> sc, gc;
        for (int k = 0; k <= N; ++k) {
            sc.push_back(static_cast<double>(k) / N);
            gc.push_back(devil(static_cast<double>(k) / N, 10));
        }
        const BVTrace cantor = bv_decompose(sc, gc, 0.01);
        const bool cantor_ok =
            cantor.cantor_mass / cantor.total_variation >= 0.98 && cantor.atom_mass < 0.01;

        std::vector<double> sl, gl;
        for (int k = 0; k <= 500; ++k) {
            sl.push_back(k / 500.0);
            gl.push_back(k / 500.0);
        }
        const BVTrace lin = bv_decompose(sl, gl, 0.1);
        const bool lin_ok = lin.ac_mass / lin.total_variation >= 0.99;

        h.check("AC-11", "BV decomposition", step_ok && cantor_ok && lin_ok,
                "atom=" + fmt(step.atom_mass) + " cantor=" + fmt(cantor.cantor_mass) +
                    " ac=" + fmt(lin.ac_mass));
    }

    // AC-12: determinism ----------------------------------------------------------------
    {
        const fs::path d1 = work / "det_a", d2 = work / "det_b";
        run(annulus_config(d1.string(), 555));
        run(annulus_config(d2.string(), 555));
        bool ok = true;
        std::size_t files = 0;
        for (const auto& entry : fs::recursive_directory_iterator(d1)) {
            if (!entry.is_regular_file()) continue;
            const std::string rel = fs::relative(entry.path(), d1).string();
            const std::string b1 = detail::read_file(entry.path());
            const std::string b2 = detail::read_file(d2 / rel);
            if (rel == "manifest.json") {
                json a = json::parse(b1), b = json::parse(b2);
                a.erase("generated_at_unix");
                b.erase("generated_at_unix");
                if (a.dump() != b.dump()) ok = false;
            } else if (b1 != b2) {
                ok = false;
            }
            ++files;
        }
        h.check("AC-12", "determinism", ok, std::to_string(files) + " files compared");
    }

    std::printf("\n%d criterion(s) failed\n", h.failures);
    return h.failures == 0 ? 0 : 1;
}
