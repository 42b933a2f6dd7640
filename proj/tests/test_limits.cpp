#include <catch2/catch_amalgamated.hpp>

#include "laminate/limits.hpp"

#include <cmath>
#include <numbers>

using namespace laminate;
using Catch::Approx;

namespace {

MinimizeResult solve(const SurfaceMesh& mesh, std::vector<double> rho, std::vector<double> schedule) {
    SolverConfig cfg;
    cfg.p_schedule = std::move(schedule);
    return minimize(mesh, Homomorphism{std::move(rho)}, cfg);
}

// Dual-norm oracle: the linear competitor with the prescribed periods is
// unique (the period constraints determine its covector), and it minimizes
// the sup of |du| among equivariant fields.
Vec2 linear_competitor(const Vec2& e1, const Vec2& e2, double rho1, double rho2) {
    const double det = cross(e1, e2);
    return Vec2{(rho1 * e2.y - rho2 * e1.y) / det, (rho2 * e1.x - rho1 * e2.x) / det};
}

} // namespace

TEST_CASE("estimate_L on the unit square torus") {
    const SurfaceMesh mesh = build_torus({1, 0}, {0, 1}, 8);
    const MinimizeResult res = solve(mesh, {1.0, 0.0}, {2, 4, 8, 16, 32});
    const LEstimate est = estimate_L(res.reports);
    CHECK(est.L_hat == Approx(1.0).margin(1e-6));
    CHECK(est.trace_monotone);
    CHECK(est.from_inv_kp == Approx(1.0).margin(1e-6));
}

TEST_CASE("estimate_L matches the dual-norm oracle on a sheared torus") {
    const Vec2 e1{1, 0}, e2{0.5, 1};
    const SurfaceMesh mesh = build_torus(e1, e2, 12);
    const MinimizeResult res = solve(mesh, {1.0, 0.0}, {2, 4, 8, 16, 32});
    const double L_oracle = linear_competitor(e1, e2, 1.0, 0.0).norm();
    CHECK(estimate_L(res.reports).L_hat == Approx(L_oracle).epsilon(1e-8));
}

TEST_CASE("estimate_L on the annulus approaches 1/r0") {
    const SurfaceMesh mesh = build_annulus(1.0, 2.0, 32, 16);
    const MinimizeResult res = solve(mesh, {2.0 * std::numbers::pi}, {2, 4, 8, 16, 32});
    const LEstimate est = estimate_L(res.reports);
    CHECK(std::abs(est.L_hat - 1.0) < 0.02);
    CHECK(est.trace_monotone);
}

TEST_CASE("estimate_L input validation") {
    const SurfaceMesh mesh = build_torus({1, 0}, {0, 1}, 4);
    const MinimizeResult res = solve(mesh, {1.0, 0.0}, {2, 4});
    std::vector<SolveReport> single = {res.reports[0]};
    CHECK_THROWS_AS(estimate_L(single), std::invalid_argument);
    std::vector<SolveReport> reversed = {res.reports[1], res.reports[0]};
    CHECK_THROWS_AS(estimate_L(reversed), std::invalid_argument);
}

TEST_CASE("compute_K: orthogonal lattice, zero class, sheared oracle match") {
    const KResult unit = compute_K({1, 0}, {0, 1}, Homomorphism{{1.0, 0.0}}, 10);
    CHECK(unit.K == Approx(1.0).margin(1e-14));
    CHECK(unit.argmax_class == std::array<int, 2>{1, 0});

    CHECK(compute_K({1, 0}, {0, 1}, Homomorphism{{0.0, 0.0}}, 5).K == 0.0);

    const Vec2 e1{1, 0}, e2{0.5, 1};
    const KResult sheared = compute_K(e1, e2, Homomorphism{{1.0, 0.0}}, 50);
    const double L_oracle = linear_competitor(e1, e2, 1.0, 0.0).norm();
    CHECK(sheared.K == Approx(L_oracle).margin(1e-9));
    // The maximizing class is parallel to the competitor covector.
    CHECK(sheared.argmax_class == std::array<int, 2>{5, -2});
    // K <= L always.
    CHECK(sheared.K <= L_oracle + 1e-12);
}

TEST_CASE("stretch set: homogeneous torus is everything") {
    const SurfaceMesh mesh = build_torus({1, 0}, {0.5, 1}, 8);
    const MinimizeResult res = solve(mesh, {1.0, 0.0}, {2, 8, 32});
    const LEstimate est = estimate_L(res.reports);
    const StretchSet set = stretch_set(mesh, res.field, est.L_hat, 0.1);
    CHECK(set.triangles.size() == mesh.triangles.size());
    CHECK(set.components.size() == 1);
    CHECK(set.max_ratio == Approx(1.0).margin(1e-9));
}

TEST_CASE("stretch set: annulus band matches the analytic radius cut") {
    const SurfaceMesh mesh = build_annulus(1.0, 2.0, 32, 16);
    const MinimizeResult res = solve(mesh, {2.0 * std::numbers::pi}, {2, 4, 8, 16, 32});
    const LEstimate est = estimate_L(res.reports);
    const double eps = 0.1;
    const StretchSet set = stretch_set(mesh, res.field, est.L_hat, eps);
    REQUIRE_FALSE(set.triangles.empty());
    // Oracle: |du| = 1/r exceeds (1 - eps) L_hat iff r < 1 / ((1 - eps) L_hat).
    const double r_cut = 1.0 / ((1.0 - eps) * est.L_hat);
    std::vector<int> expected;
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t)
        if (std::sqrt(mesh.triangles[t].metric.a) < r_cut) expected.push_back(static_cast<int>(t));
    CHECK(set.triangles == expected);
    // The band is one annular component hugging the inner circle; it unrolls
    // to a nearly straight strip in the chart.
    CHECK(set.components.size() == 1);
    CHECK(std::abs(set.components[0].direction.y) < 0.05);
}

TEST_CASE("stretch set: monotone in eps and empty-set reporting") {
    const SurfaceMesh mesh = build_annulus(1.0, 2.0, 24, 8);
    const MinimizeResult res = solve(mesh, {2.0 * std::numbers::pi}, {2, 8, 16});
    const double L_hat = estimate_L(res.reports).L_hat;
    const StretchSet tight = stretch_set(mesh, res.field, L_hat, 0.05);
    const StretchSet mid = stretch_set(mesh, res.field, L_hat, 0.1);
    const StretchSet loose = stretch_set(mesh, res.field, L_hat, 0.2);
    CHECK(std::includes(mid.triangles.begin(), mid.triangles.end(), tight.triangles.begin(),
                        tight.triangles.end()));
    CHECK(std::includes(loose.triangles.begin(), loose.triangles.end(), mid.triangles.begin(),
                        mid.triangles.end()));

    // An artificially large L_hat empties the set but still reports the
    // maximum attained ratio.
    const StretchSet empty = stretch_set(mesh, res.field, 10.0 * L_hat, 0.05);
    CHECK(empty.triangles.empty());
    CHECK(empty.max_ratio == Approx(0.1).epsilon(0.05));
}

TEST_CASE("least gradient trials: torus dual field has no violations") {
    const SurfaceMesh mesh = build_torus({1, 0}, {0, 1}, 8);
    const MinimizeResult res = solve(mesh, {1.0, 0.0}, {2, 8, 32});
    const DualField dual = make_dual(mesh, res.field, 32.0, res.reports.back().k_p);
    const LeastGradientTrialResult lg = least_gradient_test(mesh, dual, 100, 2024);
    CHECK(lg.trials == 100);
    CHECK(lg.violations == 0);
    CHECK(lg.worst_margin > -1e-8);
    CHECK(lg.offending_phi.empty());
    CHECK_THROWS_AS(least_gradient_test(mesh, dual, 0, 1), std::invalid_argument);
}

TEST_CASE("least gradient mass approaches 1/L on the annulus") {
    const SurfaceMesh mesh = build_annulus(1.0, 2.0, 32, 16);
    const MinimizeResult res = solve(mesh, {2.0 * std::numbers::pi}, {2, 4, 8, 16, 32});
    const double k_p = res.reports.back().k_p;
    const DualField dual = make_dual(mesh, res.field, 32.0, k_p);
    const double L_hat = estimate_L(res.reports).L_hat;
    CHECK(std::abs(dual.mass - 1.0 / L_hat) / (1.0 / L_hat) < 0.05);
    // Analytic mass oracle: k_p^{p-1} * 2 pi (r0^{3-p} - r1^{3-p}) / (p - 3).
    const double p = 32.0;
    const double analytic = std::pow(k_p, p - 1.0) * 2.0 * std::numbers::pi *
                            (1.0 - std::pow(2.0, 3.0 - p)) / (p - 3.0);
    CHECK(dual.mass == Approx(analytic).epsilon(0.01));
}

TEST_CASE("limit report assembles traces and the K comparison") {
    const Vec2 e1{1, 0}, e2{0.5, 1};
    const SurfaceMesh mesh = build_torus(e1, e2, 12);
    const MinimizeResult res = solve(mesh, {1.0, 0.0}, {2, 4, 8, 16, 32});
    std::vector<double> mass_trace;
    for (std::size_t i = 0; i < res.reports.size(); ++i) {
        const PLOneForm V = dual_form(mesh, res.fields[i], res.reports[i].p, res.reports[i].k_p);
        mass_trace.push_back(form_mass(mesh, V));
    }
    const LimitReport rep = build_limit_report(mesh, res.reports, mass_trace, res.field);
    CHECK(rep.K_hat <= rep.L_hat + 2e-8);
    CHECK(std::abs(rep.K_hat - rep.L_hat) / rep.L_hat < 0.02);
    CHECK(rep.p_trace.size() == res.reports.size());
    CHECK(rep.mass_trace.size() == res.reports.size());
    REQUIRE(rep.eps_sweep.size() == 3);
    CHECK(rep.eps_sweep[0].second <= rep.eps_sweep[1].second);
    CHECK(rep.eps_sweep[1].second <= rep.eps_sweep[2].second);
    CHECK_FALSE(rep.stretch.triangles.empty());
}

TEST_CASE("estimate_L flags non-monotone traces") {
    SolveReport a, b, c;
    a.p = 8;  a.max_du = 1.2; a.lp_mean = 0.9; a.k_p = 0.9; a.energy = 1.0;
    b.p = 16; b.max_du = 1.4; b.lp_mean = 0.95; b.k_p = 0.95; b.energy = 1.0;  // 17% jump up
    c.p = 32; c.max_du = 1.1; c.lp_mean = 0.97; c.k_p = 0.97; c.energy = 1.0;
    const LEstimate est = estimate_L({a, b, c});
    CHECK_FALSE(est.trace_monotone);
}

TEST_CASE("least gradient trials flag a non-minimizing field") {
    const SurfaceMesh mesh = build_torus({1, 0}, {0, 1}, 8);
    // A wiggly field is not least gradient in its class: random perturbations
    // find descent directions, and the first offender is serialized.
    DualField fake;
    Rng rng(5150);
    fake.v.values.resize(mesh.vertices.size());
    for (double& v : fake.v.values) v = uniform(rng, -1.0, 1.0);
    fake.v.rho.periods = {0.0, 1.0};
    fake.alpha = fake.v.rho;
    const LeastGradientTrialResult lg = least_gradient_test(mesh, fake, 50, 31337);
    CHECK(lg.violations > 0);
    CHECK(lg.worst_margin < -1e-8);
    CHECK_FALSE(lg.offending_phi.empty());
}

TEST_CASE("least gradient trials are independent of the thread cap") {
    const SurfaceMesh mesh = build_torus({1, 0}, {0.5, 1}, 8);
    SolverConfig cfg;
    cfg.p_schedule = {2, 8};
    const MinimizeResult res = minimize(mesh, Homomorphism{{1.0, 0.0}}, cfg);
    const DualField dual = make_dual(mesh, res.field, 8.0, res.reports.back().k_p);
    setenv("LAMINATE_THREADS", "1", 1);
    const LeastGradientTrialResult serial = least_gradient_test(mesh, dual, 40, 7);
    setenv("LAMINATE_THREADS", "4", 1);
    const LeastGradientTrialResult parallel = least_gradient_test(mesh, dual, 40, 7);
    unsetenv("LAMINATE_THREADS");
    CHECK(serial.worst_margin == parallel.worst_margin);
    CHECK(serial.violations == parallel.violations);
}
