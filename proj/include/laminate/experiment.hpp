// experiment.hpp -- experiment runner: configuration, the run/verify
// commands, and report/plot emission with a hashed manifest.
#pragma once

#include "laminate/duality.hpp"
#include "laminate/hyperbolic.hpp"
#include "laminate/lamination.hpp"
#include "laminate/limits.hpp"
#include "laminate/mesh_io.hpp"
#include "laminate/penergy.hpp"

#include <openssl/evp.h>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>

#ifndef LAMINATE_VERSION
#define LAMINATE_VERSION "0.1.0"
#endif

namespace laminate {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ArtifactError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Configuration (strict schema: unknown keys are errors)

struct ConeTableRequest {
    std::vector<int> n_list{2, 3};
    std::vector<double> p_list{8, 32, 128};
    double t_max = 2.0;
    int steps = 100;
};

struct ExperimentConfig {
    enum class Domain { torus, annulus };
    Domain domain = Domain::annulus;
    Vec2 basis1{1, 0}, basis2{0, 1};
    int resolution = 16;
    double r0 = 1.0, r1 = 2.0;
    int n_theta = 64, n_r = 32;
    std::vector<double> rho;
    SolverConfig solver;
    bool run_duality = true, run_limits = true, run_cones = false, run_lamination = true;
    std::vector<double> region_thresholds;  // annulus: report mass outside these radii
    ConeTableRequest cones;
    int k_search_radius = 50;
    int transversal_trials = 200;
    std::string output_dir = "out";
    std::uint64_t seed = 0;
};

namespace detail {

inline void require_keys(const json& j, const std::string& where,
                         const std::set<std::string>& allowed) {
    for (const auto& [key, value] : j.items())
        if (!allowed.count(key))
            throw ConfigError("config error: unknown key '" + key + "' in " + where);
}

inline double get_num(const json& j, const std::string& key, const std::string& where) {
    if (!j.contains(key)) throw ConfigError("config error: missing field '" + key + "' in " + where);
    if (!j.at(key).is_number()) throw ConfigError("config error: field '" + key + "' must be a number");
    return j.at(key).get<double>();
}

} // namespace detail

inline ExperimentConfig parse_config(const json& j) {
    detail::require_keys(j, "top level",
                         {"schema_version", "domain", "rho", "solver", "analyses", "regions",
                          "cones", "k_search_radius", "transversal_trials", "output_dir", "seed"});
    if (!j.contains("schema_version") || j.at("schema_version").get<int>() != 1)
        throw ConfigError("config error: schema_version must be 1");

    ExperimentConfig cfg;
    if (!j.contains("domain")) throw ConfigError("config error: missing field 'domain'");
    const json& dom = j.at("domain");
    const std::string type = dom.value("type", "");
    if (type == "torus") {
        detail::require_keys(dom, "domain", {"type", "basis", "resolution"});
        cfg.domain = ExperimentConfig::Domain::torus;
        const json& basis = dom.at("basis");
        if (!basis.is_array() || basis.size() != 2)
            throw ConfigError("config error: domain.basis must be two 2D vectors");
        cfg.basis1 = {basis.at(0).at(0).get<double>(), basis.at(0).at(1).get<double>()};
        cfg.basis2 = {basis.at(1).at(0).get<double>(), basis.at(1).at(1).get<double>()};
        cfg.resolution = dom.at("resolution").get<int>();
        if (std::abs(cross(cfg.basis1, cfg.basis2)) < 1e-12)
            throw ConfigError("config error: domain.basis is degenerate");
    } else if (type == "annulus") {
        detail::require_keys(dom, "domain", {"type", "r0", "r1", "n_theta", "n_r"});
        cfg.domain = ExperimentConfig::Domain::annulus;
        cfg.r0 = detail::get_num(dom, "r0", "domain");
        cfg.r1 = detail::get_num(dom, "r1", "domain");
        cfg.n_theta = dom.at("n_theta").get<int>();
        cfg.n_r = dom.at("n_r").get<int>();
        if (!(cfg.r0 > 0.0) || !(cfg.r0 < cfg.r1))
            throw ConfigError("config error: domain.r0 must satisfy 0 < r0 < r1");
    } else {
        throw ConfigError("config error: domain.type must be 'torus' or 'annulus'");
    }

    if (!j.contains("rho")) throw ConfigError("config error: missing field 'rho'");
    cfg.rho = j.at("rho").get<std::vector<double>>();

    if (j.contains("solver")) {
        const json& s = j.at("solver");
        detail::require_keys(s, "solver", {"p_schedule", "delta", "grad_tol", "max_iters"});
        if (s.contains("p_schedule")) cfg.solver.p_schedule = s.at("p_schedule").get<std::vector<double>>();
        if (s.contains("delta")) cfg.solver.delta = s.at("delta").get<double>();
        if (s.contains("grad_tol")) cfg.solver.grad_tol = s.at("grad_tol").get<double>();
        if (s.contains("max_iters")) cfg.solver.max_iters = s.at("max_iters").get<int>();
    }
    cfg.solver.record_trace = true;
    try {
        cfg.solver.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("config error: ") + e.what());
    }

    if (j.contains("analyses")) {
        const json& a = j.at("analyses");
        detail::require_keys(a, "analyses", {"duality", "limits", "cones", "lamination"});
        cfg.run_duality = a.value("duality", true);
        cfg.run_limits = a.value("limits", true);
        cfg.run_cones = a.value("cones", false);
        cfg.run_lamination = a.value("lamination", true);
    }
    if (cfg.run_limits && !cfg.run_duality)
        throw ConfigError("config error: analyses.limits requires analyses.duality");
    if (cfg.run_lamination && !cfg.run_limits)
        throw ConfigError("config error: analyses.lamination requires analyses.limits");

    if (j.contains("regions")) cfg.region_thresholds = j.at("regions").get<std::vector<double>>();
    if (j.contains("cones")) {
        const json& c = j.at("cones");
        detail::require_keys(c, "cones", {"n_list", "p_list", "t_max", "steps"});
        if (c.contains("n_list")) cfg.cones.n_list = c.at("n_list").get<std::vector<int>>();
        if (c.contains("p_list")) cfg.cones.p_list = c.at("p_list").get<std::vector<double>>();
        if (c.contains("t_max")) cfg.cones.t_max = c.at("t_max").get<double>();
        if (c.contains("steps")) cfg.cones.steps = c.at("steps").get<int>();
    }
    if (j.contains("k_search_radius")) cfg.k_search_radius = j.at("k_search_radius").get<int>();
    if (j.contains("transversal_trials")) cfg.transversal_trials = j.at("transversal_trials").get<int>();
    if (!j.contains("output_dir")) throw ConfigError("config error: missing field 'output_dir'");
    cfg.output_dir = j.at("output_dir").get<std::string>();
    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config error: cannot open '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw ConfigError(std::string("config error: invalid JSON: ") + e.what());
    }
    return parse_config(j);
}

// ---------------------------------------------------------------------------
// Artifact helpers

namespace detail {

inline std::string sha256_hex(const std::string& bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr);
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xf]);
    }
    return out;
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ArtifactError("missing artifact: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline std::string fmt(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

inline std::string fmt_p(double p) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%g", p);
    return buf;
}

inline std::string fmt_q(double q) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6f", q);
    return buf;
}

class ArtifactWriter {
  public:
    explicit ArtifactWriter(std::filesystem::path root) : root_(std::move(root)) {
        std::filesystem::create_directories(root_);
    }

    void write(const std::string& relative, const std::string& bytes, const std::string& producer) {
        const std::filesystem::path full = root_ / relative;
        std::filesystem::create_directories(full.parent_path());
        std::ofstream out(full, std::ios::binary);
        out << bytes;
        files_[relative] = {sha256_hex(bytes), producer};
    }

    void write_json(const std::string& relative, const json& j, const std::string& producer) {
        write(relative, j.dump(2) + "\n", producer);
    }

    // Manifest carries the only timestamp in the artifact tree.
    void finish(const std::string& version) {
        json manifest;
        manifest["tool_version"] = version;
        manifest["generated_at_unix"] =
            std::chrono::duration_cast<std::chrono::seconds>(
                std::chrono::system_clock::now().time_since_epoch())
                .count();
        json files = json::object();
        for (const auto& [path, info] : files_)
            files[path] = {{"sha256", info.first}, {"producer", info.second}};
        manifest["files"] = files;
        const std::filesystem::path full = root_ / "manifest.json";
        std::ofstream out(full, std::ios::binary);
        out << manifest.dump(2) << "\n";
    }

    const std::filesystem::path& root() const { return root_; }

  private:
    std::filesystem::path root_;
    std::map<std::string, std::pair<std::string, std::string>> files_;
};

// Minimal sequential color map (light to dark) for the field plots.
inline std::string color_for(double t) {
    t = std::clamp(t, 0.0, 1.0);
    const int r = static_cast<int>(250 - 210 * t);
    const int g = static_cast<int>(250 - 120 * t);
    const int b = static_cast<int>(110 + 120 * t);
    char buf[16];
    std::snprintf(buf, sizeof buf, "#%02x%02x%02x", r, g, b);
    return buf;
}

inline std::string field_svg(const SurfaceMesh& mesh, const PLOneForm& du,
                             const std::vector<int>& stretch, double L_hat) {
    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        for (int c = 0; c < 3; ++c) {
            const Vec2 p = mesh.corner_position(t, c);
            xmin = std::min(xmin, p.x);
            xmax = std::max(xmax, p.x);
            ymin = std::min(ymin, p.y);
            ymax = std::max(ymax, p.y);
        }
    }
    const double W = 760.0, H = 560.0, pad = 20.0;
    const double sx = (W - 2 * pad) / (xmax - xmin), sy = (H - 2 * pad) / (ymax - ymin);
    const double s = std::min(sx, sy);
    auto px = [&](const Vec2& p) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.2f,%.2f", pad + (p.x - xmin) * s,
                      H - pad - (p.y - ymin) * s);
        return std::string(buf);
    };
    double lo = 1e300, hi = -1e300;
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        const double m = form_norm(mesh, du, t);
        lo = std::min(lo, m);
        hi = std::max(hi, m);
    }
    std::vector<char> in_stretch(mesh.triangles.size(), 0);
    for (int t : stretch) in_stretch[t] = 1;

    std::ostringstream svg;
    svg << "<svg xmlns='http://www.w3.org/2000/svg' width='" << W << "' height='" << H << "'>\n";
    svg << "<!-- data: per-triangle |du|, range [" << fmt(lo) << ", " << fmt(hi)
        << "], L_hat=" << fmt(L_hat) << ", stretch triangles shaded -->\n";
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        const double m = form_norm(mesh, du, t);
        const double tt = hi > lo ? (m - lo) / (hi - lo) : 0.5;
        svg << "<polygon points='" << px(mesh.corner_position(t, 0)) << " "
            << px(mesh.corner_position(t, 1)) << " " << px(mesh.corner_position(t, 2))
            << "' fill='" << color_for(tt) << "' stroke='"
            << (in_stretch[t] ? "#c0392b" : "none") << "' stroke-width='"
            << (in_stretch[t] ? "1.2" : "0") << "'/>\n";
    }
    svg << "</svg>\n";
    return svg.str();
}

inline std::string cone_svg(const std::vector<ConeProfile>& profiles) {
    const double W = 640.0, H = 480.0, pad = 40.0;
    double tmax = 0.0, fmax = 0.0;
    for (const ConeProfile& prof : profiles) {
        tmax = std::max(tmax, prof.t_max);
        fmax = std::max(fmax, prof.values.back());
    }
    fmax = std::max(fmax, tmax);
    auto X = [&](double t) { return pad + t / tmax * (W - 2 * pad); };
    auto Y = [&](double f) { return H - pad - f / fmax * (H - 2 * pad); };
    std::ostringstream svg;
    svg << "<svg xmlns='http://www.w3.org/2000/svg' width='" << W << "' height='" << H << "'>\n";
    svg << "<!-- data: radial profiles f_p(t) against the identity -->\n";
    svg << "<line x1='" << X(0) << "' y1='" << Y(0) << "' x2='" << X(tmax) << "' y2='" << Y(tmax)
        << "' stroke='#888' stroke-dasharray='4 3'/>\n";
    const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b", "#e377c2"};
    int ci = 0;
    for (const ConeProfile& prof : profiles) {
        svg << "<polyline fill='none' stroke='" << colors[ci % 6] << "' points='";
        svg << X(0) << "," << Y(0) << " ";
        for (std::size_t k = 0; k < prof.grid.size(); ++k)
            svg << X(prof.grid[k]) << "," << Y(prof.values[k]) << " ";
        svg << "'/>\n";
        svg << "<!-- n=" << prof.n << " p=" << fmt_p(prof.p) << " -->\n";
        ++ci;
    }
    svg << "</svg>\n";
    return svg.str();
}

} // namespace detail

// ---------------------------------------------------------------------------
// The run command

struct RunResult {
    std::filesystem::path directory;
    std::vector<SolveReport> reports;
    std::vector<DualField> duals;
    LimitReport limits;
    bool limits_present = false;
};

inline SurfaceMesh build_domain(const ExperimentConfig& cfg) {
    if (cfg.domain == ExperimentConfig::Domain::torus)
        return build_torus(cfg.basis1, cfg.basis2, cfg.resolution);
    return build_annulus(cfg.r0, cfg.r1, cfg.n_theta, cfg.n_r);
}

inline json solve_report_json(const SolveReport& rep, const EquivariantField& field) {
    json j;
    j["p"] = rep.p;
    j["energy"] = rep.energy;
    j["energy_regularized"] = rep.energy_regularized;
    j["grad_norm"] = rep.grad_norm;
    j["iterations"] = rep.iterations;
    j["max_du"] = rep.max_du;
    j["lp_mean"] = rep.lp_mean;
    if (std::isnan(rep.k_p))
        j["k_p"] = nullptr;
    else
        j["k_p"] = rep.k_p;
    j["delta"] = rep.delta;
    j["converged"] = rep.converged;
    j["stalled"] = rep.stalled;
    j["field"] = field_to_json(field);
    return j;
}

inline RunResult run(const ExperimentConfig& cfg) {
    detail::ArtifactWriter writer(cfg.output_dir);
    RunResult result;
    result.directory = writer.root();

    const SurfaceMesh mesh = build_domain(cfg);
    writer.write_json("mesh.json", mesh_to_json(mesh),
                      cfg.domain == ExperimentConfig::Domain::torus ? "mesh.build_torus"
                                                                    : "mesh.build_annulus");

    if (cfg.rho.size() != mesh.deck_translations.size())
        throw ConfigError("config error: rho length does not match the domain's homology basis");

    const MinimizeResult solved = minimize(mesh, Homomorphism{cfg.rho}, cfg.solver);
    result.reports = solved.reports;

    bool any_stalled = false;
    for (std::size_t i = 0; i < solved.reports.size(); ++i) {
        const SolveReport& rep = solved.reports[i];
        any_stalled = any_stalled || rep.stalled;
        writer.write_json("solve/" + detail::fmt_p(rep.p) + ".json",
                          solve_report_json(rep, solved.fields[i]), "penergy.minimize");
        std::ostringstream csv;
        csv << "iter,energy,grad_norm,step\n";
        for (const IterationRecord& it : rep.trace)
            csv << it.iter << "," << detail::fmt(it.energy) << "," << detail::fmt(it.grad_norm)
                << "," << detail::fmt(it.step) << "\n";
        writer.write("tables/trace_p" + detail::fmt_p(rep.p) + ".csv", csv.str(),
                     "penergy.minimize");
    }

    std::vector<double> mass_trace;
    if (cfg.run_duality) {
        std::ostringstream region_csv;
        region_csv << "p,region,mass,fraction\n";
        for (std::size_t i = 0; i < solved.reports.size(); ++i) {
            const SolveReport& rep = solved.reports[i];
            if (!(rep.energy > 0.0)) continue;
            DualField dual = make_dual(mesh, solved.fields[i], rep.p, rep.k_p);
            const PLOneForm du = differential(mesh, solved.fields[i]);
            const double pair_form = pairing(mesh, du, dual.V);
            const PLOneForm dv_hat = differential(mesh, dual.v);
            const double pair_primitive = pairing(mesh, du, dv_hat);

            std::vector<Region> regions;
            if (cfg.domain == ExperimentConfig::Domain::annulus)
                for (double r : cfg.region_thresholds)
                    regions.push_back(annulus_region_outside(mesh, r, "r>" + detail::fmt_p(r)));
            const ConcentrationDiagnostics diag = concentration_diagnostics(
                mesh, solved.fields[i], rep.p, rep.k_p, dual.V, solved.field, regions);
            for (const RegionMass& rm : diag.regions)
                region_csv << detail::fmt_p(rep.p) << "," << rm.name << "," << detail::fmt(rm.mass)
                           << "," << detail::fmt(rm.fraction) << "\n";

            json j;
            j["q"] = dual.q;
            j["p"] = rep.p;
            j["alpha"] = dual.alpha.periods;
            j["residual"] = dual.residual;
            j["mass"] = dual.mass;
            j["pairing"] = pair_form;
            j["pairing_primitive"] = pair_primitive;
            j["conjugacy_error"] = conjugacy_error(mesh, solved.fields[i], rep.p, rep.k_p, dual.V);
            j["diagnostics"] = {{"g2", diag.g2}, {"orth", diag.orth}};
            j["normalization_domain"] = "cut fundamental domain";
            j["field"] = field_to_json(dual.v);
            writer.write_json("dual/" + detail::fmt_q(dual.q) + ".json", j, "duality.make_dual");

            mass_trace.push_back(dual.mass);
            result.duals.push_back(std::move(dual));
        }
        if (!cfg.region_thresholds.empty())
            writer.write("tables/region_mass.csv", region_csv.str(),
                         "duality.concentration_diagnostics");
    }

    // The zero class has J_p = 0 and no limit objects; note it and move on.
    const bool degenerate_class = !(solved.reports.back().energy > 0.0);
    if (cfg.run_limits && degenerate_class) {
        writer.write_json("limits.json",
                          json{{"degenerate", true}, {"detail", "zero-energy class (rho = 0)"}},
                          "limits.build_limit_report");
    }
    if (cfg.run_limits && !degenerate_class) {
        result.limits = build_limit_report(mesh, solved.reports, mass_trace, solved.field,
                                           cfg.k_search_radius);
        result.limits_present = true;
        const LimitReport& lim = result.limits;

        json j;
        j["L_hat"] = lim.L_hat;
        j["K_hat"] = lim.K_hat;
        j["argmax_class"] = lim.argmax_class;
        j["estimates"] = {{"max_du", lim.estimate.L_hat},
                          {"lp_mean", lim.estimate.from_lp_mean},
                          {"inv_k_p", lim.estimate.from_inv_kp},
                          {"spread", lim.estimate.spread},
                          {"trace_monotone", lim.estimate.trace_monotone}};
        j["traces"] = {{"p", lim.p_trace},
                       {"max_du", lim.max_du_trace},
                       {"lp_mean", lim.lp_mean_trace},
                       {"inv_k_p", lim.inv_kp_trace},
                       {"mass", lim.mass_trace}};
        json comps = json::array();
        for (const StretchComponent& c : lim.stretch.components)
            comps.push_back({{"size", c.triangles.size()},
                             {"straightness_deviation", c.straightness_deviation},
                             {"deviation_in_h", c.deviation_in_h}});
        j["stretch_components"] = comps;
        j["stretch"] = {{"eps", lim.stretch.eps},
                        {"threshold", lim.stretch.threshold},
                        {"max_ratio", lim.stretch.max_ratio},
                        {"triangles", lim.stretch.triangles}};
        json sweep = json::array();
        for (const auto& [eps, count] : lim.eps_sweep) sweep.push_back({{"eps", eps}, {"count", count}});
        j["eps_sweep"] = sweep;
        writer.write_json("limits.json", j, "limits.build_limit_report");

        std::ostringstream csv;
        csv << "p,max_du,lp_mean,inv_k_p,mass\n";
        for (std::size_t i = 0; i < lim.p_trace.size(); ++i)
            csv << detail::fmt_p(lim.p_trace[i]) << "," << detail::fmt(lim.max_du_trace[i]) << ","
                << detail::fmt(lim.lp_mean_trace[i]) << "," << detail::fmt(lim.inv_kp_trace[i])
                << "," << detail::fmt(i < lim.mass_trace.size() ? lim.mass_trace[i] : 0.0) << "\n";
        writer.write("tables/convergence.csv", csv.str(), "limits.build_limit_report");

        const PLOneForm du = differential(mesh, solved.field);
        writer.write("plots/field_p" + detail::fmt_p(solved.reports.back().p) + ".svg",
                     detail::field_svg(mesh, du, lim.stretch.triangles, lim.L_hat),
                     "limits.stretch_set");

        // Invariant gate: K <= L up to the discretization allowance (the
        // sharp comparison at acceptance resolution lives in the test suite),
        // and a nonempty stretch set.
        if (lim.K_hat > lim.L_hat * 1.05 + 2e-8) {
            writer.write_json("failure.json",
                              json{{"invariant", "limits.k-le-l"},
                                   {"detail", "K_hat exceeds L_hat beyond tolerance"},
                                   {"K_hat", lim.K_hat},
                                   {"L_hat", lim.L_hat}},
                              "cli.run");
            writer.finish(LAMINATE_VERSION);
            throw InvariantViolation("limits.k-le-l", "K_hat exceeds L_hat beyond tolerance");
        }
        if (lim.stretch.triangles.empty()) {
            writer.write_json("failure.json",
                              json{{"invariant", "limits.stretch-nonempty"},
                                   {"detail", "stretch set empty at eps = 0.1"}},
                              "cli.run");
            writer.finish(LAMINATE_VERSION);
            throw InvariantViolation("limits.stretch-nonempty", "stretch set empty at eps = 0.1");
        }
    }

    if (cfg.run_lamination && result.limits_present && !result.duals.empty()) {
        const DualField& dual = result.duals.back();
        const double range =
            *std::max_element(dual.v.values.begin(), dual.v.values.end()) -
            *std::min_element(dual.v.values.begin(), dual.v.values.end());
        const double plaque_tol = 0.15 * std::max(range, 1e-12);
        const PlaqueDecomposition dec =
            plaques(mesh, result.limits.stretch.triangles, dual.v, plaque_tol);

        json j;
        j["plaque_tol"] = plaque_tol;
        j["degenerate"] = dec.degenerate;
        j["flagged"] = dec.flagged;
        j["constants"] = dec.constants;
        j["spreads"] = dec.spreads;
        j["adjacency"] = dec.adjacency;

        if (cfg.domain == ExperimentConfig::Domain::annulus && !dec.degenerate) {
            // Flow-box chart in the radial coordinate; seeded random
            // transversals exercise the cocycle and its axioms.
            const FlowBoxChart chart =
                annulus_flow_box(mesh, result.limits.stretch.triangles, dec);
            const double band_hi = chart.bands.front().hi;

            Rng rng(cfg.seed ^ 0xabcdef1234567890ull);
            std::ostringstream csv;
            csv << "path_id,nu,subdivision_signs\n";
            int violations = 0;
            for (int trial = 0; trial < cfg.transversal_trials; ++trial) {
                std::vector<double> waypoints;
                const int n_pts = 2 + static_cast<int>(uniform(rng, 0.0, 3.0));
                for (int k = 0; k < n_pts; ++k) {
                    double s = uniform(rng, band_hi + 1e-6, cfg.r1);
                    waypoints.push_back(s);
                }
                TransversalPath path;
                double drift = 0.0;
                for (double s : waypoints) {
                    drift += uniform(rng, -0.2, 0.2);
                    path.points.push_back(Vec2{std::numbers::pi + drift, s});
                }
                const auto pieces = good_subdivision(chart, path);
                const double nu = cocycle(chart, path);
                if (nu < -3.0 * plaque_tol) ++violations;
                std::string signs;
                for (const auto& piece : pieces) signs += piece.sign > 0 ? '+' : '-';
                csv << trial << "," << detail::fmt(nu) << "," << signs << "\n";
            }
            j["transversal_trials"] = cfg.transversal_trials;
            j["non_negativity_violations"] = violations;
            writer.write("tables/cocycle.csv", csv.str(), "lamination.cocycle");
        }
        writer.write_json("lamination.json", j, "lamination.plaques");
    }

    if (cfg.run_cones) {
        std::vector<ConeProfile> profiles;
        for (int n : cfg.cones.n_list)
            for (double p : cfg.cones.p_list) {
                if (!(p > n)) continue;
                ConeProfile prof = cone_profile(n, p, cfg.cones.t_max, cfg.cones.steps);
                check_cone_profile(prof);
                std::ostringstream csv;
                csv << "t,f_p,lower,upper\n";
                const double beta = prof.beta();
                for (std::size_t k = 0; k < prof.grid.size(); ++k) {
                    const double env = std::pow(prof.grid[k], 1.0 - beta);
                    csv << detail::fmt(prof.grid[k]) << "," << detail::fmt(prof.values[k]) << ","
                        << detail::fmt(prof.lower_const * env) << ","
                        << detail::fmt(prof.upper_const * env) << "\n";
                }
                writer.write("tables/cone_n" + std::to_string(n) + "_p" + detail::fmt_p(p) + ".csv",
                             csv.str(), "hyperbolic.cone_profile");
                profiles.push_back(std::move(prof));
            }
        writer.write("plots/cone_profiles.svg", detail::cone_svg(profiles),
                     "hyperbolic.cone_profile");
    }

    writer.finish(LAMINATE_VERSION);
    if (any_stalled)
        throw SolverStall("one or more p-solves stalled; reports emitted with stalled flags");
    return result;
}

// ---------------------------------------------------------------------------
// The verify command

struct VerifySuite {
    std::string name;
    bool passed = true;
    std::string detail;
};

struct VerifyReport {
    std::vector<VerifySuite> suites;
    bool all_passed() const {
        for (const auto& s : suites)
            if (!s.passed) return false;
        return true;
    }
};

inline VerifyReport verify(const std::string& dir) {
    namespace fs = std::filesystem;
    const fs::path root(dir);
    VerifyReport report;
    auto add = [&](const std::string& name, bool ok, const std::string& detail) {
        report.suites.push_back({name, ok, detail});
    };

    // Manifest hashes first; stale or missing artifacts are a distinct error.
    const json manifest = json::parse(detail::read_file(root / "manifest.json"));
    for (const auto& [path, info] : manifest.at("files").items()) {
        const std::string bytes = detail::read_file(root / path);
        if (detail::sha256_hex(bytes) != info.at("sha256").get<std::string>())
            throw ArtifactError("stale artifact (hash mismatch): " + path);
    }
    add("manifest.hashes", true, std::to_string(manifest.at("files").size()) + " files");

    const SurfaceMesh mesh = mesh_from_json(json::parse(detail::read_file(root / "mesh.json")));
    try {
        check_mesh_invariants(mesh);
        add("mesh.invariants", true, "");
    } catch (const InvariantViolation& e) {
        add("mesh.invariants", false, e.what());
    }

    // Collect solve reports in ascending p.
    std::vector<json> solves;
    if (fs::exists(root / "solve"))
        for (const auto& entry : fs::directory_iterator(root / "solve"))
            solves.push_back(json::parse(detail::read_file(entry.path())));
    std::sort(solves.begin(), solves.end(),
              [](const json& a, const json& b) { return a.at("p") < b.at("p"); });

    bool kp_ok = true, dom_ok = true, energy_ok = true, holder_ok = true;
    std::string kp_detail;
    double prev_lp = -1.0;
    for (const json& s : solves) {
        const double p = s.at("p").get<double>();
        const double E = s.at("energy").get<double>();
        const EquivariantField u = field_from_json(s.at("field"));
        const double E_re = energy(mesh, u, p, 0.0);
        if (std::abs(E_re - E) > 1e-9 * (1.0 + E)) energy_ok = false;
        if (!s.at("k_p").is_null()) {
            const double kp = s.at("k_p").get<double>();
            if (std::abs(kp - std::pow(E, -1.0 / (p - 1.0))) > 1e-12 * kp) {
                kp_ok = false;
                kp_detail = "p=" + detail::fmt_p(p);
            }
        }
        if (s.at("max_du").get<double>() < s.at("lp_mean").get<double>() - 1e-12) dom_ok = false;
        if (s.at("lp_mean").get<double>() < prev_lp - 1e-10) holder_ok = false;
        prev_lp = s.at("lp_mean").get<double>();
    }
    add("penergy.energy-recompute", energy_ok, "");
    add("penergy.kp-law", kp_ok, kp_detail);
    add("penergy.max-dominates-mean", dom_ok, "");
    add("penergy.holder-monotone", holder_ok, "");

    // Duality suites recompute from the stored fields.
    bool mass_ok = true, conj_ok = true, pair_ok = true, holder_mass_ok = true;
    std::string mass_detail;
    if (fs::exists(root / "dual")) {
        for (const auto& entry : fs::directory_iterator(root / "dual")) {
            const json d = json::parse(detail::read_file(entry.path()));
            const double p = d.at("p").get<double>();
            // Find the matching solve.
            for (const json& s : solves) {
                if (s.at("p").get<double>() != p) continue;
                const EquivariantField u = field_from_json(s.at("field"));
                const double kp = s.at("k_p").get<double>();
                const PLOneForm V = dual_form(mesh, u, p, kp);
                const double mass = form_mass(mesh, V);
                if (std::abs(mass - d.at("mass").get<double>()) > 1e-9 * (1.0 + mass)) {
                    mass_ok = false;
                    mass_detail = "p=" + detail::fmt_p(p);
                }
                if (mass > std::pow(mesh.total_area(), 1.0 / p) * std::pow(kp, (p - 1.0) / p) + 1e-12)
                    holder_mass_ok = false;
                if (conjugacy_error(mesh, u, p, kp, V) > 1e-10) conj_ok = false;
                const PLOneForm du = differential(mesh, u);
                if (std::abs(pairing(mesh, du, V) - 1.0) > 1e-10) pair_ok = false;
            }
        }
    }
    add("duality.mass-law", mass_ok, mass_detail);
    add("duality.holder-bound", holder_mass_ok, "");
    add("duality.conjugacy", conj_ok, "");
    add("duality.pairing", pair_ok, "");

    if (fs::exists(root / "limits.json")) {
        const json lim = json::parse(detail::read_file(root / "limits.json"));
        if (lim.value("degenerate", false)) {
            add("limits.degenerate-class", true, "zero-energy class");
        } else {
            const double L = lim.at("L_hat").get<double>();
            const double K = lim.at("K_hat").get<double>();
            add("limits.k-le-l", K <= L * 1.05 + 2e-8,
                "K=" + detail::fmt(K) + " L=" + detail::fmt(L));
            add("limits.stretch-nonempty", !lim.at("stretch").at("triangles").empty(), "");
        }
    }
    return report;
}

} // namespace laminate
