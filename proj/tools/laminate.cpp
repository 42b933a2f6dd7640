// laminate: experiment runner for the best-Lipschitz / least-gradient
// laboratory. Subcommands: run, verify, cone-table, k-vs-l.
#include "laminate/experiment.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

using namespace laminate;

namespace {

int cmd_run(const std::string& config_path) {
    try {
        const ExperimentConfig cfg = load_config(config_path);
        const RunResult result = run(cfg);
        std::printf("run complete: %s\n", result.directory.string().c_str());
        for (const SolveReport& rep : result.reports)
            std::printf("  p=%-6g energy=%.9g max_du=%.9g k_p=%.9g iters=%d%s\n", rep.p, rep.energy,
                        rep.max_du, rep.k_p, rep.iterations, rep.stalled ? " [stalled]" : "");
        if (result.limits_present)
            std::printf("  L_hat=%.9g K_hat=%.9g\n", result.limits.L_hat, result.limits.K_hat);
        return 0;
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "%s\n", e.what());
        return 2;
    } catch (const SolverStall& e) {
        std::fprintf(stderr, "solver stall: %s\n", e.what());
        return 3;
    } catch (const InvariantViolation& e) {
        std::fprintf(stderr, "invariant violation: %s\n", e.what());
        return 4;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}

int cmd_verify(const std::string& dir) {
    try {
        const VerifyReport report = verify(dir);
        std::printf("%-32s %s\n", "suite", "result");
        for (const VerifySuite& suite : report.suites)
            std::printf("%-32s %s%s%s\n", suite.name.c_str(), suite.passed ? "PASS" : "FAIL",
                        suite.detail.empty() ? "" : "  ", suite.detail.c_str());
        return report.all_passed() ? 0 : 4;
    } catch (const ArtifactError& e) {
        std::fprintf(stderr, "%s\n", e.what());
        return 5;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}

int cmd_cone_table(const std::vector<int>& ns, const std::vector<double>& ps, double t_max,
                   int steps) {
    std::printf("n,p,t,f_p,lower,upper\n");
    for (int n : ns) {
        for (double p : ps) {
            if (!(p > n)) {
                std::fprintf(stderr, "skipping n=%d p=%g (need p > n)\n", n, p);
                continue;
            }
            const ConeProfile prof = cone_profile(n, p, t_max, steps);
            const double beta = prof.beta();
            for (std::size_t k = 0; k < prof.grid.size(); ++k) {
                const double env = std::pow(prof.grid[k], 1.0 - beta);
                std::printf("%d,%g,%.17g,%.17g,%.17g,%.17g\n", n, p, prof.grid[k], prof.values[k],
                            prof.lower_const * env, prof.upper_const * env);
            }
        }
    }
    return 0;
}

int cmd_k_vs_l(const std::string& dir) {
    try {
        const json lim = json::parse(detail::read_file(std::filesystem::path(dir) / "limits.json"));
        const double L = lim.at("L_hat").get<double>();
        const double K = lim.at("K_hat").get<double>();
        std::printf("L_hat        = %.12g\n", L);
        std::printf("K_hat        = %.12g\n", K);
        std::printf("K/L          = %.12g\n", K / L);
        std::printf("rel gap      = %.3e\n", std::abs(K - L) / L);
        const auto cls = lim.at("argmax_class");
        std::printf("argmax class = (%d, %d)\n", cls.at(0).get<int>(), cls.at(1).get<int>());
        return 0;
    } catch (const ArtifactError& e) {
        std::fprintf(stderr, "%s\n", e.what());
        return 5;
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"numerical laboratory for best Lipschitz maps, conjugate least-gradient fields, "
                 "and transverse measures on flat surfaces"};
    app.require_subcommand(1);

    std::string config_path;
    auto* run_cmd = app.add_subcommand("run", "run an experiment from a config file");
    run_cmd->add_option("config", config_path, "JSON config path")->required();

    std::string verify_dir;
    auto* verify_cmd = app.add_subcommand("verify", "re-check invariants of an artifact tree");
    verify_cmd->add_option("dir", verify_dir, "artifact directory")->required();

    std::vector<int> ns{2};
    std::vector<double> ps{8, 32, 128};
    double t_max = 2.0;
    int steps = 100;
    auto* cone_cmd = app.add_subcommand("cone-table", "print radial profile tables as CSV");
    cone_cmd->add_option("--n", ns, "dimensions");
    cone_cmd->add_option("--p-list", ps, "exponents");
    cone_cmd->add_option("--t-max", t_max, "radial range");
    cone_cmd->add_option("--steps", steps, "grid nodes");

    std::string kl_dir;
    auto* kl_cmd = app.add_subcommand("k-vs-l", "print the K/L comparison from a run directory");
    kl_cmd->add_option("dir", kl_dir, "artifact directory")->required();

    CLI11_PARSE(app, argc, argv);

    if (run_cmd->parsed()) return cmd_run(config_path);
    if (verify_cmd->parsed()) return cmd_verify(verify_dir);
    if (cone_cmd->parsed()) return cmd_cone_table(ns, ps, t_max, steps);
    if (kl_cmd->parsed()) return cmd_k_vs_l(kl_dir);
    return 2;
}
