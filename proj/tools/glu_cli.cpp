// Command-line front end: validate / run / analyze / lemma-oracle / plot.
// Exit codes: 0 success, 1 validation failure, 2 runtime or usage error.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "glu/analysis.hpp"
#include "glu/errors.hpp"
#include "glu/harness.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kOk = 0;
constexpr int kInvalid = 1;
constexpr int kRuntime = 2;

struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<int> trials;
    std::optional<long> iterations;
    std::optional<std::string> out;
    bool allow_invalid = false;
};

json read_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw glu::ConfigError("cannot open config " + path.string());
    }
    try {
        return json::parse(in, nullptr, true, true);
    } catch (const json::parse_error& e) {
        throw glu::ConfigError("config " + path.string() + ": " + e.what());
    }
}

glu::ExperimentConfig load_with_overrides(const fs::path& path, const Overrides& o) {
    json j = read_json(path);
    if (const char* env = std::getenv("GLU_OUTPUT_DIR"); env != nullptr && *env != '\0') {
        j["outputs"] = env;
    }
    if (o.seed) {
        j["seed"] = *o.seed;
    }
    if (o.trials) {
        j["trials"] = *o.trials;
    }
    if (o.iterations) {
        j["iterations"] = *o.iterations;
    }
    if (o.out) {
        j["outputs"] = *o.out;
    }
    if (o.allow_invalid) {
        j["allow_invalid"] = true;
    }
    return glu::parse_config(j, path.parent_path());
}

void print_violations(const glu::Violations& v) {
    for (const glu::Violation& x : v) {
        std::cout << "VIOLATION " << x.condition << ": " << x.detail << '\n';
    }
}

int cmd_validate(const fs::path& config_path) {
    const glu::ExperimentConfig cfg = glu::load_config(config_path);
    const glu::Violations v = glu::validate_config(cfg);
    if (v.empty()) {
        std::cout << "all assumptions satisfied\n";
        return kOk;
    }
    print_violations(v);
    return kInvalid;
}

int cmd_run(const fs::path& config_path, const Overrides& o, unsigned threads) {
    const glu::ExperimentConfig cfg = load_with_overrides(config_path, o);
    if (!cfg.allow_invalid) {
        const glu::Violations v = glu::validate_config(cfg);
        if (!v.empty()) {
            print_violations(v);
            std::cout << "refusing to run an invalid config (use --allow-invalid)\n";
            return kInvalid;
        }
    }
    glu::RunOptions opts;
    opts.threads = threads;
    const glu::ExperimentResult result = glu::run_experiment(cfg, opts);
    const glu::ExperimentSummary& s = result.summary;
    std::cout << "results written to " << cfg.outputs << '\n';
    std::cout << "config hash            " << s.config_hash << '\n';
    std::cout << "initial error          " << s.initial_error << '\n';
    std::cout << "terminal median error  " << s.terminal_median_error << '\n';
    if (s.has_central) {
        std::cout << "terminal central error " << s.terminal_median_central_error << '\n';
    }
    if (s.disagreement_fit) {
        std::cout << "disagreement slope     " << s.disagreement_fit->exponent << '\n';
    }
    if (s.gap_fit) {
        std::cout << "gap slope              " << s.gap_fit->exponent << '\n';
    }
    if (s.diverged_trials > 0) {
        std::cout << "diverged trials        " << s.diverged_trials << '\n';
    }
    return kOk;
}

int cmd_analyze(const fs::path& config_path) {
    const glu::ExperimentConfig cfg = glu::load_config(config_path);
    const glu::SensingModel& model = cfg.sensing;
    json report;
    const glu::Matrix G = glu::grammian(model);
    report["grammian"] = glu::to_json(G);
    const glu::Observability obs = glu::check_global_observability(model);
    report["observable"] = obs.observable;
    report["grammian_min_singular_value"] = obs.min_singular_value;
    const glu::Connectivity conn = glu::check_mean_connectivity(cfg.topology);
    report["mean_connected"] = conn.connected;
    report["mean_laplacian_lambda2"] = conn.lambda2;
    if (obs.observable) {
        report["optimal_gain"] = glu::to_json(glu::optimal_gain(model));
    }
    const glu::Matrix KG = cfg.glu.K * G;
    Eigen::SelfAdjointEigenSolver<glu::Matrix> kg(0.5 * (KG + KG.transpose()), Eigen::EigenvaluesOnly);
    const double lmin = kg.eigenvalues().minCoeff();
    report["lambda_min_KG"] = lmin;
    if (lmin > 0.0) {
        report["a_lower_bound"] = model.num_sensors() / (2.0 * lmin);
    }
    report["glu_a"] = cfg.glu.a;
    if (model.gamma0() == 0.0) {
        try {
            report["asymptotic_covariance"] = glu::to_json(glu::asymptotic_covariance(model, cfg.glu.a, cfg.glu.K));
        } catch (const glu::Error& e) {
            report["asymptotic_covariance"] = {{"error", e.what()}};
        }
    } else {
        report["asymptotic_covariance"] = {{"error", "defined for gamma0 = 0 only"}};
    }
    const glu::QuadraticFormBound q = glu::quadratic_form_bound(cfg.topology.mean_laplacian(), model, cfg.glu.K);
    report["quadratic_form_bound"] = {
        {"certified", q.certified}, {"threshold_ratio", q.threshold_ratio}, {"c4", q.c4}};
    std::cout << report.dump(2) << '\n';
    return kOk;
}

int cmd_lemma_oracle(long steps, int runs, std::uint64_t seed, double a2) {
    struct Setting {
        double d1;
        double d2;
        double a1;
    };
    const Setting settings[] = {{0.5, 1.0, 1.0}, {0.6, 1.2, 1.0}, {1.0, 1.5, 1.0}};
    std::printf("%-6s %-6s %-5s %-6s %-14s %-14s %-14s\n", "d1", "d2", "a1", "d0", "scaled_det", "scaled_rand_max",
                "y_det(T)");
    for (const Setting& s : settings) {
        const double d0 = 0.8 * (s.d2 - s.d1);
        const double scale = std::pow(static_cast<double>(steps) + 1.0, d0);
        const auto det = glu::scalar_recursion(1.0, {s.a1, s.d1, 0.0}, {a2, s.d2, 0.0}, steps);
        double worst = 0.0;
        for (int r = 0; r < runs; ++r) {
            glu::Rng rng = glu::Rng::stream(seed, static_cast<std::uint64_t>(r), 0, glu::StreamPurpose::auxiliary);
            const auto y = glu::scalar_recursion(1.0, {s.a1, s.d1, 1.0}, {a2, s.d2, 0.0}, steps, &rng);
            worst = std::max(worst, scale * y.back());
        }
        std::printf("%-6.2f %-6.2f %-5.2f %-6.3f %-14.6g %-14.6g %-14.6g\n", s.d1, s.d2, s.a1, d0,
                    scale * det.back(), worst, det.back());
    }
    return kOk;
}

int cmd_plot(const fs::path& results, const std::optional<std::string>& out) {
    const auto rows = glu::read_summary_csv(results / "summary.csv");
    const fs::path dir = out ? fs::path(*out) : results;
    for (const fs::path& p : glu::plot_summary(rows, dir)) {
        std::cout << "wrote " << p.string() << '\n';
    }
    return kOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Mixed time-scale distributed estimation: simulation and analysis tool"};
    app.require_subcommand(1);

    std::string config_path;
    std::string results_path;
    Overrides overrides;
    unsigned threads = 0;
    long steps = 1000000;
    int runs = 100;
    std::uint64_t oracle_seed = 1;
    double a2 = 1.0;
    std::optional<std::string> plot_out;

    auto* validate = app.add_subcommand("validate", "Check every model and parameter assumption");
    validate->add_option("config", config_path, "Experiment config (JSON)")->required();

    auto* run = app.add_subcommand("run", "Run the Monte Carlo experiment and write results");
    run->add_option("config", config_path, "Experiment config (JSON)")->required();
    run->add_option("--seed", overrides.seed, "Base seed");
    run->add_option("--trials", overrides.trials, "Number of trials");
    run->add_option("--iterations", overrides.iterations, "Iterations per trial");
    run->add_option("--out", overrides.out, "Output directory");
    run->add_flag("--allow-invalid", overrides.allow_invalid, "Run even if assumptions are violated");
    run->add_option("--threads", threads, "Worker threads (0 = all cores)");

    auto* analyze = app.add_subcommand("analyze", "Asymptotic covariance, optimal gain, quadratic-form bound");
    analyze->add_option("config", config_path, "Experiment config (JSON)")->required();

    auto* oracle = app.add_subcommand("lemma-oracle", "Scalar recursion sweeps for the decay lemmas");
    oracle->add_option("--steps", steps, "Iterations per run");
    oracle->add_option("--runs", runs, "Random-r1 runs per setting");
    oracle->add_option("--seed", oracle_seed, "Seed for random r1");
    oracle->add_option("--a2", a2, "Scale of r2");

    auto* plot = app.add_subcommand("plot", "Render SVG charts from a results directory");
    plot->add_option("results", results_path, "Results directory containing summary.csv")->required();
    plot->add_option("--out", plot_out, "Directory for the charts (default: results directory)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n\n" << app.help();
        return kRuntime;
    }

    try {
        if (*validate) {
            return cmd_validate(config_path);
        }
        if (*run) {
            return cmd_run(config_path, overrides, threads);
        }
        if (*analyze) {
            return cmd_analyze(config_path);
        }
        if (*oracle) {
            return cmd_lemma_oracle(steps, runs, oracle_seed, a2);
        }
        if (*plot) {
            return cmd_plot(results_path, plot_out);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kRuntime;
    }
    std::cerr << app.help();
    return kRuntime;
}
