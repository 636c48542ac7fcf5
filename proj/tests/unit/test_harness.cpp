#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "glu/errors.hpp"
#include "glu/harness.hpp"
#include "unit/support.hpp"

using namespace glu;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json small_config() {
    return json::parse(R"({
        "sensing": {"field_dim": 2, "sensors": {"cyclic_components": 4}, "noise_cov": "identity", "gamma0": 0},
        "topology": "gossip-uniform: 4",
        "glu": {"tau1": 1, "a_factor": 2, "tau2": 0.1, "b": 0.5, "K": "optimal"},
        "central": "mirror",
        "theta_star": [1.0, -0.5],
        "iterations": 2000,
        "trials": 6,
        "seed": 7,
        "record_every": 100
    })");
}

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("glu_unit_" + name);
    fs::remove_all(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

bool same_tree(const fs::path& a, const fs::path& b) {
    std::vector<fs::path> files;
    for (const auto& e : fs::recursive_directory_iterator(a)) {
        if (e.is_regular_file()) {
            files.push_back(fs::relative(e.path(), a));
        }
    }
    for (const fs::path& f : files) {
        if (!fs::exists(b / f) || slurp(a / f) != slurp(b / f)) {
            return false;
        }
    }
    return !files.empty();
}

} // namespace

TEST_CASE("config parsing") {
    const ExperimentConfig cfg = parse_config(small_config());
    CHECK(cfg.sensing.num_sensors() == 4);
    CHECK(cfg.sensing.field_dim() == 2);
    CHECK(grammian(cfg.sensing).isApprox(2.0 * Matrix::Identity(2, 2)));
    CHECK(cfg.glu.K.isApprox(0.5 * Matrix::Identity(2, 2)));
    // a = 2 * N / (2 lambda_min(KG)) = 2 * 4 / 2
    CHECK(cfg.glu.a == doctest::Approx(4.0));
    REQUIRE(cfg.central);
    CHECK(cfg.central->a_c == cfg.glu.a);
    CHECK(cfg.central->tau_c == cfg.glu.tau1);
    CHECK(cfg.central->K_c == cfg.glu.K);
    CHECK(cfg.topology.mean_laplacian().matrix().isApprox(
        (Matrix::Identity(4, 4) * 4.0 - Matrix::Ones(4, 4)) / 6.0));
    CHECK(cfg.x0 == Vector::Zero(2));
    CHECK(validate_config(cfg).empty());
    CHECK(default_rate_tau0(cfg.glu) == doctest::Approx(0.5 * (1.0 - 0.1 - 1.0 / 3.0)));
}

TEST_CASE("config parsing variants") {
    json j = small_config();
    j["topology"] = json::parse(R"({"kind": "bernoulli", "base": {"n": 4, "edges": [[1, 2], [2, 3], [3, 4]]}, "p": 0.5})");
    j["sensing"]["noise_cov"] = json::parse(R"({"diag": [1, 2, 3, 4]})");
    j["sensing"]["sensors"] = json::parse("[[[1, 0]], [[0, 1]], [[1, 1]], [1, -1]]");
    j["glu"]["K"] = "identity";
    j["glu"].erase("a_factor");
    j["glu"]["a"] = 5.0;
    const ExperimentConfig cfg = parse_config(j);
    CHECK(cfg.sensing.noise_cov().diagonal() == testing::vec({1, 2, 3, 4}));
    CHECK(cfg.sensing.sensor(3) == testing::mat({{1, -1}}));
    CHECK(cfg.glu.a == 5.0);
    CHECK(cfg.topology.mean_laplacian().matrix().isApprox(0.5 * laplacian(Graph::path(4)).matrix()));

    json bad = small_config();
    bad["glu"]["tau1"] = 0.4;
    CHECK_FALSE(validate_config(parse_config(bad)).empty());
    bad = small_config();
    bad["trials"] = 0;
    CHECK_THROWS_AS(parse_config(bad), ConfigError);
    bad = small_config();
    bad.erase("theta_star");
    CHECK_THROWS_AS(parse_config(bad), ConfigError);
    bad = small_config();
    bad["topology"] = "torus: 4";
    CHECK_THROWS_AS(parse_config(bad), ConfigError);
}

TEST_CASE("config hash follows the content") {
    const ExperimentConfig a = parse_config(small_config());
    const ExperimentConfig b = parse_config(small_config());
    json changed = small_config();
    changed["seed"] = 8;
    CHECK(config_hash(a) == config_hash(b));
    CHECK(config_hash(a) != config_hash(parse_config(changed)));
}

TEST_CASE("run_trial is deterministic and records at the stride") {
    const ExperimentConfig cfg = parse_config(small_config());
    const TrialRecord a = run_trial(cfg, 3);
    const TrialRecord b = run_trial(cfg, 3);
    REQUIRE(a.rows.size() == 21);
    for (std::size_t r = 0; r < a.rows.size(); ++r) {
        CHECK(a.rows[r].i == static_cast<long>(r) * 100);
        CHECK(a.rows[r].sensor_error == b.rows[r].sensor_error);
        CHECK(a.rows[r].gap == b.rows[r].gap);
        CHECK(a.rows[r].disagreement == b.rows[r].disagreement);
    }
    CHECK(a.final_scaled == b.final_scaled);
    CHECK(a.central_final_scaled == b.central_final_scaled);
    const TrialRecord c = run_trial(cfg, 4);
    CHECK(c.final_scaled != a.final_scaled);
}

TEST_CASE("record invariants") {
    json j = small_config();
    j["record_every"] = 7;
    const TrialRecord rec = run_trial(parse_config(j), 0);
    for (std::size_t r = 1; r < rec.rows.size(); ++r) {
        CHECK(rec.rows[r].i > rec.rows[r - 1].i);
    }
    CHECK(rec.rows.back().i == 2000);
    for (const TrialRow& row : rec.rows) {
        CHECK(row.avg_error >= 0.0);
        CHECK(row.disagreement >= 0.0);
        CHECK(row.central_error >= 0.0);
        for (double v : row.sensor_error) {
            CHECK(v >= 0.0);
        }
        for (double v : row.gap) {
            CHECK(v >= 0.0);
        }
    }
}

TEST_CASE("noiseless run from the truth has zero error") {
    json j = small_config();
    j["sensing"]["noise_cov"] = "zero";
    j["x0"] = j["theta_star"];
    const TrialRecord rec = run_trial(parse_config(j), 0);
    for (const TrialRow& row : rec.rows) {
        CHECK(row.avg_error == 0.0);
        CHECK(row.disagreement == 0.0);
        CHECK(row.central_error == 0.0);
        for (double v : row.sensor_error) {
            CHECK(v == 0.0);
        }
    }
}

TEST_CASE("zero iterations records only the initial snapshot") {
    json j = small_config();
    j["iterations"] = 0;
    const TrialRecord rec = run_trial(parse_config(j), 0);
    REQUIRE(rec.rows.size() == 1);
    CHECK(rec.rows[0].i == 0);
}

TEST_CASE("divergence guard stops the trial") {
    json j = small_config();
    j["glu"]["tau1"] = 0.3;
    j["glu"]["tau2"] = 0.1;
    j["glu"].erase("a_factor");
    j["glu"]["a"] = 50.0;
    j["central"] = json::parse(R"({"tau_c": 0.3, "a_c": 50.0, "K_c": "identity"})");
    j["allow_invalid"] = true;
    j["divergence_guard"] = 1e6;
    const TrialRecord rec = run_trial(parse_config(j), 0);
    CHECK(rec.diverged);
    CHECK(rec.rows.back().i < 2000);
}

TEST_CASE("single-trial aggregate equals the trial statistics") {
    json j = small_config();
    j["trials"] = 1;
    const ExperimentConfig cfg = parse_config(j);
    RunOptions opts;
    opts.write_files = false;
    opts.keep_trials = true;
    const ExperimentResult res = run_experiment(cfg, opts);
    const TrialRecord& t = res.trials.at(0);
    REQUIRE(res.summary.rows.size() == t.rows.size());
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const SummaryRow& s = res.summary.rows[r];
        auto errs = t.rows[r].sensor_error;
        std::sort(errs.begin(), errs.end());
        CHECK(s.median_error == doctest::Approx(0.5 * (errs[1] + errs[2])));
        CHECK(s.mean_error == doctest::Approx(t.mean_sensor_error(r)));
        CHECK(s.median_disagreement == t.rows[r].disagreement);
        CHECK(s.median_gap == t.mean_gap(r));
        CHECK(s.median_central_error == t.rows[r].central_error);
    }
}

TEST_CASE("aggregate is invariant to trial order and rejects mixed schemas") {
    const ExperimentConfig cfg = parse_config(small_config());
    std::vector<TrialRecord> trials;
    for (int k = 0; k < 5; ++k) {
        trials.push_back(run_trial(cfg, k));
    }
    const ExperimentSummary a = aggregate(cfg, trials);
    std::reverse(trials.begin(), trials.end());
    const ExperimentSummary b = aggregate(cfg, trials);
    CHECK(summary_to_json(a) == summary_to_json(b));

    trials[2].has_central = false;
    CHECK_THROWS_AS(aggregate(cfg, trials), ContractViolation);
}

TEST_CASE("median disagreement shrinks over the run") {
    json j = small_config();
    j["iterations"] = 20000;
    j["record_every"] = 1000;
    const ExperimentConfig cfg = parse_config(j);
    RunOptions opts;
    opts.write_files = false;
    const ExperimentSummary s = run_experiment(cfg, opts).summary;
    const auto at = [&](long i) {
        return std::find_if(s.rows.begin(), s.rows.end(), [&](const SummaryRow& r) { return r.i == i; })
            ->median_disagreement;
    };
    CHECK(at(20000) < at(2000));
    REQUIRE(s.disagreement_fit);
    REQUIRE(s.gap_fit);
}

TEST_CASE("run_experiment writes reproducible result files") {
    json j = small_config();
    const fs::path first = scratch("first");
    const fs::path second = scratch("second");
    j["outputs"] = first.string();
    run_experiment(parse_config(j));
    j["outputs"] = second.string();
    const ExperimentResult res = run_experiment(parse_config(j));

    CHECK(fs::exists(first / "summary.csv"));
    CHECK(fs::exists(first / "summary.json"));
    CHECK(fs::exists(first / "final_scaled.csv"));
    CHECK(fs::exists(first / "trials" / "trial_0005.csv"));
    // config.json records the output directory, so compare everything else
    fs::remove(first / "config.json");
    fs::remove(second / "config.json");
    CHECK(same_tree(first, second));

    const std::string csv = slurp(first / "summary.csv");
    CHECK(csv.rfind("# config=" + res.summary.config_hash, 0) == 0);
    const auto rows = read_summary_csv(first / "summary.csv");
    REQUIRE(rows.size() == res.summary.rows.size());
    CHECK(rows.back().median_error == res.summary.rows.back().median_error);

    const json summary = json::parse(slurp(first / "summary.json"));
    CHECK(summary.at("num_sensors") == 4);
    CHECK(summary.at("gap_fit").is_object());

    const auto charts = plot_summary(rows, first / "charts");
    CHECK(charts.size() == 3);
    for (const fs::path& p : charts) {
        CHECK(slurp(p).find("<polyline") != std::string::npos);
    }
    fs::remove_all(first);
    fs::remove_all(second);
}

TEST_CASE("invalid configs are refused unless allowed") {
    json j = small_config();
    j["glu"]["tau1"] = 0.4;
    RunOptions opts;
    opts.write_files = false;
    CHECK_THROWS_AS(run_experiment(parse_config(j), opts), ConfigError);
    j["allow_invalid"] = true;
    CHECK_NOTHROW(run_experiment(parse_config(j), opts));
}
