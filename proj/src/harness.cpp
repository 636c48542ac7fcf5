#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "glu/errors.hpp"
#include "glu/harness.hpp"

namespace glu {

using nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double median(std::vector<double> v) {
    if (v.empty()) {
        return kNaN;
    }
    const auto mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    const double hi = v[mid];
    if (v.size() % 2 == 1) {
        return hi;
    }
    const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lo + hi);
}

std::string num(double v) {
    if (std::isnan(v)) {
        return "nan";
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

TrialRow snapshot(const NetworkState& x, const CentralState* u, const Vector& theta) {
    TrialRow row;
    row.i = x.i;
    row.avg_error = (network_average(x) - theta).norm();
    row.disagreement = disagreement(x);
    row.central_error = u != nullptr ? (u->u - theta).norm() : kNaN;
    row.sensor_error.reserve(static_cast<std::size_t>(x.num_sensors));
    for (int n = 0; n < x.num_sensors; ++n) {
        row.sensor_error.push_back((x.sensor(n) - theta).norm());
        if (u != nullptr) {
            row.gap.push_back((x.sensor(n) - u->u).norm());
        }
    }
    return row;
}

// Rate fits use the last decade of iterations, [i_end/10, i_end].
RateWindow tail_window(const std::vector<TrajectoryPoint>& pts) {
    const long end = pts.empty() ? 0 : pts.back().i;
    return {std::max(1L, end / 10), end};
}

bool blown_up(const Vector& v, double guard) {
    return !v.allFinite() || v.cwiseAbs().maxCoeff() > guard;
}

} // namespace

double TrialRecord::mean_gap(std::size_t row) const {
    const auto& g = rows.at(row).gap;
    if (g.empty()) {
        return kNaN;
    }
    double s = 0.0;
    for (double v : g) {
        s += v;
    }
    return s / static_cast<double>(g.size());
}

double TrialRecord::mean_sensor_error(std::size_t row) const {
    const auto& e = rows.at(row).sensor_error;
    double s = 0.0;
    for (double v : e) {
        s += v;
    }
    return e.empty() ? kNaN : s / static_cast<double>(e.size());
}

TrialRecord run_trial(const ExperimentConfig& config, int trial_index) {
    const SensingModel& model = config.sensing;
    const int n = model.num_sensors();
    const int m = model.field_dim();
    if (config.theta_star.size() != m || config.x0.size() != m) {
        throw ContractViolation("theta* and x0 must have field_dim entries");
    }

    TrialRecord rec;
    rec.trial = trial_index;
    rec.has_central = config.central.has_value();

    NetworkState x = NetworkState::consensus(n, config.x0);
    std::optional<CentralState> u;
    if (config.central) {
        u = CentralState{config.x0, 0};
    }
    const auto trial_key = static_cast<std::uint64_t>(trial_index);
    rec.rows.push_back(snapshot(x, u ? &*u : nullptr, config.theta_star));

    for (long i = 0; i < config.iterations; ++i) {
        Rng topo_rng = Rng::stream(config.seed, trial_key, static_cast<std::uint64_t>(i), StreamPurpose::topology);
        Rng noise_rng = Rng::stream(config.seed, trial_key, static_cast<std::uint64_t>(i), StreamPurpose::noise);
        const Laplacian l = config.topology.sample(topo_rng);
        const StackedObservation obs = sample_observation(model, config.theta_star, i, noise_rng);

        x = glu_step(x, l, obs, config.glu, model);
        if (u) {
            *u = centralized_step(*u, obs, *config.central, model);
        }

        const bool diverged =
            blown_up(x.x, config.divergence_guard) || (u && blown_up(u->u, config.divergence_guard));
        if (diverged || x.i % config.record_every == 0 || x.i == config.iterations) {
            rec.rows.push_back(snapshot(x, u ? &*u : nullptr, config.theta_star));
        }
        if (diverged) {
            rec.diverged = true;
            break;
        }
    }

    const double scale = std::sqrt(static_cast<double>(x.i) + 1.0);
    rec.final_scaled.resize(n, m);
    for (int s = 0; s < n; ++s) {
        rec.final_scaled.row(s) = scale * (x.sensor(s) - config.theta_star).transpose();
    }
    if (u) {
        rec.central_final_scaled = scale * (u->u - config.theta_star);
    }
    return rec;
}

ExperimentSummary aggregate(const ExperimentConfig& config, std::span<const TrialRecord> trials) {
    if (trials.empty()) {
        throw ContractViolation("nothing to aggregate");
    }
    ExperimentSummary sum;
    sum.config_hash = config_hash(config);
    sum.num_sensors = config.sensing.num_sensors();
    sum.field_dim = config.sensing.field_dim();
    sum.has_central = trials.front().has_central;
    sum.tau0 = rate_tau0(config);

    struct Bucket {
        std::vector<double> sensor_errors;
        std::vector<double> avg_errors;
        std::vector<double> disagreements;
        std::vector<double> gaps;
        std::vector<double> central;
        std::size_t trials = 0;
    };
    std::map<long, Bucket> buckets;
    for (const TrialRecord& t : trials) {
        if (t.has_central != sum.has_central || t.rows.empty()) {
            throw ContractViolation("trial " + std::to_string(t.trial) + " has a mismatched record schema");
        }
        for (std::size_t r = 0; r < t.rows.size(); ++r) {
            const TrialRow& row = t.rows[r];
            if (static_cast<int>(row.sensor_error.size()) != sum.num_sensors ||
                (sum.has_central && static_cast<int>(row.gap.size()) != sum.num_sensors)) {
                throw ContractViolation("trial " + std::to_string(t.trial) + " has a mismatched record schema");
            }
            Bucket& b = buckets[row.i];
            ++b.trials;
            b.sensor_errors.insert(b.sensor_errors.end(), row.sensor_error.begin(), row.sensor_error.end());
            b.avg_errors.push_back(row.avg_error);
            b.disagreements.push_back(row.disagreement);
            if (sum.has_central) {
                b.gaps.push_back(t.mean_gap(r));
                b.central.push_back(row.central_error);
            }
        }
        if (t.diverged) {
            ++sum.diverged_trials;
        }
    }

    for (auto& [i, b] : buckets) {
        SummaryRow row;
        row.i = i;
        row.trials = b.trials;
        double total = 0.0;
        for (double v : b.sensor_errors) {
            total += v;
        }
        row.mean_error = total / static_cast<double>(b.sensor_errors.size());
        row.median_error = median(b.sensor_errors);
        row.median_avg_error = median(b.avg_errors);
        row.median_disagreement = median(b.disagreements);
        row.median_gap = median(b.gaps);
        row.median_central_error = median(b.central);
        sum.rows.push_back(row);
    }

    sum.initial_error = (config.x0 - config.theta_star).norm();
    std::vector<double> terminal;
    std::vector<double> terminal_central;
    std::size_t grew = 0;
    for (const TrialRecord& t : trials) {
        const TrialRow& last = t.rows.back();
        terminal.insert(terminal.end(), last.sensor_error.begin(), last.sensor_error.end());
        if (sum.has_central) {
            terminal_central.push_back(last.central_error);
            if (last.central_error >= t.rows.front().central_error) {
                ++grew;
            }
        }
    }
    sum.terminal_median_error = median(terminal);
    sum.terminal_median_central_error = median(terminal_central);
    sum.central_growth_fraction = static_cast<double>(grew) / static_cast<double>(trials.size());

    auto curve = [&](auto field) {
        std::vector<TrajectoryPoint> pts;
        for (const SummaryRow& r : sum.rows) {
            const double v = field(r);
            if (r.i > 0 && std::isfinite(v)) {
                pts.push_back({r.i, v});
            }
        }
        return pts;
    };
    try {
        const auto pts = curve([](const SummaryRow& r) { return r.median_disagreement; });
        sum.disagreement_fit = rate_fit(pts, tail_window(pts));
    } catch (const Error&) {
    }
    if (sum.has_central) {
        try {
            const auto pts = curve([](const SummaryRow& r) { return r.median_gap; });
            sum.gap_fit = rate_fit(pts, tail_window(pts));
        } catch (const Error&) {
        }
    }

    // Asymptotic normality comparison only makes sense in the stationary,
    // tau1 = 1 regime with enough trials.
    if (sum.has_central && config.sensing.gamma0() == 0.0 && config.glu.tau1 == 1.0 && trials.size() >= 200) {
        try {
            sum.asymptotic = asymptotic_covariance(config.sensing, config.glu.a, config.glu.K);
        } catch (const Error&) {
        }
        std::vector<Vector> central_samples;
        central_samples.reserve(trials.size());
        for (const TrialRecord& t : trials) {
            central_samples.push_back(t.central_final_scaled);
        }
        const Matrix ref =
            sum.asymptotic ? sum.asymptotic->S_c : Matrix::Identity(sum.field_dim, sum.field_dim);
        sum.central_normality = normality_check(central_samples, ref);
        double worst = 0.0;
        for (int s = 0; s < sum.num_sensors; ++s) {
            std::vector<Vector> samples;
            samples.reserve(trials.size());
            for (const TrialRecord& t : trials) {
                samples.emplace_back(t.final_scaled.row(s).transpose());
            }
            sum.sensor_normality.push_back(normality_check(samples, ref));
            const Matrix& cc = sum.central_normality->empirical_cov;
            worst = std::max(worst, (sum.sensor_normality.back().empirical_cov - cc).norm() / cc.norm());
        }
        sum.distributed_vs_central_cov = worst;
    }
    return sum;
}

ExperimentResult run_experiment(const ExperimentConfig& config, const RunOptions& options) {
    if (!config.allow_invalid) {
        const Violations v = validate_config(config);
        if (!v.empty()) {
            std::string msg = "config violates assumptions:";
            for (const Violation& x : v) {
                msg += "\n  " + x.condition + ": " + x.detail;
            }
            throw ConfigError(msg);
        }
    }

    std::vector<TrialRecord> records(static_cast<std::size_t>(config.trials));
    unsigned threads = options.threads != 0 ? options.threads : std::max(1u, std::thread::hardware_concurrency());
    threads = std::min<unsigned>(threads, static_cast<unsigned>(config.trials));

    std::atomic<int> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (int k = next++; k < config.trials; k = next++) {
            try {
                records[static_cast<std::size_t>(k)] = run_trial(config, k);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) {
                    failure = std::current_exception();
                }
                next = config.trials;
            }
        }
    };
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < threads; ++t) {
            pool.emplace_back(worker);
        }
    }
    if (failure) {
        std::rethrow_exception(failure);
    }

    ExperimentResult result;
    result.summary = aggregate(config, records);

    if (options.write_files) {
        namespace fs = std::filesystem;
        const fs::path dir = config.outputs;
        fs::create_directories(dir / "trials");
        {
            std::ofstream cfg(dir / "config.json");
            cfg << config.source.dump(2) << '\n';
        }
        for (const TrialRecord& t : records) {
            char name[32];
            std::snprintf(name, sizeof name, "trial_%04d.csv", t.trial);
            write_trial_csv(dir / "trials" / name, result.summary.config_hash, t);
        }
        std::ofstream fin(dir / "final_scaled.csv");
        if (!fin) {
            throw Error("cannot write " + (dir / "final_scaled.csv").string());
        }
        fin << "# config=" << result.summary.config_hash << " columns=trial,sensor,";
        for (int c = 0; c < result.summary.field_dim; ++c) {
            fin << (c ? "," : "") << "v" << c + 1;
        }
        fin << " sensor=0 is the centralized estimate\n";
        for (const TrialRecord& t : records) {
            for (Eigen::Index s = 0; s < t.final_scaled.rows(); ++s) {
                fin << t.trial << ',' << s + 1;
                for (Eigen::Index c = 0; c < t.final_scaled.cols(); ++c) {
                    fin << ',' << num(t.final_scaled(s, c));
                }
                fin << '\n';
            }
            if (t.has_central) {
                fin << t.trial << ",0";
                for (Eigen::Index c = 0; c < t.central_final_scaled.size(); ++c) {
                    fin << ',' << num(t.central_final_scaled(c));
                }
                fin << '\n';
            }
        }
        write_summary(dir, result.summary);
    }
    if (options.keep_trials) {
        result.trials = std::move(records);
    }
    return result;
}

void write_trial_csv(const std::filesystem::path& path, const std::string& hash, const TrialRecord& record) {
    std::ofstream out(path);
    if (!out) {
        throw Error("cannot write " + path.string());
    }
    const std::size_t n = record.rows.empty() ? 0 : record.rows.front().sensor_error.size();
    out << "# config=" << hash << " trial=" << record.trial << " diverged=" << (record.diverged ? 1 : 0)
        << " columns=i,avg_error,disagreement,central_error";
    for (std::size_t s = 0; s < n; ++s) {
        out << ",err_" << s + 1;
    }
    if (record.has_central) {
        for (std::size_t s = 0; s < n; ++s) {
            out << ",gap_" << s + 1;
        }
    }
    out << '\n';
    for (const TrialRow& r : record.rows) {
        out << r.i << ',' << num(r.avg_error) << ',' << num(r.disagreement) << ',' << num(r.central_error);
        for (double v : r.sensor_error) {
            out << ',' << num(v);
        }
        for (double v : r.gap) {
            out << ',' << num(v);
        }
        out << '\n';
    }
}

json to_json(const Matrix& m) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            row.push_back(m(r, c));
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

namespace {

json vec_json(const Vector& v) {
    json out = json::array();
    for (Eigen::Index k = 0; k < v.size(); ++k) {
        out.push_back(v(k));
    }
    return out;
}

} // namespace

json to_json(const RateFit& fit) {
    return {{"exponent", fit.exponent},
            {"intercept", fit.intercept},
            {"r_squared", fit.r_squared},
            {"window", {fit.window.i_start, fit.window.i_end}},
            {"points", fit.points},
            {"dropped_zeros", fit.dropped_zeros}};
}

json to_json(const AsymptoticCovariance& cov) {
    return {{"S_c", to_json(cov.S_c)},
            {"Sigma1", to_json(cov.Sigma1)},
            {"S1", to_json(cov.S1)},
            {"hurwitz_margin", cov.hurwitz_margin}};
}

json to_json(const NormalityReport& report) {
    return {{"cov_rel_error", report.cov_rel_error},
            {"empirical_cov", to_json(report.empirical_cov)},
            {"mean", vec_json(report.mean)},
            {"skewness", vec_json(report.skewness)},
            {"excess_kurtosis", vec_json(report.excess_kurtosis)},
            {"samples", report.samples}};
}

json summary_to_json(const ExperimentSummary& s) {
    json j;
    j["config_hash"] = s.config_hash;
    j["num_sensors"] = s.num_sensors;
    j["field_dim"] = s.field_dim;
    j["has_central"] = s.has_central;
    j["initial_error"] = s.initial_error;
    j["terminal_median_error"] = s.terminal_median_error;
    j["terminal_median_central_error"] =
        std::isnan(s.terminal_median_central_error) ? json(nullptr) : json(s.terminal_median_central_error);
    j["central_growth_fraction"] = s.central_growth_fraction;
    j["diverged_trials"] = s.diverged_trials;
    j["tau0"] = s.tau0;
    j["disagreement_fit"] = s.disagreement_fit ? to_json(*s.disagreement_fit) : json(nullptr);
    j["gap_fit"] = s.gap_fit ? to_json(*s.gap_fit) : json(nullptr);
    j["asymptotic_covariance"] = s.asymptotic ? to_json(*s.asymptotic) : json(nullptr);
    json normal = json::array();
    for (const NormalityReport& r : s.sensor_normality) {
        normal.push_back(to_json(r));
    }
    j["sensor_normality"] = std::move(normal);
    j["central_normality"] = s.central_normality ? to_json(*s.central_normality) : json(nullptr);
    j["distributed_vs_central_cov"] =
        s.distributed_vs_central_cov ? json(*s.distributed_vs_central_cov) : json(nullptr);
    return j;
}

void write_summary(const std::filesystem::path& dir, const ExperimentSummary& s) {
    std::ofstream csv(dir / "summary.csv");
    if (!csv) {
        throw Error("cannot write " + (dir / "summary.csv").string());
    }
    csv << "# config=" << s.config_hash
        << " columns=i,trials,mean_error,median_error,median_avg_error,median_disagreement,median_gap,"
           "median_central_error\n";
    for (const SummaryRow& r : s.rows) {
        csv << r.i << ',' << r.trials << ',' << num(r.mean_error) << ',' << num(r.median_error) << ','
            << num(r.median_avg_error) << ',' << num(r.median_disagreement) << ',' << num(r.median_gap) << ','
            << num(r.median_central_error) << '\n';
    }
    std::ofstream js(dir / "summary.json");
    if (!js) {
        throw Error("cannot write " + (dir / "summary.json").string());
    }
    js << summary_to_json(s).dump(2) << '\n';
}

std::vector<SummaryRow> read_summary_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error("cannot open " + path.string());
    }
    std::vector<SummaryRow> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') {
            continue;
        }
        std::vector<double> v;
        std::stringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) {
            v.push_back(cell == "nan" ? kNaN : std::stod(cell));
        }
        if (v.size() != 8) {
            throw Error("summary row has " + std::to_string(v.size()) + " columns, expected 8");
        }
        rows.push_back({static_cast<long>(v[0]), static_cast<std::size_t>(v[1]), v[2], v[3], v[4], v[5], v[6], v[7]});
    }
    return rows;
}

} // namespace glu
