#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "glu/analysis.hpp"
#include "glu/estimators.hpp"
#include "glu/graph.hpp"
#include "glu/sensing.hpp"

namespace glu {

struct ExperimentConfig {
    SensingModel sensing;
    TopologyModel topology;
    GluParams glu;
    std::optional<CentralParams> central;
    Vector theta_star;
    Vector x0; // common initial estimate for every sensor and the centralized recursion
    long iterations = 1;
    int trials = 1;
    std::uint64_t seed = 0;
    long record_every = 1;
    std::string outputs = "results";
    bool allow_invalid = false;
    double divergence_guard = 1e12;
    /// Exponent used for the rate checks on disagreement and gap curves.
    /// Defaults to half of tau1 - tau2 - 1/(2 + epsilon1).
    std::optional<double> rate_tau0;
    /// Canonical JSON the config was built from; hashed into result headers.
    nlohmann::json source;
};

/// Parses the JSON config layout documented in README.md. Relative paths
/// (edge list files) resolve against `base_dir`.
ExperimentConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);

/// Hex FNV-1a hash of the canonical config JSON, ignoring "outputs".
std::string config_hash(const ExperimentConfig& config);

/// Every validator over the config: observation model, gossip connectivity,
/// GLU weights and gain, centralized "good" window.
Violations validate_config(const ExperimentConfig& config);

double default_rate_tau0(const GluParams& p);
double rate_tau0(const ExperimentConfig& config);

struct TrialRow {
    long i = 0;
    double avg_error = 0.0;    // ||x_avg - theta*||
    double disagreement = 0.0; // ||x - 1 (x) x_avg||
    double central_error = 0.0;
    std::vector<double> sensor_error; // ||x_n - theta*||
    std::vector<double> gap;          // ||x_n - u||, empty without central params
};

struct TrialRecord {
    int trial = 0;
    std::vector<TrialRow> rows;
    Matrix final_scaled;         // N x M, sqrt(i+1)(x_n(i) - theta*) at the last row
    Vector central_final_scaled; // empty without central params
    bool diverged = false;
    bool has_central = false;

    double mean_gap(std::size_t row) const;
    double mean_sensor_error(std::size_t row) const;
};

/// Deterministic in (config.seed, trial_index). Topology and noise draws at
/// iteration i come from independent keyed streams, and both recursions see
/// the same observations.
TrialRecord run_trial(const ExperimentConfig& config, int trial_index);

struct SummaryRow {
    long i = 0;
    std::size_t trials = 0;
    double mean_error = 0.0;   // over trials and sensors
    double median_error = 0.0; // over trials and sensors
    double median_avg_error = 0.0;
    double median_disagreement = 0.0;
    double median_gap = 0.0; // of the per-trial sensor mean
    double median_central_error = 0.0;
};

struct ExperimentSummary {
    std::string config_hash;
    int num_sensors = 0;
    int field_dim = 0;
    bool has_central = false;
    std::vector<SummaryRow> rows;
    double initial_error = 0.0;
    double terminal_median_error = 0.0;
    double terminal_median_central_error = 0.0;
    double central_growth_fraction = 0.0; // trials with central terminal error >= initial error
    std::size_t diverged_trials = 0;
    double tau0 = 0.0;
    std::optional<RateFit> disagreement_fit;
    std::optional<RateFit> gap_fit;
    std::optional<AsymptoticCovariance> asymptotic;
    std::vector<NormalityReport> sensor_normality; // one per sensor
    std::optional<NormalityReport> central_normality;
    /// Relative Frobenius gap between distributed and centralized empirical covariances (max over sensors).
    std::optional<double> distributed_vs_central_cov;
};

struct RunOptions {
    bool write_files = true;
    bool keep_trials = false;
    unsigned threads = 0; // 0 = hardware concurrency
};

struct ExperimentResult {
    ExperimentSummary summary;
    std::vector<TrialRecord> trials; // filled iff keep_trials
};

ExperimentResult run_experiment(const ExperimentConfig& config, const RunOptions& options = {});

/// Reduce completed trials; throws ContractViolation on mismatched schemas.
ExperimentSummary aggregate(const ExperimentConfig& config, std::span<const TrialRecord> trials);

void write_trial_csv(const std::filesystem::path& path, const std::string& hash, const TrialRecord& record);
void write_summary(const std::filesystem::path& dir, const ExperimentSummary& summary);
nlohmann::json summary_to_json(const ExperimentSummary& summary);

nlohmann::json to_json(const RateFit& fit);
nlohmann::json to_json(const AsymptoticCovariance& cov);
nlohmann::json to_json(const NormalityReport& report);
nlohmann::json to_json(const Matrix& m);

/// Reads summary.csv back into rows (used by the plot command).
std::vector<SummaryRow> read_summary_csv(const std::filesystem::path& path);

/// Writes log-log SVG line charts of the summary curves into `dir`; returns
/// the files written.
std::vector<std::filesystem::path> plot_summary(const std::vector<SummaryRow>& rows,
                                                const std::filesystem::path& dir);

} // namespace glu
