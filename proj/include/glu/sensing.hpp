#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "glu/graph.hpp"
#include "glu/rng.hpp"

namespace glu {

enum class NoiseDist {
    gaussian,
    uniform_scaled, // uniform on [-sqrt(3), sqrt(3)] before correlation
    laplace_scaled, // Laplace with scale 1/sqrt(2) before correlation
};

const char* to_string(NoiseDist d) noexcept;
NoiseDist noise_dist_from_string(const std::string& name);

/// Linear observation model with fading noise:
///   z_n(i) = H_n theta* + (i+1)^gamma0 * zeta_n(i),
/// where the stacked zeta(i) is zero-mean with covariance noise_cov and
/// independent across i.
///
/// Observation matrices are time-invariant. The model keeps a symmetric PSD
/// square root of noise_cov to correlate i.i.d. unit-variance draws.
class SensingModel {
public:
    struct Options {
        double epsilon1 = 1.0;
        /// Skips the gamma0 < 0.5 check; needed to simulate non-consistent regimes.
        bool allow_fading_beyond_half = false;
    };

    SensingModel(int field_dim, std::vector<Matrix> sensors, Matrix noise_cov, double gamma0,
                 NoiseDist noise_dist);
    SensingModel(int field_dim, std::vector<Matrix> sensors, Matrix noise_cov, double gamma0,
                 NoiseDist noise_dist, Options options);

    int field_dim() const noexcept { return field_dim_; }
    int num_sensors() const noexcept { return static_cast<int>(sensors_.size()); }
    const Matrix& sensor(int n) const { return sensors_.at(static_cast<std::size_t>(n)); }
    const std::vector<Matrix>& sensors() const noexcept { return sensors_; }
    int obs_dim(int n) const { return static_cast<int>(sensor(n).rows()); }
    /// Offset of sensor n's block inside the stacked observation vector.
    int obs_offset(int n) const { return offsets_.at(static_cast<std::size_t>(n)); }
    int total_obs_dim() const noexcept { return offsets_.back(); }

    const Matrix& noise_cov() const noexcept { return noise_cov_; }
    const Matrix& noise_factor() const noexcept { return noise_factor_; }
    double gamma0() const noexcept { return gamma0_; }
    NoiseDist noise_dist() const noexcept { return noise_dist_; }
    double epsilon1() const noexcept { return epsilon1_; }

private:
    int field_dim_;
    std::vector<Matrix> sensors_;
    std::vector<int> offsets_;
    Matrix noise_cov_;
    Matrix noise_factor_;
    double gamma0_;
    NoiseDist noise_dist_;
    double epsilon1_;
};

/// Observations z_n(i) for every sensor at iteration i.
struct StackedObservation {
    long iteration = 0;
    std::vector<Vector> per_sensor;
};

/// gamma(i) = (i+1)^gamma0. Not range-checked on gamma0.
double fading_gain(long i, double gamma0);

/// G = sum_n H_n^T H_n.
Matrix grammian(const SensingModel& model);

struct Observability {
    bool observable = false;
    double min_singular_value = 0.0;
};

Observability check_global_observability(const SensingModel& model, double rank_tol = 1e-10);

/// Symmetric PSD square root via eigendecomposition. Eigenvalues in
/// [-neg_tol, 0] are clamped; anything below -neg_tol throws ModelError.
Matrix psd_sqrt(const Matrix& s, double neg_tol = 1e-10);

StackedObservation sample_observation(const SensingModel& model, const Vector& theta_star, long i,
                                      Rng& rng);

/// ||J1(z)||: stacked gap between each sensor's gained innovation K H_n^T z_n
/// and the network average of those innovations.
double innovation_dispersion(const SensingModel& model, const StackedObservation& obs, const Matrix& K);

/// Block-diagonal of H_n^T (size NM x sum M_n). Undefined symbol in the
/// compact recursion; inferred so that the per-sensor and stacked forms agree.
Matrix stacked_observation_transpose(const SensingModel& model);

/// Block-diagonal of H_n^T H_n (size NM x NM), inferred the same way.
Matrix stacked_local_grammians(const SensingModel& model);

} // namespace glu
