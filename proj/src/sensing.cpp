#include "glu/sensing.hpp"

#include <cmath>
#include <random>
#include <string>

#include "glu/errors.hpp"

namespace glu {

const char* to_string(NoiseDist d) noexcept {
    switch (d) {
    case NoiseDist::gaussian:
        return "gaussian";
    case NoiseDist::uniform_scaled:
        return "uniform";
    case NoiseDist::laplace_scaled:
        return "laplace";
    }
    return "unknown";
}

NoiseDist noise_dist_from_string(const std::string& name) {
    if (name == "gaussian" || name == "normal") {
        return NoiseDist::gaussian;
    }
    if (name == "uniform") {
        return NoiseDist::uniform_scaled;
    }
    if (name == "laplace") {
        return NoiseDist::laplace_scaled;
    }
    throw ModelError("unknown noise distribution '" + name + "'");
}

SensingModel::SensingModel(int field_dim, std::vector<Matrix> sensors, Matrix noise_cov, double gamma0,
                           NoiseDist noise_dist)
    : SensingModel(field_dim, std::move(sensors), std::move(noise_cov), gamma0, noise_dist, Options{}) {}

SensingModel::SensingModel(int field_dim, std::vector<Matrix> sensors, Matrix noise_cov, double gamma0,
                           NoiseDist noise_dist, Options options)
    : field_dim_(field_dim),
      sensors_(std::move(sensors)),
      noise_cov_(std::move(noise_cov)),
      gamma0_(gamma0),
      noise_dist_(noise_dist),
      epsilon1_(options.epsilon1) {
    if (field_dim_ <= 0) {
        throw ModelError("field dimension must be positive");
    }
    if (sensors_.empty()) {
        throw ModelError("sensing model needs at least one sensor");
    }
    offsets_.reserve(sensors_.size() + 1);
    offsets_.push_back(0);
    for (std::size_t n = 0; n < sensors_.size(); ++n) {
        const Matrix& h = sensors_[n];
        if (h.cols() != field_dim_) {
            throw ModelError("observation matrix of sensor " + std::to_string(n + 1) + " has " +
                             std::to_string(h.cols()) + " columns, expected " + std::to_string(field_dim_));
        }
        if (h.rows() <= 0) {
            throw ModelError("observation matrix of sensor " + std::to_string(n + 1) + " has no rows");
        }
        offsets_.push_back(offsets_.back() + static_cast<int>(h.rows()));
    }
    const int total = offsets_.back();
    if (noise_cov_.rows() != total || noise_cov_.cols() != total) {
        throw ModelError("noise covariance must be " + std::to_string(total) + "x" + std::to_string(total));
    }
    const double scale = std::max(1.0, noise_cov_.cwiseAbs().maxCoeff());
    if ((noise_cov_ - noise_cov_.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
        throw ModelError("noise covariance must be symmetric");
    }
    if (!(gamma0_ >= 0.0)) {
        throw ModelError("fading exponent gamma0 must be non-negative");
    }
    if (!options.allow_fading_beyond_half && !(gamma0_ < 0.5)) {
        throw ModelError("fading exponent gamma0 must be < 0.5");
    }
    if (!(epsilon1_ > 0.0)) {
        throw ModelError("moment margin epsilon1 must be positive");
    }
    noise_factor_ = psd_sqrt(noise_cov_);
}

double fading_gain(long i, double gamma0) { return std::pow(static_cast<double>(i) + 1.0, gamma0); }

Matrix grammian(const SensingModel& model) {
    const int m = model.field_dim();
    Matrix g = Matrix::Zero(m, m);
    for (const Matrix& h : model.sensors()) {
        g.noalias() += h.transpose() * h;
    }
    return 0.5 * (g + g.transpose());
}

Observability check_global_observability(const SensingModel& model, double rank_tol) {
    Eigen::JacobiSVD<Matrix> svd(grammian(model));
    const Vector& s = svd.singularValues();
    const double smax = s(0);
    const double smin = s(s.size() - 1);
    return {smax > 0.0 && smin > rank_tol * smax, smin};
}

Matrix psd_sqrt(const Matrix& s, double neg_tol) {
    if (s.rows() != s.cols()) {
        throw ModelError("covariance must be square");
    }
    if (s.size() == 0) {
        return s;
    }
    Eigen::SelfAdjointEigenSolver<Matrix> eig(s);
    if (eig.info() != Eigen::Success) {
        throw ModelError("eigendecomposition of covariance failed");
    }
    Vector lambda = eig.eigenvalues();
    for (Eigen::Index k = 0; k < lambda.size(); ++k) {
        if (lambda(k) < -neg_tol) {
            throw ModelError("covariance is not positive semidefinite (eigenvalue " + std::to_string(lambda(k)) +
                             ")");
        }
        lambda(k) = std::sqrt(std::max(0.0, lambda(k)));
    }
    const Matrix& v = eig.eigenvectors();
    return v * lambda.asDiagonal() * v.transpose();
}

namespace {

double unit_draw(NoiseDist dist, Rng& rng, std::normal_distribution<double>& normal) {
    switch (dist) {
    case NoiseDist::gaussian:
        return normal(rng);
    case NoiseDist::uniform_scaled:
        return std::sqrt(3.0) * (2.0 * rng.uniform() - 1.0);
    case NoiseDist::laplace_scaled: {
        // Open interval keeps the log finite.
        const double u = (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53 - 0.5;
        const double mag = -std::log1p(-2.0 * std::abs(u)) / std::sqrt(2.0);
        return u < 0.0 ? -mag : mag;
    }
    }
    return 0.0;
}

} // namespace

StackedObservation sample_observation(const SensingModel& model, const Vector& theta_star, long i, Rng& rng) {
    if (theta_star.size() != model.field_dim()) {
        throw ContractViolation("theta* has length " + std::to_string(theta_star.size()) + ", expected " +
                                std::to_string(model.field_dim()));
    }
    const int total = model.total_obs_dim();
    std::normal_distribution<double> normal(0.0, 1.0);
    Vector w(total);
    for (int k = 0; k < total; ++k) {
        w(k) = unit_draw(model.noise_dist(), rng, normal);
    }
    const Vector zeta = fading_gain(i, model.gamma0()) * (model.noise_factor() * w);

    StackedObservation obs;
    obs.iteration = i;
    obs.per_sensor.reserve(static_cast<std::size_t>(model.num_sensors()));
    for (int n = 0; n < model.num_sensors(); ++n) {
        obs.per_sensor.emplace_back(model.sensor(n) * theta_star + zeta.segment(model.obs_offset(n), model.obs_dim(n)));
    }
    return obs;
}

double innovation_dispersion(const SensingModel& model, const StackedObservation& obs, const Matrix& K) {
    const int n_sensors = model.num_sensors();
    const int m = model.field_dim();
    if (static_cast<int>(obs.per_sensor.size()) != n_sensors) {
        throw ContractViolation("observation has the wrong number of sensors");
    }
    if (K.rows() != m || K.cols() != m) {
        throw ContractViolation("gain must be M x M");
    }
    std::vector<Vector> gained;
    gained.reserve(static_cast<std::size_t>(n_sensors));
    Vector mean = Vector::Zero(m);
    for (int n = 0; n < n_sensors; ++n) {
        if (obs.per_sensor[static_cast<std::size_t>(n)].size() != model.obs_dim(n)) {
            throw ContractViolation("observation length mismatch at sensor " + std::to_string(n + 1));
        }
        gained.emplace_back(K * (model.sensor(n).transpose() * obs.per_sensor[static_cast<std::size_t>(n)]));
        mean += gained.back();
    }
    mean /= static_cast<double>(n_sensors);
    double sq = 0.0;
    for (const Vector& g : gained) {
        sq += (g - mean).squaredNorm();
    }
    return std::sqrt(sq);
}

Matrix stacked_observation_transpose(const SensingModel& model) {
    const int m = model.field_dim();
    Matrix d = Matrix::Zero(model.num_sensors() * m, model.total_obs_dim());
    for (int n = 0; n < model.num_sensors(); ++n) {
        d.block(n * m, model.obs_offset(n), m, model.obs_dim(n)) = model.sensor(n).transpose();
    }
    return d;
}

Matrix stacked_local_grammians(const SensingModel& model) {
    const int m = model.field_dim();
    Matrix d = Matrix::Zero(model.num_sensors() * m, model.num_sensors() * m);
    for (int n = 0; n < model.num_sensors(); ++n) {
        d.block(n * m, n * m, m, m) = model.sensor(n).transpose() * model.sensor(n);
    }
    return d;
}

} // namespace glu
