#include "glu/estimators.hpp"

#include <cmath>
#include <sstream>

#include <unsupported/Eigen/KroneckerProduct>

#include "glu/errors.hpp"

namespace glu {

NetworkState NetworkState::zeros(int num_sensors, int field_dim) {
    return {Vector::Zero(static_cast<Eigen::Index>(num_sensors) * field_dim), 0, num_sensors, field_dim};
}

NetworkState NetworkState::consensus(int num_sensors, const Vector& theta) {
    return {theta.replicate(num_sensors, 1), 0, num_sensors, static_cast<int>(theta.size())};
}

double innovation_weight(const GluParams& p, long i) {
    return p.a / std::pow(static_cast<double>(i) + 1.0, p.tau1);
}

double innovation_weight(const CentralParams& p, long i) {
    return p.a_c / std::pow(static_cast<double>(i) + 1.0, p.tau_c);
}

double consensus_weight(const GluParams& p, long i) {
    return p.b / std::pow(static_cast<double>(i) + 1.0, p.tau2);
}

namespace {

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

// Appends violations for a gain that must be symmetric positive definite and
// commute with the Grammian.
void check_gain(const Matrix& K, const Matrix& G, const std::string& name, Violations& out) {
    const auto m = G.rows();
    if (K.rows() != m || K.cols() != m) {
        out.push_back({name + "-shape", name + " must be " + std::to_string(m) + "x" + std::to_string(m)});
        return;
    }
    const double knorm = K.norm();
    if ((K - K.transpose()).norm() > 1e-12 * std::max(1.0, knorm)) {
        out.push_back({name + "-symmetric", name + " must be symmetric"});
        return;
    }
    Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (K + K.transpose()), Eigen::EigenvaluesOnly);
    if (eig.info() != Eigen::Success || !(eig.eigenvalues().minCoeff() > 0.0)) {
        out.push_back({name + "-positive-definite", name + " must be positive definite"});
    }
    const double comm = (K * G - G * K).norm();
    if (comm > kCommutatorTol * knorm * G.norm()) {
        out.push_back({name + "-commutes-with-grammian",
                       "||" + name + " G - G " + name + "||_F = " + fmt(comm) + " exceeds tolerance"});
    }
}

} // namespace

Violations validate_glu_params(const GluParams& p, const SensingModel& model) {
    Violations out;
    if (!(p.tau2 > 0.0 && p.tau2 <= p.tau1 && p.tau1 <= 1.0)) {
        out.push_back({"exponent-range", "0 < tau2 <= tau1 <= 1 required (tau1 = " + fmt(p.tau1) +
                                             ", tau2 = " + fmt(p.tau2) + ")"});
    }
    if (!(p.a > 0.0)) {
        out.push_back({"innovation-scale", "a > 0 required"});
    }
    if (!(p.b > 0.0)) {
        out.push_back({"consensus-scale", "b > 0 required"});
    }
    if (!(p.epsilon1 > 0.0)) {
        out.push_back({"moment-margin", "epsilon1 > 0 required"});
    }
    const double g0 = model.gamma0();
    const double noise_floor = 0.5 + g0;
    const double mixing_floor = p.tau2 + g0 + 1.0 / (2.0 + p.epsilon1);
    std::string failing;
    if (!(p.tau1 > noise_floor)) {
        failing += " <= 0.5 + gamma0 = " + fmt(noise_floor);
    }
    if (!(p.tau1 > mixing_floor)) {
        failing += (failing.empty() ? "" : " and") + std::string(" <= tau2 + gamma0 + 1/(2 + epsilon1) = ") +
                   fmt(mixing_floor);
    }
    if (!failing.empty()) {
        out.push_back({"weight-exponent-condition",
                       "tau1 > max(0.5 + gamma0, tau2 + gamma0 + 1/(2 + epsilon1)) fails: tau1 = " + fmt(p.tau1) +
                           failing});
    }
    check_gain(p.K, grammian(model), "K", out);
    return out;
}

Violations validate_central_params(const CentralParams& p, const SensingModel& model) {
    Violations out;
    const double floor = 0.5 + model.gamma0();
    if (!(p.tau_c > floor && p.tau_c <= 1.0)) {
        out.push_back({"good-estimator-exponent", "0.5 + gamma0 < tau_c <= 1 required (tau_c = " + fmt(p.tau_c) +
                                                      ", 0.5 + gamma0 = " + fmt(floor) + ")"});
    }
    if (!(p.a_c > 0.0)) {
        out.push_back({"central-scale", "a_c > 0 required"});
    }
    check_gain(p.K_c, grammian(model), "K_c", out);
    return out;
}

Violations validate_sensing(const SensingModel& model) {
    Violations out;
    if (!(model.gamma0() >= 0.0 && model.gamma0() < 0.5)) {
        out.push_back({"fading-exponent", "0 <= gamma0 < 0.5 required (gamma0 = " + fmt(model.gamma0()) + ")"});
    }
    const Observability obs = check_global_observability(model);
    if (!obs.observable) {
        out.push_back({"global-observability",
                       "Grammian is rank deficient (smallest singular value " + fmt(obs.min_singular_value) + ")"});
    }
    if (!(model.epsilon1() > 0.0)) {
        out.push_back({"moment-margin", "epsilon1 > 0 required"});
    }
    return out;
}

namespace {

void check_step_inputs(const NetworkState& state, const Laplacian& l, const StackedObservation& obs,
                       const Matrix& K, const SensingModel& model) {
    const int n = model.num_sensors();
    const int m = model.field_dim();
    if (state.num_sensors != n || state.field_dim != m ||
        state.x.size() != static_cast<Eigen::Index>(n) * m) {
        throw ContractViolation("network state does not match the sensing model dimensions");
    }
    if (l.size() != n) {
        throw ContractViolation("Laplacian is " + std::to_string(l.size()) + "x" + std::to_string(l.size()) +
                                ", expected " + std::to_string(n));
    }
    if (static_cast<int>(obs.per_sensor.size()) != n) {
        throw ContractViolation("observation carries the wrong number of sensors");
    }
    for (int s = 0; s < n; ++s) {
        if (obs.per_sensor[static_cast<std::size_t>(s)].size() != model.obs_dim(s)) {
            throw ContractViolation("observation length mismatch at sensor " + std::to_string(s + 1));
        }
    }
    if (K.rows() != m || K.cols() != m) {
        throw ContractViolation("gain must be M x M");
    }
}

} // namespace

NetworkState glu_step(const NetworkState& state, const Laplacian& l, const StackedObservation& obs,
                      const GluParams& p, const SensingModel& model) {
    check_step_inputs(state, l, obs, p.K, model);
    const int n_sensors = model.num_sensors();
    const double alpha = innovation_weight(p, state.i);
    const double beta = consensus_weight(p, state.i);
    const Matrix& L = l.matrix();

    NetworkState next = state;
    next.i = state.i + 1;
    Vector consensus(state.field_dim);
    for (int n = 0; n < n_sensors; ++n) {
        // Row n of L gives sum_{l in Omega_n} (x_n - x_l).
        consensus.setZero();
        for (int k = 0; k < n_sensors; ++k) {
            const double w = L(n, k);
            if (w != 0.0) {
                consensus.noalias() += w * state.sensor(k);
            }
        }
        const Matrix& h = model.sensor(n);
        const Vector residual = obs.per_sensor[static_cast<std::size_t>(n)] - h * state.sensor(n);
        next.sensor(n).noalias() += -beta * consensus + alpha * (p.K * (h.transpose() * residual));
    }
    return next;
}

NetworkState glu_step_stacked(const NetworkState& state, const Laplacian& l, const StackedObservation& obs,
                              const GluParams& p, const SensingModel& model) {
    check_step_inputs(state, l, obs, p.K, model);
    const int n = model.num_sensors();
    const int m = model.field_dim();
    const double alpha = innovation_weight(p, state.i);
    const double beta = consensus_weight(p, state.i);

    Vector z(model.total_obs_dim());
    for (int s = 0; s < n; ++s) {
        z.segment(model.obs_offset(s), model.obs_dim(s)) = obs.per_sensor[static_cast<std::size_t>(s)];
    }
    const Matrix I_m = Matrix::Identity(m, m);
    const Matrix I_n = Matrix::Identity(n, n);
    const Matrix L_kron = Eigen::kroneckerProduct(l.matrix(), I_m);
    const Matrix K_kron = Eigen::kroneckerProduct(I_n, p.K);
    const Matrix Dbar = stacked_observation_transpose(model);

    NetworkState next = state;
    next.i = state.i + 1;
    next.x = state.x - beta * (L_kron * state.x) + alpha * (K_kron * (Dbar * (z - Dbar.transpose() * state.x)));
    return next;
}

CentralState centralized_step(const CentralState& state, const StackedObservation& obs, const CentralParams& p,
                              const SensingModel& model) {
    const int n = model.num_sensors();
    const int m = model.field_dim();
    if (state.u.size() != m) {
        throw ContractViolation("centralized state must have length M");
    }
    if (p.K_c.rows() != m || p.K_c.cols() != m) {
        throw ContractViolation("centralized gain must be M x M");
    }
    if (static_cast<int>(obs.per_sensor.size()) != n) {
        throw ContractViolation("observation carries the wrong number of sensors");
    }
    Vector innovation = Vector::Zero(m);
    for (int s = 0; s < n; ++s) {
        const Matrix& h = model.sensor(s);
        const Vector& z = obs.per_sensor[static_cast<std::size_t>(s)];
        if (z.size() != h.rows()) {
            throw ContractViolation("observation length mismatch at sensor " + std::to_string(s + 1));
        }
        innovation.noalias() += h.transpose() * (z - h * state.u);
    }
    const double alpha_c = innovation_weight(p, state.i);
    return {state.u + (alpha_c / static_cast<double>(n)) * (p.K_c * innovation), state.i + 1};
}

Vector network_average(const NetworkState& state) {
    Vector avg = Vector::Zero(state.field_dim);
    for (int n = 0; n < state.num_sensors; ++n) {
        avg += state.sensor(n);
    }
    return avg / static_cast<double>(state.num_sensors);
}

double disagreement(const NetworkState& state) {
    const Vector avg = network_average(state);
    double sq = 0.0;
    for (int n = 0; n < state.num_sensors; ++n) {
        sq += (state.sensor(n) - avg).squaredNorm();
    }
    return std::sqrt(sq);
}

} // namespace glu
