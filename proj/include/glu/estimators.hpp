#pragma once

#include <string>
#include <vector>

#include "glu/graph.hpp"
#include "glu/sensing.hpp"

namespace glu {

/// Design tuple (tau1, a, tau2, b, K) of the mixed time-scale recursion,
/// with innovation weight alpha(i) = a/(i+1)^tau1 and consensus weight
/// beta(i) = b/(i+1)^tau2.
struct GluParams {
    double tau1 = 1.0;
    double a = 1.0;
    double tau2 = 0.1;
    double b = 0.5;
    Matrix K;
    double epsilon1 = 1.0;
};

/// Centralized baseline with weight alpha_c(i) = a_c/(i+1)^tau_c.
struct CentralParams {
    double tau_c = 1.0;
    double a_c = 1.0;
    Matrix K_c;
};

/// Stacked per-sensor estimates x = [x_1; ...; x_N], each of length M.
struct NetworkState {
    Vector x;
    long i = 0;
    int num_sensors = 0;
    int field_dim = 0;

    static NetworkState zeros(int num_sensors, int field_dim);
    /// Every sensor starts at theta (the consensus subspace).
    static NetworkState consensus(int num_sensors, const Vector& theta);

    auto sensor(int n) { return x.segment(static_cast<Eigen::Index>(n) * field_dim, field_dim); }
    auto sensor(int n) const { return x.segment(static_cast<Eigen::Index>(n) * field_dim, field_dim); }
};

struct CentralState {
    Vector u;
    long i = 0;
};

double innovation_weight(const GluParams& p, long i);
double innovation_weight(const CentralParams& p, long i);
double consensus_weight(const GluParams& p, long i);

/// One named assumption that a parameter tuple fails.
struct Violation {
    std::string condition;
    std::string detail;
};

using Violations = std::vector<Violation>;

/// Relative commutator tolerance for K G = G K.
inline constexpr double kCommutatorTol = 1e-10;

Violations validate_glu_params(const GluParams& p, const SensingModel& model);
Violations validate_central_params(const CentralParams& p, const SensingModel& model);

/// Structural assumptions on the observation model: gamma0 in [0, 0.5) and
/// a full-rank Grammian.
Violations validate_sensing(const SensingModel& model);

/// Per-sensor update
///   x_n <- x_n - beta(i) sum_{l in Omega_n(i)} (x_n - x_l)
///              + alpha(i) K H_n^T (z_n - H_n x_n),
/// returned out of place with the iteration counter advanced.
NetworkState glu_step(const NetworkState& state, const Laplacian& l, const StackedObservation& obs,
                      const GluParams& p, const SensingModel& model);

/// Same update written with Kronecker products,
///   x <- x - beta (L (x) I_M) x + alpha (I_N (x) K) Dbar (z - Dbar^T x),
/// where Dbar is the block-diagonal of H_n^T. Reference route for checking
/// glu_step; allocates dense NM x NM matrices.
NetworkState glu_step_stacked(const NetworkState& state, const Laplacian& l, const StackedObservation& obs,
                              const GluParams& p, const SensingModel& model);

/// u <- u + (alpha_c(i)/N) K_c sum_n (H_n^T z_n - H_n^T H_n u).
CentralState centralized_step(const CentralState& state, const StackedObservation& obs, const CentralParams& p,
                              const SensingModel& model);

Vector network_average(const NetworkState& state);

/// ||x - 1_N (x) x_avg||.
double disagreement(const NetworkState& state);

} // namespace glu
