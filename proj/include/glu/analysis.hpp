#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "glu/graph.hpp"
#include "glu/rng.hpp"
#include "glu/sensing.hpp"

namespace glu {

/// Limiting covariance of sqrt(i+1) (estimate - theta*) for the centralized
/// recursion with alpha_c(i) = a/(i+1):
///   S_c = (a^2/N^2) int_0^inf exp(Sigma1 v) S1 exp(Sigma1^T v) dv,
///   Sigma1 = -(a/N) K G + I/2,   S1 = K (sum_{n,l} H_n^T S_nl H_l) K^T.
struct AsymptoticCovariance {
    Matrix S_c;
    Matrix Sigma1;
    Matrix S1;
    double hurwitz_margin = 0.0; // -max Re eig(Sigma1)
};

/// Requires gamma0 == 0, K symmetric positive definite commuting with G, and
/// a > N / (2 lambda_min(KG)); throws StabilityError when Sigma1 is not Hurwitz.
AsymptoticCovariance asymptotic_covariance(const SensingModel& model, double a, const Matrix& K);

/// Solves A X + X A^T + Q = 0 for Hurwitz A. Symmetric A goes through the
/// eigenbasis; otherwise falls back to solve_lyapunov_doubling.
Matrix solve_lyapunov(const Matrix& A, const Matrix& Q);

/// Integral form int_0^inf e^{Av} Q e^{A^T v} dv evaluated by squaring:
/// X(2t) = X(t) + e^{At} X(t) e^{A^T t}, seeded with a Van Loan block exponential.
Matrix solve_lyapunov_doubling(const Matrix& A, const Matrix& Q);

/// G^{-1}; throws ObservabilityError when G is singular.
Matrix optimal_gain(const SensingModel& model);

/// r(i) = scale / (i+1)^exponent. A positive spread makes r random with the
/// same mean: r + spread * min(r, 1 - r) * (2U - 1), U uniform on [0, 1).
struct RecursionSchedule {
    double scale = 1.0;
    double exponent = 1.0;
    double spread = 0.0;

    double mean(long i) const;
};

/// Iterates y(i+1) = (1 - r1(i)) y(i) + r2(i) for `steps` steps and returns
/// y(0..steps). rng is required iff r1.spread > 0.
std::vector<double> scalar_recursion(double y0, const RecursionSchedule& r1, const RecursionSchedule& r2,
                                     long steps, Rng* rng = nullptr);

struct QuadraticFormBound {
    bool certified = false;
    double threshold_ratio = 0.0; // smallest swept beta/alpha with positive lambda_min
    double c4 = 0.0;              // lambda_min at the largest swept ratio
    std::vector<double> ratios;
    std::vector<double> lambda_min;
};

std::vector<double> log_sweep(double lo, double hi, int points);

/// For each ratio rho, lambda_min of the symmetric part of
/// rho (Lbar (x) I_M) + (I_N (x) K) D, with D the block-diagonal of H_n^T H_n.
QuadraticFormBound quadratic_form_bound(const Laplacian& mean_laplacian, const SensingModel& model,
                                        const Matrix& K, std::span<const double> ratios);
QuadraticFormBound quadratic_form_bound(const Laplacian& mean_laplacian, const SensingModel& model,
                                        const Matrix& K);

struct TrajectoryPoint {
    long i = 0;
    double value = 0.0;
};

struct RateWindow {
    long i_start = 0;
    long i_end = 0;
};

/// Least-squares line through (log(i+1), log value).
struct RateFit {
    double exponent = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    RateWindow window;
    std::size_t points = 0;
    std::size_t dropped_zeros = 0;
};

RateFit rate_fit(std::span<const TrajectoryPoint> trajectory, RateWindow window);
/// Window starts after the first `burn_in` fraction of the recorded span.
RateFit rate_fit(std::span<const TrajectoryPoint> trajectory, double burn_in = 0.1);

struct NormalityReport {
    double cov_rel_error = 0.0; // ||C_hat - S_ref||_F / ||S_ref||_F
    Matrix empirical_cov;
    Vector mean;
    Vector skewness;
    Vector excess_kurtosis;
    std::size_t samples = 0;
};

/// Centered sample covariance against a reference, plus marginal
/// standardized skewness and excess kurtosis. Needs at least 200 samples.
NormalityReport normality_check(std::span<const Vector> samples, const Matrix& S_ref);

} // namespace glu
