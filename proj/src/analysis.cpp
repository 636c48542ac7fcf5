#include "glu/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

#include "glu/errors.hpp"
#include "glu/estimators.hpp"

namespace glu {

namespace {

void require_gain(const Matrix& K, const Matrix& G) {
    const auto m = G.rows();
    if (K.rows() != m || K.cols() != m) {
        throw ContractViolation("gain must be M x M");
    }
    if ((K - K.transpose()).norm() > 1e-12 * std::max(1.0, K.norm())) {
        throw ContractViolation("gain must be symmetric");
    }
    Eigen::SelfAdjointEigenSolver<Matrix> eig(K, Eigen::EigenvaluesOnly);
    if (eig.info() != Eigen::Success || !(eig.eigenvalues().minCoeff() > 0.0)) {
        throw ContractViolation("gain must be positive definite");
    }
    if ((K * G - G * K).norm() > kCommutatorTol * K.norm() * G.norm()) {
        throw ContractViolation("gain must commute with the Grammian");
    }
}

} // namespace

AsymptoticCovariance asymptotic_covariance(const SensingModel& model, double a, const Matrix& K) {
    if (model.gamma0() != 0.0) {
        throw ContractViolation("asymptotic covariance is defined for gamma0 = 0 only");
    }
    const int n = model.num_sensors();
    const int m = model.field_dim();
    const Matrix G = grammian(model);
    require_gain(K, G);

    const double nd = static_cast<double>(n);
    AsymptoticCovariance out;
    out.Sigma1 = -(a / nd) * K * G + 0.5 * Matrix::Identity(m, m);

    Eigen::EigenSolver<Matrix> sig(out.Sigma1, false);
    if (sig.info() != Eigen::Success) {
        throw NumericalError("eigensolver failed on Sigma1");
    }
    const double max_real = sig.eigenvalues().real().maxCoeff();
    if (!(max_real < 0.0)) {
        Eigen::SelfAdjointEigenSolver<Matrix> kg(0.5 * (K * G + (K * G).transpose()), Eigen::EigenvaluesOnly);
        const double bound = nd / (2.0 * kg.eigenvalues().minCoeff());
        std::ostringstream os;
        os << "Sigma1 is not Hurwitz: a = " << a << " must exceed N/(2 lambda_min(KG)) = " << bound;
        throw StabilityError(os.str());
    }
    out.hurwitz_margin = -max_real;

    // (1_N (x) I_M)^T Dbar = [H_1^T ... H_N^T].
    const Matrix A = (Eigen::kroneckerProduct(Matrix::Ones(1, n), Matrix::Identity(m, m)) *
                      stacked_observation_transpose(model))
                         .eval();
    out.S1 = K * A * model.noise_cov() * A.transpose() * K.transpose();
    out.S1 = 0.5 * (out.S1 + out.S1.transpose());

    const Matrix Q = (a * a / (nd * nd)) * out.S1;
    out.S_c = solve_lyapunov(out.Sigma1, Q);
    return out;
}

Matrix solve_lyapunov(const Matrix& A, const Matrix& Q) {
    if (A.rows() != A.cols() || Q.rows() != A.rows() || Q.cols() != A.cols()) {
        throw ContractViolation("Lyapunov operands must be square and conformant");
    }
    if ((A - A.transpose()).norm() > 1e-12 * std::max(1.0, A.norm())) {
        return solve_lyapunov_doubling(A, Q);
    }
    Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (A + A.transpose()));
    if (eig.info() != Eigen::Success) {
        throw NumericalError("eigensolver failed in Lyapunov solve");
    }
    const Vector& lambda = eig.eigenvalues();
    if (!(lambda.maxCoeff() < 0.0)) {
        throw StabilityError("Lyapunov drift matrix is not Hurwitz");
    }
    const Matrix& V = eig.eigenvectors();
    Matrix Qt = V.transpose() * Q * V;
    for (Eigen::Index r = 0; r < Qt.rows(); ++r) {
        for (Eigen::Index c = 0; c < Qt.cols(); ++c) {
            Qt(r, c) = -Qt(r, c) / (lambda(r) + lambda(c));
        }
    }
    Matrix X = V * Qt * V.transpose();
    return 0.5 * (X + X.transpose());
}

Matrix solve_lyapunov_doubling(const Matrix& A, const Matrix& Q) {
    const auto m = A.rows();
    Eigen::EigenSolver<Matrix> eig(A, false);
    if (eig.info() != Eigen::Success) {
        throw NumericalError("eigensolver failed in Lyapunov solve");
    }
    if (!(eig.eigenvalues().real().maxCoeff() < 0.0)) {
        throw StabilityError("Lyapunov drift matrix is not Hurwitz");
    }
    const double h = 1.0 / std::max(1.0, A.norm());
    Matrix block = Matrix::Zero(2 * m, 2 * m);
    block.topLeftCorner(m, m) = -A * h;
    block.topRightCorner(m, m) = Q * h;
    block.bottomRightCorner(m, m) = A.transpose() * h;
    const Matrix F = block.exp();
    Matrix E = F.bottomRightCorner(m, m).transpose(); // e^{A h}
    Matrix X = E * F.topRightCorner(m, m);             // int_0^h e^{Av} Q e^{A^T v} dv

    for (int k = 0; k < 200; ++k) {
        const Matrix increment = E * X * E.transpose();
        X += increment;
        E = (E * E).eval();
        if (E.norm() < 1e-18 && increment.norm() <= 1e-18 * std::max(1.0, X.norm())) {
            break;
        }
    }
    return 0.5 * (X + X.transpose());
}

Matrix optimal_gain(const SensingModel& model) {
    const Matrix G = grammian(model);
    const Observability obs = check_global_observability(model);
    if (!obs.observable) {
        throw ObservabilityError("Grammian is singular; the field is not globally observable");
    }
    Eigen::LDLT<Matrix> ldlt(G);
    if (ldlt.info() != Eigen::Success) {
        throw NumericalError("symmetric solve of the Grammian failed");
    }
    Matrix inv = ldlt.solve(Matrix::Identity(G.rows(), G.cols()));
    return 0.5 * (inv + inv.transpose());
}

double RecursionSchedule::mean(long i) const { return scale / std::pow(static_cast<double>(i) + 1.0, exponent); }

std::vector<double> scalar_recursion(double y0, const RecursionSchedule& r1, const RecursionSchedule& r2,
                                     long steps, Rng* rng) {
    if (!(y0 >= 0.0)) {
        throw ContractViolation("y0 must be non-negative");
    }
    if (!(r1.scale > 0.0) || !(r1.exponent >= 0.0 && r1.exponent <= 1.0)) {
        throw ContractViolation("r1 needs scale > 0 and exponent in [0, 1]");
    }
    if (!(r2.scale >= 0.0) || !(r2.exponent >= 0.0)) {
        throw ContractViolation("r2 needs scale >= 0 and exponent >= 0");
    }
    if (!(r1.exponent < r2.exponent)) {
        throw ContractViolation("r1 must decay strictly slower than r2");
    }
    if (!(r1.spread >= 0.0 && r1.spread <= 1.0)) {
        throw ContractViolation("r1 spread must lie in [0, 1]");
    }
    if (r1.spread > 0.0 && rng == nullptr) {
        throw ContractViolation("random r1 needs a random stream");
    }
    if (steps < 0) {
        throw ContractViolation("steps must be non-negative");
    }
    std::vector<double> y(static_cast<std::size_t>(steps) + 1);
    y[0] = y0;
    for (long i = 0; i < steps; ++i) {
        double a = r1.mean(i);
        if (r1.spread > 0.0) {
            a += r1.spread * std::min(a, 1.0 - a) * (2.0 * rng->uniform() - 1.0);
        }
        if (!(a >= 0.0 && a <= 1.0)) {
            throw ContractViolation("realized r1(" + std::to_string(i) + ") = " + std::to_string(a) +
                                    " lies outside [0, 1]");
        }
        y[static_cast<std::size_t>(i) + 1] = (1.0 - a) * y[static_cast<std::size_t>(i)] + r2.mean(i);
    }
    return y;
}

std::vector<double> log_sweep(double lo, double hi, int points) {
    if (!(lo > 0.0 && hi > lo) || points < 2) {
        throw ContractViolation("log sweep needs 0 < lo < hi and at least two points");
    }
    std::vector<double> out(static_cast<std::size_t>(points));
    const double step = std::log(hi / lo) / static_cast<double>(points - 1);
    for (int k = 0; k < points; ++k) {
        out[static_cast<std::size_t>(k)] = lo * std::exp(step * k);
    }
    out.back() = hi;
    return out;
}

QuadraticFormBound quadratic_form_bound(const Laplacian& mean_laplacian, const SensingModel& model,
                                        const Matrix& K, std::span<const double> ratios) {
    const int n = model.num_sensors();
    const int m = model.field_dim();
    if (mean_laplacian.size() != n) {
        throw ContractViolation("mean Laplacian size does not match the number of sensors");
    }
    if (K.rows() != m || K.cols() != m) {
        throw ContractViolation("gain must be M x M");
    }
    if (ratios.empty()) {
        throw ContractViolation("ratio sweep is empty");
    }
    const Matrix consensus = Eigen::kroneckerProduct(mean_laplacian.matrix(), Matrix::Identity(m, m));
    const Matrix innovation = Eigen::kroneckerProduct(Matrix::Identity(n, n), K) * stacked_local_grammians(model);
    const double scale = std::max({1.0, consensus.norm(), innovation.norm()});

    QuadraticFormBound out;
    out.ratios.assign(ratios.begin(), ratios.end());
    out.lambda_min.reserve(ratios.size());
    bool found = false;
    for (double rho : ratios) {
        const Matrix A = rho * consensus + innovation;
        Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (A + A.transpose()), Eigen::EigenvaluesOnly);
        if (eig.info() != Eigen::Success) {
            throw NumericalError("eigensolver failed in quadratic form bound");
        }
        const double lmin = eig.eigenvalues().minCoeff();
        out.lambda_min.push_back(lmin);
        if (!found && lmin > 1e-10 * scale) {
            found = true;
            out.threshold_ratio = rho;
        }
    }
    out.c4 = out.lambda_min.back();
    out.certified = found && out.c4 > 1e-10 * scale;
    if (!out.certified) {
        out.threshold_ratio = 0.0;
    }
    return out;
}

QuadraticFormBound quadratic_form_bound(const Laplacian& mean_laplacian, const SensingModel& model,
                                        const Matrix& K) {
    const std::vector<double> sweep = log_sweep(1e-2, 1e4, 61);
    return quadratic_form_bound(mean_laplacian, model, K, sweep);
}

RateFit rate_fit(std::span<const TrajectoryPoint> trajectory, RateWindow window) {
    if (!(window.i_start < window.i_end)) {
        throw ContractViolation("rate window needs i_start < i_end");
    }
    RateFit out;
    out.window = window;
    double sx = 0.0;
    double sy = 0.0;
    double sxx = 0.0;
    double sxy = 0.0;
    double syy = 0.0;
    std::size_t count = 0;
    for (const TrajectoryPoint& p : trajectory) {
        if (p.i < window.i_start || p.i > window.i_end) {
            continue;
        }
        if (p.value < 0.0 || !std::isfinite(p.value)) {
            throw ContractViolation("rate fit needs finite non-negative values");
        }
        if (p.value == 0.0) {
            ++out.dropped_zeros;
            continue;
        }
        const double x = std::log(static_cast<double>(p.i) + 1.0);
        const double y = std::log(p.value);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        syy += y * y;
        ++count;
    }
    if (count < 8) {
        throw InsufficientDataError("rate fit needs at least 8 positive points in the window, got " +
                                    std::to_string(count));
    }
    const double nd = static_cast<double>(count);
    const double vx = sxx - sx * sx / nd;
    const double vy = syy - sy * sy / nd;
    const double cxy = sxy - sx * sy / nd;
    if (!(vx > 0.0)) {
        throw InsufficientDataError("rate fit window has no spread in log(i+1)");
    }
    out.exponent = cxy / vx;
    out.intercept = (sy - out.exponent * sx) / nd;
    out.r_squared = vy > 0.0 ? std::clamp(cxy * cxy / (vx * vy), 0.0, 1.0) : 1.0;
    out.points = count;
    return out;
}

RateFit rate_fit(std::span<const TrajectoryPoint> trajectory, double burn_in) {
    if (trajectory.empty()) {
        throw InsufficientDataError("rate fit on an empty trajectory");
    }
    if (!(burn_in >= 0.0 && burn_in < 1.0)) {
        throw ContractViolation("burn-in fraction must lie in [0, 1)");
    }
    long lo = trajectory.front().i;
    long hi = trajectory.front().i;
    for (const TrajectoryPoint& p : trajectory) {
        lo = std::min(lo, p.i);
        hi = std::max(hi, p.i);
    }
    const long start = lo + static_cast<long>(std::ceil(burn_in * static_cast<double>(hi - lo)));
    return rate_fit(trajectory, RateWindow{start, hi});
}

NormalityReport normality_check(std::span<const Vector> samples, const Matrix& S_ref) {
    if (samples.size() < 200) {
        throw ContractViolation("normality check needs at least 200 samples");
    }
    const auto m = S_ref.rows();
    if (S_ref.cols() != m) {
        throw ContractViolation("reference covariance must be square");
    }
    NormalityReport out;
    out.samples = samples.size();
    out.mean = Vector::Zero(m);
    for (const Vector& s : samples) {
        if (s.size() != m) {
            throw ContractViolation("sample dimension does not match the reference covariance");
        }
        out.mean += s;
    }
    const double nd = static_cast<double>(samples.size());
    out.mean /= nd;

    out.empirical_cov = Matrix::Zero(m, m);
    Vector m3 = Vector::Zero(m);
    Vector m4 = Vector::Zero(m);
    for (const Vector& s : samples) {
        const Vector d = s - out.mean;
        out.empirical_cov.noalias() += d * d.transpose();
        m3 += d.array().cube().matrix();
        m4 += d.array().square().square().matrix();
    }
    const Vector m2 = out.empirical_cov.diagonal() / nd;
    out.empirical_cov /= (nd - 1.0);
    m3 /= nd;
    m4 /= nd;

    out.skewness = Vector::Zero(m);
    out.excess_kurtosis = Vector::Zero(m);
    for (Eigen::Index k = 0; k < m; ++k) {
        if (m2(k) > 0.0) {
            out.skewness(k) = m3(k) / std::pow(m2(k), 1.5);
            out.excess_kurtosis(k) = m4(k) / (m2(k) * m2(k)) - 3.0;
        }
    }
    const double ref = S_ref.norm();
    out.cov_rel_error = ref > 0.0 ? (out.empirical_cov - S_ref).norm() / ref : out.empirical_cov.norm();
    return out;
}

} // namespace glu
