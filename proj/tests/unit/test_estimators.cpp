#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "glu/errors.hpp"
#include "glu/estimators.hpp"
#include "unit/support.hpp"

using namespace glu;
using testing::cyclic_model;
using testing::mat;
using testing::scalar_model;
using testing::vec;

namespace {

bool names(const Violations& v, const std::string& condition) {
    return std::any_of(v.begin(), v.end(), [&](const Violation& x) { return x.condition == condition; });
}

GluParams params(int m, double tau1 = 1.0, double tau2 = 0.1) {
    GluParams p;
    p.tau1 = tau1;
    p.tau2 = tau2;
    p.a = 1.0;
    p.b = 1.0;
    p.K = Matrix::Identity(m, m);
    return p;
}

Vector random_vector(Eigen::Index n, Rng& rng) {
    Vector v(n);
    for (Eigen::Index k = 0; k < n; ++k) {
        v(k) = 2.0 * rng.uniform() - 1.0;
    }
    return v;
}

SensingModel random_model(int n, int m, Rng& rng) {
    std::vector<Matrix> hs;
    int total = 0;
    for (int k = 0; k < n; ++k) {
        Matrix h(1 + static_cast<int>(rng() % 2), m);
        for (Eigen::Index e = 0; e < h.size(); ++e) {
            h.data()[e] = 2.0 * rng.uniform() - 1.0;
        }
        total += static_cast<int>(h.rows());
        hs.push_back(h);
    }
    return SensingModel(m, hs, Matrix::Identity(total, total), 0.0, NoiseDist::gaussian);
}

StackedObservation random_obs(const SensingModel& model, Rng& rng) {
    StackedObservation obs;
    for (int n = 0; n < model.num_sensors(); ++n) {
        obs.per_sensor.push_back(random_vector(model.obs_dim(n), rng));
    }
    return obs;
}

} // namespace

TEST_CASE("weight schedules") {
    GluParams p = params(1);
    p.a = 2.0;
    p.b = 0.7;
    CHECK(innovation_weight(p, 0) == 2.0);
    CHECK(innovation_weight(p, 3) == doctest::Approx(0.5));
    p.a = 1.0;
    p.tau1 = 0.8;
    CHECK(innovation_weight(p, 9) == doctest::Approx(0.15849).epsilon(1e-4));
    CHECK(consensus_weight(p, 0) == 0.7);
    p.b = 1.0;
    p.tau2 = 0.3;
    CHECK(consensus_weight(p, 0) == 1.0);
    CentralParams c{0.9, 3.0, Matrix::Identity(1, 1)};
    CHECK(innovation_weight(c, 0) == 3.0);
    // beta/alpha grows monotonically when tau2 < tau1
    p = params(1, 1.0, 0.2);
    double prev = 0.0;
    for (long i = 0; i < 1000; i += 7) {
        const double r = consensus_weight(p, i) / innovation_weight(p, i);
        CHECK(r > prev);
        prev = r;
    }
}

TEST_CASE("glu parameter validator examples") {
    const SensingModel model = cyclic_model(3, 3);
    CHECK(validate_glu_params(params(3), model).empty());

    const SensingModel fading = cyclic_model(3, 3, 0.4);
    const Violations v = validate_glu_params(params(3, 0.85, 0.2), fading);
    CHECK(names(v, "weight-exponent-condition"));
    CHECK(v.front().detail.find("0.933333") != std::string::npos);

    CHECK(names(validate_glu_params(params(3, 1.2, 0.1), model), "exponent-range"));
    CHECK(names(validate_glu_params(params(3, 0.4, 0.1), model), "weight-exponent-condition"));

    GluParams bad = params(3);
    bad.K = mat({{1, 0, 0}, {0, 1, 0}, {0, 0, -1}});
    CHECK(names(validate_glu_params(bad, model), "K-positive-definite"));
    bad.K = mat({{1, 0.5, 0}, {0, 1, 0}, {0, 0, 1}});
    CHECK(names(validate_glu_params(bad, model), "K-symmetric"));
    bad.K = Matrix::Identity(2, 2);
    CHECK(names(validate_glu_params(bad, model), "K-shape"));
    bad = params(2);
    bad.a = 0.0;
    bad.b = -1.0;
    const SensingModel skew(2, {mat({{1, 0}}), mat({{1, 1}})}, Matrix::Identity(2, 2), 0.0, NoiseDist::gaussian);
    bad.K = mat({{2, 0}, {0, 1}});
    const Violations all = validate_glu_params(bad, skew);
    CHECK(names(all, "innovation-scale"));
    CHECK(names(all, "consensus-scale"));
    CHECK(names(all, "K-commutes-with-grammian"));
}

TEST_CASE("central parameter validator examples") {
    CHECK(validate_central_params({1.0, 1.0, Matrix::Identity(2, 2)}, cyclic_model(2, 2)).empty());
    CHECK(names(validate_central_params({0.9, 1.0, Matrix::Identity(2, 2)}, cyclic_model(2, 2, 0.4)),
                "good-estimator-exponent"));
    CHECK(names(validate_central_params({0.5, 1.0, Matrix::Identity(2, 2)}, cyclic_model(2, 2)),
                "good-estimator-exponent"));
    CHECK(names(validate_central_params({1.0, 0.0, Matrix::Identity(2, 2)}, cyclic_model(2, 2)), "central-scale"));
}

TEST_CASE("sensing validator") {
    CHECK(validate_sensing(cyclic_model(3, 3)).empty());
    CHECK(names(validate_sensing(cyclic_model(2, 3)), "global-observability"));
    SensingModel::Options opts;
    opts.allow_fading_beyond_half = true;
    const SensingModel beyond(1, {mat({{1}})}, mat({{1}}), 0.6, NoiseDist::gaussian, opts);
    CHECK(names(validate_sensing(beyond), "fading-exponent"));
}

TEST_CASE("property: validators are monotone in gamma0") {
    Rng rng(31);
    for (int rep = 0; rep < 300; ++rep) {
        const double tau1 = 0.5 + 0.5 * rng.uniform();
        const double tau2 = tau1 * rng.uniform();
        const double g_hi = 0.5 * rng.uniform();
        const double g_lo = g_hi * rng.uniform();
        const GluParams p = params(2, tau1, tau2);
        CentralParams c{tau1, 1.0, Matrix::Identity(2, 2)};
        if (validate_glu_params(p, cyclic_model(2, 2, g_hi)).empty()) {
            CHECK(validate_glu_params(p, cyclic_model(2, 2, g_lo)).empty());
        }
        if (validate_central_params(c, cyclic_model(2, 2, g_hi)).empty()) {
            CHECK(validate_central_params(c, cyclic_model(2, 2, g_lo)).empty());
        }
    }
}

TEST_CASE("glu step hand examples") {
    // single scalar sensor: x = 0, z = 1, alpha = 0.5
    const SensingModel one = scalar_model(1);
    GluParams p = params(1);
    p.a = 0.5;
    const NetworkState x1 = glu_step(NetworkState::zeros(1, 1), laplacian(Graph(1, {})), {0, {vec({1})}}, p, one);
    CHECK(x1.x(0) == doctest::Approx(0.5));
    CHECK(x1.i == 1);

    // two sensors with one edge, alpha = 0.5, beta = 0.25 at i = 0
    const SensingModel two = scalar_model(2);
    p.b = 0.25;
    NetworkState s{vec({0, 2}), 0, 2, 1};
    const StackedObservation obs{0, {vec({1}), vec({1})}};
    const Laplacian l = laplacian(Graph::complete(2));
    const NetworkState next = glu_step(s, l, obs, p, two);
    CHECK(next.x(0) == doctest::Approx(1.0));
    CHECK(next.x(1) == doctest::Approx(1.0));
    CHECK(glu_step_stacked(s, l, obs, p, two).x.isApprox(next.x));
}

TEST_CASE("glu step rejects mismatched inputs") {
    const SensingModel two = scalar_model(2);
    const GluParams p = params(1);
    const NetworkState s = NetworkState::zeros(2, 1);
    CHECK_THROWS_AS(glu_step(s, laplacian(Graph::complete(3)), {0, {vec({1}), vec({1})}}, p, two),
                    ContractViolation);
    CHECK_THROWS_AS(glu_step(s, laplacian(Graph::complete(2)), {0, {vec({1})}}, p, two), ContractViolation);
    CHECK_THROWS_AS(glu_step(NetworkState::zeros(3, 1), laplacian(Graph::complete(2)), {0, {vec({1}), vec({1})}},
                             p, two),
                    ContractViolation);
}

TEST_CASE("centralized step hand examples") {
    const SensingModel two = scalar_model(2);
    CentralParams c{1.0, 1.0, mat({{1}})};
    const CentralState u = centralized_step({vec({0}), 0}, {0, {vec({1}), vec({1})}}, c, two);
    CHECK(u.u(0) == doctest::Approx(1.0));
    CHECK(u.i == 1);
    c.a_c = 0.0;
    CHECK(centralized_step({vec({0.3}), 4}, {4, {vec({7}), vec({-2})}}, c, two).u(0) == 0.3);
    CHECK_THROWS_AS(centralized_step({vec({0, 0}), 0}, {0, {vec({1}), vec({1})}}, c, two), ContractViolation);
}

TEST_CASE("network average and disagreement") {
    const Vector theta = vec({1, -2, 3});
    const NetworkState s = NetworkState::consensus(4, theta);
    CHECK(network_average(s) == theta);
    CHECK(disagreement(s) == 0.0);
    const NetworkState pair{vec({0, 2}), 0, 2, 1};
    CHECK(network_average(pair)(0) == 1.0);
    CHECK(disagreement(pair) == doctest::Approx(std::sqrt(2.0)));
}

TEST_CASE("property: fixed point under noiseless observations") {
    Rng rng(4);
    const SensingModel model = cyclic_model(5, 3);
    const Vector theta = vec({0.5, -1.0, 2.0});
    StackedObservation obs;
    for (int n = 0; n < 5; ++n) {
        obs.per_sensor.push_back(model.sensor(n) * theta);
    }
    const TopologyModel topo = TopologyModel::bernoulli(Graph::ring(5), 0.5);
    GluParams p = params(3, 1.0, 0.2);
    p.a = 3.0;
    NetworkState x = NetworkState::consensus(5, theta);
    CentralState u{theta, 0};
    const CentralParams c{1.0, 3.0, Matrix::Identity(3, 3)};
    for (int k = 0; k < 200; ++k) {
        obs.iteration = k;
        x = glu_step(x, topo.sample(rng), obs, p, model);
        u = centralized_step(u, obs, c, model);
    }
    CHECK((x.x - theta.replicate(5, 1)).norm() < 1e-12);
    CHECK((u.u - theta).norm() < 1e-12);
}

TEST_CASE("property: per-sensor and stacked forms agree") {
    Rng rng(2024);
    for (int rep = 0; rep < 100; ++rep) {
        const int n = 2 + static_cast<int>(rng() % 6);
        const int m = 1 + static_cast<int>(rng() % 4);
        const SensingModel model = random_model(n, m, rng);
        const Laplacian l = laplacian(Graph::erdos_renyi(n, 0.5, rng));
        GluParams p;
        p.tau1 = 0.9;
        p.tau2 = 0.2;
        p.a = rng.uniform() + 0.1;
        p.b = rng.uniform() + 0.1;
        const Matrix r = Matrix::Random(m, m);
        p.K = r * r.transpose() + Matrix::Identity(m, m);
        NetworkState s{random_vector(static_cast<Eigen::Index>(n) * m, rng), static_cast<long>(rng() % 100), n, m};
        const StackedObservation obs = random_obs(model, rng);
        const NetworkState a = glu_step(s, l, obs, p, model);
        const NetworkState b = glu_step_stacked(s, l, obs, p, model);
        CHECK((a.x - b.x).cwiseAbs().maxCoeff() <= 1e-12);
        CHECK(a.i == b.i);
    }
}

TEST_CASE("property: consensus-only steps preserve the network average") {
    Rng rng(55);
    const SensingModel model = random_model(6, 2, rng);
    GluParams p = params(2, 1.0, 0.3);
    p.a = 0.0;
    p.b = 0.4;
    const TopologyModel topo = TopologyModel::bernoulli(Graph::complete(6), 0.6);
    NetworkState s{random_vector(12, rng), 0, 6, 2};
    const Vector avg = network_average(s);
    for (int k = 0; k < 100; ++k) {
        s = glu_step(s, topo.sample(rng), random_obs(model, rng), p, model);
    }
    CHECK((network_average(s) - avg).norm() <= 1e-12);
}

TEST_CASE("property: averaged update equals centralized step plus correction") {
    Rng rng(808);
    for (int rep = 0; rep < 100; ++rep) {
        const int n = 2 + static_cast<int>(rng() % 5);
        const int m = 1 + static_cast<int>(rng() % 3);
        const SensingModel model = random_model(n, m, rng);
        GluParams p;
        p.tau1 = 1.0;
        p.tau2 = 0.2;
        p.a = rng.uniform() + 0.2;
        p.b = rng.uniform() * 0.3;
        const Matrix r = Matrix::Random(m, m);
        p.K = r * r.transpose() + Matrix::Identity(m, m);
        const long i = static_cast<long>(rng() % 50);
        NetworkState s{random_vector(static_cast<Eigen::Index>(n) * m, rng), i, n, m};
        const StackedObservation obs = random_obs(model, rng);
        const Laplacian l = laplacian(Graph::erdos_renyi(n, 0.6, rng));

        const Vector avg = network_average(s);
        const CentralParams c{p.tau1, p.a, p.K};
        const CentralState u = centralized_step({avg, i}, obs, c, model);
        Vector correction = Vector::Zero(m);
        for (int k = 0; k < n; ++k) {
            correction += model.sensor(k).transpose() * model.sensor(k) * (s.sensor(k) - avg);
        }
        correction = -(innovation_weight(p, i) / n) * p.K * correction;
        const Vector lhs = network_average(glu_step(s, l, obs, p, model));
        CHECK((lhs - (u.u + correction)).cwiseAbs().maxCoeff() <= 1e-12);
    }
}

TEST_CASE("property: trajectories stay bounded over a long run") {
    const SensingModel model = cyclic_model(4, 2);
    const TopologyModel topo = TopologyModel::gossip_uniform(Graph::ring(4));
    GluParams p = params(2, 1.0, 0.1);
    p.a = 4.0;
    p.b = 0.5;
    NetworkState x = NetworkState::zeros(4, 2);
    const Vector theta = vec({1.0, -1.0});
    double sup = 0.0;
    for (long i = 0; i < 1000000; ++i) {
        Rng trng = Rng::stream(3, 0, static_cast<std::uint64_t>(i), StreamPurpose::topology);
        Rng nrng = Rng::stream(3, 0, static_cast<std::uint64_t>(i), StreamPurpose::noise);
        x = glu_step(x, topo.sample(trng), sample_observation(model, theta, i, nrng), p, model);
        sup = std::max(sup, x.x.norm());
    }
    CHECK(sup < 50.0);
    CHECK((network_average(x) - theta).norm() < 0.05);
}
