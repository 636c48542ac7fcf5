import math

import numpy as np
import pytest

import glu_estimation as glu


def test_graph_spectrum():
    assert glu.fiedler_value(glu.laplacian(glu.Graph.complete(3))) == pytest.approx(3.0)
    path = glu.laplacian(glu.Graph.path(3)).matrix
    np.testing.assert_array_equal(path, [[1, -1, 0], [-1, 2, -1], [0, -1, 1]])
    with pytest.raises(glu.ModelError):
        glu.Graph(3, [(0, 0)])


def test_gossip_mean_connectivity():
    model = glu.TopologyModel.gossip_uniform(glu.Graph.complete(3))
    conn = glu.check_mean_connectivity(model)
    assert conn.connected
    assert conn.lambda2 == pytest.approx(1.0)
    rng = glu.Rng(1)
    for _ in range(50):
        assert glu.fiedler_value(model.sample(rng)) == pytest.approx(0.0, abs=1e-9)


def test_sensing_and_optimal_gain():
    model = glu.SensingModel(2, [np.array([[1.0, 1.0]]), np.array([[1.0, -1.0]])], np.eye(2))
    np.testing.assert_allclose(glu.grammian(model), 2 * np.eye(2))
    np.testing.assert_allclose(glu.optimal_gain(model), 0.5 * np.eye(2))
    obs = glu.check_global_observability(model)
    assert obs.observable and obs.min_singular_value == pytest.approx(2.0)


def test_scalar_asymptotic_covariance():
    model = glu.SensingModel(1, [np.ones((1, 1)), np.ones((1, 1))], np.eye(2))
    cov = glu.asymptotic_covariance(model, 2.0, np.array([[0.5]]))
    assert abs(cov.S_c[0, 0] - 0.5) <= 1e-12
    with pytest.raises(glu.StabilityError):
        glu.asymptotic_covariance(model, 0.99, np.array([[0.5]]))


def test_validators_name_conditions():
    model = glu.SensingModel(3, [np.eye(3)[k : k + 1] for k in range(3)], np.eye(3), gamma0=0.4)
    bad = glu.GluParams(tau1=0.85, a=1.0, tau2=0.2, b=1.0, K=np.eye(3))
    names = [c for c, _ in glu.validate_glu_params(bad, model)]
    assert names == ["weight-exponent-condition"]
    good = glu.GluParams(tau1=1.0, a=1.0, tau2=0.1, b=1.0, K=np.eye(3))
    assert glu.validate_glu_params(good, glu.SensingModel(3, [np.eye(3)[k : k + 1] for k in range(3)], np.eye(3))) == []


def test_glu_step_hand_example():
    model = glu.SensingModel(1, [np.ones((1, 1)), np.ones((1, 1))], np.eye(2))
    params = glu.GluParams(tau1=1.0, a=0.5, tau2=0.1, b=0.25, K=np.eye(1))
    lap = glu.laplacian(glu.Graph.complete(2))
    x = glu.glu_step(np.array([0.0, 2.0]), 0, lap, [np.array([1.0]), np.array([1.0])], params, model)
    np.testing.assert_allclose(x, [1.0, 1.0])


def test_rate_fit_power_law():
    i = np.arange(0, 100001, 100)
    fit = glu.rate_fit(i.tolist(), ((i + 1.0) ** -0.5).tolist())
    assert fit.exponent == pytest.approx(-0.5, abs=1e-9)


def test_scalar_recursion_oracle():
    y = glu.scalar_recursion(1.0, 1.0, 0.5, 1.0, 1.0, 10000)
    assert len(y) == 10001
    assert y[-1] < y[1000]


def test_run_small_experiment():
    config = {
        "sensing": {"field_dim": 2, "sensors": {"cyclic_components": 4}, "noise_cov": "identity", "gamma0": 0},
        "topology": "gossip-uniform: 4",
        "glu": {"tau1": 1, "a_factor": 2, "tau2": 0.1, "b": 0.5, "K": "optimal"},
        "central": "mirror",
        "theta_star": [1.0, -0.5],
        "iterations": 3000,
        "trials": 4,
        "seed": 3,
        "record_every": 100,
    }
    assert glu.validate_config(config) == []
    first = glu.run_experiment(config)
    second = glu.run_experiment(config)
    assert first == second
    assert first["num_sensors"] == 4
    assert first["terminal_median_error"] < first["initial_error"]
    assert math.isfinite(first["gap_fit"]["exponent"])
