import math

import numpy as np
import pytest

from kcontract import models
from kcontract.decompose import validate_pair
from kcontract.model import fd_jacobian

NAMES = list(models.CATALOG)


def domain_points(model, rng, count=100, shrink=0.99):
    box = model.domain
    return box.lower * shrink + rng.random((count, model.n)) * (box.upper - box.lower) * shrink


@pytest.mark.parametrize("name", NAMES)
def test_analytic_jacobian_matches_differences(name, rng):
    m = models.build(name)
    for x in domain_points(m, rng):
        t = rng.uniform(0, 10)
        j = m.jacobian(t, x)
        fd = fd_jacobian(m, t, x)
        assert np.max(np.abs(j - fd)) <= 1e-5 * max(1.0, np.max(np.abs(j)))


@pytest.mark.parametrize("params", [{"nonlinearity": "tanh"}, {"n": 6}, {"graph": [[1, 2, 0.5], [2, 3, 2.0], [3, 1, 1.0]]}])
def test_consensus_variants(params, rng):
    for name in ("laplacian-consensus", "second-order-consensus"):
        m = models.build(name, params)
        for x in domain_points(m, rng, 20):
            np.testing.assert_allclose(m.jacobian(0.0, x), fd_jacobian(m, 0.0, x), atol=1e-5)


def test_duffing_jacobian_example():
    np.testing.assert_allclose(models.build("duffing").jacobian(0.7, [1.0, 0.0]), [[0.0, 1.0], [-0.3, -0.1]])


def test_duffing_defaults():
    m = models.build("duffing")
    assert m.time_varying and m.period == pytest.approx(2 * math.pi)
    assert m.params == {"alpha": 0.0, "beta": 0.1, "gamma": 5.0, "delta": 0.1, "omega": 1.0}
    assert not models.build("duffing", {"gamma": 0.0}).time_varying


@pytest.mark.parametrize("delta", [0.0, -0.1])
def test_duffing_requires_damping(delta):
    with pytest.raises(ValueError):
        models.build("duffing", {"delta": delta})


@pytest.mark.parametrize("name", ["laplacian-consensus", "three-agents"])
def test_consensus_direction_invariant(name, rng):
    m = models.build(name, {"nonlinearity": "tanh"} if name.startswith("lap") else {"b": 0.5})
    for x in domain_points(m, rng, 50):
        np.testing.assert_allclose(m.jacobian(0.0, x) @ np.ones(m.n), 0.0, atol=1e-12)


def test_three_agents_row_sums():
    j = models.build("three-agents").jacobian(0.0, [0.3, -2.0, 5.0])
    np.testing.assert_allclose(j.sum(axis=1), 0.0, atol=1e-15)


def test_two_agent_structure(rng):
    m = models.build("two-agent-3d", {"s": 2.5})
    pair = models.two_agent_pair()
    for x in domain_points(m, rng, 50):
        j = m.jacobian(0.0, x)
        assert j[0, 0] == j[2, 2] == -1.0
        np.testing.assert_allclose(pair.V.T @ j @ pair.U, 0.0, atol=1e-15)


def test_lti_preset_trace():
    assert np.trace(models.build("lti-example6").jacobian(0.0, np.zeros(4))) == -3.0


def test_lti_user_matrix():
    m = models.build("lti", {"matrix": [[0.0, 1.0], [-1.0, 0.0]]})
    np.testing.assert_array_equal(m.eval(0.0, [1.0, 0.0]), [0.0, -1.0])
    with pytest.raises(ValueError):
        models.build("lti", {"matrix": [[1.0, 2.0]]})


def test_sin_clock_field():
    m = models.build("sin-clock")
    np.testing.assert_allclose(m.eval(math.pi / 2, [3.0, 2.0]), [1.0, -2.0])
    assert m.period == pytest.approx(2 * math.pi)


def test_unknown_model():
    with pytest.raises(KeyError):
        models.build("lorenz")


def test_unknown_parameter():
    with pytest.raises(ValueError):
        models.build("duffing", {"mu": 1.0})


@pytest.mark.parametrize("params", [{"a": 0.0}, {"b": -1.0}])
def test_three_agents_ranges(params):
    with pytest.raises(ValueError):
        models.build("three-agents", params)


def test_bad_nonlinearity():
    with pytest.raises(ValueError):
        models.build("laplacian-consensus", {"nonlinearity": "relu"})


@pytest.mark.parametrize("name", [n for n in NAMES if models.CATALOG[n].pair])
def test_known_pairs_valid(name):
    pair = models.known_pair(name)
    ok, residuals = validate_pair(pair)
    assert ok, residuals
    assert pair.n == models.build(name).n


def test_laplacian_convention():
    L = models.laplacian([[1, 2, 3.0]], 2)
    np.testing.assert_array_equal(L, [[0.0, 0.0], [-3.0, 3.0]])
    np.testing.assert_allclose(models.laplacian(models.directed_cycle(5)).sum(axis=1), 0.0)


def test_list_models():
    listing = models.list_models()
    assert [e["name"] for e in listing] == NAMES
    assert all(not any(k.startswith("_") for k in e["parameters"]) for e in listing)
    assert {e["name"] for e in listing if not e["has_pair"]} == {"duffing"}
