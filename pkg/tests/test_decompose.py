import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from kcontract import models
from kcontract.certificate import SamplingGrid
from kcontract.decompose import (
    ReducibilityError,
    SubspacePair,
    check_reducibility,
    feedback_form_reduce,
    feedback_model,
    feedback_transform,
    lti_blocks,
    lti_invariant_pair,
    pair_from_first_integral,
    reconstruct,
    serial_reduce,
    validate_pair,
)
from kcontract.model import BoxDomain, VectorFieldModel, compose_serial

from oracles import multiset_close, random_orthonormal

SMALL = SamplingGrid(points_per_axis=4, n_random=200)
WITH_PAIRS = [n for n in models.CATALOG if models.CATALOG[n].pair]


def lti(a):
    return models.build("lti", {"matrix": np.asarray(a, dtype=float).tolist()})


class TestPair:
    def test_preset_pair(self):
        ok, res = validate_pair(models.preset_pair())
        assert ok and all(v == 0 for v in res.values())

    def test_three_agents_pair(self):
        assert validate_pair(models.three_agents_pair())[0]

    def test_overlapping_fails(self):
        u = np.array([[1.0], [0.0]])
        ok, res = validate_pair(SubspacePair(U=u, V=u))
        assert not ok and res["UtV"] > 0.5

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            SubspacePair(U=np.eye(3)[:, :1], V=np.eye(3)[:, 1:2])

    def test_vector_input_is_a_column(self):
        pair = SubspacePair(U=[0.0, 1.0], V=[1.0, 0.0])
        assert pair.U.shape == (2, 1) and pair.p_dim == pair.q_dim == 1

    def test_transform_is_orthogonal(self):
        T = models.three_agents_pair().T
        np.testing.assert_allclose(T @ T.T, np.eye(3), atol=1e-12)


class TestFirstIntegral:
    def test_ones(self):
        pair = pair_from_first_integral(np.ones(4))
        np.testing.assert_allclose(pair.V.ravel(), np.full(4, 0.5))
        assert validate_pair(pair)[0]

    def test_axis(self):
        pair = pair_from_first_integral([1.0, 0.0, 0.0])
        np.testing.assert_allclose(np.abs(pair.V.ravel()), [1, 0, 0], atol=1e-15)
        np.testing.assert_allclose(pair.U[0], 0.0, atol=1e-15)

    def test_zero_rejected(self):
        with pytest.raises(ValueError):
            pair_from_first_integral(np.zeros(3))

    def test_deterministic(self):
        a, b = pair_from_first_integral([1.0, 2.0, 3.0]), pair_from_first_integral([1.0, 2.0, 3.0])
        np.testing.assert_array_equal(a.U, b.U)

    def test_mass_conservation(self):
        S = np.array([[-1.0, 0.0, 1.0], [1.0, -1.0, 0.0], [0.0, 1.0, -1.0]])
        m = VectorFieldModel(name="network", n=3, f=lambda t, x: S @ np.tanh(x * [1.0, 2.0, 0.5]),
                             domain=BoxDomain.cube(3))
        cert = check_reducibility(m, pair_from_first_integral(np.ones(3)), SMALL)
        assert cert.passed and cert.bound <= 1e-9  # finite-difference Jacobian
        assert cert.details["value_form_residual"] <= 1e-12


class TestReducibility:
    def test_laplacian(self):
        m = models.build("laplacian-consensus", {"nonlinearity": "tanh"})
        cert = check_reducibility(m, models.known_pair("laplacian-consensus"))
        assert cert.passed and cert.bound <= 1e-12

    def test_two_agent(self):
        cert = check_reducibility(models.build("two-agent-3d"), models.two_agent_pair())
        assert cert.passed and cert.bound <= 1e-15

    def test_dense_random_fails(self, rng):
        cert = check_reducibility(lti(rng.standard_normal((3, 3))), models.three_agents_pair(), SMALL)
        assert not cert.passed and cert.bound > 1e-3

    def test_time_window_recorded(self):
        m = models.build("sin-clock")
        cert = check_reducibility(m, models.known_pair("sin-clock"))
        assert cert.passed and cert.details["t_window"] == [0.0, 2 * math.pi]

    @pytest.mark.parametrize("name", WITH_PAIRS)
    def test_jacobian_and_value_forms_agree(self, name):
        cert = check_reducibility(models.build(name), models.known_pair(name), SMALL)
        assert cert.passed
        assert cert.details["value_form_residual"] <= 1e-8

    def test_value_form_detects_failure(self, rng):
        cert = check_reducibility(lti(rng.standard_normal((4, 4))), models.preset_pair(), SMALL)
        assert not cert.passed and cert.details["value_form_residual"] > 1e-8


class TestSerialReduce:
    @pytest.mark.parametrize("name", WITH_PAIRS)
    def test_round_trip(self, name, rng):
        m, pair = models.build(name), models.known_pair(name)
        cascade = compose_serial(serial_reduce(m, pair, SMALL))
        pulled = reconstruct(cascade, pair)
        for _ in range(50):
            x, t = rng.uniform(-9, 9, m.n), rng.uniform(0, 10)
            np.testing.assert_allclose(pulled(t, x), m.eval(t, x), atol=1e-10)

    @pytest.mark.parametrize("name", WITH_PAIRS)
    def test_stacked_derivatives(self, name, rng):
        m, pair = models.build(name), models.known_pair(name)
        sp = serial_reduce(m, pair, SMALL)
        for _ in range(20):
            x, t = rng.uniform(-9, 9, m.n), rng.uniform(0, 10)
            y1, y2 = pair.V.T @ x, pair.U.T @ x
            stacked = np.concatenate([sp.upstream.eval(t, y1), sp.downstream.eval(t, y2, sp.output(y1))])
            np.testing.assert_allclose(stacked, pair.T @ m.eval(t, x), atol=1e-10)

    def test_gate(self, rng):
        with pytest.raises(ReducibilityError):
            serial_reduce(lti(rng.standard_normal((3, 3))), models.three_agents_pair(), SMALL)

    def test_lti_blocks(self):
        a = np.array([[-1.0, 2.0, 0.0], [0.0, -2.0, 0.0], [3.0, 1.0, -4.0]])
        pair = SubspacePair(U=np.eye(3)[:, [2]], V=np.eye(3)[:, :2])
        sp = serial_reduce(lti(a), pair, SMALL)
        np.testing.assert_allclose(sp.upstream.jacobian(0.0, [0.0, 0.0]), [[-1.0, 2.0], [0.0, -2.0]])
        np.testing.assert_allclose(sp.downstream.jacobian(0.0, [0.0], np.zeros(3)), [[-4.0]])
        blocks = lti_blocks(a, pair)
        np.testing.assert_allclose(blocks["input"], [[3.0, 1.0]])
        np.testing.assert_allclose(blocks["residual"], 0.0)

    def test_consensus_upstream(self, rng):
        m = models.build("laplacian-consensus", {"nonlinearity": "tanh"})
        pair = models.known_pair("laplacian-consensus")
        L = np.array(m.params["laplacian"])
        sp = serial_reduce(m, pair, SMALL)
        y1 = rng.standard_normal(3)
        np.testing.assert_allclose(sp.upstream.eval(0.0, y1), pair.V.T @ -np.tanh(L @ pair.V @ y1), atol=1e-14)

    def test_domains_are_images(self):
        sp = serial_reduce(models.build("three-agents"), models.three_agents_pair(), SMALL)
        assert sp.downstream.domain.upper[0] == pytest.approx(30 / math.sqrt(3))


class TestLtiPair:
    def test_diag_preset(self):
        a = np.diag([2.0, -3.0, -1.0, -1.0])
        pair = lti_invariant_pair(a)
        np.testing.assert_allclose(np.abs(pair.U.ravel()), [1, 0, 0, 0])
        assert check_reducibility(lti(a), pair, SMALL).bound == 0.0

    def test_rotation_plane(self):
        a = np.zeros((3, 3))
        a[:2, :2] = [[0.0, 1.0], [-1.0, 0.0]]
        a[2, 2] = -1.0
        pair = lti_invariant_pair(a)
        assert pair.p_dim == 2
        np.testing.assert_allclose(pair.U @ pair.U.T, np.diag([1.0, 1.0, 0.0]), atol=1e-12)

    def test_prefer_real(self):
        a = np.zeros((3, 3))
        a[:2, :2] = [[0.0, 1.0], [-1.0, 0.0]]
        a[2, 2] = -1.0
        pair = lti_invariant_pair(a, prefer="real")
        np.testing.assert_allclose(np.abs(pair.U.ravel()), [0, 0, 1], atol=1e-12)

    @given(st.integers(0, 2**32 - 1), st.integers(3, 6))
    def test_invariant_and_spectrum_union(self, seed, n):
        rng = np.random.default_rng(seed)
        a = rng.standard_normal((n, n))
        pair = lti_invariant_pair(a)
        assert np.linalg.norm((np.eye(n) - pair.U @ pair.U.T) @ a @ pair.U) <= 1e-8 * max(1, np.linalg.norm(a))
        blocks = lti_blocks(a, pair)
        union = np.concatenate([np.linalg.eigvals(blocks["upstream"]), np.linalg.eigvals(blocks["downstream"])])
        assert multiset_close(union, np.linalg.eigvals(a), 1e-8)

    def test_small_n_rejected(self):
        with pytest.raises(ValueError):
            lti_invariant_pair(np.eye(2))


def _second_order_data(n=4, alpha=1.5, beta=0.7):
    L = models.laplacian(models.directed_cycle(n))
    g = lambda z: z
    h = lambda w, z: -np.tanh(w + alpha * L @ z)
    return L, g, h, beta * L


class TestFeedbackForm:
    def test_second_order_consensus(self, rng):
        L, g, h, M = _second_order_data()
        pair = pair_from_first_integral(np.ones(4))
        pair = SubspacePair(U=pair.V, V=pair.U)
        sp = feedback_form_reduce(g, h, M, pair, 4)
        full = feedback_model(g, h, M, 4)
        cascade = compose_serial(sp)
        T = feedback_transform(pair, 4)
        for _ in range(30):
            w = rng.uniform(-5, 5, 8)
            np.testing.assert_allclose(cascade.eval(0.0, T @ w), T @ full.eval(0.0, w), atol=1e-10)
        y1, y2 = rng.standard_normal(3), rng.standard_normal(4)
        up = sp.upstream.eval(0.0, np.concatenate([y1, y2]))
        np.testing.assert_allclose(up[:3], pair.V.T @ y2, atol=1e-14)
        np.testing.assert_allclose(up[3:], -np.tanh(M @ pair.V @ y1 + 1.5 * L @ y2), atol=1e-14)
        np.testing.assert_allclose(sp.downstream.eval(0.0, [0.0], sp.output(np.concatenate([y1, y2]))),
                                   pair.U.T @ y2, atol=1e-14)

    def test_matches_catalog_model(self, rng):
        m = models.build("second-order-consensus", {"alpha": 1.5, "beta": 0.7, "nonlinearity": "tanh"})
        L, g, h, M = _second_order_data()
        full = feedback_model(g, h, M, 4)
        for _ in range(10):
            w = rng.uniform(-5, 5, 8)
            np.testing.assert_allclose(full.eval(0.0, w), m.eval(0.0, w), atol=1e-14)

    def test_zero_g(self, rng):
        L, _, h, M = _second_order_data()
        pair = SubspacePair(U=np.full((4, 1), 0.5), V=pair_from_first_integral(np.ones(4)).U)
        sp = feedback_form_reduce(lambda z: np.zeros(4), h, M, pair, 4)
        w = rng.standard_normal(7)
        assert np.all(sp.upstream.eval(0.0, w)[:3] == 0)
        assert np.all(sp.downstream.eval(0.0, [1.0], sp.output(w)) == 0)

    def test_mu_must_vanish(self, rng):
        pair = SubspacePair(U=np.eye(3)[:, [0]], V=np.eye(3)[:, 1:])
        with pytest.raises(ReducibilityError):
            feedback_form_reduce(lambda z: z, lambda w, z: -z, np.ones((2, 3)), pair, 2)
