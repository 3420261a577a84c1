import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gamedyn.dynamics import (
    ALL_MODELS,
    SCORE_MODELS,
    STATE_FIELDS,
    ModelKind,
    ModelParams,
    ModelState,
    init_state,
    is_rest_point,
    read_strategy,
    strategy_velocity,
    vector_field,
)
from gamedyn.payoffs import good_rps
from gamedyn.simplex import softmax, vertex

from .oracles import random_boundary_point

K = ModelKind
HALF = np.array([0.5, 0.5])


def xstate(x, **extra):
    return ModelState(x=np.asarray(x, dtype=float), **extra)


def random_state(kind, rng, n, interior=True):
    x = rng.dirichlet(np.ones(n)) if interior else random_boundary_point(rng, n)
    s = ModelState()
    for f in STATE_FIELDS[kind]:
        if f == "x":
            s.x = x
        elif f == "z":
            s.z = rng.normal(size=n) * 2
        elif f == "xi":
            s.xi = rng.normal(size=n)
        else:
            s.phat = rng.normal(size=n) * 2
    return s


@pytest.mark.parametrize(
    "kind, x, p, expected",
    [
        (K.RD, HALF, [1, 0], [0.25, -0.25]),
        (K.RD, [1, 0], [3.0, -2.0], [0, 0]),
        (K.BNN, HALF, [1, 0], [0.25, -0.25]),
        (K.SMITH, HALF, [1, 0], [0.5, -0.5]),
        (K.LOGIT, HALF, [0, 0], [0, 0]),
        (K.TP, HALF, [1, 0], [0.5, -0.5]),
        (K.TP, [0.3, 0.7], [0, 0], [0, 0]),
        (K.DP, [1, 0], [1, 0], [0, 0]),
    ],
)
def test_vector_field_examples(kind, x, p, expected):
    np.testing.assert_allclose(vector_field(kind, xstate(x), p).x, expected, atol=1e-15)


def test_sho_ftrl_with_filter_at_strategy_reduces_to_ftrl():
    z = np.array([0.2, -0.4, 1.0])
    p = np.array([0.3, 1.0, -2.0])
    rates = vector_field(K.SHO_FTRL, ModelState(z=z, xi=softmax(z)), p, ModelParams(2.0, 0.5))
    np.testing.assert_allclose(rates.z, p, atol=1e-15)
    np.testing.assert_allclose(rates.xi, 0, atol=1e-15)


def test_exrd_fixed_point_at_payoff():
    p = np.array([0.7, -0.1, 0.4])
    np.testing.assert_allclose(vector_field(K.EXRD, ModelState(z=p.copy()), p).z, 0, atol=1e-15)


def test_rd_latency_strategy_matches_rd_when_filter_settled():
    x = np.array([0.2, 0.3, 0.5])
    p = np.array([1.0, -0.5, 0.25])
    lat = vector_field(K.RD_LATENCY, ModelState(x=x, phat=p.copy()), p)
    np.testing.assert_allclose(lat.x, vector_field(K.RD, xstate(x), p).x, atol=1e-15)
    np.testing.assert_allclose(lat.phat, 0, atol=1e-15)


@settings(max_examples=30)
@given(st.integers(0, 10_000), st.floats(-5, 5))
def test_bnn_and_smith_rest_under_constant_payoff(seed, c):
    x = np.random.default_rng(seed).dirichlet(np.ones(4))
    for kind in (K.BNN, K.SMITH):
        np.testing.assert_allclose(vector_field(kind, xstate(x), np.full(4, c)).x, 0, atol=1e-15)


@pytest.mark.parametrize("kind", ALL_MODELS, ids=lambda k: k.value)
def test_strategy_velocity_is_tangent(kind):
    rng = np.random.default_rng(11)
    for _ in range(100):
        n = int(rng.integers(2, 6))
        s = random_state(kind, rng, n, interior=kind in SCORE_MODELS or rng.random() < 0.5)
        v = strategy_velocity(kind, s, rng.normal(size=n) * 3, ModelParams(rng.uniform(0.2, 3), rng.uniform(0.2, 3)))
        assert abs(v.sum()) <= 1e-10


@pytest.mark.parametrize("kind", [K.RD, K.BNN, K.SMITH], ids=lambda k: k.value)
def test_boundary_invariance(kind):
    rng = np.random.default_rng(5)
    for _ in range(200):
        n = int(rng.integers(2, 6))
        x = random_boundary_point(rng, n)
        xd = vector_field(kind, xstate(x), rng.normal(size=n) * 3).x
        zero = x == 0
        if kind is K.RD:
            assert np.all(xd[zero] == 0)
        else:
            assert np.all(xd[zero] >= 0)


@pytest.mark.parametrize("kind", [K.LOGIT, K.TP], ids=lambda k: k.value)
@settings(max_examples=100)
@given(seed=st.integers(0, 2**31 - 1), scale=st.floats(0, 1e3))
def test_logit_and_tp_fields_are_bounded(kind, seed, scale):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 7))
    x = random_boundary_point(rng, n)
    xd = vector_field(kind, xstate(x), rng.normal(size=n) * scale).x
    assert np.max(np.abs(xd)) <= 2


def test_rest_point_examples():
    for i in (1, 2, 3):
        assert is_rest_point(K.RD, xstate(vertex(i, 3)), [0.4, -1.0, 2.0])
    p = np.array([0.3, -0.2, 1.1])
    assert is_rest_point(K.LOGIT, xstate(softmax(p)), p)
    u = np.full(3, 1 / 3)
    assert is_rest_point(K.BNN, xstate(u), good_rps()(u))
    assert not is_rest_point(K.RD, xstate(HALF), [1.0, 0.0])


def test_init_state_examples():
    s = init_state(K.FTRL, 2, ModelParams(), HALF)
    np.testing.assert_allclose(s.z, np.log(HALF))
    np.testing.assert_allclose(read_strategy(K.FTRL, s), HALF)
    x0 = np.array([0.2, 0.5, 0.3])
    p = np.array([1.0, 2.0, -1.0])
    s = init_state(K.SHO_FTRL, 3, ModelParams(), x0)
    np.testing.assert_array_equal(s.xi, x0)
    np.testing.assert_allclose(vector_field(K.SHO_FTRL, s, p).z, p, atol=1e-15)
    np.testing.assert_array_equal(init_state(K.RD_LATENCY, 3, ModelParams(), x0).phat, 0)


@pytest.mark.parametrize("kind", [K.RD, K.FTRL, K.SHO_FTRL, K.EXRD, K.RD_LATENCY], ids=lambda k: k.value)
def test_init_state_rejects_boundary_for_interior_models(kind):
    with pytest.raises(ValueError):
        init_state(kind, 2, ModelParams(), [1.0, 0.0])


def test_init_state_accepts_boundary_for_other_models():
    for kind in (K.DP, K.SHO_DP, K.BNN, K.SMITH, K.LOGIT, K.TP):
        np.testing.assert_array_equal(read_strategy(kind, init_state(kind, 2, ModelParams(), [1.0, 0.0])), [1, 0])
    with pytest.raises(ValueError):
        init_state(K.DP, 2, ModelParams(), [0.7, 0.7])


def test_read_strategy_examples():
    np.testing.assert_allclose(read_strategy(K.FTRL, ModelState(z=np.zeros(2))), HALF)
    np.testing.assert_array_equal(read_strategy(K.DP, xstate([0.2, 0.8])), [0.2, 0.8])
    np.testing.assert_allclose(read_strategy(K.EXRD, ModelState(z=np.array([1.0, 0.0]))), [0.731, 0.269], atol=1e-3)


def test_model_parsing_and_params():
    assert ModelKind.parse("SHO-FTRL") is K.SHO_FTRL
    with pytest.raises(ValueError):
        ModelKind.parse("hedge")
    with pytest.raises(ValueError):
        ModelParams(lam=0.0)
    with pytest.raises(ValueError):
        vector_field(K.RD, xstate(HALF), [np.inf, 0.0])


@pytest.mark.parametrize("base, sho", [(K.FTRL, K.SHO_FTRL), (K.DP, K.SHO_DP)], ids=["ftrl", "dp"])
def test_sho_approaches_base_as_gamma_vanishes(base, sho):
    from gamedyn.integrator import IntegratorConfig, integrate
    from gamedyn.payoffs import example1_signal

    cfg = IntegratorConfig(dt=1e-3, T=10.0, record_every=10)
    ref = integrate(base, ModelParams(), HALF, example1_signal(), cfg).strategies
    gaps = []
    for gamma in (0.1, 0.05, 0.025):
        got = integrate(sho, ModelParams(gamma=gamma), HALF, example1_signal(), cfg).strategies
        gaps.append(np.max(np.abs(got - ref)))
    # first order in gamma: halving gamma roughly halves the gap
    assert gaps[0] < 0.1
    assert gaps[2] < gaps[1] < gaps[0]
    assert gaps[1] / gaps[0] == pytest.approx(0.5, abs=0.15)
    assert gaps[2] / gaps[1] == pytest.approx(0.5, abs=0.15)
