import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gamedyn.payoffs import (
    MatrixGame,
    PayoffSignal,
    constant_signal,
    contractivity_report,
    eval_payoff,
    eval_payoff_derivative,
    example1_signal,
    example2_signal,
    good_rps,
    nash_gap,
    random_smooth_signal,
    source_from_dict,
    standard_rps,
)

U3 = np.full(3, 1 / 3)


def test_eval_payoff_examples():
    np.testing.assert_allclose(eval_payoff(example1_signal(), np.pi / 2, [0.5, 0.5]), [1.0, 0.5])
    zero = MatrixGame(np.zeros((3, 3)))
    np.testing.assert_array_equal(eval_payoff(zero, 0.0, [0.2, 0.3, 0.5]), np.zeros(3))
    np.testing.assert_allclose(eval_payoff(standard_rps(), 0.0, U3), np.zeros(3), atol=1e-15)


def test_eval_payoff_derivative_examples():
    np.testing.assert_allclose(eval_payoff_derivative(example1_signal(), 0.0, [0.5, 0.5], [0, 0]), [1.0, 0.0])
    np.testing.assert_array_equal(eval_payoff_derivative(good_rps(), 0.0, U3, np.zeros(3)), np.zeros(3))
    eye = MatrixGame(np.eye(3))
    np.testing.assert_array_equal(eval_payoff_derivative(eye, 0.0, U3, [1, -1, 0]), [1, -1, 0])


def test_signal_constructors():
    np.testing.assert_allclose(example1_signal()(0.0), [0.0, 0.5])
    np.testing.assert_allclose(example2_signal()(np.pi), [0.0, 0.0], atol=1e-12)
    for t in (0.0, 1.7, 400.0):
        np.testing.assert_array_equal(constant_signal([1.0, 0.0])(t), [1.0, 0.0])
        np.testing.assert_array_equal(constant_signal([1.0, 0.0]).derivative(t), [0.0, 0.0])


@pytest.mark.parametrize("seed", range(5))
def test_signal_derivative_matches_central_difference(seed):
    sig = random_smooth_signal(4, terms=3, rng_seed=seed)
    h = 1e-5
    for t in np.linspace(0, 20, 11):
        fd = (sig(t + h) - sig(t - h)) / (2 * h)
        np.testing.assert_allclose(sig.derivative(t), fd, atol=1e-8)


def test_random_smooth_signal_is_reproducible():
    a, b = random_smooth_signal(3, rng_seed=7), random_smooth_signal(3, rng_seed=7)
    np.testing.assert_array_equal(a(3.3), b(3.3))
    assert not np.array_equal(a(3.3), random_smooth_signal(3, rng_seed=8)(3.3))
    assert np.all(np.abs(a.amp) <= 1) and np.all((a.freq >= 0.1) & (a.freq <= 3))


def test_signal_round_trips_through_dict():
    sig = random_smooth_signal(3, rng_seed=2)
    back = source_from_dict(sig.to_dict())
    np.testing.assert_array_equal(back(1.25), sig(1.25))
    game = source_from_dict(good_rps().to_dict())
    np.testing.assert_array_equal(game.A, good_rps().A)
    with pytest.raises(ValueError):
        source_from_dict({"type": "mystery"})


def test_signal_validation():
    with pytest.raises(ValueError):
        PayoffSignal(offset=[0.0, np.nan])
    with pytest.raises(ValueError):
        MatrixGame(np.ones((2, 3)))


def test_known_equilibria_have_zero_nash_gap():
    for g in (standard_rps(), good_rps()):
        assert abs(nash_gap(g, g.known_ne)) <= 1e-12
    assert nash_gap(standard_rps(), np.array([1.0, 0.0, 0.0])) == pytest.approx(1.0)


@given(st.integers(0, 2**31 - 1))
def test_skew_symmetric_pairing_vanishes(seed):
    rng = np.random.default_rng(seed)
    x = rng.dirichlet(np.ones(3))
    assert abs(x @ standard_rps()(x)) <= 1e-14


@given(st.integers(0, 2**31 - 1))
def test_good_rps_pairing_is_minus_half_squared_distance(seed):
    rng = np.random.default_rng(seed)
    x, y = rng.dirichlet(np.ones(3), size=2)
    g = good_rps()
    pairing = (x - y) @ (g(x) - g(y))
    assert pairing == pytest.approx(-0.5 * np.sum((x - y) ** 2), abs=1e-14)


@pytest.mark.parametrize(
    "game, cls, value",
    [
        (standard_rps(), "contractive", 0.0),
        (good_rps(), "strictly-contractive", -1.0),
        (MatrixGame(np.eye(3)), "not-contractive", 2.0),
    ],
)
def test_contractivity_report(game, cls, value):
    rep = contractivity_report(game, samples=500, rng_seed=3)
    assert rep["class"] == cls
    assert rep["min_pairing"] == pytest.approx(value, abs=1e-9)
    assert rep["sampled_max"] <= rep["min_pairing"] + 1e-12
