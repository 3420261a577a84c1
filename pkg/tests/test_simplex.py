import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from gamedyn.simplex import (
    IntegrationDiverged,
    project_simplex,
    project_tangent_cone,
    project_tangent_space,
    safeguard,
    softmax,
    vertex,
)

from .oracles import qp_project_cone, qp_project_simplex, random_boundary_point, random_cone_member

finite = st.floats(-50, 50, allow_nan=False, allow_infinity=False)


@pytest.mark.parametrize(
    "y, expected",
    [([0.5, 0.5], [0.5, 0.5]), ([2.0, 0.0], [1.0, 0.0]), ([0.6, 0.6], [0.5, 0.5])],
)
def test_project_simplex_examples(y, expected):
    np.testing.assert_allclose(project_simplex(y), expected, atol=1e-12)


def test_project_simplex_oracle_2d():
    # frozen from qp_project_simplex([2, 0]) over a 200-step grid of the 2-simplex
    np.testing.assert_allclose(qp_project_simplex([2.0, 0.0]), [1.0, 0.0], atol=1e-9)


def test_project_simplex_rejects_bad_input():
    with pytest.raises(ValueError):
        project_simplex([np.nan, 1.0])
    with pytest.raises(ValueError):
        project_simplex([1.0])


@given(arrays(float, st.integers(2, 6), elements=finite))
def test_project_simplex_idempotent(y):
    x = project_simplex(y)
    assert abs(x.sum() - 1) < 1e-9 and np.all(x >= 0)
    np.testing.assert_allclose(project_simplex(x), x, atol=1e-12)


@pytest.mark.parametrize(
    "x, p, expected",
    [
        ([0.5, 0.5], [1.0, 0.0], [0.5, -0.5]),
        ([1.0, 0.0], [1.0, 0.0], [0.0, 0.0]),
        ([0.0, 1.0], [1.0, 0.0], [0.5, -0.5]),
    ],
)
def test_project_tangent_cone_examples(x, p, expected):
    np.testing.assert_allclose(project_tangent_cone(x, p), expected, atol=1e-12)


@pytest.mark.parametrize("x, p", [([1.0, 0.0], [1.0, 0.0]), ([0.0, 1.0], [1.0, 0.0])])
def test_project_tangent_cone_matches_qp(x, p):
    np.testing.assert_allclose(project_tangent_cone(x, p), qp_project_cone(x, p), atol=1e-8)


def test_project_tangent_cone_variational_inequality():
    rng = np.random.default_rng(1)
    for _ in range(50):
        n = int(rng.integers(2, 6))
        x = random_boundary_point(rng, n)
        p = rng.normal(size=n) * 3
        v = project_tangent_cone(x, p)
        assert abs(v.sum()) <= 1e-12
        assert np.all(v[x <= 1e-9] >= 0)
        for _ in range(100):
            w = random_cone_member(rng, x)
            assert (p - v) @ (w - v) <= 1e-9


@given(arrays(float, st.integers(2, 6), elements=finite))
def test_tangent_cone_is_tangent_space_in_interior(p):
    x = np.full(p.size, 1.0 / p.size)
    np.testing.assert_allclose(project_tangent_cone(x, p), project_tangent_space(p), atol=1e-12)


@pytest.mark.parametrize(
    "p, expected",
    [([1.0, 0.0], [0.5, -0.5]), ([4.2, 4.2, 4.2], [0.0, 0.0, 0.0]), ([3.0, 1.0, 2.0], [1.0, -1.0, 0.0])],
)
def test_project_tangent_space_examples(p, expected):
    np.testing.assert_allclose(project_tangent_space(p), expected, atol=1e-12)


def test_softmax_examples():
    np.testing.assert_allclose(softmax([0.0, 0.0]), [0.5, 0.5])
    e = np.e
    np.testing.assert_allclose(softmax([1.0, 0.0]), [e / (e + 1), 1 / (e + 1)], atol=1e-12)
    np.testing.assert_allclose(softmax([1.0, 0.0]), [0.73106, 0.26894], atol=1e-5)
    z = np.array([0.3, -1.2, 2.0])
    np.testing.assert_allclose(softmax(z + 10), softmax(z), atol=1e-15)


@given(arrays(float, st.integers(2, 8), elements=st.floats(-700, 700)))
def test_softmax_interior_and_normalised(z):
    s = softmax(z)
    assert abs(s.sum() - 1) <= 1e-12
    assert np.all(s > 0) or np.ptp(z) > 700  # exp underflow only for huge spreads


@settings(max_examples=50)
@given(arrays(float, st.integers(2, 8), elements=st.floats(-30, 30)))
def test_softmax_strictly_positive_moderate(z):
    assert np.all(softmax(z) > 0)


def test_vertex():
    np.testing.assert_array_equal(vertex(1, 2), [1, 0])
    np.testing.assert_array_equal(vertex(2, 3), [0, 1, 0])
    np.testing.assert_array_equal(vertex(3, 3), [0, 0, 1])
    with pytest.raises(IndexError):
        vertex(0, 3)
    with pytest.raises(IndexError):
        vertex(4, 3)


def test_safeguard():
    np.testing.assert_array_equal(safeguard([0.5, 0.5]), [0.5, 0.5])
    np.testing.assert_array_equal(safeguard([-1e-9, 1.0]), [0.0, 1.0])
    assert abs(safeguard([0.3, 0.3, 0.4000001]).sum() - 1.0) <= 1e-15
    with pytest.raises(IntegrationDiverged):
        safeguard([0.6, 0.6])
