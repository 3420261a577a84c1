"""Learning dynamics on the simplex as state-space vector fields.

Every model stores its state as a flat float vector made of one or two
length-``n`` blocks (see ``STATE_FIELDS``). ``ModelState`` is the named view
of that vector used at the API boundary; the integrator works on the flat
form directly.
"""

import enum
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .simplex import (
    EPS_ACTIVE,
    is_on_simplex,
    project_simplex,
    project_tangent_cone,
    softmax,
)


class ModelKind(str, enum.Enum):
    RD = "rd"
    FTRL = "ftrl"
    DP = "dp"
    SHO_FTRL = "sho-ftrl"
    SHO_DP = "sho-dp"
    BNN = "bnn"
    SMITH = "smith"
    LOGIT = "logit"
    TP = "tp"
    EXRD = "exrd"
    RD_LATENCY = "rd-latency"

    @classmethod
    def parse(cls, name):
        if isinstance(name, cls):
            return name
        try:
            return cls(str(name).strip().lower())
        except ValueError:
            raise ValueError(f"unknown model {name!r}") from None


ALL_MODELS = list(ModelKind)

# integer tags shared with the compiled kernel; order is part of its ABI
MODEL_CODES = {kind: code for code, kind in enumerate(ALL_MODELS)}

STATE_FIELDS = {
    ModelKind.RD: ("x",),
    ModelKind.FTRL: ("z",),
    ModelKind.DP: ("x",),
    ModelKind.SHO_FTRL: ("z", "xi"),
    ModelKind.SHO_DP: ("x", "xi"),
    ModelKind.BNN: ("x",),
    ModelKind.SMITH: ("x",),
    ModelKind.LOGIT: ("x",),
    ModelKind.TP: ("x",),
    ModelKind.EXRD: ("z",),
    ModelKind.RD_LATENCY: ("x", "phat"),
}

SCORE_MODELS = frozenset({ModelKind.FTRL, ModelKind.SHO_FTRL, ModelKind.EXRD})
# models whose strategy is pushed through a Euclidean projection
PROJECTION_MODELS = frozenset({ModelKind.DP, ModelKind.SHO_DP})
INTERIOR_START = frozenset(
    {ModelKind.RD, ModelKind.FTRL, ModelKind.SHO_FTRL, ModelKind.EXRD, ModelKind.RD_LATENCY}
)


@dataclass(frozen=True)
class ModelParams:
    lam: float = 1.0
    gamma: float = 1.0

    def __post_init__(self):
        if not (self.lam > 0 and self.gamma > 0):
            raise ValueError("lambda and gamma must be positive")


@dataclass
class ModelState:
    x: Optional[np.ndarray] = None
    z: Optional[np.ndarray] = None
    xi: Optional[np.ndarray] = None
    phat: Optional[np.ndarray] = None

    def pack(self, kind):
        kind = ModelKind.parse(kind)
        blocks = [getattr(self, f) for f in STATE_FIELDS[kind]]
        if any(b is None for b in blocks):
            raise ValueError(f"state is missing fields required by {kind.value}")
        return np.concatenate([np.asarray(b, dtype=float) for b in blocks])

    @classmethod
    def unpack(cls, kind, y):
        kind = ModelKind.parse(kind)
        fields = STATE_FIELDS[kind]
        blocks = np.split(np.asarray(y, dtype=float), len(fields))
        return cls(**dict(zip(fields, blocks)))


def init_state(kind, n, params, x0):
    kind = ModelKind.parse(kind)
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (n,) or not is_on_simplex(x0):
        raise ValueError("x0 must be a point of the n-simplex")
    if kind in INTERIOR_START and np.any(x0 <= 0):
        raise ValueError(f"{kind.value} needs a strictly interior initial strategy")
    state = ModelState()
    if kind in SCORE_MODELS:
        state.z = np.log(x0)
    else:
        state.x = x0.copy()
    if kind in (ModelKind.SHO_FTRL, ModelKind.SHO_DP):
        state.xi = x0.copy()
    if kind is ModelKind.RD_LATENCY:
        state.phat = np.zeros(n)
    return state


def read_strategy(kind, state):
    kind = ModelKind.parse(kind)
    if kind in SCORE_MODELS:
        return softmax(state.z)
    return np.asarray(state.x, dtype=float)


def _rd(x, p):
    return x * (p - x @ p)


def _bnn(x, p):
    excess = np.maximum(p - x @ p, 0.0)
    return excess - x * excess.sum()


def _smith(x, p):
    # gain[i, j] = [p_i - p_j]_+ : rate of switching from j to i
    gain = np.maximum(p[:, None] - p[None, :], 0.0)
    return gain @ x - x * gain.sum(axis=0)


def _softmax_jvp(x, v):
    return x * (v - x @ v)


def flat_field(kind, y, p, params, n):
    """Time derivative of the flat state ``y`` under payoff ``p``."""
    if kind is ModelKind.RD:
        return _rd(y, p)
    if kind is ModelKind.FTRL:
        return p.copy()
    if kind is ModelKind.DP:
        return project_tangent_cone(y, p, EPS_ACTIVE)
    if kind is ModelKind.SHO_FTRL:
        z, xi = y[:n], y[n:]
        x = softmax(z)
        return np.concatenate([p - params.gamma * (x - xi), params.lam * (x - xi)])
    if kind is ModelKind.SHO_DP:
        x, xi = y[:n], y[n:]
        v = project_tangent_cone(x, p - params.gamma * (x - xi), EPS_ACTIVE)
        return np.concatenate([v, params.lam * (x - xi)])
    if kind is ModelKind.BNN:
        return _bnn(y, p)
    if kind is ModelKind.SMITH:
        return _smith(y, p)
    if kind is ModelKind.LOGIT:
        return softmax(p) - y
    if kind is ModelKind.TP:
        return project_simplex(y + p) - y
    if kind is ModelKind.EXRD:
        return params.lam * (p - y)
    if kind is ModelKind.RD_LATENCY:
        x, phat = y[:n], y[n:]
        return np.concatenate([_rd(x, phat), params.lam * (p - phat)])
    raise ValueError(f"unknown model {kind!r}")


def flat_strategy(kind, y, n):
    if kind in SCORE_MODELS:
        return softmax(y[:n])
    return y[:n]


def strategy_rate(kind, y, dy, n):
    """Time derivative of the strategy read-out given the state derivative."""
    if kind in SCORE_MODELS:
        return _softmax_jvp(softmax(y[:n]), dy[:n])
    return dy[:n]


def vector_field(kind, state, p, params=None):
    """Right-hand side of ``kind`` at ``state`` as a ``ModelState`` of rates."""
    kind = ModelKind.parse(kind)
    params = params or ModelParams()
    y = state.pack(kind)
    n = y.size // len(STATE_FIELDS[kind])
    p = np.asarray(p, dtype=float)
    if p.shape != (n,) or not np.all(np.isfinite(p)):
        raise ValueError("payoff must be a finite vector matching the state dimension")
    return ModelState.unpack(kind, flat_field(kind, y, p, params, n))


def strategy_velocity(kind, state, p, params=None):
    """``dx/dt`` of the strategy read-out; always a tangent vector."""
    kind = ModelKind.parse(kind)
    params = params or ModelParams()
    y = state.pack(kind)
    n = y.size // len(STATE_FIELDS[kind])
    dy = flat_field(kind, y, np.asarray(p, dtype=float), params, n)
    return strategy_rate(kind, y, dy, n)


def is_rest_point(kind, state, p, params=None, tol=1e-9):
    rates = vector_field(kind, state, p, params)
    kind = ModelKind.parse(kind)
    return bool(np.max(np.abs(rates.pack(kind))) <= tol)
