"""Payoff sources: closed-form time signals and linear population games."""

from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

CONTRACTIVE_TOL = 1e-9


@dataclass(frozen=True)
class PayoffSignal:
    """``p_i(t) = offset_i + sum_k amp[i, k] * sin(freq[i, k] * t + phase[i, k])``.

    A constant signal is the special case with no sinusoid terms.
    """

    offset: np.ndarray
    amp: np.ndarray = None
    freq: np.ndarray = None
    phase: np.ndarray = None
    name: str = "signal"

    def __post_init__(self):
        offset = np.asarray(self.offset, dtype=float)
        n = offset.size
        if n < 2:
            raise ValueError("payoff dimension must be at least 2")
        shape = (n, 0) if self.amp is None else np.shape(self.amp)
        arrays = []
        for a in (self.amp, self.freq, self.phase):
            a = np.zeros(shape) if a is None else np.asarray(a, dtype=float)
            if a.shape != shape or a.ndim != 2 or a.shape[0] != n:
                raise ValueError("sinusoid arrays must all have shape (n, terms)")
            arrays.append(a)
        if not all(np.all(np.isfinite(a)) for a in [offset] + arrays):
            raise ValueError("signal coefficients must be finite")
        object.__setattr__(self, "offset", offset)
        object.__setattr__(self, "amp", arrays[0])
        object.__setattr__(self, "freq", arrays[1])
        object.__setattr__(self, "phase", arrays[2])

    @property
    def n(self):
        return self.offset.size

    @property
    def kind(self):
        return "sinusoid-mix" if self.amp.size and np.any(self.amp) else "constant"

    def __call__(self, t):
        """Payoff at time ``t``; an array of times gives one row per time."""
        arg = self.freq * np.asarray(t, dtype=float)[..., None, None] + self.phase
        return self.offset + np.sum(self.amp * np.sin(arg), axis=-1)

    def derivative(self, t):
        arg = self.freq * np.asarray(t, dtype=float)[..., None, None] + self.phase
        return np.sum(self.amp * self.freq * np.cos(arg), axis=-1)

    def to_dict(self):
        return {
            "type": "signal",
            "name": self.name,
            "offset": self.offset.tolist(),
            "amp": self.amp.tolist(),
            "freq": self.freq.tolist(),
            "phase": self.phase.tolist(),
        }


@dataclass(frozen=True)
class MatrixGame:
    """Linear population game ``F(x) = A x``."""

    A: np.ndarray
    known_ne: Optional[np.ndarray] = None
    name: str = "game"

    def __post_init__(self):
        A = np.asarray(self.A, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] < 2:
            raise ValueError("game matrix must be square with n >= 2")
        if not np.all(np.isfinite(A)):
            raise ValueError("game matrix must be finite")
        object.__setattr__(self, "A", A)
        if self.known_ne is not None:
            ne = np.asarray(self.known_ne, dtype=float)
            object.__setattr__(self, "known_ne", ne)
            if nash_gap(self, ne) > 1e-9:
                raise ValueError("known_ne does not satisfy the Nash inequality")

    @property
    def n(self):
        return self.A.shape[0]

    def __call__(self, x):
        return self.A @ x

    def to_dict(self):
        return {
            "type": "game",
            "name": self.name,
            "A": self.A.tolist(),
            "known_ne": None if self.known_ne is None else self.known_ne.tolist(),
        }


PayoffSource = Union[PayoffSignal, MatrixGame]


def nash_gap(game, x):
    """``max_i F_i(x) - x^T F(x)``; zero exactly at Nash equilibria."""
    f = game(np.asarray(x, dtype=float))
    return float(f.max() - x @ f)


def eval_payoff(src, t, x):
    if isinstance(src, MatrixGame):
        return src(np.asarray(x, dtype=float))
    return src(t)


def eval_payoff_derivative(src, t, x, xdot):
    if isinstance(src, MatrixGame):
        return src.A @ np.asarray(xdot, dtype=float)
    return src.derivative(t)


def _tangent_basis(n):
    # orthonormal basis of {d : sum(d) = 0}: complete the ones direction, drop it
    q, _ = np.linalg.qr(np.column_stack([np.ones(n), np.eye(n)[:, : n - 1]]))
    return q[:, 1:]


def contractivity_report(game, samples=1000, rng_seed=0):
    """Classify ``game`` by the sign of ``A + A^T`` on the tangent space.

    ``min_pairing`` is the largest eigenvalue of ``A + A^T`` restricted to the
    tangent space (all-ones direction deflated), i.e. the largest value of
    ``d^T (A + A^T) d`` over unit tangent ``d``; the pairing
    ``(x - y)^T (F(x) - F(y))`` is half of that form. ``sampled_max`` is the
    same form maximised over ``samples`` random unit tangent directions and
    never exceeds ``min_pairing``.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    n = game.n
    sym = game.A + game.A.T
    basis = _tangent_basis(n)
    top = float(np.linalg.eigvalsh(basis.T @ sym @ basis).max())

    rng = np.random.default_rng(rng_seed)
    d = rng.standard_normal((samples, n))
    d -= d.mean(axis=1, keepdims=True)
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    sampled = float(np.einsum("ij,jk,ik->i", d, sym, d).max())

    if top < -CONTRACTIVE_TOL:
        cls = "strictly-contractive"
    elif top <= CONTRACTIVE_TOL:
        cls = "contractive"
    else:
        cls = "not-contractive"
    return {"class": cls, "min_pairing": top, "sampled_max": sampled}


def example1_signal():
    return PayoffSignal(
        offset=[0.0, 0.5], amp=[[1.0], [0.0]], freq=[[1.0], [0.0]], phase=[[0.0], [0.0]],
        name="example1",
    )


def example2_signal():
    return PayoffSignal(
        offset=[0.0, 0.0], amp=[[1.0], [-1.0]], freq=[[1.0], [1.0]], phase=[[0.0], [0.0]],
        name="example2",
    )


def constant_signal(c, name="constant"):
    return PayoffSignal(offset=c, name=name)


def random_smooth_signal(n, terms=3, rng_seed=0):
    if n < 2:
        raise ValueError("n must be at least 2")
    rng = np.random.default_rng(rng_seed)
    return PayoffSignal(
        offset=np.zeros(n),
        amp=rng.uniform(-1.0, 1.0, (n, terms)),
        freq=rng.uniform(0.1, 3.0, (n, terms)),
        phase=rng.uniform(0.0, 2 * np.pi, (n, terms)),
        name=f"random-{rng_seed}",
    )


def standard_rps():
    A = [[0, -1, 1], [1, 0, -1], [-1, 1, 0]]
    return MatrixGame(A, known_ne=np.full(3, 1 / 3), name="standard-rps")


def good_rps(win=2.0, loss=1.0):
    A = [[0, -loss, win], [win, 0, -loss], [-loss, win, 0]]
    return MatrixGame(A, known_ne=np.full(3, 1 / 3), name="good-rps")


def source_from_dict(d):
    """Build a payoff source from its configuration-file form."""
    kind = d.get("type", "signal")
    if kind == "game":
        return MatrixGame(d["A"], known_ne=d.get("known_ne"), name=d.get("name", "game"))
    if kind == "signal":
        return PayoffSignal(
            offset=d["offset"], amp=d.get("amp"), freq=d.get("freq"), phase=d.get("phase"),
            name=d.get("name", "signal"),
        )
    if kind == "constant":
        return constant_signal(d["c"], name=d.get("name", "constant"))
    raise ValueError(f"unknown payoff source type {kind!r}")


__all__ = [
    "PayoffSignal", "MatrixGame", "PayoffSource", "eval_payoff", "eval_payoff_derivative",
    "contractivity_report", "example1_signal", "example2_signal", "constant_signal",
    "random_smooth_signal", "standard_rps", "good_rps", "nash_gap", "source_from_dict",
]
