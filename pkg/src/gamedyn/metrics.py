"""Regret, average reward, passivity pairings and storage functions.

All integrals are trapezoidal sums over the recorded grid of a
``Trajectory``; the derivative pairings use the exact derivative columns.
"""

import csv
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.special import logsumexp, xlogy

from .dynamics import ModelKind, ModelParams, init_state
from .integrator import Trajectory
from .simplex import is_on_simplex, vertex

KL_FLOOR = 1e-12
REGRET_SLACK = 1e-3
FINITE_REGRET_MODELS = frozenset(
    {ModelKind.RD, ModelKind.FTRL, ModelKind.DP, ModelKind.SHO_FTRL, ModelKind.SHO_DP}
)


def _cumulative(values, times):
    return cumulative_trapezoid(values, times, axis=0, initial=0.0)


def regret(traj, anchor):
    """``R_t(anchor) = int_0^t p^T (anchor - x) dt`` at every sample."""
    anchor = np.asarray(anchor, dtype=float)
    if anchor.shape != (traj.n,) or not is_on_simplex(anchor):
        raise ValueError("anchor must be a point of the simplex")
    return _cumulative(traj.payoffs @ anchor - np.einsum("ij,ij->i", traj.payoffs, traj.strategies), traj.times)


def vertex_regrets(traj):
    """Regret curves against every vertex, one column per vertex."""
    gained = np.einsum("ij,ij->i", traj.payoffs, traj.strategies)
    return _cumulative(traj.payoffs - gained[:, None], traj.times)


def average_reward(traj):
    reward = np.einsum("ij,ij->i", traj.payoffs, traj.strategies)
    total = _cumulative(reward, traj.times)
    out = np.empty_like(total)
    out[0] = reward[0]
    out[1:] = total[1:] / traj.times[1:]
    return out


def reference_trajectory(signal, policy, cfg):
    """Record a prescribed policy against ``signal`` on the integrator grid.

    ``policy`` maps an array of times to one strategy row per time. Not a
    dynamic model, so the strategy derivative column is zero.
    """
    times = np.arange(cfg.nsteps // cfg.record_every + 1) * (cfg.dt * cfg.record_every)
    xs = np.asarray(policy(times), dtype=float)
    ps = signal(times)
    pds = signal.derivative(times)
    return Trajectory(None, None, times, xs, xs, ps, np.zeros_like(xs), pds)


def best_response_policy(signal):
    """Pure best response to the current payoff; ties go to the lowest index."""
    eye = np.eye(signal.n)
    return lambda times: eye[np.argmax(signal(times), axis=-1)]


def fixed_policy(x):
    x = np.asarray(x, dtype=float)
    return lambda times: np.broadcast_to(x, (np.size(times), x.size)).copy()


@dataclass(frozen=True)
class StorageFn:
    """Nonnegative storage anchored at ``anchor``.

    ``kind`` is one of ``kl``, ``half_sq_dist``, ``ftrl_fenchel`` or
    ``plus_aux_sq``; the last adds ``weight * ||xi - anchor||^2 / 2`` to the
    ``base`` storage.
    """

    kind: str
    anchor: np.ndarray
    base: Optional["StorageFn"] = None
    weight: float = 1.0

    def __post_init__(self):
        if self.kind not in ("kl", "half_sq_dist", "ftrl_fenchel", "plus_aux_sq"):
            raise ValueError(f"unknown storage kind {self.kind!r}")
        if self.kind == "plus_aux_sq" and self.base is None:
            raise ValueError("plus_aux_sq needs a base storage")
        object.__setattr__(self, "anchor", np.asarray(self.anchor, dtype=float))


def _storage_rows(fn, x=None, z=None, xi=None):
    """Vectorised storage over rows; ``x``, ``z``, ``xi`` are (m, n) arrays."""
    a = fn.anchor
    if fn.kind == "kl":
        if x is None:
            x = np.exp(z - logsumexp(z, axis=1, keepdims=True))
        x = np.maximum(x, KL_FLOOR)
        return np.sum(xlogy(a, a) - xlogy(a, x), axis=1)
    if fn.kind == "half_sq_dist":
        return 0.5 * np.sum((x - a) ** 2, axis=1)
    if fn.kind == "ftrl_fenchel":
        return logsumexp(z, axis=1) - (z @ a - np.sum(xlogy(a, a)))
    base = _storage_rows(fn.base, x=x, z=z)
    return base + fn.weight * 0.5 * np.sum((xi - a) ** 2, axis=1)


def storage_eval(fn, state):
    def row(v):
        return None if v is None else np.asarray(v, dtype=float)[None, :]

    val = _storage_rows(fn, x=row(state.x), z=row(state.z), xi=row(state.xi))
    return float(max(val[0], 0.0))


def matching_storage(kind, anchor, params=None):
    """The storage certifying passivity from ``p`` to ``x - anchor``, or None."""
    kind = ModelKind.parse(kind)
    params = params or ModelParams()
    # the filter storage must be scaled by gamma/lambda to be dominated by v^T (x - anchor)
    aux = params.gamma / params.lam
    if kind is ModelKind.RD:
        return StorageFn("kl", anchor)
    if kind is ModelKind.FTRL:
        return StorageFn("ftrl_fenchel", anchor)
    if kind is ModelKind.DP:
        return StorageFn("half_sq_dist", anchor)
    if kind is ModelKind.SHO_FTRL:
        return StorageFn("plus_aux_sq", anchor, StorageFn("ftrl_fenchel", anchor), aux)
    if kind is ModelKind.SHO_DP:
        return StorageFn("plus_aux_sq", anchor, StorageFn("half_sq_dist", anchor), aux)
    return None


def storage_series(fn, traj):
    fields = {}
    for name in ("x", "z", "xi"):
        try:
            fields[name] = traj.field(name)
        except KeyError:
            pass
    return _storage_rows(fn, **fields)


def vertex_storage_bounds(kind, params, x0):
    """Initial storage against each vertex; None for models without a certificate."""
    kind = ModelKind.parse(kind)
    x0 = np.asarray(x0, dtype=float)
    n = x0.size
    state = init_state(kind, n, params or ModelParams(), x0)
    fns = [matching_storage(kind, vertex(i, n), params) for i in range(1, n + 1)]
    if fns[0] is None:
        return None
    return np.array([storage_eval(fn, state) for fn in fns])


@dataclass(frozen=True)
class RegretReport:
    times: np.ndarray
    vertex_regret_curves: np.ndarray
    sup_regret: float
    storage_bound: Optional[float]
    bounded_verdict: Optional[bool]
    vertex_bounds: Optional[np.ndarray] = None

    def to_csv(self, path):
        n = self.vertex_regret_curves.shape[1]
        write_curves(path, self.times, {f"regret_e{i + 1}": self.vertex_regret_curves[:, i] for i in range(n)})


def regret_report(traj, kind=None, params=None, x0=None, slack=REGRET_SLACK):
    """Vertex regret curves and, for finite-regret models, the storage bound.

    Every vertex curve is compared with its own initial storage; the reported
    ``storage_bound`` is the largest of those.
    """
    curves = vertex_regrets(traj)
    sup = float(curves.max())
    kind = traj.kind if kind is None else ModelKind.parse(kind)
    params = params or traj.params
    if x0 is None:
        x0 = traj.strategies[0]
    bounds = None if kind is None else vertex_storage_bounds(kind, params, x0)
    if bounds is None:
        return RegretReport(traj.times, curves, sup, None, None)
    verdict = bool(np.all(curves <= bounds[None, :] + slack))
    return RegretReport(traj.times, curves, sup, float(bounds.max()), verdict, bounds)


@dataclass(frozen=True)
class PassivityReport:
    times: np.ndarray
    plain_curves: np.ndarray
    delta_curve: np.ndarray
    ei_curve: Optional[np.ndarray] = None
    equilibrium: Optional[tuple] = None

    @property
    def plain_min(self):
        return float(self.plain_curves.min())

    @property
    def delta_min(self):
        return float(self.delta_curve.min())

    @property
    def ei_min(self):
        return None if self.ei_curve is None else float(self.ei_curve.min())

    def to_csv(self, path):
        cols = {f"plain_e{i + 1}": self.plain_curves[:, i] for i in range(self.plain_curves.shape[1])}
        cols["delta"] = self.delta_curve
        if self.ei_curve is not None:
            cols["ei"] = self.ei_curve
        write_curves(path, self.times, cols)


def passivity_report(traj, equilibrium=None):
    """Plain, delta and (optionally) equilibrium-independent pairings.

    ``equilibrium`` is a pair ``(p_star, x_star)``.
    """
    plain = -vertex_regrets(traj)
    delta = _cumulative(
        np.einsum("ij,ij->i", traj.strategy_derivatives, traj.payoff_derivatives), traj.times
    )
    ei = None
    if equilibrium is not None:
        p_star, x_star = (np.asarray(v, dtype=float) for v in equilibrium)
        if not is_on_simplex(x_star):
            raise ValueError("x_star must lie on the simplex")
        ei = ei_curve(traj, p_star, x_star)
        equilibrium = (p_star, x_star)
    return PassivityReport(traj.times, plain, delta, ei, equilibrium)


def ei_curve(traj, p_star, x_star):
    integrand = np.einsum("ij,ij->i", traj.payoffs - p_star, traj.strategies - x_star)
    return _cumulative(integrand, traj.times)


def dissipation_check(traj, kind, params, fn):
    """Largest excess of stored energy over supplied energy.

    ``max_t V(t) - V(0) - <p, x - anchor>_t``; nonpositive up to quadrature
    error when ``fn`` certifies passivity.
    """
    del kind, params  # the storage series is read straight off the recorded states
    v = storage_series(fn, traj)
    supplied = -regret(traj, fn.anchor)
    return float(np.max(v - v[0] - supplied))


def qt_integrand(traj):
    """``phat^T (diag(x) - x x^T) phat`` along a latency trajectory."""
    try:
        phat = traj.field("phat")
    except (KeyError, TypeError):
        raise ValueError("trajectory carries no filtered payoff") from None
    x = traj.strategies
    return np.sum(x * phat**2, axis=1) - np.sum(x * phat, axis=1) ** 2


def kl_divergence(anchor, x):
    """``KL(anchor || x)`` for one strategy or a stack of them (rows)."""
    anchor = np.asarray(anchor, dtype=float)
    x = np.asarray(x, dtype=float)
    rows = np.maximum(np.atleast_2d(x), KL_FLOOR)
    out = np.sum(xlogy(anchor, anchor) - xlogy(anchor, rows), axis=1)
    return float(out[0]) if x.ndim == 1 else out


def tail_slope(times, values, start_fraction=0.5):
    """Least-squares slope of ``values`` over the trailing part of the run."""
    start = int(len(times) * start_fraction)
    return float(np.polyfit(times[start:], values[start:], 1)[0])


def running_min_stable(values, tol=1e-3):
    """True if the last quarter sets no new minimum below the earlier one by ``tol``."""
    cut = (3 * len(values)) // 4
    return bool(values[cut:].min() >= values[:cut].min() - tol)


def running_max_stable(values, tol=1e-3):
    return running_min_stable(-np.asarray(values), tol)


def write_curves(path, times, cols):
    names = list(cols)
    table = np.column_stack([times] + [cols[k] for k in names])
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t"] + names)
        for row in table:
            w.writerow([format(v, ".17g") for v in row])
