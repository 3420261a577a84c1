"""Fixed-step RK4 trajectories of the learning dynamics.

The inner loop runs in the compiled ``_kernel`` extension when it is
importable and falls back to ``_pure`` otherwise. Set ``GAMEDYN_PURE=1`` to
force the fallback.
"""

import csv
import os
from dataclasses import dataclass

import numpy as np

from . import _pure
from .dynamics import MODEL_CODES, STATE_FIELDS, ModelKind, ModelParams, ModelState, init_state
from .payoffs import MatrixGame
from .simplex import EPS_ACTIVE, SAFEGUARD_TOL, IntegrationDiverged

try:
    if os.environ.get("GAMEDYN_PURE"):
        raise ImportError("pure backend requested")
    from . import _kernel
except ImportError:
    _kernel = None

BACKENDS = {"python": _pure.rk4_integrate}
if _kernel is not None:
    BACKENDS["compiled"] = _kernel.rk4_integrate
DEFAULT_BACKEND = "compiled" if _kernel is not None else "python"

CONVERGENCE_TOL = 1e-3


@dataclass(frozen=True)
class IntegratorConfig:
    dt: float = 1e-3
    T: float = 500.0
    record_every: int = 10

    def __post_init__(self):
        if not 0 < self.dt <= 1e-2:
            raise ValueError("dt must lie in (0, 1e-2]")
        if not self.T > 0 or self.T / self.dt > 1e9:
            raise ValueError("T must be positive with T/dt <= 1e9")
        if int(self.record_every) != self.record_every or self.record_every < 1:
            raise ValueError("record_every must be a positive integer")

    @property
    def nsteps(self):
        return int(round(self.T / self.dt))


@dataclass(frozen=True)
class Trajectory:
    """Uniformly sampled record of one run.

    ``states`` holds the flat model state (see ``dynamics.STATE_FIELDS``);
    the derivative columns are exact vector-field evaluations.
    """

    kind: ModelKind
    params: ModelParams
    times: np.ndarray
    states: np.ndarray
    strategies: np.ndarray
    payoffs: np.ndarray
    strategy_derivatives: np.ndarray
    payoff_derivatives: np.ndarray

    @property
    def n(self):
        return self.strategies.shape[1]

    def __len__(self):
        return self.times.size

    def field(self, name):
        """Time series of one state block, e.g. ``"phat"`` or ``"xi"``."""
        fields = STATE_FIELDS[self.kind]
        if name not in fields:
            raise KeyError(f"{self.kind.value} state has no {name!r} block")
        i = fields.index(name)
        return self.states[:, i * self.n:(i + 1) * self.n]

    def state_at(self, k):
        return ModelState.unpack(self.kind, self.states[k])

    def to_csv(self, path):
        n = self.n
        header = (
            ["t"] + [f"x_{i}" for i in range(1, n + 1)] + [f"p_{i}" for i in range(1, n + 1)]
            + [f"xdot_{i}" for i in range(1, n + 1)] + [f"pdot_{i}" for i in range(1, n + 1)]
        )
        table = np.column_stack(
            [self.times, self.strategies, self.payoffs, self.strategy_derivatives,
             self.payoff_derivatives]
        )
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            for row in table:
                w.writerow([format(v, ".17g") for v in row])


def _source_arrays(src, n):
    if isinstance(src, MatrixGame):
        if src.n != n:
            raise ValueError("game dimension does not match x0")
        empty = np.zeros((n, 0))
        return True, empty, empty, empty, np.zeros(n), np.ascontiguousarray(src.A)
    if src.n != n:
        raise ValueError("signal dimension does not match x0")
    return (
        False,
        np.ascontiguousarray(src.amp), np.ascontiguousarray(src.freq),
        np.ascontiguousarray(src.phase), np.ascontiguousarray(src.offset), np.zeros((n, n)),
    )


def integrate(kind, params, x0, src, cfg=None, backend=None, state0=None):
    """Integrate ``kind`` from ``x0`` under payoff source ``src``.

    In game mode the payoff at every RK stage is ``A`` applied to that
    stage's strategy read-out. ``state0`` overrides the default initial
    state built by ``init_state``.
    """
    kind = ModelKind.parse(kind)
    params = params or ModelParams()
    cfg = cfg or IntegratorConfig()
    x0 = np.asarray(x0, dtype=float)
    n = x0.size
    if state0 is None:
        state0 = init_state(kind, n, params, x0)
    y0 = np.ascontiguousarray(state0.pack(kind))
    game, amp, freq, phase, offset, A = _source_arrays(src, n)
    run = BACKENDS[backend or DEFAULT_BACKEND]
    times, states, xs, ps, xds, pds, fail = run(
        MODEL_CODES[kind], y0, n, params.lam, params.gamma, game, amp, freq, phase, offset, A,
        cfg.dt, cfg.nsteps, int(cfg.record_every), EPS_ACTIVE, SAFEGUARD_TOL,
    )
    if fail >= 0:
        t_fail = fail * cfg.dt
        raise IntegrationDiverged(f"{kind.value} left the simplex at t={t_fail:.6g}", time=t_fail)
    return Trajectory(kind, params, times, states, xs, ps, xds, pds)


def convergence_check(traj, target, tail_fraction=0.05):
    if len(traj) == 0:
        raise ValueError("empty trajectory")
    if not 0 < tail_fraction <= 1:
        raise ValueError("tail_fraction must lie in (0, 1]")
    tail = max(1, int(np.ceil(tail_fraction * len(traj))))
    dist = np.linalg.norm(traj.strategies[-tail:] - np.asarray(target, dtype=float), axis=1)
    final = float(dist.max())
    return {"final_dist": final, "converged": final < CONVERGENCE_TOL}
