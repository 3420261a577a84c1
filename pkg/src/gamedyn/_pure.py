"""Pure-Python RK4 loop with the same contract as the compiled kernel."""

import numpy as np

from .dynamics import ALL_MODELS, PROJECTION_MODELS, SCORE_MODELS, ModelParams, flat_field, flat_strategy, strategy_rate
from .simplex import distance_to_simplex, project_simplex


def _post_step(kind, y, n, tol):
    if not np.all(np.isfinite(y)):
        return False
    if kind in SCORE_MODELS:
        return True
    x = y[:n]
    if kind in PROJECTION_MODELS:
        y[:n] = project_simplex(x)
        return True
    if distance_to_simplex(x) > tol:
        return False
    x = np.maximum(x, 0.0)
    y[:n] = x / x.sum()
    return True


def rk4_integrate(model, y0, n, lam, gam, game, amp, freq, phase, offset, A, dt, nsteps,
                  record_every, eps_active, tol):
    kind = ALL_MODELS[model]
    params = ModelParams(lam, gam)
    del eps_active  # the tangent-cone threshold is fixed in dynamics.flat_field

    def payoff(t, x):
        if game:
            return A @ x
        return offset + np.sum(amp * np.sin(freq * t + phase), axis=1)

    def payoff_rate(t, xdot):
        if game:
            return A @ xdot
        return np.sum(amp * freq * np.cos(freq * t + phase), axis=1)

    def stage(t, y):
        x = flat_strategy(kind, y, n)
        p = payoff(t, x)
        return x, p, flat_field(kind, y, p, params, n)

    y = np.array(y0, dtype=float)
    nsamp = nsteps // record_every + 1
    times = np.zeros(nsamp)
    states = np.zeros((nsamp, y.size))
    xs, ps, xds, pds = (np.zeros((nsamp, n)) for _ in range(4))
    k = 0
    for step in range(nsteps + 1):
        t = step * dt
        x, p, k1 = stage(t, y)
        if step % record_every == 0:
            times[k] = t
            states[k] = y
            xs[k] = x
            ps[k] = p
            xds[k] = strategy_rate(kind, y, k1, n)
            pds[k] = payoff_rate(t, xds[k])
            k += 1
        if step == nsteps:
            break
        k2 = stage(t + 0.5 * dt, y + 0.5 * dt * k1)[2]
        k3 = stage(t + 0.5 * dt, y + 0.5 * dt * k2)[2]
        k4 = stage(t + dt, y + dt * k3)[2]
        y = y + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not _post_step(kind, y, n, tol):
            return times[:k], states[:k], xs[:k], ps[:k], xds[:k], pds[:k], step + 1
    return times, states, xs, ps, xds, pds, -1
