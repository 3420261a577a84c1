"""Small-vector geometry of the probability simplex."""

import numpy as np

EPS_ACTIVE = 1e-9
SAFEGUARD_TOL = 1e-6


class IntegrationDiverged(RuntimeError):
    """A state left the simplex neighbourhood during integration."""

    def __init__(self, message, time=None):
        super().__init__(message)
        self.time = time


def _as_vector(y):
    y = np.asarray(y, dtype=float)
    if y.ndim != 1:
        raise ValueError("expected a 1-d vector")
    if not np.all(np.isfinite(y)):
        raise ValueError("non-finite coordinates")
    return y


def project_simplex(y):
    """Euclidean projection of ``y`` onto the probability simplex.

    Sort-and-threshold: find the largest ``rho`` with
    ``u_rho - (sum_{j<=rho} u_j - 1) / rho > 0`` on the sorted coordinates
    and shift by the matching threshold.
    """
    y = _as_vector(y)
    if y.size < 2:
        raise ValueError("simplex dimension must be at least 2")
    u = np.sort(y)[::-1]
    css = np.cumsum(u) - 1.0
    ind = np.arange(1, y.size + 1)
    rho = np.nonzero(u - css / ind > 0)[0][-1]
    theta = css[rho] / (rho + 1)
    return np.maximum(y - theta, 0.0)


def project_tangent_space(p):
    p = _as_vector(p)
    return p - p.mean()


def project_tangent_cone(x, p, eps_active=EPS_ACTIVE):
    """Project ``p`` onto the tangent cone of the simplex at ``x``.

    Coordinates with ``x_i <= eps_active`` are constrained to ``v_i >= 0``.
    Constrained coordinates whose mean-removed payoff is negative are pinned
    to zero one sweep at a time; pinning only raises the mean of the rest, so
    at most ``|Z|`` sweeps are needed.
    """
    x = np.asarray(x, dtype=float)
    p = _as_vector(p)
    if eps_active <= 0:
        raise ValueError("eps_active must be positive")
    constrained = x <= eps_active
    pinned = np.zeros(p.size, dtype=bool)
    while True:
        mu = p[~pinned].mean()
        new = constrained & ~pinned & (p - mu < 0)
        if not new.any():
            break
        pinned |= new
    v = p - mu
    v[pinned] = 0.0
    return v


def softmax(z):
    z = _as_vector(z)
    e = np.exp(z - z.max())
    return e / e.sum()


def vertex(i, n):
    """The ``i``-th vertex (1-based) of the ``n``-simplex."""
    if not 1 <= i <= n:
        raise IndexError(f"vertex index {i} out of range for n={n}")
    e = np.zeros(n)
    e[i - 1] = 1.0
    return e


def distance_to_simplex(x):
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        return np.inf
    return float(np.linalg.norm(x - project_simplex(x)))


def safeguard(x, tol=SAFEGUARD_TOL):
    """Clip tiny negatives and renormalise; raise if ``x`` is far off the simplex."""
    x = np.asarray(x, dtype=float)
    dist = distance_to_simplex(x)
    if dist > tol:
        raise IntegrationDiverged(f"state is {dist:.3g} away from the simplex")
    x = np.maximum(x, 0.0)
    return x / x.sum()


def is_on_simplex(x, tol=1e-9):
    x = np.asarray(x, dtype=float)
    return bool(np.all(x >= -tol) and abs(x.sum() - 1.0) <= tol)
