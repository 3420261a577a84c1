# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled RK4 loop for every model in ``gamedyn.dynamics``.

Model codes follow ``dynamics.MODEL_CODES``. The arithmetic mirrors
``dynamics.flat_field`` one-for-one; ``tests/test_backends.py`` holds the two
paths to each other.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport sin, cos, exp, sqrt, fabs, isfinite

cnp.import_array()

cdef enum:
    RD = 0
    FTRL = 1
    DP = 2
    SHO_FTRL = 3
    SHO_DP = 4
    BNN = 5
    SMITH = 6
    LOGIT = 7
    TP = 8
    EXRD = 9
    RD_LATENCY = 10


cdef struct Ctx:
    int model
    int n
    int game
    int terms
    double lam
    double gam
    double eps_active
    double *amp
    double *freq
    double *phase
    double *offset
    double *A
    double *scratch   # 3n doubles of workspace for the projection helpers
    char *pinned


cdef inline bint is_score(int model) nogil:
    return model == FTRL or model == SHO_FTRL or model == EXRD


cdef inline int nblocks(int model) nogil:
    if model == SHO_FTRL or model == SHO_DP or model == RD_LATENCY:
        return 2
    return 1


cdef void softmax_c(double *z, double *out, int n) nogil:
    cdef int i
    cdef double m = z[0], s = 0.0
    for i in range(1, n):
        if z[i] > m:
            m = z[i]
    for i in range(n):
        out[i] = exp(z[i] - m)
        s += out[i]
    for i in range(n):
        out[i] /= s


cdef void project_simplex_c(double *y, double *out, double *u, int n) nogil:
    cdef int i, j, rho = 0
    cdef double key, css = 0.0, theta = 0.0
    for i in range(n):
        u[i] = y[i]
    # insertion sort, descending; n is small
    for i in range(1, n):
        key = u[i]
        j = i - 1
        while j >= 0 and u[j] < key:
            u[j + 1] = u[j]
            j -= 1
        u[j + 1] = key
    for i in range(n):
        css += u[i]
        if u[i] - (css - 1.0) / (i + 1) > 0:
            rho = i
            theta = (css - 1.0) / (i + 1)
    for i in range(n):
        out[i] = y[i] - theta
        if out[i] < 0:
            out[i] = 0.0


cdef void tangent_cone_c(double *x, double *p, double *out, char *pinned,
                         int n, double eps) nogil:
    cdef int i, free_count
    cdef double mu, s
    cdef bint changed = True
    for i in range(n):
        pinned[i] = 0
    mu = 0.0
    while changed:
        s = 0.0
        free_count = 0
        for i in range(n):
            if not pinned[i]:
                s += p[i]
                free_count += 1
        mu = s / free_count
        changed = False
        for i in range(n):
            if x[i] <= eps and not pinned[i] and p[i] - mu < 0:
                pinned[i] = 1
                changed = True
    for i in range(n):
        out[i] = 0.0 if pinned[i] else p[i] - mu


cdef void strategy_c(Ctx *c, double *y, double *x) nogil:
    cdef int i
    if is_score(c.model):
        softmax_c(y, x, c.n)
    else:
        for i in range(c.n):
            x[i] = y[i]


cdef void payoff_c(Ctx *c, double t, double *x, double *p) nogil:
    cdef int i, j, k, n = c.n
    cdef double s
    if c.game:
        for i in range(n):
            s = 0.0
            for j in range(n):
                s += c.A[i * n + j] * x[j]
            p[i] = s
    else:
        for i in range(n):
            s = c.offset[i]
            for k in range(c.terms):
                s += c.amp[i * c.terms + k] * sin(c.freq[i * c.terms + k] * t + c.phase[i * c.terms + k])
            p[i] = s


cdef void payoff_rate_c(Ctx *c, double t, double *xdot, double *pdot) nogil:
    cdef int i, j, k, n = c.n
    cdef double s
    if c.game:
        for i in range(n):
            s = 0.0
            for j in range(n):
                s += c.A[i * n + j] * xdot[j]
            pdot[i] = s
    else:
        for i in range(n):
            s = 0.0
            for k in range(c.terms):
                s += (c.amp[i * c.terms + k] * c.freq[i * c.terms + k]
                      * cos(c.freq[i * c.terms + k] * t + c.phase[i * c.terms + k]))
            pdot[i] = s


cdef inline double dot(double *a, double *b, int n) nogil:
    cdef int i
    cdef double s = 0.0
    for i in range(n):
        s += a[i] * b[i]
    return s


cdef void field_c(Ctx *c, double *y, double *p, double *dy) nogil:
    """Right-hand side; ``scratch`` holds at least 3n doubles."""
    cdef int i, j, n = c.n
    cdef double xp, tot, g
    cdef double *w = c.scratch
    cdef double *w2 = c.scratch + n
    cdef double *w3 = c.scratch + 2 * n
    cdef int m = c.model

    if m == RD:
        xp = dot(y, p, n)
        for i in range(n):
            dy[i] = y[i] * (p[i] - xp)
    elif m == FTRL:
        for i in range(n):
            dy[i] = p[i]
    elif m == DP:
        tangent_cone_c(y, p, dy, c.pinned, n, c.eps_active)
    elif m == SHO_FTRL:
        softmax_c(y, w, n)
        for i in range(n):
            dy[i] = p[i] - c.gam * (w[i] - y[n + i])
            dy[n + i] = c.lam * (w[i] - y[n + i])
    elif m == SHO_DP:
        for i in range(n):
            w[i] = p[i] - c.gam * (y[i] - y[n + i])
        tangent_cone_c(y, w, dy, c.pinned, n, c.eps_active)
        for i in range(n):
            dy[n + i] = c.lam * (y[i] - y[n + i])
    elif m == BNN:
        xp = dot(y, p, n)
        tot = 0.0
        for i in range(n):
            w[i] = p[i] - xp
            if w[i] < 0:
                w[i] = 0.0
            tot += w[i]
        for i in range(n):
            dy[i] = w[i] - y[i] * tot
    elif m == SMITH:
        for i in range(n):
            dy[i] = 0.0
            for j in range(n):
                g = p[i] - p[j]
                if g > 0:
                    dy[i] += y[j] * g
                else:
                    dy[i] += y[i] * g
    elif m == LOGIT:
        softmax_c(p, w, n)
        for i in range(n):
            dy[i] = w[i] - y[i]
    elif m == TP:
        for i in range(n):
            w[i] = y[i] + p[i]
        project_simplex_c(w, w2, w3, n)
        for i in range(n):
            dy[i] = w2[i] - y[i]
    elif m == EXRD:
        for i in range(n):
            dy[i] = c.lam * (p[i] - y[i])
    elif m == RD_LATENCY:
        xp = dot(y, y + n, n)
        for i in range(n):
            dy[i] = y[i] * (y[n + i] - xp)
            dy[n + i] = c.lam * (p[i] - y[n + i])


cdef void strategy_rate_c(Ctx *c, double *y, double *dy, double *xdot) nogil:
    cdef int i, n = c.n
    cdef double s
    if is_score(c.model):
        softmax_c(y, xdot, n)
        s = dot(xdot, dy, n)
        for i in range(n):
            xdot[i] = xdot[i] * (dy[i] - s)
    else:
        for i in range(n):
            xdot[i] = dy[i]


cdef void eval_stage(Ctx *c, double t, double *y, double *x, double *p, double *dy) nogil:
    strategy_c(c, y, x)
    payoff_c(c, t, x, p)
    field_c(c, y, p, dy)


cdef int post_step(Ctx *c, double *y, double tol) nogil:
    """Return 0 on success, 1 if the state has diverged."""
    cdef int i, n = c.n, dim = n * nblocks(c.model)
    cdef double s = 0.0, d2 = 0.0
    cdef bint negative = False
    cdef double *w = c.scratch
    cdef double *u = c.scratch + 2 * n
    for i in range(dim):
        if not isfinite(y[i]):
            return 1
    if is_score(c.model):
        return 0
    if c.model == DP or c.model == SHO_DP:
        project_simplex_c(y, w, u, n)
        for i in range(n):
            y[i] = w[i]
        return 0
    for i in range(n):
        s += y[i]
        if y[i] < 0:
            negative = True
    if negative:
        project_simplex_c(y, w, u, n)
        for i in range(n):
            d2 += (y[i] - w[i]) * (y[i] - w[i])
        if sqrt(d2) > tol:
            return 1
    elif fabs(s - 1.0) / sqrt(n) > tol:
        return 1
    s = 0.0
    for i in range(n):
        if y[i] < 0:
            y[i] = 0.0
        s += y[i]
    for i in range(n):
        y[i] /= s
    return 0


def rk4_integrate(int model, double[::1] y0, int n, double lam, double gam, bint game,
                  double[:, ::1] amp, double[:, ::1] freq, double[:, ::1] phase,
                  double[::1] offset, double[:, ::1] A, double dt, long nsteps,
                  long record_every, double eps_active, double tol):
    """Fixed-step RK4 from ``t = 0``; samples every ``record_every`` steps.

    Returns ``(times, states, strategies, payoffs, strategy_rates,
    payoff_rates, fail_step)`` where ``fail_step`` is -1 on success and
    otherwise the step whose post-step check failed (arrays then hold the
    samples taken before the failure).
    """
    cdef int dim = y0.shape[0]
    cdef long nsamp = nsteps // record_every + 1
    cdef long step, k = 0, fail = -1
    cdef int i
    cdef double t, h2 = 0.5 * dt, h6 = dt / 6.0
    cdef Ctx c

    times = np.zeros(nsamp)
    states = np.zeros((nsamp, dim))
    xs = np.zeros((nsamp, n))
    ps = np.zeros((nsamp, n))
    xds = np.zeros((nsamp, n))
    pds = np.zeros((nsamp, n))
    cdef double[::1] tv = times
    cdef double[:, ::1] sv = states, xv = xs, pv = ps, xdv = xds, pdv = pds

    cdef double[::1] y = np.array(y0, copy=True)
    cdef double[::1] yt = np.zeros(dim)
    cdef double[::1] k1 = np.zeros(dim), k2 = np.zeros(dim), k3 = np.zeros(dim), k4 = np.zeros(dim)
    cdef double[::1] xb = np.zeros(n), pb = np.zeros(n), scratch = np.zeros(3 * n)
    cdef char[::1] pinned = np.zeros(n, dtype=np.int8)
    cdef double[::1] offset_c = np.ascontiguousarray(offset)

    c.model = model
    c.n = n
    c.game = game
    c.terms = amp.shape[1]
    c.lam = lam
    c.gam = gam
    c.eps_active = eps_active
    c.amp = &amp[0, 0] if amp.shape[1] > 0 else NULL
    c.freq = &freq[0, 0] if amp.shape[1] > 0 else NULL
    c.phase = &phase[0, 0] if amp.shape[1] > 0 else NULL
    c.offset = &offset_c[0]
    c.A = &A[0, 0]
    c.scratch = &scratch[0]
    c.pinned = &pinned[0]

    with nogil:
        for step in range(nsteps + 1):
            t = step * dt
            eval_stage(&c, t, &y[0], &xb[0], &pb[0], &k1[0])
            if step % record_every == 0:
                tv[k] = t
                for i in range(dim):
                    sv[k, i] = y[i]
                for i in range(n):
                    xv[k, i] = xb[i]
                    pv[k, i] = pb[i]
                strategy_rate_c(&c, &y[0], &k1[0], &xdv[k, 0])
                payoff_rate_c(&c, t, &xdv[k, 0], &pdv[k, 0])
                k += 1
            if step == nsteps:
                break
            for i in range(dim):
                yt[i] = y[i] + h2 * k1[i]
            eval_stage(&c, t + h2, &yt[0], &xb[0], &pb[0], &k2[0])
            for i in range(dim):
                yt[i] = y[i] + h2 * k2[i]
            eval_stage(&c, t + h2, &yt[0], &xb[0], &pb[0], &k3[0])
            for i in range(dim):
                yt[i] = y[i] + dt * k3[i]
            eval_stage(&c, t + dt, &yt[0], &xb[0], &pb[0], &k4[0])
            for i in range(dim):
                y[i] = y[i] + h6 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
            if post_step(&c, &y[0], tol):
                fail = step + 1
                break

    if fail >= 0:
        return times[:k], states[:k], xs[:k], ps[:k], xds[:k], pds[:k], fail
    return times, states, xs, ps, xds, pds, -1
