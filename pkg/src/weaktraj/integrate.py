"""Fixed-step RK4 with local step halving where the velocity field is refused."""

from __future__ import annotations

import numpy as np

MAX_HALVINGS = 8


def rk4_step(velocity, x, t, h):
    """One classical RK4 step for every entry of ``x``.

    ``velocity(x, t)`` returns ``(v, ok)``; a step is good only if all four
    stages were evaluated at accepted points.
    """
    v1, ok1 = velocity(x, t)
    v2, ok2 = velocity(x + 0.5 * h * v1, t + 0.5 * h)
    v3, ok3 = velocity(x + 0.5 * h * v2, t + 0.5 * h)
    v4, ok4 = velocity(x + h * v3, t + h)
    xn = x + h / 6.0 * (v1 + 2.0 * v2 + 2.0 * v3 + v4)
    return xn, ok1 & ok2 & ok3 & ok4 & np.isfinite(xn)


def advance(velocity, x, t, h, depth=0, max_halvings=MAX_HALVINGS):
    """Advance by ``h``; failed entries are retried as two half steps, recursively."""
    xn, ok = rk4_step(velocity, x, t, h)
    if ok.all():
        return xn, ok
    bad = np.flatnonzero(~ok)
    if depth >= max_halvings:
        xn[bad] = np.nan
        return xn, ok
    xb, okb = advance(velocity, x[bad], t, 0.5 * h, depth + 1, max_halvings)
    live = np.flatnonzero(okb)
    if live.size:
        xl, okl = advance(velocity, xb[live], t + 0.5 * h, 0.5 * h, depth + 1, max_halvings)
        xb[live] = xl
        okb[live] = okl
    xn[bad] = xb
    ok[bad] = okb
    return xn, ok


def time_grid(t0, t1, dt):
    """Uniform grid from t0 to t1 whose step is at most ``dt``."""
    if not t1 > t0:
        raise ValueError("t1 must exceed t0")
    if not dt > 0:
        raise ValueError("dt must be positive")
    n_steps = int(np.ceil((t1 - t0) / dt - 1e-9))
    return t0 + (t1 - t0) * np.arange(n_steps + 1) / n_steps


def integrate(velocity, x0, times):
    """Integrate all of ``x0`` over ``times``.

    Returns ``(positions, ok)`` where ``positions[i, k]`` is NaN after
    entry ``i`` has been abandoned and ``ok[i]`` is False for those.
    """
    x0 = np.asarray(x0)
    pos = np.full((x0.size, times.size), np.nan, dtype=x0.dtype)
    pos[:, 0] = x0
    _, ok0 = velocity(x0, times[0])
    done = np.asarray(ok0, dtype=bool).copy()
    alive = np.flatnonzero(done)
    x = x0[alive].copy()
    for k in range(times.size - 1):
        if alive.size == 0:
            break
        xn, ok = advance(velocity, x, times[k], times[k + 1] - times[k])
        pos[alive[ok], k + 1] = xn[ok]
        if not ok.all():
            done[alive[~ok]] = False
            alive = alive[ok]
            xn = xn[ok]
        x = xn
    return pos, done
