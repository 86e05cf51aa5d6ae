"""Ground-truth Bohm trajectories for the analytic wave model.

Initial positions are drawn from |psi(x, t0)|^2 by inverse CDF on a tabulated
grid; each trajectory is then integrated with fixed-step classical RK4 on
dx/dt = P_B(x, t) / m. All members of an ensemble share one time grid so the
no-crossing property can be checked column by column.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import GridError, NodeError
from .integrate import integrate, time_grid
from .wavefield import WaveModel, bohm_velocity, density, node_threshold

COMPLETED = "completed"
ABORTED = "aborted-at-node"

SAMPLING_POINTS = 2**14
SAMPLING_HALF_WIDTH = 8.0  # in units of the packet width at t0


@dataclass
class Trajectory:
    times: np.ndarray
    positions: np.ndarray
    status: str = COMPLETED

    @property
    def completed(self) -> bool:
        return self.status == COMPLETED


@dataclass
class TrajectoryEnsemble:
    """Trajectories on a common time grid.

    ``positions[i, k]`` is NaN once trajectory ``i`` has aborted.
    """

    model: WaveModel
    times: np.ndarray
    positions: np.ndarray
    status: np.ndarray
    seed: int | None
    t_final: float
    dt: float
    params: dict = field(default_factory=dict)

    def __len__(self):
        return self.positions.shape[0]

    @property
    def completed_mask(self) -> np.ndarray:
        return self.status == COMPLETED

    @property
    def n_aborted(self) -> int:
        return int(np.count_nonzero(~self.completed_mask))

    @property
    def initial_positions(self) -> np.ndarray:
        return self.positions[:, 0]

    @property
    def final_positions(self) -> np.ndarray:
        """Endpoints of completed trajectories."""
        return self.positions[self.completed_mask, -1]

    def trajectory(self, i: int) -> Trajectory:
        valid = np.isfinite(self.positions[i])
        return Trajectory(self.times[valid].copy(), self.positions[i, valid].copy(), str(self.status[i]))

    @property
    def trajectories(self) -> list[Trajectory]:
        return [self.trajectory(i) for i in range(len(self))]

    def at_time(self, t: float) -> np.ndarray:
        """Positions at time ``t`` (linear interpolation between grid times)."""
        k = np.searchsorted(self.times, t)
        if k < len(self.times) and np.isclose(self.times[k], t, rtol=0, atol=1e-9 * max(1.0, abs(t))):
            return self.positions[:, k].copy()
        if k == 0 or k >= len(self.times):
            raise ValueError(f"t={t} outside ensemble time range")
        w = (t - self.times[k - 1]) / (self.times[k] - self.times[k - 1])
        return (1 - w) * self.positions[:, k - 1] + w * self.positions[:, k]


def sampling_grid(model: WaveModel, t0: float, n_points: int = SAMPLING_POINTS):
    c1, c2 = model.centers(t0)
    half = SAMPLING_HALF_WIDTH * float(model.width(t0))
    return np.linspace(min(c1, c2) - half, max(c1, c2) + half, n_points)


def tabulated_cdf(model: WaveModel, t0: float, n_points: int = SAMPLING_POINTS):
    """Grid, density and normalized cumulative distribution at time ``t0``."""
    x = sampling_grid(model, t0, n_points)
    rho = density(model, x, t0)
    increments = 0.5 * (rho[1:] + rho[:-1]) * np.diff(x)
    cdf = np.concatenate(([0.0], np.cumsum(increments)))
    total = cdf[-1]
    if not np.isfinite(total) or abs(total - 1.0) > 1e-6:
        raise GridError(f"tabulated density integrates to {total!r}, expected 1 within 1e-6")
    return x, rho, cdf / total


def sample_initial_positions(model: WaveModel, n: int, t0: float = 0.0, seed=None, method: str = "stratified"):
    """Draw ``n`` sorted positions from |psi(x, t0)|^2.

    ``method="stratified"`` puts one uniform variate in each of the ``n``
    equal-probability strata before inverting the CDF; ``"iid"`` uses plain
    independent uniforms. Both are deterministic given ``seed``.
    """
    if n < 0:
        raise ValueError("n must be non-negative")
    if n == 0:
        return np.empty(0)
    x, _, cdf = tabulated_cdf(model, t0)
    rng = np.random.default_rng(seed)
    if method == "stratified":
        u = (np.arange(n) + rng.random(n)) / n
    elif method == "iid":
        u = np.sort(rng.random(n))
    else:
        raise ValueError(f"unknown sampling method {method!r}")
    # strip flat tails so the inverse is single valued
    keep = np.concatenate(([True], np.diff(cdf) > 0))
    return np.interp(u, cdf[keep], x[keep])


def _integrate(model, x0, times):
    pos, ok = integrate(lambda x, t: bohm_velocity(model, x, t), np.asarray(x0, dtype=float), times)
    status = np.where(ok, COMPLETED, ABORTED).astype(object)
    return pos, status


def integrate_trajectory(model: WaveModel, x0: float, t0: float, t1: float, dt: float) -> Trajectory:
    """RK4 Bohm trajectory from (x0, t0) to t1 with step dt.

    Returns an aborted trajectory, truncated at its last good step, if the
    step-halving retries near a node are exhausted.
    """
    times = time_grid(t0, t1, dt)
    if density(model, x0, t0) < node_threshold(model, t0):
        raise NodeError(f"initial point x0={x0} is below the node threshold")
    pos, status = _integrate(model, np.array([float(x0)]), times)
    valid = np.isfinite(pos[0])
    return Trajectory(times[valid], pos[0, valid], str(status[0]))


def integrate_positions(model: WaveModel, x0, t0: float, t1: float, dt: float, seed=None) -> TrajectoryEnsemble:
    """Integrate given starting positions as one ensemble (sorted ascending)."""
    x0 = np.sort(np.asarray(x0, dtype=float).ravel())
    times = time_grid(t0, t1, dt)
    pos, status = _integrate(model, x0, times)
    return TrajectoryEnsemble(model, times, pos, status, seed, float(times[-1]), float(times[1] - times[0]))


def integrate_ensemble(model: WaveModel, n: int, t0: float, t1: float, dt: float, seed=None,
                       method: str = "stratified") -> TrajectoryEnsemble:
    """Born-distributed ensemble of Bohm trajectories, reproducible from ``seed``."""
    x0 = sample_initial_positions(model, n, t0, seed, method=method)
    ens = integrate_positions(model, x0, t0, t1, dt, seed=seed)
    ens.params = {"n": n, "t0": t0, "t1": t1, "dt": dt, "seed": seed, "method": method}
    return ens


@dataclass
class CrossingReport:
    violations: int
    min_gap: float | None
    pairs_checked: int


def crossing_report(ensemble: TrajectoryEnsemble) -> CrossingReport:
    """Count ordering violations between neighbours at every common time."""
    pos = ensemble.positions
    if pos.shape[0] < 2:
        return CrossingReport(0, None, 0)
    order = np.argsort(pos[:, 0], kind="stable")
    pos = pos[order]
    violations = 0
    checked = 0
    min_gap = np.inf
    for k in range(pos.shape[1]):
        col = pos[:, k]
        col = col[np.isfinite(col)]
        if col.size < 2:
            continue
        gaps = np.diff(col)
        violations += int(np.count_nonzero(gaps <= 0))
        checked += gaps.size
        min_gap = min(min_gap, float(gaps.min()))
    return CrossingReport(violations, None if checked == 0 else min_gap, checked)


def born_histogram(model: WaveModel, positions, t: float, bins: int = 50, edges=None):
    """Histogram fractions of ``positions`` next to bin probabilities of |psi(x, t)|^2.

    Bin probabilities come from Simpson integration of the density on 64
    sub-intervals per bin. Returns ``(edges, hist_fraction, density_prob)``.
    """
    positions = np.asarray(positions, dtype=float)
    if edges is None:
        x, _, cdf = tabulated_cdf(model, t)
        lo, hi = np.interp([1e-4, 1 - 1e-4], cdf, x)
        edges = np.linspace(lo, hi, bins + 1)
    counts, _ = np.histogram(positions, bins=edges)
    frac = counts / max(positions.size, 1)
    sub = 64
    probs = np.empty(len(edges) - 1)
    for i in range(len(edges) - 1):
        xs = np.linspace(edges[i], edges[i + 1], 2 * sub + 1)
        rho = density(model, xs, t)
        h = (edges[i + 1] - edges[i]) / (2 * sub)
        probs[i] = h / 3 * (rho[0] + rho[-1] + 4 * rho[1:-1:2].sum() + 2 * rho[2:-1:2].sum())
    return edges, frac, probs


def total_variation(p, q) -> float:
    return 0.5 * float(np.sum(np.abs(np.asarray(p) - np.asarray(q))))
