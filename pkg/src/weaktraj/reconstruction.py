"""Flow-line reconstruction from a simulated weak-momentum scan.

A scan measures the transverse weak momentum on a rectangular grid of
transverse bins x_j and longitudinal planes y_k = (p_y/m) t_k. Trajectories
are then stepped plane to plane with the measured tangent,

    x_{k+1} = x_k + (w_hat(x_k, k) / p_y) (y_{k+1} - y_k),

using linear interpolation in x and none between planes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .bohm import TrajectoryEnsemble
from .errors import GapError, MismatchError, OutOfRangeError
from .wavefield import WaveModel, bohm_velocity, weak_momentum
from .weak import (
    CountRecord,
    CouplingConfig,
    extract_from_probabilities,
    extract_weak_value,
    pointer_after_weak_coupling,
    readout_probabilities,
    sample_counts,
    shot_noise_stdev,
)

COMPLETED = "completed"
GAP = "gap"
OUT_OF_RANGE = "out-of-range"

_OK, _GAP, _OUT = 0, 1, 2


@dataclass(frozen=True)
class GridSpec:
    t0: float = 3.0
    t1: float = 20.0
    n_planes: int = 50
    x_min: float = -35.0
    x_max: float = 35.0
    n_bins: int = 400

    def __post_init__(self):
        if self.n_planes < 2 or self.n_bins < 2:
            raise ValueError("grid needs at least two planes and two bins")
        if not self.t1 > self.t0 or not self.x_max > self.x_min:
            raise ValueError("grid spans must be increasing")

    @property
    def times(self) -> np.ndarray:
        return np.linspace(self.t0, self.t1, self.n_planes)

    @property
    def x(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.n_bins)

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / (self.n_bins - 1)


@dataclass
class WeakScanGrid:
    """Measured weak momenta; arrays are indexed ``[plane_k, bin_j]``.

    Missing cells (density below the node threshold) carry NaN in every
    derived array and are flagged in ``missing``.
    """

    times: np.ndarray
    y: np.ndarray
    x: np.ndarray
    w_est: np.ndarray
    missing: np.ndarray
    w_true: np.ndarray
    p_right: np.ndarray
    n_right: np.ndarray
    n_left: np.ndarray
    m: float
    p_y: float
    eta: float
    n_total: int
    seed: int | None
    noiseless: bool
    grid_id: str = ""

    @property
    def shape(self):
        return self.w_est.shape

    @property
    def dx(self) -> float:
        return float(self.x[1] - self.x[0])


def cell_generator(seed, k: int) -> np.random.Generator:
    """Independent stream for plane ``k``; every bin of the plane draws from it in order."""
    return np.random.default_rng([0 if seed is None else int(seed), int(k)])


def run_weak_scan(model: WaveModel, spec: GridSpec, coupling: CouplingConfig, n_total: int,
                  seed=None, noiseless: bool = False) -> WeakScanGrid:
    """Simulate the weak-coupling / strong-readout measurement at every grid cell."""
    if not coupling.eta > 0:
        raise ValueError("eta must be positive")
    if n_total <= 0:
        raise ValueError("n_total must be positive")
    times = spec.times
    xs = spec.x
    K, J = times.size, xs.size
    w_true = np.full((K, J), np.nan + 1j * np.nan)
    p_right = np.full((K, J), np.nan)
    w_est = np.full((K, J), np.nan)
    n_right = np.zeros((K, J), dtype=np.int64)
    n_left = np.zeros((K, J), dtype=np.int64)
    missing = np.zeros((K, J), dtype=bool)
    eta = coupling.eta
    for k, t in enumerate(times):
        _, ok = bohm_velocity(model, xs, t)
        missing[k] = ~ok
        if ok.any():
            w = weak_momentum(model, xs[ok], t)
            w_true[k, ok] = w
            pr, _ = readout_probabilities(pointer_after_weak_coupling(coupling, w))
            p_right[k, ok] = np.clip(pr, 0.0, 1.0)
        if noiseless:
            w_est[k, ok] = extract_from_probabilities(p_right[k, ok], eta)
            continue
        # draw for every bin so the stream does not depend on the missing pattern
        p_draw = np.where(ok, p_right[k], 0.5)
        counts = sample_counts(p_draw, n_total, cell_generator(seed, k))
        n_right[k, ok] = counts.n_right[ok]
        n_left[k, ok] = counts.n_left[ok]
        if ok.any():
            w_est[k, ok] = extract_weak_value(CountRecord(n_right[k, ok], n_left[k, ok]), eta)
    grid_id = f"scan-eta{eta:g}-n{n_total}-seed{seed}-{'noiseless' if noiseless else 'counts'}"
    return WeakScanGrid(
        times=times, y=model.longitudinal(times), x=xs, w_est=w_est, missing=missing,
        w_true=w_true, p_right=p_right, n_right=n_right, n_left=n_left, m=model.m,
        p_y=model.p_y, eta=eta, n_total=int(n_total), seed=seed, noiseless=noiseless,
        grid_id=grid_id,
    )


def _interp_plane(grid: WeakScanGrid, xq: np.ndarray, k: int):
    """Vectorized linear interpolation on plane k; returns (values, codes)."""
    xs = grid.x
    xq = np.asarray(xq, dtype=float)
    vals = np.full(xq.shape, np.nan)
    code = np.full(xq.shape, _OK)
    out = ~((xq >= xs[0]) & (xq <= xs[-1]))
    code[out] = _OUT
    inside = ~out
    j = np.clip(np.floor((xq[inside] - xs[0]) / grid.dx).astype(int), 0, xs.size - 2)
    a = (xq[inside] - xs[j]) / (xs[j + 1] - xs[j])
    wl = grid.w_est[k, j]
    wr = grid.w_est[k, j + 1]
    ml = grid.missing[k, j]
    mr = grid.missing[k, j + 1]
    v = (1 - a) * wl + a * wr
    # exact hits on a present cell need no neighbour
    v = np.where(a == 0, wl, v)
    v = np.where(ml & ~mr, wr, v)
    v = np.where(mr & ~ml & (a != 0), wl, v)
    gap = ml & (mr | (a == 0))
    c = np.where(gap, _GAP, _OK)
    vals[inside] = np.where(gap, np.nan, v)
    code[inside] = c
    return vals, code


def interpolate_w(grid: WeakScanGrid, x: float, k: int) -> float:
    """Measured transverse momentum at ``x`` on plane ``k``.

    Linear between the two bracketing bins; if exactly one of them is
    missing the other is used as is. Raises GapError if both are missing.
    """
    if not 0 <= k < grid.times.size:
        raise OutOfRangeError(f"plane {k} does not exist")
    v, c = _interp_plane(grid, np.array([x]), k)
    if c[0] == _OUT:
        raise OutOfRangeError(f"x={x} outside grid span [{grid.x[0]}, {grid.x[-1]}]")
    if c[0] == _GAP:
        raise GapError(f"both cells bracketing x={x} on plane {k} are missing")
    return float(v[0])


@dataclass
class ReconstructedTrajectory:
    plane_indices: np.ndarray
    times: np.ndarray
    y: np.ndarray
    positions: np.ndarray
    status: str = COMPLETED
    provenance: dict = field(default_factory=dict)

    @property
    def start(self) -> float:
        return float(self.positions[0])

    @property
    def terminated(self) -> bool:
        return self.status != COMPLETED


def reconstruct_trajectories(grid: WeakScanGrid, starts, start_plane: int = 0) -> list[ReconstructedTrajectory]:
    """Step flow lines through the measured field from ``start_plane`` onward.

    A trajectory whose next step would need a gap cell, or which leaves the
    grid, ends at its last good plane with the corresponding status.
    """
    starts = np.asarray(starts, dtype=float).ravel()
    K = grid.times.size
    if not 0 <= start_plane < K:
        raise OutOfRangeError(f"start plane {start_plane} does not exist")
    n = starts.size
    pos = np.full((n, K), np.nan)
    pos[:, start_plane] = starts
    status = np.full(n, COMPLETED, dtype=object)
    alive = np.ones(n, dtype=bool)
    last = np.full(n, start_plane)
    for k in range(start_plane, K - 1):
        idx = np.flatnonzero(alive)
        if idx.size == 0:
            break
        w, code = _interp_plane(grid, pos[idx, k], k)
        status[idx[code == _GAP]] = GAP
        status[idx[code == _OUT]] = OUT_OF_RANGE
        ok = code == _OK
        alive[idx[~ok]] = False
        good = idx[ok]
        pos[good, k + 1] = pos[good, k] + w[ok] / grid.p_y * (grid.y[k + 1] - grid.y[k])
        last[good] = k + 1
    prov = {"grid_id": grid.grid_id, "interpolation": "linear-x/previous-plane", "stepping": "explicit-euler"}
    result = []
    for i in range(n):
        planes = np.arange(start_plane, last[i] + 1)
        result.append(ReconstructedTrajectory(
            plane_indices=planes, times=grid.times[planes], y=grid.y[planes],
            positions=pos[i, planes], status=str(status[i]), provenance=dict(prov),
        ))
    return result


@dataclass
class TrajectoryMetrics:
    rms: float
    max_dev: float
    planes_used: int


@dataclass
class ComparisonSummary:
    per_trajectory: list[TrajectoryMetrics]
    mean_rms: float
    worst_rms: float
    worst_max_dev: float
    fraction_terminated: float

    def as_dict(self) -> dict:
        return {
            "n_trajectories": len(self.per_trajectory),
            "mean_rms": self.mean_rms,
            "worst_rms": self.worst_rms,
            "worst_max_dev": self.worst_max_dev,
            "fraction_terminated": self.fraction_terminated,
        }


def compare_trajectories(reconstructed, exact: TrajectoryEnsemble, check_starts: bool = True,
                         start_tol: float = 1e-9) -> ComparisonSummary:
    """RMS and maximum transverse deviation on the planes both trajectories reach.

    ``reconstructed[i]`` is compared with ``exact`` trajectory ``i`` evaluated
    at the plane times. With ``check_starts`` the starting positions must agree
    to ``start_tol``.
    """
    if len(reconstructed) != len(exact):
        raise MismatchError(f"{len(reconstructed)} reconstructed vs {len(exact)} exact trajectories")
    metrics = []
    for i, rec in enumerate(reconstructed):
        ref = np.array([exact.at_time(t)[i] for t in rec.times])
        if check_starts and not abs(ref[0] - rec.positions[0]) <= start_tol:
            raise MismatchError(f"trajectory {i}: start {rec.positions[0]!r} vs exact {ref[0]!r}")
        both = np.isfinite(ref) & np.isfinite(rec.positions)
        dev = np.abs(rec.positions[both] - ref[both])
        if dev.size == 0:
            metrics.append(TrajectoryMetrics(0.0, 0.0, 0))
            continue
        metrics.append(TrajectoryMetrics(float(np.sqrt(np.mean(dev**2))), float(dev.max()), int(dev.size)))
    rms = np.array([mt.rms for mt in metrics])
    mx = np.array([mt.max_dev for mt in metrics])
    term = np.array([r.terminated for r in reconstructed])
    return ComparisonSummary(
        per_trajectory=metrics,
        mean_rms=float(rms.mean()) if rms.size else 0.0,
        worst_rms=float(rms.max()) if rms.size else 0.0,
        worst_max_dev=float(mx.max()) if mx.size else 0.0,
        fraction_terminated=float(term.mean()) if term.size else 0.0,
    )


def propagated_shot_noise(times, eta: float, n_total: int, m: float = 1.0) -> float:
    """Plane-averaged RMS position error from shot noise alone.

    Each Euler step adds independent noise of stdev sigma_w dt / m with
    sigma_w = 1/(2 eta sqrt(N)); divergence of the flow is neglected.
    """
    dts = np.diff(np.asarray(times, dtype=float))
    sigma_w = shot_noise_stdev(eta, n_total)
    var = np.concatenate(([0.0], np.cumsum((sigma_w * dts / m) ** 2)))
    return float(np.sqrt(var.mean()))
