"""Single electromagnetic field mode with a complex beable amplitude q.

Conventions (hbar = 1, omega = k c). The mode Hamiltonian

    H = Pi Pi* + omega^2 q q*,   Pi -> -i d/dq*,

acts on wave functionals of q as -d^2/(dq dq*) + omega^2 |q|^2, i.e. a 2D
isotropic oscillator in (Re q, Im q) with frequency omega. Its lowest states
are

    Psi_0 = sqrt(2 omega / pi) exp(-omega |q|^2),                  E_0 = omega
    Psi_1 = sqrt(2 omega / pi) sqrt(2 omega) q exp(-omega |q|^2),  E_1 = 2 omega

so one quantum carries exactly k c. Writing Psi = R exp(i s), beables follow
dq/dt = ds/dq* and the quantum Hamilton-Jacobi equation reads

    ds/dt + (ds/dq)(ds/dq*) + omega^2 |q|^2 + Q = 0,   Q = -(1/R) d^2R/(dq dq*).

With Psi = g(q) f(q, t), g = exp(-omega |q|^2) real and f holomorphic in q,
everything reduces to u = f'/f:

    dq/dt = (i/2) conj(u),    Q = omega - |conj(u)/2 - omega q|^2.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NodeError
from .integrate import integrate, time_grid


@dataclass(frozen=True)
class ModeState:
    """Psi = alpha Psi_0 + beta Psi_1; amplitudes are normalized on construction."""

    k: float = 1.0
    c: float = 1.0
    alpha: complex = 1.0
    beta: complex = 0.0
    rho_min: float = 1e-12

    def __post_init__(self):
        if not self.k * self.c > 0:
            raise ValueError("k c must be positive")
        norm = np.sqrt(abs(self.alpha) ** 2 + abs(self.beta) ** 2)
        if norm == 0:
            raise ValueError("alpha and beta cannot both vanish")
        object.__setattr__(self, "alpha", complex(self.alpha) / norm)
        object.__setattr__(self, "beta", complex(self.beta) / norm)

    @property
    def normalized(self) -> bool:
        return abs(abs(self.alpha) ** 2 + abs(self.beta) ** 2 - 1.0) < 1e-12

    @property
    def omega(self) -> float:
        return self.k * self.c

    @property
    def energies(self) -> tuple[float, float]:
        return self.omega, 2.0 * self.omega

    @property
    def prefactor(self) -> float:
        return np.sqrt(2.0 * self.omega / np.pi)

    @classmethod
    def ground(cls, **kw) -> "ModeState":
        return cls(alpha=1.0, beta=0.0, **kw)

    @classmethod
    def one_photon(cls, **kw) -> "ModeState":
        return cls(alpha=0.0, beta=1.0, **kw)

    @classmethod
    def superposition(cls, **kw) -> "ModeState":
        return cls(alpha=1.0, beta=1.0, **kw)


@dataclass(frozen=True)
class ModeBeable:
    t: float
    q: complex
    pi: complex  # dq*/dt along the trajectory


def _f_parts(state: ModeState, q, t):
    """f, df/dq and df/dt for the holomorphic factor of the functional."""
    e0, e1 = state.energies
    w = state.omega
    a = state.alpha * np.exp(-1j * e0 * t)
    b = state.beta * np.sqrt(2.0 * w) * np.exp(-1j * e1 * t)
    f = a + b * q
    return f, b * np.ones_like(f), -1j * e0 * a - 1j * e1 * b * q


def mode_wavefunctional(state: ModeState, q, t=0.0):
    q = np.asarray(q, dtype=complex)
    f, _, _ = _f_parts(state, q, t)
    return state.prefactor * np.exp(-state.omega * np.abs(q) ** 2) * f


def mode_density(state: ModeState, q, t=0.0):
    return np.abs(mode_wavefunctional(state, q, t)) ** 2


def _threshold(state: ModeState):
    return state.rho_min * state.prefactor**2


def _guidance(state: ModeState, q, t):
    q = np.asarray(q, dtype=complex)
    f, fq, _ = _f_parts(state, q, t)
    ok = mode_density(state, q, t) >= _threshold(state)
    with np.errstate(divide="ignore", invalid="ignore"):
        v = 0.5j * np.conj(fq / f)
    return v, ok


def _checked_u(state, q, t):
    q = np.asarray(q, dtype=complex)
    if np.any(mode_density(state, q, t) < _threshold(state)):
        raise NodeError("wave functional below node threshold")
    f, fq, ft = _f_parts(state, q, t)
    return q, fq / f, ft / f


def mode_velocity(state: ModeState, q, t=0.0):
    """Guidance velocity dq/dt = ds/dq*; exactly zero in the ground state."""
    _, u, _ = _checked_u(state, q, t)
    return (0.5j * np.conj(u))[()]


def mode_quantum_potential(state: ModeState, q, t=0.0):
    q, u, _ = _checked_u(state, q, t)
    return (state.omega - np.abs(0.5 * np.conj(u) - state.omega * q) ** 2)[()]


def mode_hj_residual(state: ModeState, q, t=0.0):
    """ds/dt + |ds/dq*|^2 + omega^2 |q|^2 + Q."""
    q, u, ut = _checked_u(state, q, t)
    w = state.omega
    ds_dt = ut.imag
    kinetic = 0.25 * np.abs(u) ** 2
    qpot = w - np.abs(0.5 * np.conj(u) - w * q) ** 2
    return (ds_dt + kinetic + w * w * np.abs(q) ** 2 + qpot)[()]


@dataclass
class ModeTrajectory:
    state: ModeState
    times: np.ndarray
    q: np.ndarray
    status: str

    @property
    def pi(self) -> np.ndarray:
        """Conjugate momentum dq*/dt at each recorded time."""
        v, _ = _guidance(self.state, self.q, self.times)
        return np.conj(v)

    @property
    def beables(self) -> list[ModeBeable]:
        return [ModeBeable(float(t), complex(q), complex(p)) for t, q, p in zip(self.times, self.q, self.pi)]


def evolve_mode_ensemble(state: ModeState, q0, t0: float, t1: float, dt: float):
    """RK4 on the guidance velocity for many beables; returns (times, q[n, k], ok[n])."""
    q0 = np.asarray(q0, dtype=complex).ravel()
    times = time_grid(t0, t1, dt)
    q, ok = integrate(lambda z, t: _guidance(state, z, t), q0, times)
    return times, q, ok


def evolve_mode_beable(state: ModeState, q0, t0: float, t1: float, dt: float) -> ModeTrajectory:
    """Guidance trajectory of one beable; aborted (and truncated) at a node."""
    if mode_density(state, q0, t0) < _threshold(state):
        raise NodeError(f"start q0={q0} is at a node of the wave functional")
    times, q, ok = evolve_mode_ensemble(state, [q0], t0, t1, dt)
    valid = np.isfinite(q[0])
    return ModeTrajectory(state, times[valid], q[0, valid], "completed" if ok[0] else "aborted-at-node")


def sample_mode_beables(state: ModeState, n: int, t: float = 0.0, seed=None) -> np.ndarray:
    """Rejection-sample ``n`` beables from |Psi(q, t)|^2 over the complex plane.

    Proposal: complex Gaussian with density (omega/pi) exp(-omega |q|^2).
    """
    rng = np.random.default_rng(seed)
    w = state.omega
    r = np.linspace(0.0, 12.0 / np.sqrt(w), 4001)
    a, b = abs(state.alpha), abs(state.beta) * np.sqrt(2 * w)
    bound = 1.01 * np.max(2.0 * np.exp(-w * r * r) * (a + b * r) ** 2)
    out = np.empty(0, dtype=complex)
    while out.size < n:
        m = max(2 * (n - out.size), 64)
        z = (rng.standard_normal(m) + 1j * rng.standard_normal(m)) / np.sqrt(2 * w)
        ratio = mode_density(state, z, t) / ((w / np.pi) * np.exp(-w * np.abs(z) ** 2))
        keep = rng.random(m) * bound < ratio
        out = np.concatenate((out, z[keep]))
    return out[:n]


def marginal_probabilities(state: ModeState, t: float, edges, axis: str = "real", n_sub: int = 32,
                           span: float | None = None):
    """Bin probabilities of the Re q (or Im q) marginal of |Psi(q, t)|^2.

    Midpoint quadrature on a tensor grid; the transverse direction covers
    +-``span`` (default 8 / sqrt(omega)).
    """
    edges = np.asarray(edges, dtype=float)
    span = 8.0 / np.sqrt(state.omega) if span is None else span
    nt = 801
    other = np.linspace(-span, span, nt)
    d_other = other[1] - other[0]
    probs = np.empty(edges.size - 1)
    for i in range(edges.size - 1):
        h = (edges[i + 1] - edges[i]) / n_sub
        along = edges[i] + h * (np.arange(n_sub) + 0.5)
        a, o = np.meshgrid(along, other, indexing="ij")
        q = a + 1j * o if axis == "real" else o + 1j * a
        probs[i] = mode_density(state, q, t).sum() * h * d_other
    return probs
