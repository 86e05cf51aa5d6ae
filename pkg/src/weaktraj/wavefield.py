"""Closed-form two-slit matter wave and the local fields derived from it.

The transverse wavefunction is the normalized sum of two freely spreading
Gaussian packets,

    psi(x, t) = N [psi_1(x, t) + exp(i delta) psi_2(x, t)],

    psi_j ~ (2 pi s_t^2)^(-1/4) exp[-(x - x_j - k_j t/m)^2 / (4 sigma0 s_t)
                                    + i (k_j x - k_j^2 t / 2m)],
    s_t = sigma0 (1 + i t / (2 m sigma0^2)),

with hbar = 1. Each packet solves the free Schroedinger equation exactly, so
every derivative below is analytic. A constant potential V can be carried in
the phase as exp(-i V t); with ``potential_in_phase=False`` the phase is left
uncorrected and the Hamilton-Jacobi residual equals V.

All functions broadcast over array-valued ``x`` and ``t``.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np

from .errors import NodeError

_QUARTER_ROOT_2PI = (2.0 * np.pi) ** -0.25


@dataclass(frozen=True)
class WaveModel:
    """Parameters of the two-slit Gaussian-packet wavefunction.

    ``x1 == x2`` with equal tilts is the single-slit (single packet) mode.
    ``p_y`` only maps packet time onto the longitudinal coordinate,
    ``y = (p_y / m) t``. ``rho_min`` is the node threshold relative to the
    peak density of one freely spreading packet at the same time.
    """

    m: float = 1.0
    x1: float = -6.0
    x2: float = 6.0
    sigma0: float = 1.0
    k1: float = 0.0
    k2: float = 0.0
    delta: float = 0.0
    potential: float = 0.0
    potential_in_phase: bool = True
    p_y: float = 50.0
    rho_min: float = 1e-12

    def __post_init__(self):
        if not self.m > 0:
            raise ValueError(f"mass must be positive, got {self.m}")
        if not self.sigma0 > 0:
            raise ValueError(f"sigma0 must be positive, got {self.sigma0}")
        if not self.rho_min >= 0:
            raise ValueError("rho_min must be non-negative")
        if self._norm_sq_unscaled() <= 1e-300:
            raise ValueError("the two packets cancel exactly; wavefunction is identically zero")

    @classmethod
    def single(cls, x0=0.0, k0=0.0, **kwargs) -> "WaveModel":
        """One Gaussian packet centred at ``x0`` with tilt ``k0``."""
        return cls(x1=x0, x2=x0, k1=k0, k2=k0, delta=0.0, **kwargs)

    @property
    def is_single(self) -> bool:
        return self.x1 == self.x2 and self.k1 == self.k2

    def with_(self, **changes) -> "WaveModel":
        return replace(self, **changes)

    def _norm_sq_unscaled(self) -> float:
        # <psi_1 + e^{i delta} psi_2 | same>, conserved by free evolution
        d = self.x2 - self.x1
        dk = self.k2 - self.k1
        xbar = 0.5 * (self.x1 + self.x2)
        overlap = np.exp(-d * d / (8 * self.sigma0**2) - 0.5 * dk * dk * self.sigma0**2 + 1j * dk * xbar)
        return float(2.0 + 2.0 * np.real(np.exp(1j * self.delta) * overlap))

    @property
    def norm(self) -> float:
        return 1.0 / np.sqrt(self._norm_sq_unscaled())

    def width(self, t):
        """Real packet width sigma_t = sigma0 sqrt(1 + (t / 2 m sigma0^2)^2)."""
        tau = np.asarray(t, dtype=float) / (2 * self.m * self.sigma0**2)
        return self.sigma0 * np.sqrt(1.0 + tau * tau)

    def centers(self, t):
        t = np.asarray(t, dtype=float)
        return self.x1 + self.k1 * t / self.m, self.x2 + self.k2 * t / self.m

    def longitudinal(self, t):
        """Longitudinal position y of the beam at packet time t."""
        return self.p_y / self.m * np.asarray(t, dtype=float)


class PsiDerivatives(NamedTuple):
    psi: np.ndarray
    dx: np.ndarray
    dxx: np.ndarray
    dt: np.ndarray


@dataclass(frozen=True)
class FieldSample:
    """Local quantities at (x, t); fields are scalars or equal-shape arrays."""

    x: np.ndarray
    t: np.ndarray
    psi: np.ndarray
    rho: np.ndarray
    p_bohm: np.ndarray
    p_osmotic: np.ndarray
    q_pot: np.ndarray
    e_bohm: np.ndarray
    hj_residual: np.ndarray

    @property
    def weak_momentum(self):
        return self.p_bohm - 1j * self.p_osmotic


@dataclass(frozen=True)
class EnergyMomentumDensities:
    t00: np.ndarray
    t0i: np.ndarray


def _packet(model: WaveModel, xj, kj, x, t, full=True):
    m, sig = model.m, model.sigma0
    s = sig * (1.0 + 1j * t / (2 * m * sig * sig))
    z = x - xj - kj * t / m
    four_sig_s = 4.0 * sig * s
    phase = -z * z / four_sig_s + 1j * (kj * x - kj * kj * t / (2 * m))
    psi = _QUARTER_ROOT_2PI / np.sqrt(s) * np.exp(phase)
    phi_x = -2.0 * z / four_sig_s + 1j * kj
    if not full:
        return psi, psi * phi_x
    phi_xx = -2.0 / four_sig_s
    phi_t = (
        kj * z / (2 * m * sig * s)
        + 1j * z * z / (8 * m * sig * sig * s * s)
        - 1j * kj * kj / (2 * m)
        - 1j / (4 * m * sig * s)
    )
    return psi, psi * phi_x, psi * (phi_x * phi_x + phi_xx), psi * phi_t


def _combine(model: WaveModel, x, t, full):
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    a = _packet(model, model.x1, model.k1, x, t, full)
    if model.is_single:
        # N = 1/2 here, so N (psi_1 + psi_1) = psi_1
        parts = list(a)
    else:
        b = _packet(model, model.x2, model.k2, x, t, full)
        n = model.norm
        rel = np.exp(1j * model.delta)
        parts = [n * (pa + rel * pb) for pa, pb in zip(a, b)]
    if model.potential_in_phase and model.potential != 0.0:
        gauge = np.exp(-1j * model.potential * t)
        parts = [p * gauge for p in parts]
        if full:
            parts[3] = parts[3] - 1j * model.potential * parts[0]
    return parts


def psi_derivatives(model: WaveModel, x, t) -> PsiDerivatives:
    """psi and its analytic derivatives d/dx, d2/dx2, d/dt."""
    return PsiDerivatives(*_combine(model, x, t, True))


def eval_psi(model: WaveModel, x, t):
    return psi_derivatives(model, x, t).psi


def density(model: WaveModel, x, t):
    return np.abs(eval_psi(model, x, t)) ** 2


def node_threshold(model: WaveModel, t):
    """Absolute density below which a point counts as a node."""
    peak = 1.0 / (np.sqrt(2 * np.pi) * model.width(t))
    return model.rho_min * peak


def _checked(model, x, t):
    d = psi_derivatives(model, x, t)
    rho = np.abs(d.psi) ** 2
    bad = rho < node_threshold(model, t)
    if np.any(bad):
        xb = np.broadcast_to(np.asarray(x, dtype=float), bad.shape)[bad]
        raise NodeError(f"density below node threshold at {bad.sum()} point(s), e.g. x={xb.flat[0]:.6g}")
    return d, rho


def _log_derivs(d: PsiDerivatives):
    u = d.dx / d.psi
    return u, d.dxx / d.psi, d.dt / d.psi


def _fields_from(model: WaveModel, d: PsiDerivatives):
    u, w2, ut = _log_derivs(d)
    p_bohm = u.imag
    p_osm = u.real
    # Q = -R''/(2 m R) with R''/R = Re(psi''/psi) + (Im u)^2
    q_pot = -(w2.real + p_bohm * p_bohm) / (2 * model.m)
    ds_dt = ut.imag
    resid = ds_dt + p_bohm * p_bohm / (2 * model.m) + q_pot + model.potential
    return p_bohm, p_osm, q_pot, -ds_dt, resid


def field_sample(model: WaveModel, x, t) -> FieldSample:
    """All local fields at (x, t). Raises NodeError if any point is a node."""
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    d, rho = _checked(model, x, t)
    p_bohm, p_osm, q_pot, e_bohm, resid = _fields_from(model, d)
    shape = rho.shape
    return FieldSample(
        x=np.broadcast_to(x, shape)[()],
        t=np.broadcast_to(t, shape)[()],
        psi=d.psi,
        rho=rho,
        p_bohm=p_bohm,
        p_osmotic=p_osm,
        q_pot=q_pot,
        e_bohm=e_bohm,
        hj_residual=resid,
    )


def hj_residual(model: WaveModel, x, t):
    """dS/dt + (dS/dx)^2/2m + Q + V; vanishes for an exact solution."""
    return field_sample(model, x, t).hj_residual


def weak_momentum(model: WaveModel, x, t):
    """<x|P|psi>/<x|psi> = dS/dx - i (drho/dx)/(2 rho)."""
    return field_sample(model, x, t).weak_momentum


def weak_momentum_second(model: WaveModel, x, t):
    """Weak value of P^2 at post-selected position x: -psi''/psi."""
    d, _ = _checked(model, x, t)
    return -(d.dxx / d.psi)


def weak_variance(model: WaveModel, x, t):
    """<P^2>_W - <P>_W^2, which equals -(d/dx)(psi'/psi)."""
    d, _ = _checked(model, x, t)
    u = d.dx / d.psi
    return -(d.dxx / d.psi) + u * u


def em_densities(model: WaveModel, x, t) -> EnergyMomentumDensities:
    """T00 = rho E_B and T0i = rho P_B; exactly zero at node points."""
    d = psi_derivatives(model, x, t)
    rho = np.abs(d.psi) ** 2
    # rho * Im(psi'/psi) = Im(conj(psi) psi'), which stays finite near nodes
    t0i = np.imag(np.conj(d.psi) * d.dx)
    t00 = -np.imag(np.conj(d.psi) * d.dt)
    zero = rho < node_threshold(model, t)
    if np.any(zero):
        t0i = np.where(zero, 0.0, t0i)
        t00 = np.where(zero, 0.0, t00)
    return EnergyMomentumDensities(t00=t00[()], t0i=t0i[()])


def bohm_velocity(model: WaveModel, x, t):
    """Guidance velocity dS/dx / m and a mask of points above the node threshold.

    Never raises; values at masked-out points are unspecified.
    """
    psi, dpsi = _combine(model, x, t, False)
    rho = psi.real**2 + psi.imag**2
    ok = rho >= node_threshold(model, t)
    with np.errstate(divide="ignore", invalid="ignore"):
        v = (psi.real * dpsi.imag - psi.imag * dpsi.real) / (rho * model.m)
    return v, ok
