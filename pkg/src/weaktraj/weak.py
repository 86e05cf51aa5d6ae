"""Weak coupling to a two-level pointer and strong complementary readout.

The momentum of the particle is coupled to a pointer observable with
eigenvalues a = +1, -1 and scalar strength eta = D * delta_t. Keeping the
single weak value w in the exponent, the pointer leaves the interaction as

    d_+ = c_+ exp(-i eta w),    d_- = c_- exp(+i eta w).

Reading it out in the complementary basis

    mu_R = (xi_+ + i xi_-)/sqrt(2),    mu_L = (xi_+ - i xi_-)/sqrt(2)

gives (for c_+ = c_- = 1/sqrt(2))

    p_R = [cosh(2 eta Im w) + sin(2 eta Re w)] / [2 cosh(2 eta Im w)],

so the count asymmetry (N_R - N_L)/(N_R + N_L) inverts to Re w through an
arcsine with gain G = 1/(2 eta).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateError, DomainError, EmptyCountsError, OrthogonalPostselectionError
from .wavefield import WaveModel, weak_momentum, weak_variance

INV_SQRT2 = 1.0 / np.sqrt(2.0)


def coupling_eta(D, delta_t):
    """Integrated coupling strength for a rectangular pulse of height D."""
    if np.any(np.asarray(delta_t) < 0):
        raise ValueError("delta_t must be non-negative")
    return D * delta_t


@dataclass(frozen=True)
class CouplingConfig:
    D: float = 0.5
    delta_t: float = 0.1
    c_plus: complex = INV_SQRT2
    c_minus: complex = INV_SQRT2
    a_plus: float = 1.0
    a_minus: float = -1.0

    def __post_init__(self):
        if self.delta_t < 0:
            raise ValueError("delta_t must be non-negative")
        norm = abs(self.c_plus) ** 2 + abs(self.c_minus) ** 2
        if abs(norm - 1.0) > 1e-12:
            raise ValueError(f"initial pointer is not normalized (|c+|^2 + |c-|^2 = {norm})")

    @classmethod
    def from_eta(cls, eta: float, **kwargs) -> "CouplingConfig":
        return cls(D=eta, delta_t=1.0, **kwargs)

    @property
    def eta(self) -> float:
        return coupling_eta(self.D, self.delta_t)


@dataclass(frozen=True)
class PointerState:
    """Pointer coefficients in the coupling eigenbasis (scalars or arrays)."""

    d_plus: np.ndarray
    d_minus: np.ndarray

    @property
    def norm_sq(self):
        return np.abs(self.d_plus) ** 2 + np.abs(self.d_minus) ** 2

    @property
    def normalized(self) -> bool:
        return bool(np.all(np.abs(self.norm_sq - 1.0) < 1e-12))

    def as_array(self) -> np.ndarray:
        """Coefficients stacked along a leading axis of length 2."""
        return np.stack(np.broadcast_arrays(self.d_plus, self.d_minus))


@dataclass(frozen=True)
class ReadoutBasis:
    """Unitary with ``matrix[r, n] = <mu_r | xi_n>``; row 0 is R, row 1 is L."""

    matrix: np.ndarray

    def __post_init__(self):
        u = np.asarray(self.matrix, dtype=complex)
        if u.shape != (2, 2):
            raise ValueError("readout basis must be 2x2")
        if np.max(np.abs(u.conj().T @ u - np.eye(2))) > 1e-12:
            raise ValueError("readout change of basis is not unitary")
        object.__setattr__(self, "matrix", u)

    @classmethod
    def circular(cls) -> "ReadoutBasis":
        # <mu_R| = (<xi_+| - i <xi_-|)/sqrt2, <mu_L| = (<xi_+| + i <xi_-|)/sqrt2
        return cls(INV_SQRT2 * np.array([[1.0, -1.0j], [1.0, 1.0j]]))

    @classmethod
    def coupling(cls) -> "ReadoutBasis":
        """Read out in the coupling eigenbasis itself (row 0 is xi_+)."""
        return cls(np.eye(2, dtype=complex))


@dataclass(frozen=True)
class CountRecord:
    n_right: np.ndarray
    n_left: np.ndarray

    @property
    def n_total(self):
        return self.n_right + self.n_left

    @property
    def asymmetry(self):
        n = self.n_total
        if np.any(n == 0):
            raise EmptyCountsError("no counts recorded")
        return (self.n_right - self.n_left) / n


def pointer_after_weak_coupling(cfg: CouplingConfig, w) -> PointerState:
    """Pointer state d_n = c_n exp(-i eta a_n w), renormalized.

    Computed in log-magnitude form so that large |eta Im w| does not overflow.
    """
    w = np.asarray(w, dtype=complex)
    eta = cfg.eta
    with np.errstate(divide="ignore"):
        logs = [
            np.log(abs(c)) + eta * a * w.imag
            for c, a in ((cfg.c_plus, cfg.a_plus), (cfg.c_minus, cfg.a_minus))
        ]
    shift = np.maximum(logs[0], logs[1])
    if np.any(~np.isfinite(shift)):
        raise DegenerateError("both pointer coefficients vanish")
    phases = [
        np.exp(1j * (np.angle(c) - eta * a * w.real))
        for c, a in ((cfg.c_plus, cfg.a_plus), (cfg.c_minus, cfg.a_minus))
    ]
    d_plus = np.exp(logs[0] - shift) * phases[0]
    d_minus = np.exp(logs[1] - shift) * phases[1]
    norm = np.sqrt(np.abs(d_plus) ** 2 + np.abs(d_minus) ** 2)
    return PointerState(d_plus / norm, d_minus / norm)


def readout_probabilities(pointer: PointerState, basis: ReadoutBasis | None = None):
    """Outcome probabilities |sum_n <mu_r|xi_n> d_n|^2 for r = R, L."""
    if basis is None:
        basis = ReadoutBasis.circular()
    amps = np.tensordot(basis.matrix, pointer.as_array(), axes=1)
    probs = np.abs(amps) ** 2
    return probs[0], probs[1]


def closed_form_p_right(w, eta):
    """p_R for the default pointer and circular readout."""
    w = np.asarray(w, dtype=complex)
    ch = np.cosh(2 * eta * w.imag)
    return (ch + np.sin(2 * eta * w.real)) / (2 * ch)


def sample_counts(p_right, n_total, seed=None) -> CountRecord:
    """Binomial counts for ``n_total`` detected particles.

    ``seed`` may be anything accepted by ``numpy.random.default_rng``,
    including an existing Generator.
    """
    p = np.asarray(p_right, dtype=float)
    if np.any((p < 0) | (p > 1)):
        raise ValueError("p_right must lie in [0, 1]")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    n_right = rng.binomial(n_total, p)
    return CountRecord(np.asarray(n_right)[()], (np.asarray(n_total) - n_right)[()])


def extract_weak_value(counts: CountRecord, eta):
    """G arcsin((N_R - N_L)/(N_R + N_L)) with G = 1/(2 eta).

    The asymmetry is clamped to [-1, 1]; at the clamp the estimate saturates
    at +-pi/(4 eta).
    """
    asym = np.clip(counts.asymmetry, -1.0, 1.0)
    return np.arcsin(asym) / (2 * eta)


def extract_from_probabilities(p_right, eta):
    """Noiseless estimator: the arcsine inversion applied to exact probabilities."""
    asym = np.clip(2 * np.asarray(p_right) - 1, -1.0, 1.0)
    return np.arcsin(asym) / (2 * eta)


def extract_osmotic(counts: CountRecord, eta):
    """Estimate Im w from counts taken in the coupling eigenbasis.

    ``counts.n_right`` holds the xi_+ outcomes. For the default pointer the
    asymmetry is tanh(2 eta Im w). Note Im w is minus the osmotic momentum.
    Experimental: the estimator diverges as the asymmetry approaches +-1.
    """
    asym = counts.asymmetry
    if np.any(np.abs(asym) >= 1):
        raise DomainError("asymmetry at +-1; inverse tanh diverges")
    return np.arctanh(asym) / (2 * eta)


def shot_noise_stdev(eta, n_total):
    """Delta-method standard deviation of the arcsine estimator.

    Var(asym) = cos^2(2 eta w)/N for real w and the arcsine derivative
    contributes 1/cos(2 eta w), so the two cancel: 1/(2 eta sqrt(N)).
    """
    return 1.0 / (2 * eta * np.sqrt(n_total))


def remainder_magnitude(model: WaveModel, x, t, eta):
    """Size of the leading neglected term, eta^2/2 |<P^2>_W - <P>_W^2|."""
    return 0.5 * eta * eta * np.abs(weak_variance(model, x, t))


def is_weak_regime(model: WaveModel, x, t, eta, factor: float = 0.01):
    """Heuristic: neglected term below ``factor`` times |eta <P>_W|."""
    return remainder_magnitude(model, x, t, eta) < factor * np.abs(eta * weak_momentum(model, x, t))


def weak_value_general(op, pre, post):
    """<post|op|pre> / <post|pre>; may lie far outside the spectrum of ``op``."""
    op = np.asarray(op, dtype=complex)
    pre = np.asarray(pre, dtype=complex)
    post = np.asarray(post, dtype=complex)
    overlap = np.vdot(post, pre)
    if abs(overlap) < 1e-14 * np.linalg.norm(post) * np.linalg.norm(pre):
        raise OrthogonalPostselectionError("post-selected state is orthogonal to the pre-selected state")
    return np.vdot(post, op @ pre) / overlap
