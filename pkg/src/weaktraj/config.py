"""Flat ``key = value`` run configuration.

One pair per line, ``#`` starts a comment, blank lines are ignored. Every key
has a default (see ``RunConfig``); unknown keys are rejected. The coupling
strength is given either as ``eta`` or as the pair ``D``, ``delta_t``.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, get_type_hints

from .errors import ConfigError, ConflictError, ParseError, UnknownKeyError
from .field_mode import ModeState
from .reconstruction import GridSpec
from .wavefield import WaveModel
from .weak import CouplingConfig

STAGES = ("fields", "trajectories", "weak-scan", "reconstruct", "compare", "field-mode")
DEFAULT_ETA = 0.05


@dataclass
class RunConfig:
    scenario: str = "two-slit"
    # wave model
    m: float = 1.0
    x1: float = -6.0
    x2: float = 6.0
    sigma0: float = 1.0
    k1: float = 0.0
    k2: float = 0.0
    delta: float = 0.0
    potential: float = 0.0
    p_y: float = 50.0
    rho_min: float = 1e-12
    # fields stage sampling
    field_x_min: float = -35.0
    field_x_max: float = 35.0
    n_field_x: int = 201
    n_field_t: int = 5
    # Bohm ensemble
    t0: float = 0.0
    t1: float = 20.0
    dt: float = 0.01
    n_traj: int = 500
    traj_stride: int = 10
    sampling: str = "stratified"
    # weak scan grid
    plane_t0: float = 3.0
    n_planes: int = 50
    x_min: float = -35.0
    x_max: float = 35.0
    n_bins: int = 400
    # measurement
    eta: Optional[float] = None
    D: Optional[float] = None
    delta_t: Optional[float] = None
    n_total: int = 1_000_000
    noiseless: bool = False
    # reconstruction
    n_recon: int = 200
    # field mode
    mode_k: float = 1.0
    mode_c: float = 1.0
    mode_alpha: float = 1.0
    mode_beta: float = 1.0
    mode_q0_re: float = 1.0
    mode_q0_im: float = 0.0
    mode_t1: float = 20.0
    mode_dt: float = 0.01
    # run control
    seed: int = 12345
    stages: str = "all"
    out: str = "out"

    def __post_init__(self):
        validate(self)

    # -- derived objects -------------------------------------------------
    @property
    def resolved_eta(self) -> float:
        if self.eta is not None:
            return self.eta
        if self.D is not None:
            return self.D * self.delta_t
        return DEFAULT_ETA

    def wave_model(self) -> WaveModel:
        x2 = self.x1 if self.scenario == "single" else self.x2
        k2 = self.k1 if self.scenario == "single" else self.k2
        return WaveModel(m=self.m, x1=self.x1, x2=x2, sigma0=self.sigma0, k1=self.k1, k2=k2,
                         delta=self.delta, potential=self.potential, p_y=self.p_y, rho_min=self.rho_min)

    def grid_spec(self) -> GridSpec:
        return GridSpec(self.plane_t0, self.t1, self.n_planes, self.x_min, self.x_max, self.n_bins)

    def coupling(self) -> CouplingConfig:
        if self.D is not None:
            return CouplingConfig(D=self.D, delta_t=self.delta_t)
        return CouplingConfig.from_eta(self.resolved_eta)

    def mode_state(self) -> ModeState:
        return ModeState(k=self.mode_k, c=self.mode_c, alpha=self.mode_alpha, beta=self.mode_beta)

    def stage_list(self) -> list[str]:
        if self.stages.strip() in ("all", ""):
            return list(STAGES)
        return [s.strip() for s in self.stages.split(",") if s.strip()]


def _field_types() -> dict:
    return {k: v for k, v in get_type_hints(RunConfig).items()}


def validate(cfg: RunConfig) -> None:
    if cfg.scenario not in ("two-slit", "single"):
        raise ConfigError(f"unknown scenario {cfg.scenario!r}")
    if cfg.eta is not None and (cfg.D is not None or cfg.delta_t is not None):
        raise ConflictError("give either eta or D and delta_t, not both")
    if (cfg.D is None) != (cfg.delta_t is None):
        raise ConfigError("D and delta_t must be given together")
    for name in ("m", "sigma0", "dt", "mode_dt", "mode_k", "mode_c"):
        if not getattr(cfg, name) > 0:
            raise ConfigError(f"{name} must be positive")
    if cfg.delta_t is not None and cfg.delta_t < 0:
        raise ConfigError("delta_t must be non-negative")
    if not cfg.resolved_eta > 0:
        raise ConfigError("coupling strength eta must be positive")
    for name in ("n_traj", "n_total", "n_recon", "n_field_x", "n_field_t", "traj_stride"):
        if getattr(cfg, name) < 1:
            raise ConfigError(f"{name} must be at least 1")
    if not cfg.t1 > cfg.t0:
        raise ConfigError("t1 must exceed t0")
    if not cfg.t0 <= cfg.plane_t0 < cfg.t1:
        raise ConfigError("plane_t0 must lie in [t0, t1)")
    if cfg.n_planes < 2 or cfg.n_bins < 2:
        raise ConfigError("n_planes and n_bins must be at least 2")
    if not cfg.x_max > cfg.x_min or not cfg.field_x_max > cfg.field_x_min:
        raise ConfigError("spans must be increasing")
    if cfg.sampling not in ("stratified", "iid"):
        raise ConfigError(f"unknown sampling method {cfg.sampling!r}")
    unknown = [s for s in cfg.stage_list() if s not in STAGES]
    if unknown:
        raise ConfigError(f"unknown stage(s): {', '.join(unknown)}")
    for f in dataclasses.fields(cfg):
        v = getattr(cfg, f.name)
        if isinstance(v, float) and not math.isfinite(v):
            raise ConfigError(f"{f.name} must be finite")


def _convert(key: str, text: str, lineno=None):
    typ = _field_types()[key]
    text = text.strip()
    try:
        if typ in (Optional[float],):
            return None if text.lower() in ("", "none") else float(text)
        if typ is bool:
            low = text.lower()
            if low in ("true", "yes", "1", "on"):
                return True
            if low in ("false", "no", "0", "off"):
                return False
            raise ValueError(text)
        if typ is int:
            return int(text.replace("_", ""))
        if typ is float:
            return float(text)
        return text
    except ValueError:
        raise ParseError(f"invalid value {text!r} for {key}", lineno) from None


def parse_pairs(text: str) -> dict:
    """Parse config text into a dict of typed values, without applying defaults."""
    known = _field_types()
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(f"expected 'key = value', got {raw.strip()!r}", lineno)
        key, value = (p.strip() for p in line.split("=", 1))
        if not key:
            raise ParseError("empty key", lineno)
        if key not in known:
            raise UnknownKeyError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ParseError(f"duplicate key {key!r}", lineno)
        values[key] = _convert(key, value, lineno)
    return values


def parse_override(item: str) -> tuple[str, object]:
    if "=" not in item:
        raise ParseError(f"override must look like key=value, got {item!r}")
    key, value = (p.strip() for p in item.split("=", 1))
    if key not in _field_types():
        raise UnknownKeyError(f"unknown key {key!r}")
    return key, _convert(key, value)


def load_config(source=None, overrides=None) -> RunConfig:
    """Build a RunConfig from a path, inline text, or nothing (all defaults).

    ``overrides`` is an iterable of ``key=value`` strings applied last.
    """
    if source is None:
        text = ""
    elif isinstance(source, Path) or (isinstance(source, str) and "\n" not in source and "=" not in source
                                      and source.strip() != ""):
        text = Path(source).read_text()
    else:
        text = source
    values = parse_pairs(text)
    for item in overrides or ():
        key, value = parse_override(item)
        values[key] = value
    return RunConfig(**values)


def _format(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def serialize_config(cfg: RunConfig) -> str:
    lines = []
    for f in dataclasses.fields(cfg):
        v = getattr(cfg, f.name)
        if v is None:
            continue
        lines.append(f"{f.name} = {_format(v)}")
    return "\n".join(lines) + "\n"
