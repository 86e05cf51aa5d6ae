"""Stage orchestration: fields -> trajectories -> weak scan -> reconstruction -> comparison, plus field mode.

Every stage writes its own CSV into ``cfg.out`` and the manifest is rewritten
after each stage, so a failure keeps whatever was produced before it.

RNG streams are all derived from ``cfg.seed``: the Bohm ensemble samples from
``default_rng(seed)``, scan plane ``k`` draws counts from
``default_rng([seed, k])`` and the reconstruction starts are a stratified
Born sample at the first scan plane seeded with ``seed + 1``.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .bohm import integrate_ensemble, integrate_positions, sample_initial_positions
from .config import STAGES, RunConfig, serialize_config
from .csvio import write_csv
from .errors import NonFiniteError
from .field_mode import evolve_mode_beable
from .reconstruction import (
    compare_trajectories,
    propagated_shot_noise,
    reconstruct_trajectories,
    run_weak_scan,
)
from .wavefield import density, field_sample, node_threshold, psi_derivatives

# stages that must run before the key, in pipeline order
REQUIRES = {
    "fields": (),
    "trajectories": (),
    "weak-scan": (),
    "reconstruct": ("weak-scan",),
    "compare": ("weak-scan", "reconstruct"),
    "field-mode": (),
}

OUTPUT_NAMES = {
    "fields": "fields.csv",
    "trajectories": "trajectories.csv",
    "weak-scan": "weak_scan.csv",
    "reconstruct": "reconstructed.csv",
    "compare": "compare.csv",
    "field-mode": "mode_beable.csv",
}
MANIFEST_NAME = "manifest.json"
SUMMARY_NAME = "compare_summary.json"


@dataclass
class RunManifest:
    """What ran, with which inputs, and what it produced.

    Serialized as a flat JSON object with keys ``code_version``, ``seed``,
    ``config`` (the resolved config text), ``stages_requested``,
    ``stages_completed``, ``failed_stage``, ``error``, ``outputs``,
    ``outputs_<stage>`` and ``wall_time_<stage>_s``.
    """

    config_text: str
    seed: int
    code_version: str = __version__
    stages_requested: list[str] = field(default_factory=list)
    stages_completed: list[str] = field(default_factory=list)
    stage_outputs: dict[str, list[str]] = field(default_factory=dict)
    wall_times: dict[str, float] = field(default_factory=dict)
    failed_stage: str | None = None
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.failed_stage is None

    @property
    def outputs(self) -> list[str]:
        return [name for stage in self.stages_completed for name in self.stage_outputs.get(stage, [])]

    def as_dict(self) -> dict:
        d = {
            "code_version": self.code_version,
            "seed": self.seed,
            "config": self.config_text,
            "stages_requested": list(self.stages_requested),
            "stages_completed": list(self.stages_completed),
            "failed_stage": self.failed_stage,
            "error": self.error,
            "outputs": self.outputs,
        }
        for stage in self.stages_requested:
            key = stage.replace("-", "_")
            d[f"outputs_{key}"] = list(self.stage_outputs.get(stage, []))
            if stage in self.wall_times:
                d[f"wall_time_{key}_s"] = self.wall_times[stage]
        return d

    def write(self, directory) -> Path:
        path = Path(directory) / MANIFEST_NAME
        path.write_text(json.dumps(self.as_dict(), indent=2) + "\n")
        return path


def resolve_stages(requested) -> list[str]:
    """Add prerequisites and put stages in pipeline order."""
    wanted = set()
    for s in requested:
        if s not in REQUIRES:
            raise ValueError(f"unknown stage {s!r}")
        wanted.add(s)
        wanted.update(REQUIRES[s])
    return [s for s in STAGES if s in wanted]


def aligned_dt(gap: float, dt: float) -> float:
    """Largest step <= dt that divides the plane gap evenly."""
    return gap / math.ceil(gap / dt - 1e-9)


class _Context:
    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        self.model = cfg.wave_model()
        self.out = Path(cfg.out)
        self.grid = None
        self.starts = None
        self.reconstructed = None


def _stage_fields(ctx: _Context):
    cfg, model = ctx.cfg, ctx.model
    xs = np.linspace(cfg.field_x_min, cfg.field_x_max, cfg.n_field_x)
    ts = np.linspace(cfg.t0, cfg.t1, cfg.n_field_t)
    rows = []
    for t in ts:
        psi = psi_derivatives(model, xs, t).psi
        ok = density(model, xs, t) >= node_threshold(model, t)
        derived = {}
        if ok.any():
            fs = field_sample(model, xs[ok], t)
            for j, idx in enumerate(np.flatnonzero(ok)):
                derived[idx] = (fs.p_bohm[j], fs.p_osmotic[j], fs.q_pot[j], fs.e_bohm[j], fs.hj_residual[j])
        for j, x in enumerate(xs):
            extra = derived.get(j, (None,) * 5)
            rows.append((x, t, psi[j].real, psi[j].imag, abs(psi[j]) ** 2, *extra))
    return [write_csv(ctx.out / OUTPUT_NAMES["fields"], "fields", rows)]


def _stage_trajectories(ctx: _Context):
    cfg = ctx.cfg
    ens = integrate_ensemble(ctx.model, cfg.n_traj, cfg.t0, cfg.t1, cfg.dt, seed=cfg.seed, method=cfg.sampling)
    K = ens.times.size
    keep = sorted(set(range(0, K, cfg.traj_stride)) | {K - 1})
    rows = []
    for i in range(len(ens)):
        status = str(ens.status[i])
        for k in keep:
            x = ens.positions[i, k]
            if np.isnan(x):
                break
            rows.append((i, ens.times[k], x, status))
    return [write_csv(ctx.out / OUTPUT_NAMES["trajectories"], "trajectories", rows)]


def _stage_weak_scan(ctx: _Context):
    cfg = ctx.cfg
    grid = run_weak_scan(ctx.model, cfg.grid_spec(), cfg.coupling(), cfg.n_total, seed=cfg.seed,
                         noiseless=cfg.noiseless)
    ctx.grid = grid
    rows = []
    for k, t in enumerate(grid.times):
        for j, x in enumerate(grid.x):
            if grid.missing[k, j]:
                rows.append((k, t, grid.y[k], j, x, None, None, None, None, None, None, 1))
                continue
            counts = (None, None) if grid.noiseless else (grid.n_right[k, j], grid.n_left[k, j])
            w = grid.w_true[k, j]
            rows.append((k, t, grid.y[k], j, x, w.real, w.imag, grid.p_right[k, j], *counts, grid.w_est[k, j], 0))
    return [write_csv(ctx.out / OUTPUT_NAMES["weak-scan"], "weak_scan", rows)]


def _stage_reconstruct(ctx: _Context):
    cfg = ctx.cfg
    ctx.starts = sample_initial_positions(ctx.model, cfg.n_recon, cfg.plane_t0, seed=cfg.seed + 1)
    ctx.reconstructed = reconstruct_trajectories(ctx.grid, ctx.starts)
    rows = []
    for i, rec in enumerate(ctx.reconstructed):
        last = len(rec.positions) - 1
        for n, (k, y, x) in enumerate(zip(rec.plane_indices, rec.y, rec.positions)):
            rows.append((i, k, y, x, int(rec.terminated and n == last)))
    return [write_csv(ctx.out / OUTPUT_NAMES["reconstruct"], "reconstructed", rows)]


def _stage_compare(ctx: _Context):
    cfg, grid = ctx.cfg, ctx.grid
    gap = float(grid.times[1] - grid.times[0])
    exact = integrate_positions(ctx.model, ctx.starts, grid.times[0], grid.times[-1], aligned_dt(gap, cfg.dt),
                                seed=cfg.seed + 1)
    summary = compare_trajectories(ctx.reconstructed, exact)
    rows = [(i, mt.rms, mt.max_dev, mt.planes_used) for i, mt in enumerate(summary.per_trajectory)]
    csv_path = write_csv(ctx.out / OUTPUT_NAMES["compare"], "compare", rows)
    info = summary.as_dict()
    info.update({
        "grid_dx": grid.dx,
        "rms_below_dx": summary.mean_rms < grid.dx,
        "eta": grid.eta,
        "n_total": grid.n_total,
        "noiseless": grid.noiseless,
        "shot_noise_rms": 0.0 if grid.noiseless else propagated_shot_noise(grid.times, grid.eta, grid.n_total,
                                                                          grid.m),
        "exact_dt": exact.dt,
        "n_exact_aborted": exact.n_aborted,
    })
    for k, v in info.items():
        if isinstance(v, float) and not math.isfinite(v):
            raise NonFiniteError(f"comparison summary {k} is {v!r}")
    summary_path = ctx.out / SUMMARY_NAME
    summary_path.write_text(json.dumps(info, indent=2, sort_keys=True) + "\n")
    return [csv_path, summary_path]


def _stage_field_mode(ctx: _Context):
    cfg = ctx.cfg
    traj = evolve_mode_beable(cfg.mode_state(), complex(cfg.mode_q0_re, cfg.mode_q0_im), 0.0, cfg.mode_t1,
                              cfg.mode_dt)
    rows = [(t, q.real, q.imag, abs(q)) for t, q in zip(traj.times, traj.q)]
    return [write_csv(ctx.out / OUTPUT_NAMES["field-mode"], "mode_beable", rows)]


_RUNNERS = {
    "fields": _stage_fields,
    "trajectories": _stage_trajectories,
    "weak-scan": _stage_weak_scan,
    "reconstruct": _stage_reconstruct,
    "compare": _stage_compare,
    "field-mode": _stage_field_mode,
}


def run_pipeline(cfg: RunConfig, stages=None) -> RunManifest:
    """Run ``stages`` (default: those named in the config) and write the manifest.

    A failing stage is recorded in the manifest and stops the run; outputs of
    earlier stages stay on disk.
    """
    order = resolve_stages(cfg.stage_list() if stages is None else stages)
    ctx = _Context(cfg)
    ctx.out.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest(config_text=serialize_config(cfg), seed=cfg.seed, stages_requested=order)
    for stage in order:
        start = time.perf_counter()
        try:
            paths = _RUNNERS[stage](ctx)
        except Exception as exc:  # recorded, not swallowed: the caller sees manifest.ok == False
            manifest.failed_stage = stage
            manifest.error = f"{type(exc).__name__}: {exc}"
            manifest.wall_times[stage] = time.perf_counter() - start
            manifest.write(ctx.out)
            return manifest
        manifest.wall_times[stage] = time.perf_counter() - start
        manifest.stage_outputs[stage] = [p.name for p in paths]
        manifest.stages_completed.append(stage)
        manifest.write(ctx.out)
    return manifest
