"""Simulated weak measurement of Bohm trajectories in a two-slit setup."""

__version__ = "0.1.0"

from .errors import *  # noqa: E402,F401,F403
from .wavefield import (  # noqa: E402
    WaveModel,
    density,
    eval_psi,
    field_sample,
    hj_residual,
    weak_momentum,
)
from .bohm import crossing_report, integrate_ensemble, integrate_trajectory  # noqa: E402
from .weak import CouplingConfig, extract_weak_value, pointer_after_weak_coupling  # noqa: E402
from .reconstruction import GridSpec, compare_trajectories, reconstruct_trajectories, run_weak_scan  # noqa: E402
from .field_mode import ModeState, evolve_mode_beable  # noqa: E402
from .config import RunConfig, load_config  # noqa: E402
from .pipeline import run_pipeline  # noqa: E402
