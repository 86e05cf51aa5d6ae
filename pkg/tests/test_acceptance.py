"""Acceptance suite: nine end-to-end criteria, each printing one PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v -s``; the lines are also
collected in the terminal summary of any run that includes this module.
"""

import json
import time

import numpy as np
import pytest

from oracles import central_diff, lambdified_fields, tv, two_slit_expr
from weaktraj.bohm import born_histogram, crossing_report, integrate_ensemble, sample_initial_positions, total_variation
from weaktraj.config import RunConfig, load_config
from weaktraj.field_mode import (
    ModeState,
    evolve_mode_beable,
    evolve_mode_ensemble,
    marginal_probabilities,
    mode_hj_residual,
    sample_mode_beables,
)
from weaktraj.pipeline import run_pipeline
from weaktraj.reconstruction import propagated_shot_noise, reconstruct_trajectories, run_weak_scan
from weaktraj.wavefield import WaveModel, density, field_sample, hj_residual, node_threshold, weak_momentum
from weaktraj.weak import (
    CouplingConfig,
    extract_from_probabilities,
    extract_weak_value,
    pointer_after_weak_coupling,
    readout_probabilities,
    sample_counts,
    shot_noise_stdev,
)

RESULTS: dict[int, str] = {}


def report(capsys, number, title, ok, detail):
    line = f"criterion {number} [{'PASS' if ok else 'FAIL'}] {title}: {detail}"
    RESULTS[number] = line
    with capsys.disabled():
        print("\n" + line)
    assert ok, line


def local_maxima(values, floor):
    v = np.asarray(values)
    idx = [i for i in range(1, v.size - 1) if v[i] > v[i - 1] and v[i] >= v[i + 1] and v[i] > floor]
    return np.array(idx, dtype=int)


# ---- 1 -----------------------------------------------------------------------------------

def test_c1_hamilton_jacobi_identity(capsys):
    model = WaveModel()
    rng = np.random.default_rng(101)
    start = time.perf_counter()
    x, t = rng.uniform(-35, 35, 4000), rng.uniform(0, 20, 4000)
    keep = np.flatnonzero(density(model, x, t) >= node_threshold(model, t))[:1000]
    resid = np.abs(hj_residual(model, x[keep], t[keep]))
    elapsed = time.perf_counter() - start
    worst = float(resid.max())
    ok = keep.size == 1000 and worst < 1e-8 and elapsed < 1.0
    report(capsys, 1, "Hamilton-Jacobi identity", ok,
           f"max |residual| = {worst:.2e} over {keep.size} points (< 1e-8), {elapsed:.3f} s (< 1 s)")


# ---- 2 -----------------------------------------------------------------------------------

def test_c2_weak_value_decomposition(capsys):
    model = WaveModel()
    psi_oracle = lambdified_fields(two_slit_expr())[0]
    rng = np.random.default_rng(202)
    x, t = rng.uniform(-20, 20, 400), rng.uniform(0, 20, 400)
    keep = np.flatnonzero(density(model, x, t) >= node_threshold(model, t))[:100]
    x, t = x[keep], t[keep]
    w = weak_momentum(model, x, t)
    fs = field_sample(model, x, t)
    exact = bool(np.array_equal(w, fs.p_bohm - 1j * fs.p_osmotic))
    h = 1e-4
    # -i d(ln psi)/dx from central differences of the independently built wave function
    fd = -1j * central_diff(lambda xx: psi_oracle(xx, t), x, h) / psi_oracle(x, t)
    rel = float(np.max(np.abs(w - fd) / np.abs(fd)))
    ok = keep.size == 100 and exact and rel < 1e-5
    report(capsys, 2, "weak-value decomposition", ok,
           f"bitwise p_bohm - i p_osmotic: {exact}; max relative FD deviation {rel:.2e} (< 1e-5) at {keep.size} points")


# ---- 3 -----------------------------------------------------------------------------------

def test_c3_protocol_round_trip(capsys):
    start = time.perf_counter()
    w = np.linspace(-2, 2, 401)
    w = w[w != 0]
    worst = {}
    for eta in (0.05, 0.005):
        p, _ = readout_probabilities(pointer_after_weak_coupling(CouplingConfig.from_eta(eta), w))
        est = extract_from_probabilities(p, eta)
        worst[eta] = float(np.max(np.abs(est - w) / np.abs(w)))
    elapsed = time.perf_counter() - start
    ok = worst[0.05] < 0.01 and worst[0.005] < 1e-4 and elapsed < 1.0
    report(capsys, 3, "protocol round trip", ok,
           f"max |bias|/|w| = {worst[0.05]:.2e} at eta=0.05 (< 1e-2), {worst[0.005]:.2e} at eta=0.005 (< 1e-4), "
           f"{elapsed:.3f} s (< 1 s)")


# ---- 4 -----------------------------------------------------------------------------------

def test_c4_shot_noise_scaling(capsys):
    start = time.perf_counter()
    eta, w = 0.05, 0.9
    p, _ = readout_probabilities(pointer_after_weak_coupling(CouplingConfig.from_eta(eta), w))
    n_values = np.array([10**3, 10**4, 10**5, 10**6, 10**7])
    stdevs = []
    for n in n_values:
        est = [extract_weak_value(sample_counts(p, int(n), seed=[404, int(n), s]), eta) for s in range(100)]
        stdevs.append(np.std(est, ddof=1))
    slope = float(np.polyfit(np.log10(n_values), np.log10(stdevs), 1)[0])
    elapsed = time.perf_counter() - start
    ratio = stdevs[-1] / shot_noise_stdev(eta, int(n_values[-1]))
    ok = abs(slope + 0.5) <= 0.05 and elapsed < 60
    report(capsys, 4, "shot-noise scaling", ok,
           f"log-log slope {slope:.4f} (-0.5 +- 0.05), stdev/prediction at 1e7 = {ratio:.3f}, {elapsed:.2f} s (< 60 s)")


# ---- 5 -----------------------------------------------------------------------------------

def test_c5_two_slit_ensemble(capsys):
    model = WaveModel()
    start = time.perf_counter()
    ens = integrate_ensemble(model, 5000, 0.0, 20.0, 0.01, seed=2024)
    crossings = crossing_report(ens).violations
    edges, frac, probs = born_histogram(model, ens.final_positions, 20.0, bins=50)
    dist = total_variation(frac, probs)
    elapsed = time.perf_counter() - start
    peaks_rho = local_maxima(probs, 0.1 * probs.max())
    peaks_hist = local_maxima(frac, 0.1 * frac.max())
    matched = (peaks_rho.size == peaks_hist.size
               and all(np.min(np.abs(peaks_hist - i)) <= 1 for i in peaks_rho)
               and all(np.min(np.abs(peaks_rho - i)) <= 1 for i in peaks_hist))
    ok = crossings == 0 and ens.n_aborted == 0 and dist < 0.03 and matched and elapsed < 60
    report(capsys, 5, "two-slit Bohm ensemble", ok,
           f"{crossings} crossings, TV {dist:.4f} (< 0.03), fringe maxima {peaks_hist.tolist()} vs density "
           f"{peaks_rho.tolist()} (within one bin: {matched}), {elapsed:.1f} s (< 60 s)")


# ---- 6 -----------------------------------------------------------------------------------

def test_c6_reconstruction_fidelity(capsys, tmp_path):
    start = time.perf_counter()
    summaries = {}
    for name, extra in (("noiseless", ["noiseless=true"]), ("noisy", ["n_total=1000000", "eta=0.05"])):
        cfg = load_config(None, extra + ["stages=compare", f"out={tmp_path / name}"])
        manifest = run_pipeline(cfg)
        assert manifest.ok, manifest.error
        summaries[name] = json.loads((tmp_path / name / "compare_summary.json").read_text())
    # noise in isolation: noisy vs noiseless reconstruction from the same starts
    cfg = RunConfig()
    model, spec = cfg.wave_model(), cfg.grid_spec()
    coupling = CouplingConfig.from_eta(0.05)
    clean = run_weak_scan(model, spec, coupling, 10**6, seed=cfg.seed, noiseless=True)
    noisy = run_weak_scan(model, spec, coupling, 10**6, seed=cfg.seed)
    starts = sample_initial_positions(model, cfg.n_recon, spec.t0, seed=cfg.seed + 1)
    a, b = reconstruct_trajectories(clean, starts), reconstruct_trajectories(noisy, starts)
    n = min(len(r.positions) for r in a + b)
    diff = np.array([ra.positions[:n] - rb.positions[:n] for ra, rb in zip(a, b)])
    noise_rms = float(np.mean(np.sqrt(np.mean(diff**2, axis=1))))
    elapsed = time.perf_counter() - start

    s0, s1 = summaries["noiseless"], summaries["noisy"]
    shot = s1["shot_noise_rms"]
    bound = s0["mean_rms"] + shot
    ok = (s0["mean_rms"] < s0["grid_dx"] and s1["mean_rms"] < 3 * bound and noise_rms < 3 * shot
          and s1["n_exact_aborted"] == 0 and elapsed < 300)
    report(capsys, 6, "reconstruction fidelity", ok,
           f"noiseless mean RMS {s0['mean_rms']:.4f} (< dx {s0['grid_dx']:.4f}); noisy mean RMS {s1['mean_rms']:.4f} "
           f"(< 3 x bound {bound:.4f}); noise-only RMS {noise_rms:.4f} (< 3 x predicted {shot:.4f}); "
           f"{elapsed:.1f} s (< 300 s)")
    assert shot == pytest.approx(propagated_shot_noise(spec.times, 0.05, 10**6))


# ---- 7 -----------------------------------------------------------------------------------

def test_c7_classical_limit(capsys):
    sigma0, k0, t1 = 10.0, 20.0, 5.0
    model = WaveModel.single(0.0, k0=k0, sigma0=sigma0)
    ens = integrate_ensemble(model, 500, 0.0, t1, 0.01, seed=707)
    pos, times = ens.positions, ens.times
    chord = pos[:, :1] + (pos[:, -1:] - pos[:, :1]) * (times - times[0]) / (times[-1] - times[0])
    bend = float(np.max(np.abs(pos - chord)))
    q = field_sample(model, pos, np.broadcast_to(times, pos.shape)).q_pot
    kinetic = k0**2 / (2 * model.m)
    q_ratio = float(np.max(np.abs(q)) / kinetic)
    ok = ens.n_aborted == 0 and bend < 1e-3 * sigma0 and q_ratio < 1e-4
    report(capsys, 7, "classical limit", ok,
           f"max deviation from straight line {bend:.2e} (< {1e-3 * sigma0:.0e}), max |Q| / (p^2/2m) {q_ratio:.2e} (< 1e-4)")


# ---- 8 -----------------------------------------------------------------------------------

def test_c8_field_mode(capsys):
    start = time.perf_counter()
    q0 = 0.4 - 0.7j
    ground = evolve_mode_beable(ModeState.ground(), q0, 0.0, 100.0, 0.01)
    drift = float(np.max(np.abs(ground.q - q0)))

    r = 0.8
    period = 2 * np.pi * 2 * r * r
    photon = evolve_mode_beable(ModeState.one_photon(), r + 0j, 0.0, 10 * period, 0.01)
    radius_err = float(np.max(np.abs(np.abs(photon.q) - r)))

    rng = np.random.default_rng(808)
    # non-node points: away from the one-photon node at the origin and from the far tail
    qs = rng.uniform(0.05, 3.0, 1000) * np.exp(2j * np.pi * rng.random(1000))
    ts = rng.uniform(0, 20, 1000)
    resid = max(float(np.max(np.abs(mode_hj_residual(s, qs, ts))))
                for s in (ModeState.ground(), ModeState.one_photon(), ModeState.superposition()))

    sup = ModeState.superposition()
    z0 = sample_mode_beables(sup, 5000, 0.0, seed=2)
    _, z, alive = evolve_mode_ensemble(sup, z0, 0.0, 2.0, 0.005)
    edges = np.linspace(-2.5, 2.5, 31)
    dists = []
    for axis, values in (("real", z[:, -1].real), ("imag", z[:, -1].imag)):
        hist, _ = np.histogram(values, edges)
        dists.append(tv(hist / values.size, marginal_probabilities(sup, 2.0, edges, axis=axis)))
    elapsed = time.perf_counter() - start
    ok = (ground.status == photon.status == "completed" and alive.all() and drift < 1e-12 and radius_err < 1e-9
          and resid < 1e-8 and max(dists) < 0.05 and elapsed < 60)
    report(capsys, 8, "field mode", ok,
           f"ground drift {drift:.1e} (< 1e-12), one-photon |q| error {radius_err:.1e} (< 1e-9), "
           f"HJ residual {resid:.1e} (< 1e-8), equivariance TV {max(dists):.4f} (< 0.05), {elapsed:.1f} s (< 60 s)")


# ---- 9 -----------------------------------------------------------------------------------

def test_c9_determinism(capsys, tmp_path):
    outputs = []
    for name in ("first", "second"):
        manifest = run_pipeline(RunConfig(out=str(tmp_path / name)))
        assert manifest.ok, manifest.error
        outputs.append({p.name: p.read_bytes() for p in sorted((tmp_path / name).glob("*.csv"))})
    same = outputs[0] == outputs[1]
    ok = same and len(outputs[0]) == 6
    report(capsys, 9, "determinism", ok,
           f"{len(outputs[0])} CSV files, byte-identical across two default runs: {same}")
