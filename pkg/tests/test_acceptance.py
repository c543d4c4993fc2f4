"""Acceptance criteria, one test per criterion.

Each test prints a single ``[PASS]``/``[FAIL]`` line with the measured
values before asserting, so ``pytest -v -s`` (or the captured output of a
failure) shows the numbers behind the verdict.
"""

import cmath
import json
import math
import time
import warnings
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wsrsim.channel import CfoModel, NoiseConfig
from wsrsim.cli import main
from wsrsim.config import PRESETS
from wsrsim.datastore import read_dataset, write_dataset
from wsrsim.estimator import AngleGrid, SamplingWarning, bartlett_from_arrays
from wsrsim.exchange import interpolate_center_batch, pair_packets
from wsrsim.pipeline import estimate, simulate

from test_estimator import WL, brute_force_profile, circle_positions, squared_channel

N_REPS = 10


@pytest.fixture
def report(capsys):
    def emit(criterion, ok, detail):
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {criterion}: {detail}")
        return ok

    return emit


def _run(cfg, seed=None, grid=None):
    t0 = time.perf_counter()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        rec = simulate(cfg, seed=seed)
        profile, summary = estimate(rec, grid=grid)
    return rec, profile, summary, time.perf_counter() - t0


def test_c1_circular_accuracy(report):
    base = PRESETS["paper-circular"]
    _, _, clean, t_clean = _run(replace(base, noise=NoiseConfig.off()))
    noisy = [_run(base, seed=s) for s in range(N_REPS)]
    errors = np.array([s.azimuth_error_deg for _, _, s, _ in noisy])
    runtimes = [t for *_, t in noisy] + [t_clean]
    ok = clean.azimuth_error_deg <= 1.0 and errors.mean() <= 2.0 and max(runtimes) <= 60.0
    report(
        1,
        ok,
        f"noiseless error {clean.azimuth_error_deg:.3f} deg (<= 1), noisy mean {errors.mean():.3f} deg "
        f"over {N_REPS} seeds (<= 2, max {errors.max():.3f}), slowest repetition {max(runtimes):.2f} s (<= 60)",
    )
    assert ok


def test_c2_linear_mirror_ambiguity(report):
    base = PRESETS["paper-linear"]
    details, ok = [], True
    for seed in range(N_REPS):
        _, profile, summary, _ = _run(base, seed=seed)
        peaks = summary.dominant_peaks
        if len(peaks) != 2:
            ok = False
            details.append(f"seed {seed}: {len(peaks)} peaks")
            continue
        (a1, _), (a2, _) = peaks
        mags = [profile.magnitude[int(round((a + 180) / profile.grid.azimuth_step)), 0] for a in (a1, a2)]
        rel = abs(mags[0] - mags[1]) / max(mags)
        # heading is azimuth 0, so mirrored bearings sum to 0 (mod 360)
        mirror = abs(((a1 + a2 + 180) % 360) - 180)
        ok &= rel <= 0.05 and mirror <= 2.0
        details.append(f"seed {seed}: {a1:+.0f}/{a2:+.0f} deg, diff {rel:.3f}")
    report(2, ok, f"2 dominant peaks, magnitudes within 5%, mirrored within 2 deg in all {N_REPS} seeds; " + "; ".join(details[:3]) + " ...")
    assert ok


def _stationary_h2(cfo, noise, seed=0):
    cfg = replace(PRESETS["paper-stationary-10s"], cfo=cfo, noise=noise)
    rec = simulate(cfg, seed=seed)
    pairs, _ = pair_packets(rec.packets_i, rec.packets_j, noise.epsilon_t)
    h2 = interpolate_center_batch(np.stack([p.h_squared for p in pairs]))
    skew_s = np.array([(p.t_bwd_ns - p.t_fwd_ns) / 1e9 for p in pairs])
    t_s = np.array([p.t_fwd_ns / 1e9 for p in pairs])
    return h2, t_s, skew_s


def test_c3_cfo_cancellation(report):
    rng = np.random.default_rng(17)
    models = [CfoModel(10.0, 1e4, 200.0)] + [
        CfoModel(rng.uniform(-100, 100), rng.uniform(-2e4, 2e4), rng.uniform(0, 500)) for _ in range(20)
    ]
    worst_const = 0.0
    for cfo in models:
        h2, _, _ = _stationary_h2(cfo, NoiseConfig.off())
        assert len(h2) == 1001
        worst_const = max(worst_const, float(np.max(np.abs(np.angle(h2 * np.conj(h2[0]))))))

    skewed = NoiseConfig(snr_db=None, sto_mean=0.0, epsilon_t=100e-9)
    ratios = []
    for cfo in models:
        h2, t_s, _ = _stationary_h2(cfo, skewed, seed=1)
        ideal = _stationary_h2(cfo, NoiseConfig.off())[0][0]
        resid = np.angle(h2 * np.conj(ideal))
        bound = float(np.max(np.abs(2 * np.pi * cfo.rate(t_s)))) * skewed.epsilon_t
        ratios.append(resid.std() / bound if bound > 0 else 0.0)
    ok = worst_const <= 1e-9 and max(ratios) <= 1.0
    report(
        3,
        ok,
        f"noise-off phase spread {worst_const:.2e} rad over {len(models)} CFO models (<= 1e-9); "
        f"with 100 ns skew, phase std / analytic bound <= {max(ratios):.3f} (<= 1)",
    )
    assert ok


def test_c4_sampling_density(report):
    spacings = {}
    for name in ("paper-circular", "paper-linear"):
        rec = simulate(PRESETS[name], seed=0)
        spacings[name] = rec.metrics["mean_spacing_m"]
    coarse = replace(PRESETS["paper-circular"], traj_i=replace(PRESETS["paper-circular"].traj_i, sample_rate=5.0),
                     traj_j=replace(PRESETS["paper-circular"].traj_j, sample_rate=5.0))
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        rec = simulate(coarse, seed=0)
        estimate(rec, grid=AngleGrid.horizontal(2.0))
    warned = any(issubclass(w.category, SamplingWarning) for w in caught)
    ok = all(abs(s - 0.0019) <= 1e-4 for s in spacings.values()) and warned
    report(
        4,
        ok,
        ", ".join(f"{k} spacing {v:.5f} m" for k, v in spacings.items())
        + f" (0.0019 +/- 0.0001); warning at {rec.metrics['max_spacing_m']:.4f} m > lambda/2: {warned}",
    )
    assert ok


def test_c5_oracle_equivalence(report):
    rng = np.random.default_rng(5)
    pos = circle_positions(50, z_wobble=0.02)
    h2 = squared_channel(pos, np.array([3.858, 0.929, 0.2])) * np.exp(1j * rng.normal(0, 0.2, 50))
    grid = AngleGrid(azimuth_step=10, polar_step=10)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        prod = bartlett_from_arrays(h2, pos, grid, WL).magnitude
    ref = brute_force_profile(h2, pos, grid.azimuths_deg, grid.polars_deg, WL)
    rel = float(np.max(np.abs(prod - ref) / ref))
    ok = rel <= 1e-6
    report(5, ok, f"max entrywise relative deviation from brute-force sum {rel:.2e} (<= 1e-6)")
    assert ok


def test_c6_property_suites(report, tmp_path_factory):
    import test_channel
    import test_estimator

    results = {}

    def check(name, fn):
        try:
            fn()
            results[name] = True
        except AssertionError:
            results[name] = False

    check("steering unit magnitude", test_estimator.test_steering_unit_magnitude)
    check("global-phase argmax invariance", test_estimator.test_argmax_invariant_under_global_phase)
    check("scale equivariance", test_estimator.test_global_phase_and_scale)
    check("reciprocity over 150 CFO models", test_channel.test_reciprocity_cancels_any_cfo)

    @settings(max_examples=10, deadline=None)
    @given(st.integers(0, 2**32), st.floats(0.0, 0.5))
    def round_trip(seed, loss):
        cfg = replace(PRESETS["paper-circular"], loss_rate=loss)
        a = simulate(cfg, seed=seed)
        out = tmp_path_factory.mktemp("rt")
        write_dataset(a, out)
        b = read_dataset(out)
        assert b.packets_i == a.packets_i and b.packets_j == a.packets_j and b.odometry_i == a.odometry_i
        # determinism: a second simulation with the same seed is identical
        c = simulate(cfg, seed=seed)
        assert c.packets_i == a.packets_i and c.packets_j == a.packets_j

    check("dataset round trip and determinism", round_trip)
    ok = all(results.values())
    report(6, ok, ", ".join(f"{k}: {'ok' if v else 'FAILED'}" for k, v in results.items()))
    assert ok


def test_c7_compare_workflow(report, tmp_path, capsys):
    base = replace(PRESETS["paper-circular"], estimator=replace(PRESETS["paper-circular"].estimator, azimuth_step=2.0, polar_step=2.0))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        rec = simulate(base, seed=0)
        rec.profile, _ = estimate(rec)
    write_dataset(rec, tmp_path / "external")
    capsys.readouterr()
    code = main(["compare", str(tmp_path / "external"), str(tmp_path / "external")])
    out = capsys.readouterr().out
    same = json.loads(out) if code == 0 else {}
    ok = code == 0 and same.get("max_relative_difference") == 0.0
    report(
        7,
        ok,
        "measured-data comparison needs the original hardware and is not reproduced; "
        f"compare workflow on a canonical-format dataset exits {code} with zero self-difference",
    )
    assert ok
