"""End-to-end scenario execution shared by the CLI and the tests."""

from __future__ import annotations

import math
import time
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np

from .config import ScenarioConfig
from .datastore import ExperimentRecord
from .errors import ValidationError
from .estimator import (
    AngleGrid,
    AoaProfile,
    EstimationWarning,
    SamplingWarning,
    azimuth_error_deg,
    bartlett_profile,
    dominant_peaks,
)
from .exchange import pair_packets, run_exchange
from .trajectory import add_odometry_noise, centroid_pose, generate_trajectory, ground_truth_bearing, sample_spacing


@dataclass
class RunSummary:
    scenario: str
    seed: int
    ground_truth_azimuth_deg: float
    estimated_azimuth_deg: float
    estimated_polar_deg: float
    azimuth_error_deg: float
    confidence: float
    peak_ratio: float
    pair_count: int
    discard_count: int
    runtime_s: float
    dominant_peaks: list[tuple[float, float]] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["dominant_peaks"] = [list(p) for p in self.dominant_peaks]
        if math.isinf(d["peak_ratio"]):
            d["peak_ratio"] = None
        return d


def simulate(config: ScenarioConfig, seed: int | None = None) -> ExperimentRecord:
    """Generate trajectories and packet streams for one repetition.

    A single generator seeded from the config drives every random draw,
    so identical (config, seed) pairs give identical records.
    """
    if seed is not None:
        config = config.with_seed(seed)
    config.validate()
    rng = np.random.default_rng(config.rng_seed)
    traj_i = generate_trajectory(config.traj_i)
    traj_j = generate_trajectory(config.traj_j)
    packets_i, packets_j = run_exchange(
        traj_i, traj_j, config.carrier, config.cfo, config.effective_noise,
        loss_rate=config.loss_rate, rng=rng, mac_i=config.mac_i, mac_j=config.mac_j,
    )
    odometry_i = add_odometry_noise(traj_i, config.odometry_noise_std, rng)
    spacing = sample_spacing(odometry_i)
    half_wl = config.carrier.wavelength / 2
    metrics = {
        "mean_spacing_m": float(spacing.mean()) if spacing.size else 0.0,
        "max_spacing_m": float(spacing.max()) if spacing.size else 0.0,
        "half_wavelength_m": half_wl,
    }
    if spacing.size and spacing.max() > half_wl:
        warnings.warn(
            f"sample spacing {spacing.max():.4f} m exceeds lambda/2 = {half_wl:.4f} m", SamplingWarning, stacklevel=2
        )
    return ExperimentRecord(config, odometry_i, traj_j, packets_i, packets_j, metrics=metrics)


def estimate(
    record: ExperimentRecord,
    grid: AngleGrid | None = None,
    steering_power: int | None = None,
    fast_2d: bool | None = None,
) -> tuple[AoaProfile, RunSummary]:
    """Pair packets, build the AoA profile and score it against ground truth.

    Ground truth is the bearing from the centroid of the receiver's
    trajectory to the transmitter's first pose, in the receiver's
    initial heading frame.
    """
    cfg = record.config
    est = cfg.estimator
    grid = grid or est.grid
    t0 = time.perf_counter()
    pairs, stats = pair_packets(record.packets_i, record.packets_j, cfg.noise.epsilon_t, record.odometry_i)
    if not pairs:
        raise ValidationError("dataset has no matching forward/backward packets")
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", EstimationWarning)
        profile = bartlett_profile(
            pairs,
            grid,
            cfg.carrier.wavelength,
            steering_power=steering_power or est.steering_power,
            subcarriers=est.subcarriers,
            fast_2d=est.fast_2d if fast_2d is None else fast_2d,
        )
    messages = [str(w.message) for w in caught if issubclass(w.category, EstimationWarning)]
    for w in caught:
        warnings.warn_explicit(w.message, w.category, w.filename, w.lineno)
    runtime = time.perf_counter() - t0

    truth = math.degrees(ground_truth_bearing(centroid_pose(record.odometry_i), record.odometry_j[0]))
    peak = profile.peak
    summary = RunSummary(
        scenario=cfg.name,
        seed=cfg.rng_seed,
        ground_truth_azimuth_deg=truth,
        estimated_azimuth_deg=peak.azimuth_deg,
        estimated_polar_deg=peak.polar_deg,
        azimuth_error_deg=azimuth_error_deg(peak.azimuth_deg, truth),
        confidence=profile.confidence,
        peak_ratio=profile.peak_ratio,
        pair_count=stats.n_pairs,
        discard_count=stats.n_discarded,
        runtime_s=runtime,
        dominant_peaks=[(p.azimuth_deg, p.polar_deg) for p in dominant_peaks(profile)],
        warnings=messages,
    )
    return profile, summary


def aggregate(summaries: list[RunSummary]) -> dict:
    errors = np.array([s.azimuth_error_deg for s in summaries])
    return {
        "repetitions": len(summaries),
        "mean_azimuth_error_deg": float(errors.mean()),
        "std_azimuth_error_deg": float(errors.std()),
        "max_azimuth_error_deg": float(errors.max()),
        "mean_runtime_s": float(np.mean([s.runtime_s for s in summaries])),
    }


def compare_profiles(a: AoaProfile, b: AoaProfile) -> dict:
    """Entrywise divergence and peak shift between two profiles on one grid.

    Differences are taken after scaling each profile to unit peak, so two
    runs that differ only in received power compare equal.
    """
    if a.grid != b.grid:
        raise ValidationError(f"profiles use different grids: {a.grid} vs {b.grid}")
    na = a.magnitude / a.magnitude.max() if a.magnitude.max() > 0 else a.magnitude
    nb = b.magnitude / b.magnitude.max() if b.magnitude.max() > 0 else b.magnitude
    diff = np.abs(na - nb)
    pa, pb = a.peak, b.peak
    n_az = a.grid.shape[0]
    d_az = abs(pa.index[0] - pb.index[0])
    d_az = min(d_az, n_az - d_az)
    d_po = abs(pa.index[1] - pb.index[1])
    return {
        "max_relative_difference": float(diff.max()),
        "mean_relative_difference": float(diff.mean()),
        "peak_a": [pa.azimuth_deg, pa.polar_deg],
        "peak_b": [pb.azimuth_deg, pb.polar_deg],
        "peak_shift_azimuth_steps": int(d_az),
        "peak_shift_polar_steps": int(d_po),
        "peak_displacement_steps": int(max(d_az, d_po)),
    }
