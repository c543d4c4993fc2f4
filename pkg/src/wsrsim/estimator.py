"""Bartlett angle-of-arrival estimation over a motion-generated array.

Directions are parameterised by azimuth (counter-clockwise from the
receiver's initial heading) and polar angle measured from +z, so 90 deg
polar is the horizontal plane. Profiles are stored azimuth-major: row ``a``
and column ``p`` of :attr:`AoaProfile.magnitude` correspond to
``grid.azimuths_deg[a]`` and ``grid.polars_deg[p]``.
"""

from __future__ import annotations

import math
import os
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ValidationError
from .exchange import CsiPair, interpolate_center_batch
from .trajectory import Pose, SphericalDisplacement, nearest_pose_indices, to_body_frame, wrap_angle

from . import _bartlett_py

try:
    from . import _bartlett as _compiled
except ImportError:  # extension not built
    _compiled = None

_KERNELS = {"numpy": _bartlett_py.bartlett_power}
if _compiled is not None:
    _KERNELS["cython"] = _compiled.bartlett_power

if os.environ.get("WSRSIM_PURE_PYTHON") or _compiled is None:
    BACKEND = "numpy"
else:
    BACKEND = "cython"


def get_kernel(name: str | None = None):
    """Return the Bartlett kernel ``name`` ("cython" or "numpy"), default the active one."""
    name = name or BACKEND
    try:
        return _KERNELS[name]
    except KeyError:
        raise ValidationError(f"kernel {name!r} unavailable; have {sorted(_KERNELS)}") from None


class EstimationWarning(UserWarning):
    pass


class SamplingWarning(EstimationWarning):
    """Consecutive array elements further apart than half a wavelength."""


class ApertureWarning(EstimationWarning):
    """Trajectory too short to form a useful virtual array."""


@dataclass(frozen=True)
class AngleGrid:
    """Candidate arrival directions in degrees.

    Azimuth covers [-180, 180) and polar [0, 180] at the given steps.
    ``polar_fixed`` collapses the polar axis to a single angle.
    """

    azimuth_step: float = 1.0
    polar_step: float = 1.0
    polar_fixed: float | None = None

    def validate(self, path: str = "grid") -> None:
        for name, span in (("azimuth_step", 360.0), ("polar_step", 180.0)):
            step = getattr(self, name)
            if not (step > 0 and math.isfinite(step)):
                raise ValidationError("step must be > 0", f"{path}.{name}")
            n = span / step
            if abs(n - round(n)) > 1e-9 or round(n) < 1:
                raise ValidationError(f"step {step} does not divide {span:g} evenly", f"{path}.{name}")
        if self.polar_fixed is not None and not 0.0 <= self.polar_fixed <= 180.0:
            raise ValidationError("polar_fixed must lie in [0, 180]", f"{path}.polar_fixed")

    @classmethod
    def horizontal(cls, azimuth_step: float = 1.0) -> "AngleGrid":
        return cls(azimuth_step=azimuth_step, polar_fixed=90.0)

    @property
    def azimuths_deg(self) -> np.ndarray:
        n = int(round(360.0 / self.azimuth_step))
        return -180.0 + self.azimuth_step * np.arange(n)

    @property
    def polars_deg(self) -> np.ndarray:
        if self.polar_fixed is not None:
            return np.array([float(self.polar_fixed)])
        n = int(round(180.0 / self.polar_step))
        return self.polar_step * np.arange(n + 1)

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.azimuths_deg), len(self.polars_deg)

    def directions(self) -> np.ndarray:
        """Unit vectors for every cell, (n_az * n_polar, 3), azimuth-major."""
        az = np.deg2rad(self.azimuths_deg)[:, None]
        po = np.deg2rad(self.polars_deg)[None, :]
        u = np.stack(
            np.broadcast_arrays(np.sin(po) * np.cos(az), np.sin(po) * np.sin(az), np.cos(po)),
            axis=-1,
        )
        return u.reshape(-1, 3)


@dataclass(frozen=True)
class Peak:
    azimuth_deg: float
    polar_deg: float
    magnitude: float
    index: tuple[int, int]


@dataclass(eq=False)
class AoaProfile:
    magnitude: np.ndarray
    grid: AngleGrid
    n_samples: int = 0
    total_displacement_m: float = 0.0
    secondary_peaks: list[Peak] = field(default_factory=list)

    def __post_init__(self):
        self.magnitude = np.asarray(self.magnitude, dtype=float)
        if self.magnitude.shape != self.grid.shape:
            raise ValidationError(f"profile shape {self.magnitude.shape} does not match grid {self.grid.shape}")

    def __eq__(self, other):
        if not isinstance(other, AoaProfile):
            return NotImplemented
        return (
            self.grid == other.grid
            and self.n_samples == other.n_samples
            and self.total_displacement_m == other.total_displacement_m
            and np.array_equal(self.magnitude, other.magnitude)
        )

    @property
    def peak(self) -> Peak:
        # np.argmax returns the first maximum in row-major order
        flat = int(np.argmax(self.magnitude))
        a, p = divmod(flat, self.magnitude.shape[1])
        return Peak(
            float(self.grid.azimuths_deg[a]), float(self.grid.polars_deg[p]), float(self.magnitude[a, p]), (a, p)
        )

    @property
    def confidence(self) -> float:
        total = float(self.magnitude.sum())
        return self.peak.magnitude / total if total > 0 else 0.0

    @property
    def peak_ratio(self) -> float:
        """Main peak over the strongest other local maximum."""
        peaks = extract_peaks(self, 2)
        if len(peaks) < 2 or peaks[1].magnitude == 0:
            return math.inf
        return peaks[0].magnitude / peaks[1].magnitude

    def summary(self) -> dict:
        pk = self.peak
        return {
            "peak_azimuth_deg": pk.azimuth_deg,
            "peak_polar_deg": pk.polar_deg,
            "confidence": self.confidence,
            "n_samples": self.n_samples,
            "total_displacement_m": self.total_displacement_m,
        }


def steering_phase(disp: SphericalDisplacement, polar: float, azimuth: float, wavelength: float) -> complex:
    """Steering weight for one array element and one candidate direction.

    Angles in radians. The exponent is ``-2 pi (d / lambda) cos(gamma)``
    with gamma the angle between the displacement and the candidate.
    """
    cos_gamma = math.sin(polar) * math.sin(disp.xi_disp) * math.cos(azimuth - disp.phi_disp) + math.cos(
        disp.xi_disp
    ) * math.cos(polar)
    cycles = disp.d / wavelength * cos_gamma
    cycles -= math.floor(cycles)
    return complex(math.cos(2 * math.pi * cycles), -math.sin(2 * math.pi * cycles))


def steering_grid(displacements: np.ndarray, grid: AngleGrid, wavelength: float) -> np.ndarray:
    """Steering weights (T, n_az, n_polar) for Cartesian offsets (T, 3).

    Materialises the full tensor; intended for inspection on small grids.
    """
    u = grid.directions()
    cycles = (np.asarray(displacements, dtype=float) / wavelength) @ u.T
    cycles -= np.floor(cycles)
    return np.exp(-2j * np.pi * cycles).reshape(len(displacements), *grid.shape)


def check_sampling(positions: np.ndarray, wavelength: float) -> dict:
    """Spacing and extent diagnostics; warns on undersampled or short arrays."""
    positions = np.asarray(positions, dtype=float)
    steps = np.linalg.norm(np.diff(positions, axis=0), axis=1) if len(positions) > 1 else np.zeros(0)
    extent = float(np.linalg.norm(positions - positions[0], axis=1).max()) if len(positions) else 0.0
    info = {
        "max_spacing_m": float(steps.max()) if steps.size else 0.0,
        "mean_spacing_m": float(steps.mean()) if steps.size else 0.0,
        "path_length_m": float(steps.sum()),
        "extent_m": extent,
    }
    if steps.size and info["max_spacing_m"] > wavelength / 2:
        warnings.warn(
            f"sample spacing {info['max_spacing_m']:.4f} m exceeds lambda/2 = {wavelength / 2:.4f} m",
            SamplingWarning,
            stacklevel=3,
        )
    if extent < 2 * wavelength:
        warnings.warn(
            f"trajectory extent {extent:.4f} m is below 2 lambda = {2 * wavelength:.4f} m",
            ApertureWarning,
            stacklevel=3,
        )
    return info


def is_coplanar(positions: np.ndarray, tol: float = 1e-9) -> bool:
    z = np.asarray(positions)[:, 2]
    return bool(np.ptp(z) <= tol) if len(z) else True


def bartlett_from_arrays(
    h_squared,
    positions,
    grid: AngleGrid,
    wavelength: float,
    heading: float = 0.0,
    steering_power: int = 2,
    kernel: str | None = None,
) -> AoaProfile:
    """Bartlett profile from per-sample channel products and positions.

    ``positions`` are world-frame (T, 3); offsets are taken from the first
    sample and rotated into the frame whose x axis is ``heading``.
    """
    h = np.asarray(h_squared, dtype=complex).ravel()
    pos = np.asarray(positions, dtype=float)
    if h.size == 0:
        raise ValidationError("no samples to estimate from")
    if pos.shape != (h.size, 3):
        raise ValidationError(f"positions shape {pos.shape} does not match {h.size} samples")
    if not wavelength > 0:
        raise ValidationError("wavelength must be > 0")
    if steering_power not in (1, 2):
        raise ValidationError("steering_power must be 1 or 2", "steering_power")
    grid.validate()
    info = check_sampling(pos, wavelength)
    disp = to_body_frame(pos - pos[0], heading) / wavelength
    power = get_kernel(kernel)(h, disp, grid.directions(), steering_power)
    profile = AoaProfile(
        power.reshape(grid.shape), grid, n_samples=int(h.size), total_displacement_m=info["path_length_m"]
    )
    profile.secondary_peaks = extract_peaks(profile, 5)[1:]
    return profile


def bartlett_profile(
    pairs: Sequence[CsiPair],
    grid: AngleGrid,
    wavelength: float,
    odometry: Sequence[Pose] | None = None,
    steering_power: int = 2,
    subcarriers: tuple[int, int, float] = (12, 19, 15.5),
    fast_2d: bool = False,
    kernel: str | None = None,
) -> AoaProfile:
    """AoA profile from CFO-cancelled pairs.

    Each pair's per-subcarrier product is interpolated to the centre
    subcarrier. Poses come from ``pair.rx_pose`` or, when ``odometry`` is
    given, from the odometry sample nearest each forward timestamp. With
    ``fast_2d`` and a coplanar trajectory only the horizontal plane is
    evaluated.
    """
    if len(pairs) == 0:
        raise ValidationError("no pairs to estimate from")
    if odometry is not None:
        if len(odometry) == 0:
            raise ValidationError("odometry stream is empty")
        times = np.array([p.t for p in odometry], dtype=np.int64)
        slack = int(np.diff(times).max()) if len(times) > 1 else 0
        t_pairs = np.array([p.t_fwd_ns for p in pairs], dtype=np.int64)
        if t_pairs.min() < times[0] - slack or t_pairs.max() > times[-1] + slack:
            raise ValidationError("pair timestamps fall outside the odometry time range")
        idx = nearest_pose_indices(odometry, t_pairs)
        poses = [odometry[int(k)] for k in idx]
    else:
        if any(p.rx_pose is None for p in pairs):
            raise ValidationError("pairs carry no pose; pass odometry")
        poses = [p.rx_pose for p in pairs]

    h2 = interpolate_center_batch(np.stack([p.h_squared for p in pairs]), *subcarriers)
    positions = np.array([(p.x, p.y, p.z) for p in poses])
    if fast_2d and grid.polar_fixed is None and is_coplanar(positions):
        grid = AngleGrid.horizontal(grid.azimuth_step)
    return bartlett_from_arrays(
        h2, positions, grid, wavelength, heading=poses[0].yaw, steering_power=steering_power, kernel=kernel
    )


def extract_peaks(profile: AoaProfile, count: int) -> list[Peak]:
    """Local maxima sorted by magnitude, strongest first.

    A cell is a peak when it is >= all 8 neighbours and strictly greater
    than the neighbours that precede it in row-major order, which keeps
    one representative per plateau. Azimuth wraps; polar does not.
    """
    if count < 1:
        raise ValidationError("count must be >= 1")
    F = profile.magnitude
    n_az, n_po = F.shape
    lin = np.arange(F.size).reshape(F.shape)
    is_peak = np.ones(F.shape, dtype=bool)
    pad_f = np.pad(F, ((0, 0), (1, 1)), constant_values=-np.inf)
    pad_i = np.pad(lin, ((0, 0), (1, 1)), constant_values=-1)
    for da in (-1, 0, 1):
        for dp in (-1, 0, 1):
            if da == 0 and dp == 0:
                continue
            if da != 0 and n_az == 1:
                continue
            nf = np.roll(pad_f, -da, axis=0)[:, 1 + dp : 1 + dp + n_po]
            ni = np.roll(pad_i, -da, axis=0)[:, 1 + dp : 1 + dp + n_po]
            # with n_az == 2 both azimuth shifts hit the same cell; harmless
            earlier = (ni >= 0) & (ni < lin)
            is_peak &= np.where(earlier, F > nf, F >= nf)
    cells = np.flatnonzero(is_peak)
    # stable sort keeps lower linear index first among equal magnitudes
    order = cells[np.argsort(-F.ravel()[cells], kind="stable")][:count]
    az, po = profile.grid.azimuths_deg, profile.grid.polars_deg
    out = []
    for flat in order:
        a, p = divmod(int(flat), n_po)
        out.append(Peak(float(az[a]), float(po[p]), float(F[a, p]), (a, p)))
    return out


def dominant_peaks(
    profile: AoaProfile, rel_threshold: float = 0.95, min_separation_deg: float = 5.0
) -> list[Peak]:
    """Distinct lobes whose peak reaches ``rel_threshold`` of the maximum.

    Local maxima closer than ``min_separation_deg`` (in both azimuth and
    polar) to a stronger accepted peak belong to the same lobe; near-field
    curvature splits a main lobe into ripples a few degrees apart.
    """
    peaks = extract_peaks(profile, profile.magnitude.size)
    top = peaks[0].magnitude
    accepted: list[Peak] = []
    for p in peaks:
        if p.magnitude < rel_threshold * top:
            break
        if all(
            max(azimuth_error_deg(p.azimuth_deg, q.azimuth_deg), abs(p.polar_deg - q.polar_deg))
            > min_separation_deg
            for q in accepted
        ):
            accepted.append(p)
    return accepted


def azimuth_error_deg(estimate_deg: float, truth_deg: float) -> float:
    """Shortest-arc absolute difference in degrees, within [0, 180]."""
    return abs(math.degrees(wrap_angle(math.radians(estimate_deg - truth_deg))))
