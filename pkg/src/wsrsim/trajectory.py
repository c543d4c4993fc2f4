"""Robot trajectories, odometry streams and displacement geometry."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import DatasetError, ValidationError

NS_PER_S = 1_000_000_000
ODOMETRY_HEADER = ("t_ns", "x", "y", "z", "yaw")
TRAJECTORY_KINDS = ("stationary", "circular", "linear", "waypoints")


def wrap_angle(angle):
    """Wrap radians to [-pi, pi)."""
    # values already in range pass through untouched so they stay bit-exact
    if np.ndim(angle):
        a = np.asarray(angle, dtype=float)
        return np.where((a >= -np.pi) & (a < np.pi), a, (a + np.pi) % (2 * np.pi) - np.pi)
    a = float(angle)
    if -math.pi <= a < math.pi:
        return a
    return (a + math.pi) % (2 * math.pi) - math.pi


@dataclass(frozen=True)
class Pose:
    """Timestamped position (metres, world frame) and heading (radians)."""

    t: int
    x: float
    y: float
    z: float = 0.0
    yaw: float = 0.0

    @property
    def position(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])


@dataclass(frozen=True)
class SphericalDisplacement:
    d: float
    phi_disp: float
    xi_disp: float

    def to_cartesian(self) -> np.ndarray:
        s = math.sin(self.xi_disp)
        return self.d * np.array(
            [s * math.cos(self.phi_disp), s * math.sin(self.phi_disp), math.cos(self.xi_disp)]
        )


@dataclass(frozen=True)
class TrajectorySpec:
    """Parameters of one node's motion.

    ``waypoints`` is only read for ``kind="waypoints"``; the path starts at
    the start pose and visits each (x, y, z) in order at constant speed.
    """

    kind: str = "stationary"
    start: Pose = field(default_factory=lambda: Pose(0, 0.0, 0.0))
    radius: float = 0.3
    length: float = 2 * math.pi * 0.3
    duration: float = 10.0
    sample_rate: float = 100.0
    waypoints: tuple[tuple[float, float, float], ...] = ()

    def validate(self, path: str = "trajectory") -> None:
        if self.kind not in TRAJECTORY_KINDS:
            raise ValidationError(f"unknown kind {self.kind!r}, expected one of {TRAJECTORY_KINDS}", f"{path}.kind")
        if not (self.duration > 0 and math.isfinite(self.duration)):
            raise ValidationError(f"duration must be > 0, got {self.duration}", f"{path}.duration")
        if not (self.sample_rate > 0 and math.isfinite(self.sample_rate)):
            raise ValidationError(f"sample_rate must be > 0, got {self.sample_rate}", f"{path}.sample_rate")
        if self.kind == "circular" and not self.radius > 0:
            raise ValidationError(f"radius must be > 0, got {self.radius}", f"{path}.radius")
        if self.kind == "linear" and not self.length > 0:
            raise ValidationError(f"length must be > 0, got {self.length}", f"{path}.length")
        if self.kind == "waypoints" and not self.waypoints:
            raise ValidationError("at least one waypoint required", f"{path}.waypoints")
        if self.start.t < 0:
            raise ValidationError("start time must be non-negative", f"{path}.start.t")

    @property
    def n_samples(self) -> int:
        # small epsilon guards against 10.0 * 100.0 landing on 999.9999
        return int(math.floor(self.duration * self.sample_rate + 1e-9)) + 1


def sample_times_ns(spec: TrajectorySpec) -> np.ndarray:
    k = np.arange(spec.n_samples, dtype=np.int64)
    return spec.start.t + np.round(k * (NS_PER_S / spec.sample_rate)).astype(np.int64)


def generate_trajectory(spec: TrajectorySpec) -> list[Pose]:
    """Sample the trajectory described by ``spec`` at its nominal rate.

    Circles are traversed once counter-clockwise over ``duration`` with
    the centre ``radius`` metres to the left of the initial heading; lines
    run along the initial heading. Returns ``n_samples`` poses.
    """
    spec.validate()
    t_ns = sample_times_ns(spec)
    tau = (t_ns - spec.start.t) / NS_PER_S
    s0 = spec.start
    n = len(t_ns)

    if spec.kind == "stationary":
        xyz = np.tile([s0.x, s0.y, s0.z], (n, 1))
        yaw = np.full(n, s0.yaw)
    elif spec.kind == "circular":
        cx = s0.x - spec.radius * math.sin(s0.yaw)
        cy = s0.y + spec.radius * math.cos(s0.yaw)
        heading = s0.yaw + 2 * math.pi * tau / spec.duration
        xyz = np.column_stack(
            [
                cx + spec.radius * np.sin(heading),
                cy - spec.radius * np.cos(heading),
                np.full(n, s0.z),
            ]
        )
        yaw = heading
    elif spec.kind == "linear":
        s = spec.length * tau / spec.duration
        xyz = np.column_stack(
            [s0.x + s * math.cos(s0.yaw), s0.y + s * math.sin(s0.yaw), np.full(n, s0.z)]
        )
        yaw = np.full(n, s0.yaw)
    else:
        xyz, yaw = _waypoint_path(spec, tau)

    yaw = wrap_angle(np.asarray(yaw, dtype=float))
    return [
        Pose(int(t), float(p[0]), float(p[1]), float(p[2]), float(h))
        for t, p, h in zip(t_ns, xyz, yaw)
    ]


def _waypoint_path(spec: TrajectorySpec, tau: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    s0 = spec.start
    vertices = np.vstack([[s0.x, s0.y, s0.z], np.asarray(spec.waypoints, dtype=float)])
    seg = np.diff(vertices, axis=0)
    seg_len = np.linalg.norm(seg, axis=1)
    cum = np.concatenate([[0.0], np.cumsum(seg_len)])
    total = cum[-1]
    if total == 0:
        return np.tile(vertices[0], (len(tau), 1)), np.full(len(tau), s0.yaw)
    s = total * tau / spec.duration
    xyz = np.column_stack([np.interp(s, cum, vertices[:, k]) for k in range(3)])
    headings = np.where(seg_len > 0, np.arctan2(seg[:, 1], seg[:, 0]), np.nan)
    # zero-length segments inherit the previous heading
    last = s0.yaw
    for k in range(len(headings)):
        if np.isnan(headings[k]):
            headings[k] = last
        last = headings[k]
    idx = np.clip(np.searchsorted(cum, s, side="right") - 1, 0, len(headings) - 1)
    return xyz, headings[idx]


def add_odometry_noise(poses: Sequence[Pose], std: float, rng: np.random.Generator) -> list[Pose]:
    """Additive Gaussian position noise on x and y; heading and z untouched."""
    if std <= 0:
        return list(poses)
    noise = rng.normal(0.0, std, size=(len(poses), 2))
    return [replace(p, x=p.x + float(e[0]), y=p.y + float(e[1])) for p, e in zip(poses, noise)]


def poses_to_array(poses: Sequence[Pose]) -> np.ndarray:
    """(N, 5) float array of t_ns, x, y, z, yaw."""
    if not poses:
        return np.empty((0, 5))
    return np.array([(p.t, p.x, p.y, p.z, p.yaw) for p in poses], dtype=float)


def interpolate_positions(poses: Sequence[Pose], t_ns) -> np.ndarray:
    """Linearly interpolated (x, y, z) at arbitrary times, clamped at the ends."""
    arr = poses_to_array(poses)
    t = np.asarray(t_ns, dtype=float)
    return np.stack([np.interp(t, arr[:, 0], arr[:, k]) for k in (1, 2, 3)], axis=-1)


def nearest_pose_indices(poses: Sequence[Pose], t_ns) -> np.ndarray:
    times = np.array([p.t for p in poses], dtype=np.int64)
    t = np.asarray(t_ns, dtype=np.int64)
    right = np.clip(np.searchsorted(times, t), 1, len(times) - 1)
    left = right - 1
    choose_right = np.abs(times[right] - t) < np.abs(t - times[left])
    return np.where(choose_right, right, left)


def displacement_spherical(p0: Pose, p: Pose) -> SphericalDisplacement:
    dx, dy, dz = p.x - p0.x, p.y - p0.y, p.z - p0.z
    d = math.sqrt(dx * dx + dy * dy + dz * dz)
    if d == 0.0:
        return SphericalDisplacement(0.0, 0.0, 0.0)
    xi = math.atan2(math.hypot(dx, dy), dz)
    return SphericalDisplacement(d, wrap_angle(math.atan2(dy, dx)), xi)


def displacements_spherical(delta: np.ndarray) -> np.ndarray:
    """Vectorised form: (N, 3) Cartesian offsets to (N, 3) of d, phi, xi."""
    delta = np.asarray(delta, dtype=float)
    d = np.linalg.norm(delta, axis=1)
    phi = np.where(d > 0, wrap_angle(np.arctan2(delta[:, 1], delta[:, 0])), 0.0)
    xi = np.where(d > 0, np.arctan2(np.hypot(delta[:, 0], delta[:, 1]), delta[:, 2]), 0.0)
    return np.column_stack([d, phi, xi])


def to_body_frame(delta: np.ndarray, yaw: float) -> np.ndarray:
    """Rotate world-frame offsets (N, 3) by -yaw about z."""
    c, s = math.cos(yaw), math.sin(yaw)
    out = np.array(delta, dtype=float, copy=True)
    out[:, 0] = c * delta[:, 0] + s * delta[:, 1]
    out[:, 1] = -s * delta[:, 0] + c * delta[:, 1]
    return out


def ground_truth_bearing(rx_start: Pose, tx: Pose) -> float:
    """Azimuth of ``tx`` seen from ``rx_start`` in the receiver's frame, in [-pi, pi)."""
    dx, dy = tx.x - rx_start.x, tx.y - rx_start.y
    if dx == 0.0 and dy == 0.0:
        raise ValidationError("receiver and transmitter are co-located")
    c, s = math.cos(rx_start.yaw), math.sin(rx_start.yaw)
    return wrap_angle(math.atan2(-s * dx + c * dy, c * dx + s * dy))


def centroid_pose(poses: Sequence[Pose]) -> Pose:
    """Mean position of a stream, carrying the first pose's time and heading."""
    arr = poses_to_array(poses)
    x, y, z = arr[:, 1:4].mean(axis=0)
    return Pose(poses[0].t, float(x), float(y), float(z), poses[0].yaw)


def sample_spacing(poses: Sequence[Pose]) -> np.ndarray:
    """Euclidean distance between consecutive samples."""
    arr = poses_to_array(poses)
    return np.linalg.norm(np.diff(arr[:, 1:4], axis=0), axis=1)


def path_length(poses: Sequence[Pose]) -> float:
    return float(sample_spacing(poses).sum()) if len(poses) > 1 else 0.0


def write_odometry_csv(poses: Iterable[Pose], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(ODOMETRY_HEADER)
        for p in poses:
            w.writerow([p.t, repr(p.x), repr(p.y), repr(p.z), repr(p.yaw)])


def read_odometry_csv(path: str | Path) -> list[Pose]:
    """Load and validate an odometry CSV; errors name the offending row."""
    name = str(path)
    poses: list[Pose] = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != ODOMETRY_HEADER:
            raise DatasetError(f"expected header {','.join(ODOMETRY_HEADER)}, got {header}", name)
        for row_no, row in enumerate(reader, start=1):
            if len(row) != 5:
                raise DatasetError(f"expected 5 fields, got {len(row)}", name, row_no)
            try:
                pose = Pose(int(row[0]), float(row[1]), float(row[2]), float(row[3]), float(row[4]))
            except ValueError as exc:
                raise DatasetError(str(exc), name, row_no) from None
            if pose.t < 0:
                raise DatasetError("negative timestamp", name, row_no)
            if poses and pose.t <= poses[-1].t:
                raise DatasetError("timestamps must be strictly increasing", name, row_no)
            if not all(math.isfinite(v) for v in (pose.x, pose.y, pose.z, pose.yaw)):
                raise DatasetError("non-finite value", name, row_no)
            poses.append(pose)
    return poses
