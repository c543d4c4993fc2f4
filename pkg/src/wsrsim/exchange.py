"""Two-node forward/backward packet exchange and frame-based pairing."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .channel import NS_PER_S, CarrierConfig, CfoModel, NoiseConfig, cancel_cfo, jittered_timestamps, perturbed_csi_arrays
from .errors import DatasetError, ValidationError
from .trajectory import Pose, interpolate_positions, nearest_pose_indices

FORWARD = "fwd"
BACKWARD = "bwd"
DEFAULT_MAC_I = "02:00:00:00:00:01"
DEFAULT_MAC_J = "02:00:00:00:00:02"


@dataclass(eq=False)
class CsiPacket:
    t_ns: int
    frame: int
    src_id: str
    direction: str
    csi: np.ndarray

    def __eq__(self, other):
        if not isinstance(other, CsiPacket):
            return NotImplemented
        return (
            self.t_ns == other.t_ns
            and self.frame == other.frame
            and self.src_id == other.src_id
            and self.direction == other.direction
            and np.array_equal(self.csi, other.csi)
        )

    def to_record(self) -> dict:
        return {
            "t_ns": int(self.t_ns),
            "frame": int(self.frame),
            "src_id": self.src_id,
            "dir": self.direction,
            "csi": [[float(z.real), float(z.imag)] for z in self.csi],
        }


@dataclass(eq=False)
class CsiPair:
    frame: int
    t_fwd_ns: int
    t_bwd_ns: int
    h_squared: np.ndarray
    rx_pose: Pose | None = None


@dataclass
class PairingStats:
    n_forward: int = 0
    n_backward: int = 0
    n_pairs: int = 0
    n_discarded: int = 0
    n_skew_rejected: int = 0

    def to_dict(self) -> dict:
        return {
            "packets_forward": self.n_forward,
            "packets_backward": self.n_backward,
            "pairs": self.n_pairs,
            "discards": self.n_discarded,
            "skew_rejected": self.n_skew_rejected,
        }


def run_exchange(
    traj_i: Sequence[Pose],
    traj_j: Sequence[Pose],
    carrier: CarrierConfig,
    cfo: CfoModel,
    noise: NoiseConfig,
    loss_rate: float = 0.0,
    rng: np.random.Generator | None = None,
    mac_i: str = DEFAULT_MAC_I,
    mac_j: str = DEFAULT_MAC_J,
) -> tuple[list[CsiPacket], list[CsiPacket]]:
    """Simulate one forward/backward exchange per odometry tick.

    Node ``i`` opens every exchange (forward packet, CFO added) and node
    ``j`` replies (backward packet, CFO subtracted) unless the reply is
    lost. Frame numbers advance on every tick, lost or not. Distances are
    taken from poses interpolated at each packet's jittered timestamp.

    RNG draw order is fixed: timestamps, losses, then CSI noise.
    """
    if len(traj_i) != len(traj_j):
        raise ValidationError(f"trajectory lengths differ: {len(traj_i)} vs {len(traj_j)}")
    if len(traj_i) == 0:
        return [], []
    if any(a.t != b.t for a, b in zip(traj_i, traj_j)):
        raise ValidationError("trajectories must share nominal timestamps")
    if not 0.0 <= loss_rate < 1.0:
        raise ValidationError(f"loss_rate must be in [0, 1), got {loss_rate}", "loss_rate")
    carrier.validate()
    if rng is None:
        rng = np.random.default_rng(noise.rng_seed)

    nominal = np.array([p.t for p in traj_i], dtype=np.int64)
    t_fwd, t_bwd = jittered_timestamps(nominal, noise, rng)
    lost = rng.random(len(nominal)) < loss_rate if loss_rate > 0 else np.zeros(len(nominal), bool)

    d_fwd = np.linalg.norm(interpolate_positions(traj_i, t_fwd) - interpolate_positions(traj_j, t_fwd), axis=1)
    d_bwd = np.linalg.norm(interpolate_positions(traj_i, t_bwd) - interpolate_positions(traj_j, t_bwd), axis=1)
    fwd, bwd = perturbed_csi_arrays(
        d_fwd, d_bwd, t_fwd / NS_PER_S, t_bwd / NS_PER_S,
        carrier.subcarrier_frequencies(), cfo, noise, rng,
    )

    packets_i = [
        CsiPacket(int(t_fwd[k]), k, mac_i, FORWARD, fwd[k]) for k in range(len(nominal))
    ]
    packets_j = [
        CsiPacket(int(t_bwd[k]), k, mac_j, BACKWARD, bwd[k])
        for k in range(len(nominal))
        if not lost[k]
    ]
    return packets_i, packets_j


def pair_packets(
    packets_i: Iterable[CsiPacket],
    packets_j: Iterable[CsiPacket],
    epsilon_t: float,
    odometry: Sequence[Pose] | None = None,
) -> tuple[list[CsiPair], PairingStats]:
    """Match packets by frame number and cancel CFO per subcarrier.

    Frames present in only one stream, or whose timestamps differ by more
    than ``epsilon_t`` seconds, are discarded and counted. When
    ``odometry`` is given each pair gets the pose nearest to its forward
    timestamp.
    """
    by_frame_i = {p.frame: p for p in packets_i}
    by_frame_j = {p.frame: p for p in packets_j}
    stats = PairingStats(n_forward=len(by_frame_i), n_backward=len(by_frame_j))
    limit_ns = epsilon_t * NS_PER_S

    pairs: list[CsiPair] = []
    for frame in sorted(by_frame_i.keys() | by_frame_j.keys()):
        a, b = by_frame_i.get(frame), by_frame_j.get(frame)
        if a is None or b is None:
            stats.n_discarded += 1
            continue
        if abs(a.t_ns - b.t_ns) > limit_ns + 1e-6:
            stats.n_discarded += 1
            stats.n_skew_rejected += 1
            continue
        pairs.append(CsiPair(frame, a.t_ns, b.t_ns, cancel_cfo(a.csi, b.csi)))

    if odometry is not None and pairs:
        idx = nearest_pose_indices(odometry, [p.t_fwd_ns for p in pairs])
        for pair, k in zip(pairs, idx):
            pair.rx_pose = odometry[int(k)]
    stats.n_pairs = len(pairs)
    return pairs, stats


def interpolate_center_subcarrier(pair, lo: int = 12, hi: int = 19, target: float = 15.5) -> complex:
    """Evaluate a CSI vector at a fractional subcarrier index.

    Fits straight lines by least squares to the unwrapped phase and to the
    log-magnitude of subcarriers ``lo..hi`` inclusive. Accepts a
    :class:`CsiPair` (uses ``h_squared``) or a 1-D complex array.
    """
    values = np.asarray(pair.h_squared if isinstance(pair, CsiPair) else pair)
    if not 0 <= lo < hi < len(values):
        raise ValidationError(f"need 0 <= lo < hi < {len(values)}, got lo={lo}, hi={hi}")
    seg = values[lo : hi + 1]
    if np.any(seg == 0):
        raise ValidationError("cannot interpolate zero-valued subcarriers")
    k = np.arange(lo, hi + 1, dtype=float)
    phase = np.unwrap(np.angle(seg))
    logmag = np.log(np.abs(seg))
    # centre the abscissa so the fit is well conditioned
    kc = k - k.mean()
    denom = float(kc @ kc)
    x = target - k.mean()
    ph = phase.mean() + (kc @ phase) / denom * x
    lm = logmag.mean() + (kc @ logmag) / denom * x
    return complex(np.exp(lm + 1j * ph))


def interpolate_center_batch(h_squared: np.ndarray, lo: int = 12, hi: int = 19, target: float = 15.5) -> np.ndarray:
    """Vectorised :func:`interpolate_center_subcarrier` over rows of (N, K)."""
    h = np.asarray(h_squared)
    if h.ndim != 2 or not 0 <= lo < hi < h.shape[1]:
        raise ValidationError(f"need 0 <= lo < hi < {h.shape[-1]}, got lo={lo}, hi={hi}")
    seg = h[:, lo : hi + 1]
    if np.any(seg == 0):
        raise ValidationError("cannot interpolate zero-valued subcarriers")
    k = np.arange(lo, hi + 1, dtype=float)
    kc = k - k.mean()
    x = target - k.mean()
    phase = np.unwrap(np.angle(seg), axis=1)
    logmag = np.log(np.abs(seg))
    denom = float(kc @ kc)
    ph = phase.mean(axis=1) + (phase @ kc) / denom * x
    lm = logmag.mean(axis=1) + (logmag @ kc) / denom * x
    return np.exp(lm + 1j * ph)


# -- packet stream files -----------------------------------------------------

def write_packets_jsonl(packets: Iterable[CsiPacket], path: str | Path) -> None:
    with open(path, "w") as fh:
        for p in packets:
            fh.write(json.dumps(p.to_record(), separators=(",", ":")))
            fh.write("\n")


def read_packets_jsonl(path: str | Path, subcarrier_count: int | None = None) -> list[CsiPacket]:
    """Parse a packet stream, checking every record against the schema.

    Frames must increase strictly per (src_id, dir); ``subcarrier_count``
    enforces the CSI length. Errors carry the 1-based line number.
    """
    name = str(path)
    packets: list[CsiPacket] = []
    last_frame: dict[tuple[str, str], int] = {}
    with open(path) as fh:
        for row_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DatasetError(f"invalid JSON: {exc.msg}", name, row_no) from None
            packets.append(_packet_from_record(rec, name, row_no, subcarrier_count))
            key = (packets[-1].src_id, packets[-1].direction)
            frame = packets[-1].frame
            if key in last_frame and frame <= last_frame[key]:
                raise DatasetError(f"frame {frame} not strictly increasing for {key}", name, row_no)
            last_frame[key] = frame
    return packets


def _packet_from_record(rec, name: str, row_no: int, subcarrier_count: int | None) -> CsiPacket:
    if not isinstance(rec, dict):
        raise DatasetError("record must be a JSON object", name, row_no)
    missing = {"t_ns", "frame", "src_id", "dir", "csi"} - rec.keys()
    if missing:
        raise DatasetError(f"missing fields {sorted(missing)}", name, row_no)
    t_ns, frame, src, direction, csi = rec["t_ns"], rec["frame"], rec["src_id"], rec["dir"], rec["csi"]
    if not isinstance(t_ns, int) or t_ns < 0 or t_ns >= 2**64:
        raise DatasetError("t_ns must be an unsigned 64-bit integer", name, row_no)
    if not isinstance(frame, int) or frame < 0 or frame >= 2**32:
        raise DatasetError("frame must be an unsigned 32-bit integer", name, row_no)
    if not isinstance(src, str) or len(src) != 17:
        raise DatasetError("src_id must be a 17-character MAC string", name, row_no)
    if direction not in (FORWARD, BACKWARD):
        raise DatasetError(f"dir must be 'fwd' or 'bwd', got {direction!r}", name, row_no)
    if not isinstance(csi, list) or any(
        not isinstance(z, list) or len(z) != 2 or not all(isinstance(v, (int, float)) for v in z) for z in csi
    ):
        raise DatasetError("csi must be a list of [re, im] pairs", name, row_no)
    if subcarrier_count is not None and len(csi) != subcarrier_count:
        raise DatasetError(f"csi has {len(csi)} subcarriers, expected {subcarrier_count}", name, row_no)
    values = np.array([complex(re, im) for re, im in csi], dtype=complex)
    return CsiPacket(t_ns, frame, src, direction, values)
