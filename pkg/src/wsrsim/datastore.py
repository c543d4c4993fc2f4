"""On-disk datasets: manifest, odometry CSV, packet JSONL and AoA profiles.

A dataset directory holds ``manifest.json`` plus the files it lists. The
manifest records the scenario config, a SHA-256 per file and free-form
metrics. Floats are written with ``repr`` so reloading is bit-exact.
"""

from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import ScenarioConfig
from .errors import DatasetError, DatasetIOError, SchemaVersionError, ValidationError
from .estimator import AngleGrid, AoaProfile, extract_peaks
from .exchange import CsiPacket, read_packets_jsonl, write_packets_jsonl
from .trajectory import Pose, read_odometry_csv, write_odometry_csv

SCHEMA_VERSION = "1.0"
MANIFEST_NAME = "manifest.json"

_FILES = {
    "odometry_i": "odometry_i.csv",
    "odometry_j": "odometry_j.csv",
    "packets_i": "packets_i.jsonl",
    "packets_j": "packets_j.jsonl",
}
PROFILE_CSV = "profile.csv"
PROFILE_PGM = "profile.pgm"
SUMMARY_JSON = "summary.json"


@dataclass
class ExperimentRecord:
    config: ScenarioConfig
    odometry_i: list[Pose] = field(default_factory=list)
    odometry_j: list[Pose] = field(default_factory=list)
    packets_i: list[CsiPacket] = field(default_factory=list)
    packets_j: list[CsiPacket] = field(default_factory=list)
    profile: AoaProfile | None = None
    metrics: dict = field(default_factory=dict)


def sha256_file(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def dump_json(obj, path: str | Path) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=False) + "\n")


# -- profiles ----------------------------------------------------------------

def write_profile_csv(profile: AoaProfile, path: str | Path) -> None:
    """Azimuth rows by polar columns; first row and column hold the angles."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["azimuth_deg\\polar_deg"] + [repr(float(p)) for p in profile.grid.polars_deg])
        for az, row in zip(profile.grid.azimuths_deg, profile.magnitude):
            w.writerow([repr(float(az))] + [repr(float(v)) for v in row])


def read_profile_csv(path: str | Path) -> AoaProfile:
    name = str(path)
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if len(rows) < 2:
        raise DatasetError("profile needs a header row and at least one azimuth row", name)
    try:
        polars = np.array([float(v) for v in rows[0][1:]])
    except ValueError as exc:
        raise DatasetError(f"bad polar axis: {exc}", name, 0) from None
    az, mags = [], []
    for row_no, row in enumerate(rows[1:], start=1):
        if len(row) != len(polars) + 1:
            raise DatasetError(f"expected {len(polars) + 1} fields, got {len(row)}", name, row_no)
        try:
            az.append(float(row[0]))
            mags.append([float(v) for v in row[1:]])
        except ValueError as exc:
            raise DatasetError(str(exc), name, row_no) from None
        if any(v < 0 for v in mags[-1]):
            raise DatasetError("negative magnitude", name, row_no)
    grid = grid_from_axes(np.array(az), polars, name)
    return AoaProfile(np.array(mags), grid)


def grid_from_axes(azimuths: np.ndarray, polars: np.ndarray, name: str = "profile") -> AngleGrid:
    """Recover the AngleGrid that produced the given axes, or fail."""
    if len(azimuths) < 2:
        raise DatasetError("need at least two azimuth samples", name)
    az_step = float(azimuths[1] - azimuths[0])
    if len(polars) == 1:
        grid = AngleGrid(azimuth_step=az_step, polar_fixed=float(polars[0]))
    else:
        grid = AngleGrid(azimuth_step=az_step, polar_step=float(polars[1] - polars[0]))
    try:
        grid.validate()
    except ValidationError as exc:
        raise DatasetError(f"irregular grid: {exc}", name) from None
    if not (
        grid.azimuths_deg.shape == azimuths.shape
        and np.allclose(grid.azimuths_deg, azimuths, atol=1e-9)
        and grid.polars_deg.shape == polars.shape
        and np.allclose(grid.polars_deg, polars, atol=1e-9)
    ):
        raise DatasetError("profile axes do not form a regular grid over the full range", name)
    return grid


def write_profile_pgm(profile: AoaProfile, path: str | Path) -> None:
    """8-bit binary PGM, one pixel row per azimuth, min-max normalised."""
    F = profile.magnitude
    lo, hi = float(F.min()), float(F.max())
    scaled = np.zeros(F.shape) if hi == lo else (F - lo) / (hi - lo) * 255.0
    img = np.round(scaled).astype(np.uint8)
    height, width = img.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{width} {height}\n255\n".encode("ascii"))
        fh.write(img.tobytes())


def read_pgm(path: str | Path) -> np.ndarray:
    data = Path(path).read_bytes()
    parts = data.split(maxsplit=4)
    if parts[0] != b"P5" or int(parts[3]) != 255:
        raise DatasetError("not an 8-bit binary PGM", str(path))
    width, height = int(parts[1]), int(parts[2])
    return np.frombuffer(parts[4], dtype=np.uint8, count=width * height).reshape(height, width)


# -- datasets ----------------------------------------------------------------

def _file_entry(directory: Path, rel: str, rows: int) -> dict:
    return {"path": rel, "sha256": sha256_file(directory / rel), "rows": rows}


def write_dataset(record: ExperimentRecord, directory: str | Path) -> Path:
    """Write every artifact of ``record`` into ``directory``; returns the manifest path."""
    out = Path(directory)
    try:
        out.mkdir(parents=True, exist_ok=True)
        write_odometry_csv(record.odometry_i, out / _FILES["odometry_i"])
        write_odometry_csv(record.odometry_j, out / _FILES["odometry_j"])
        write_packets_jsonl(record.packets_i, out / _FILES["packets_i"])
        write_packets_jsonl(record.packets_j, out / _FILES["packets_j"])
        files = {
            "odometry_i": _file_entry(out, _FILES["odometry_i"], len(record.odometry_i)),
            "odometry_j": _file_entry(out, _FILES["odometry_j"], len(record.odometry_j)),
            "packets_i": _file_entry(out, _FILES["packets_i"], len(record.packets_i)),
            "packets_j": _file_entry(out, _FILES["packets_j"], len(record.packets_j)),
        }
        if record.profile is not None:
            write_profile_csv(record.profile, out / PROFILE_CSV)
            write_profile_pgm(record.profile, out / PROFILE_PGM)
            files["profile_csv"] = _file_entry(out, PROFILE_CSV, record.profile.magnitude.shape[0])
            files["profile_pgm"] = _file_entry(out, PROFILE_PGM, record.profile.magnitude.shape[0])
            dump_json({**record.profile.summary(), **record.metrics.get("summary", {})}, out / SUMMARY_JSON)
            files["summary"] = _file_entry(out, SUMMARY_JSON, 1)
        manifest = {
            "schema_version": SCHEMA_VERSION,
            "config": record.config.to_dict(),
            "files": files,
            "metrics": record.metrics,
        }
        if record.profile is not None:
            manifest["profile"] = record.profile.summary()
        path = out / MANIFEST_NAME
        dump_json(manifest, path)
    except OSError as exc:
        raise DatasetIOError(exc.strerror or str(exc), exc.filename or str(out)) from exc
    return path


def load_manifest(path: str | Path) -> dict:
    path = Path(path)
    if path.is_dir():
        path = path / MANIFEST_NAME
    try:
        manifest = json.loads(path.read_text())
    except OSError as exc:
        raise DatasetIOError(exc.strerror or str(exc), str(path)) from exc
    except json.JSONDecodeError as exc:
        raise DatasetError(f"invalid JSON: {exc.msg}", str(path)) from None
    version = str(manifest.get("schema_version", ""))
    major = version.split(".")[0]
    if major != SCHEMA_VERSION.split(".")[0]:
        raise SchemaVersionError(f"unsupported schema_version {version!r}, expected {SCHEMA_VERSION}", str(path))
    for key in ("config", "files"):
        if key not in manifest:
            raise DatasetError(f"manifest missing {key!r}", str(path))
    return manifest


def read_dataset(path: str | Path) -> ExperimentRecord:
    """Load and fully validate a dataset from its manifest (or directory)."""
    path = Path(path)
    if path.is_dir():
        path = path / MANIFEST_NAME
    manifest = load_manifest(path)
    root = path.parent
    try:
        config = ScenarioConfig.from_dict(manifest["config"])
    except ValidationError as exc:
        raise DatasetError(f"config: {exc}", str(path)) from None

    files = manifest["files"]
    for key in _FILES:
        if key not in files:
            raise DatasetError(f"manifest lists no {key} file", str(path))
    for key, entry in files.items():
        target = root / entry["path"]
        if not target.exists():
            raise DatasetIOError("listed file is missing", str(target))
        digest = sha256_file(target)
        if digest != entry["sha256"]:
            raise DatasetError(f"checksum mismatch ({digest} != {entry['sha256']})", str(target))

    try:
        k = config.carrier.subcarrier_count
        record = ExperimentRecord(
            config=config,
            odometry_i=read_odometry_csv(root / files["odometry_i"]["path"]),
            odometry_j=read_odometry_csv(root / files["odometry_j"]["path"]),
            packets_i=read_packets_jsonl(root / files["packets_i"]["path"], k),
            packets_j=read_packets_jsonl(root / files["packets_j"]["path"], k),
            metrics=manifest.get("metrics", {}),
        )
        if "profile_csv" in files:
            record.profile = read_profile_csv(root / files["profile_csv"]["path"])
            summary = manifest.get("profile", {})
            record.profile.n_samples = int(summary.get("n_samples", 0))
            record.profile.total_displacement_m = float(summary.get("total_displacement_m", 0.0))
            record.profile.secondary_peaks = extract_peaks(record.profile, 5)[1:]
    except OSError as exc:
        raise DatasetIOError(exc.strerror or str(exc), exc.filename or str(root)) from exc

    for key in ("odometry_i", "odometry_j", "packets_i", "packets_j"):
        n = len(getattr(record, key))
        if n != files[key].get("rows", n):
            raise DatasetError(f"{key} has {n} rows, manifest says {files[key]['rows']}", str(path))
    if len(record.odometry_i) != len(record.odometry_j):
        raise DatasetError("odometry streams differ in length", str(path))
    return record
