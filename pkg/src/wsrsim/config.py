"""Scenario configuration: schema, YAML loading and built-in presets."""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any

import yaml

from .channel import CarrierConfig, CfoModel, NoiseConfig
from .errors import ValidationError
from .estimator import AngleGrid
from .exchange import DEFAULT_MAC_I, DEFAULT_MAC_J
from .trajectory import Pose, TrajectorySpec

REFERENCE_TX_OFFSET = (3.858, 0.929)
REFERENCE_RADIUS = 0.3
STATIONARY_DURATIONS = (10, 30, 60, 120, 300)


@dataclass(frozen=True)
class EstimatorConfig:
    azimuth_step: float = 1.0
    polar_step: float = 1.0
    polar_fixed: float | None = None
    steering_power: int = 2
    subcarrier_lo: int = 12
    subcarrier_hi: int = 19
    subcarrier_target: float = 15.5
    fast_2d: bool = False

    @property
    def grid(self) -> AngleGrid:
        return AngleGrid(self.azimuth_step, self.polar_step, self.polar_fixed)

    @property
    def subcarriers(self) -> tuple[int, int, float]:
        return self.subcarrier_lo, self.subcarrier_hi, self.subcarrier_target

    def validate(self, path: str = "estimator") -> None:
        self.grid.validate(path)
        if self.steering_power not in (1, 2):
            raise ValidationError("must be 1 or 2", f"{path}.steering_power")
        if not 0 <= self.subcarrier_lo < self.subcarrier_hi:
            raise ValidationError("need 0 <= subcarrier_lo < subcarrier_hi", f"{path}.subcarrier_hi")
        if not self.subcarrier_lo <= self.subcarrier_target <= self.subcarrier_hi:
            raise ValidationError("target must lie within [lo, hi]", f"{path}.subcarrier_target")


@dataclass(frozen=True)
class ScenarioConfig:
    """Everything needed to reproduce one simulated experiment.

    ``traj_i`` is the mobile receiver whose motion forms the array and
    ``traj_j`` the transmitter. ``noise.rng_seed`` is ignored in favour of
    the top-level ``rng_seed``.
    """

    name: str = "scenario"
    rng_seed: int = 0
    carrier: CarrierConfig = field(default_factory=CarrierConfig)
    cfo: CfoModel = field(default_factory=CfoModel)
    noise: NoiseConfig = field(default_factory=NoiseConfig)
    traj_i: TrajectorySpec = field(default_factory=TrajectorySpec)
    traj_j: TrajectorySpec = field(default_factory=TrajectorySpec)
    estimator: EstimatorConfig = field(default_factory=EstimatorConfig)
    loss_rate: float = 0.0
    repetitions: int = 1
    odometry_noise_std: float = 0.0
    mac_i: str = DEFAULT_MAC_I
    mac_j: str = DEFAULT_MAC_J
    output_dir: str | None = None

    def validate(self) -> "ScenarioConfig":
        if not isinstance(self.rng_seed, int) or not 0 <= self.rng_seed < 2**64:
            raise ValidationError("must be an integer in [0, 2**64)", "rng_seed")
        self.carrier.validate("carrier")
        self.cfo.validate("cfo")
        self.noise.validate("noise")
        self.traj_i.validate("traj_i")
        self.traj_j.validate("traj_j")
        self.estimator.validate("estimator")
        if not 0.0 <= self.loss_rate < 1.0:
            raise ValidationError("must be in [0, 1)", "loss_rate")
        if self.repetitions < 1:
            raise ValidationError("must be >= 1", "repetitions")
        if not self.odometry_noise_std >= 0:
            raise ValidationError("must be >= 0", "odometry_noise_std")
        if self.traj_i.n_samples != self.traj_j.n_samples or self.traj_i.sample_rate != self.traj_j.sample_rate:
            raise ValidationError("traj_i and traj_j must share duration and sample_rate", "traj_j")
        if self.traj_i.start.t != self.traj_j.start.t:
            raise ValidationError("traj_i and traj_j must start at the same time", "traj_j.start.t")
        for name in ("mac_i", "mac_j"):
            if len(getattr(self, name)) != 17:
                raise ValidationError("must be a 17-character MAC string", name)
        return self

    def with_seed(self, seed: int) -> "ScenarioConfig":
        return replace(self, rng_seed=int(seed))

    @property
    def effective_noise(self) -> NoiseConfig:
        return replace(self.noise, rng_seed=self.rng_seed)

    def to_dict(self) -> dict:
        return _to_plain(self)

    @classmethod
    def from_dict(cls, data: Any) -> "ScenarioConfig":
        return _from_plain(cls, data, "").validate()

    def to_yaml(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=False)


def _to_plain(obj):
    if dataclasses.is_dataclass(obj):
        return {f.name: _to_plain(getattr(obj, f.name)) for f in fields(obj)}
    if isinstance(obj, tuple):
        return [_to_plain(v) for v in obj]
    return obj


_NESTED = {
    "carrier": CarrierConfig,
    "cfo": CfoModel,
    "noise": NoiseConfig,
    "traj_i": TrajectorySpec,
    "traj_j": TrajectorySpec,
    "estimator": EstimatorConfig,
    "start": Pose,
}


def _coerce(value, default, name: str, path: str):
    """Convert a YAML scalar to the type of the field's default value."""
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ValidationError(f"expected boolean, got {value!r}", path)
        return value
    if isinstance(default, int):
        if isinstance(value, bool) or not isinstance(value, (int, float)) or value != int(value):
            raise ValidationError(f"expected integer, got {value!r}", path)
        return int(value)
    if isinstance(default, float) or name in ("snr_db", "polar_fixed"):
        if value is None and name in ("snr_db", "polar_fixed"):
            return None
        if isinstance(value, str):
            # YAML 1.1 loads "5.54e9" and "1e-7" as strings
            try:
                value = float(value)
            except ValueError:
                raise ValidationError(f"expected number, got {value!r}", path) from None
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ValidationError(f"expected number, got {value!r}", path)
        if not math.isfinite(float(value)):
            raise ValidationError(f"expected finite number, got {value!r}", path)
        return float(value)
    if isinstance(default, str) or name == "output_dir":
        if value is None and name == "output_dir":
            return None
        if not isinstance(value, str):
            raise ValidationError(f"expected string, got {value!r}", path)
        return value
    if name == "waypoints":
        try:
            return tuple(tuple(float(c) for c in wp) for wp in value)
        except (TypeError, ValueError):
            raise ValidationError("expected a list of [x, y, z] points", path) from None
    return value


def _from_plain(cls, data, prefix: str):
    where = prefix or "config"
    if not isinstance(data, dict):
        raise ValidationError(f"expected a mapping, got {type(data).__name__}", where)
    known = {f.name: f for f in fields(cls)}
    unknown = set(data) - known.keys()
    if unknown:
        key = sorted(unknown)[0]
        raise ValidationError("unknown key", f"{prefix}.{key}" if prefix else key)
    defaults = Pose(0, 0.0, 0.0) if cls is Pose else cls()
    kwargs = {}
    for key, value in data.items():
        path = f"{prefix}.{key}" if prefix else key
        if key in _NESTED:
            kwargs[key] = _from_plain(_NESTED[key], value, path)
        else:
            kwargs[key] = _coerce(value, getattr(defaults, key), key, path)
    if cls is Pose:
        kwargs = {**dataclasses.asdict(defaults), **kwargs}
    return cls(**kwargs)


def load_config(path: str | Path) -> ScenarioConfig:
    text = Path(path).read_text()
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ValidationError(f"cannot parse YAML: {exc}", str(path)) from None
    return ScenarioConfig.from_dict(data)


def _reference_base(name: str, traj_i: TrajectorySpec, **kw) -> ScenarioConfig:
    tx = TrajectorySpec(
        kind="stationary",
        start=Pose(0, *REFERENCE_TX_OFFSET),
        duration=traj_i.duration,
        sample_rate=traj_i.sample_rate,
    )
    return ScenarioConfig(name=name, traj_i=traj_i, traj_j=tx, **kw)


def _presets() -> dict[str, ScenarioConfig]:
    out = {
        "paper-circular": _reference_base(
            "paper-circular",
            TrajectorySpec(kind="circular", radius=REFERENCE_RADIUS, duration=10.0, sample_rate=100.0),
            repetitions=10,
        ),
        "paper-linear": _reference_base(
            "paper-linear",
            TrajectorySpec(kind="linear", length=2 * math.pi * REFERENCE_RADIUS, duration=10.0, sample_rate=100.0),
            estimator=EstimatorConfig(polar_fixed=90.0),
            repetitions=10,
        ),
    }
    for secs in STATIONARY_DURATIONS:
        name = f"paper-stationary-{secs}s"
        out[name] = _reference_base(
            name, TrajectorySpec(kind="stationary", duration=float(secs), sample_rate=100.0), repetitions=3
        )
    return out


PRESETS = _presets()


def resolve_config(name_or_path: str) -> ScenarioConfig:
    """A preset name or a path to a YAML config."""
    if name_or_path in PRESETS:
        return PRESETS[name_or_path].validate()
    return load_config(name_or_path)
