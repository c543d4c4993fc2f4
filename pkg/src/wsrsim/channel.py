"""Line-of-sight CSI synthesis with carrier frequency offset and noise.

Phases are carried in cycles and reduced modulo one before exponentiation,
so large CFO terms (tens of thousands of cycles) cost no precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

SPEED_OF_LIGHT = 299_792_458.0
NS_PER_S = 1_000_000_000


@dataclass(frozen=True)
class CarrierConfig:
    """WiFi channel geometry. Defaults describe 5 GHz channel 108.

    Subcarrier ``k`` (0-based) sits at
    ``center_frequency + (k - center_index) * subcarrier_spacing``.
    """

    center_frequency: float = 5.540e9
    subcarrier_count: int = 30
    subcarrier_spacing: float = 625e3
    channel_bandwidth: float = 20e6
    center_index: float = 15.5

    def validate(self, path: str = "carrier") -> None:
        if not (self.center_frequency > 0 and math.isfinite(self.center_frequency)):
            raise ValidationError("center_frequency must be > 0", f"{path}.center_frequency")
        if int(self.subcarrier_count) != self.subcarrier_count or self.subcarrier_count < 1:
            raise ValidationError("subcarrier_count must be an integer >= 1", f"{path}.subcarrier_count")
        if not self.channel_bandwidth > 0:
            raise ValidationError("channel_bandwidth must be > 0", f"{path}.channel_bandwidth")
        if self.subcarrier_spacing < 0:
            raise ValidationError("subcarrier_spacing must be >= 0", f"{path}.subcarrier_spacing")
        if (self.subcarrier_count - 1) * self.subcarrier_spacing > self.channel_bandwidth:
            raise ValidationError("subcarriers do not fit in the channel bandwidth", f"{path}.subcarrier_spacing")

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.center_frequency

    def subcarrier_frequencies(self) -> np.ndarray:
        k = np.arange(self.subcarrier_count, dtype=float)
        return self.center_frequency + (k - self.center_index) * self.subcarrier_spacing


@dataclass(frozen=True)
class CfoModel:
    """Offset ``delta_f * t + c1 * sin(c2 * t)`` in cycles."""

    delta_f: float = 10.0
    c1: float = 10000.0
    c2: float = 200.0

    def validate(self, path: str = "cfo") -> None:
        for name in ("delta_f", "c1", "c2"):
            if not math.isfinite(getattr(self, name)):
                raise ValidationError("must be finite", f"{path}.{name}")

    def rate(self, t):
        """d/dt of the offset, cycles per second."""
        return self.delta_f + self.c1 * self.c2 * np.cos(self.c2 * np.asarray(t, dtype=float))


@dataclass(frozen=True)
class NoiseConfig:
    """Impairments applied to generated CSI.

    ``snr_db=None`` disables white noise. ``bias_i``/``bias_j`` are the
    per-node constant phase terms in cycles.
    """

    snr_db: float | None = 3.0
    sto_mean: float = 300e-6
    epsilon_t: float = 100e-9
    bias_i: float = 0.0
    bias_j: float = 0.0
    rng_seed: int = 0

    def validate(self, path: str = "noise") -> None:
        if self.snr_db is not None and not math.isfinite(self.snr_db):
            raise ValidationError("snr_db must be finite or null", f"{path}.snr_db")
        if not (self.sto_mean >= 0 and math.isfinite(self.sto_mean)):
            raise ValidationError("sto_mean must be >= 0", f"{path}.sto_mean")
        if not (self.epsilon_t >= 0 and math.isfinite(self.epsilon_t)):
            raise ValidationError("epsilon_t must be >= 0", f"{path}.epsilon_t")
        if not 0 <= int(self.rng_seed) < 2**64:
            raise ValidationError("rng_seed must fit in 64 bits", f"{path}.rng_seed")

    @classmethod
    def off(cls, rng_seed: int = 0) -> "NoiseConfig":
        return cls(snr_db=None, sto_mean=0.0, epsilon_t=0.0, rng_seed=rng_seed)


@dataclass(frozen=True)
class CsiSample:
    value: complex
    t: int
    distance_used: float


def _expi_cycles(cycles):
    """exp(-2*pi*i*cycles) with the integer part removed first."""
    c = np.asarray(cycles, dtype=float)
    return np.exp(-2j * np.pi * (c - np.floor(c)))


def ideal_csi(d: float, carrier: CarrierConfig, frequency: float | None = None) -> complex:
    """Free-space channel ``exp(-2 pi i d / lambda) / d``."""
    if not d > 0:
        raise ValidationError(f"distance must be > 0, got {d}")
    f = carrier.center_frequency if frequency is None else frequency
    return complex(_expi_cycles(d * f / SPEED_OF_LIGHT) / d)


def cfo_phase(t, model: CfoModel):
    """CFO in cycles at time ``t`` (seconds)."""
    t = np.asarray(t, dtype=float)
    out = model.delta_f * t + model.c1 * np.sin(model.c2 * t)
    return float(out) if out.ndim == 0 else out


def add_wgn(values: np.ndarray, snr_db: float | None, rng: np.random.Generator) -> np.ndarray:
    """Circular complex Gaussian noise at ``snr_db`` relative to each value's power."""
    values = np.asarray(values, dtype=complex)
    if snr_db is None:
        return values.copy()
    sigma = np.abs(values) * math.sqrt(0.5 / 10 ** (snr_db / 10))
    noise = rng.standard_normal(values.shape) + 1j * rng.standard_normal(values.shape)
    return values + sigma * noise


def perturbed_csi_arrays(
    d_fwd,
    d_bwd,
    t_fwd,
    t_bwd,
    frequencies,
    cfo: CfoModel,
    noise: NoiseConfig,
    rng: np.random.Generator,
) -> tuple[np.ndarray, np.ndarray]:
    """Forward/backward CSI for N packets over K subcarriers.

    Distances in metres and times in seconds, all of shape (N,);
    ``frequencies`` has shape (K,). Returns two (N, K) complex arrays.
    Forward noise is drawn before backward noise.
    """
    d_fwd = np.asarray(d_fwd, dtype=float)[:, None]
    d_bwd = np.asarray(d_bwd, dtype=float)[:, None]
    if np.any(d_fwd <= 0) or np.any(d_bwd <= 0):
        raise ValidationError("distance must be > 0 for every packet")
    f = np.asarray(frequencies, dtype=float)[None, :]
    cfo_f = np.asarray(cfo_phase(t_fwd, cfo), dtype=float).reshape(-1, 1)
    cfo_b = np.asarray(cfo_phase(t_bwd, cfo), dtype=float).reshape(-1, 1)
    fwd = _expi_cycles(d_fwd * f / SPEED_OF_LIGHT + cfo_f + noise.bias_i) / d_fwd
    bwd = _expi_cycles(d_bwd * f / SPEED_OF_LIGHT - cfo_b + noise.bias_j) / d_bwd
    return add_wgn(fwd, noise.snr_db, rng), add_wgn(bwd, noise.snr_db, rng)


def perturbed_csi_pair(
    d: float,
    t_fwd: float,
    t_bwd: float,
    carrier: CarrierConfig,
    cfo: CfoModel,
    noise: NoiseConfig,
    rng: np.random.Generator,
) -> tuple[CsiSample, CsiSample]:
    """Single-packet forward/backward CSI at the centre frequency."""
    if not d > 0:
        raise ValidationError(f"distance must be > 0, got {d}")
    if abs(t_fwd - t_bwd) > noise.epsilon_t * (1 + 1e-12):
        raise ValidationError("forward/backward skew exceeds epsilon_t")
    fwd, bwd = perturbed_csi_arrays(
        [d], [d], [t_fwd], [t_bwd], [carrier.center_frequency], cfo, noise, rng
    )
    return (
        CsiSample(complex(fwd[0, 0]), int(round(t_fwd * NS_PER_S)), d),
        CsiSample(complex(bwd[0, 0]), int(round(t_bwd * NS_PER_S)), d),
    )


def cancel_cfo(fwd, bwd):
    """Product of forward and backward CSI; works elementwise on arrays."""
    fwd_a, bwd_a = np.asarray(fwd), np.asarray(bwd)
    if np.any(fwd_a == 0) or np.any(bwd_a == 0):
        raise ValidationError("CSI values must be nonzero")
    out = fwd_a * bwd_a
    return complex(out) if out.ndim == 0 else out


def _sto_offsets(n: int, mean: float, cap: float, rng: np.random.Generator) -> np.ndarray:
    if mean == 0 or n == 0:
        return np.zeros(n)
    out = rng.exponential(mean, size=n)
    bad = out >= cap
    while np.any(bad):
        out[bad] = rng.exponential(mean, size=int(bad.sum()))
        bad = out >= cap
    return out


def jittered_timestamps(nominal_ns, noise: NoiseConfig, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Actual forward/backward timestamps (int ns) around a nominal grid.

    Forward packets are delayed by an exponential sampling-time offset
    truncated below half the smallest nominal gap; backward packets follow
    after an extra uniform delay in [0, epsilon_t].
    """
    nominal = np.asarray(nominal_ns, dtype=np.int64)
    if nominal.size > 1 and np.any(np.diff(nominal) <= 0):
        raise ValidationError("nominal timestamps must be strictly increasing")
    n = nominal.size
    cap = 0.5 * np.diff(nominal).min() / NS_PER_S if n > 1 else math.inf
    sto = _sto_offsets(n, noise.sto_mean, cap, rng)
    skew = rng.uniform(0.0, noise.epsilon_t, size=n) if noise.epsilon_t > 0 else np.zeros(n)
    t_fwd = nominal + np.round(sto * NS_PER_S).astype(np.int64)
    t_bwd = t_fwd + np.floor(skew * NS_PER_S).astype(np.int64)
    return t_fwd, t_bwd
