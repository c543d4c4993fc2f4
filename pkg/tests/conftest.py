import math

import numpy as np
import pytest

from wsrsim.channel import CarrierConfig, CfoModel, NoiseConfig
from wsrsim.trajectory import Pose, TrajectorySpec, generate_trajectory

TX_OFFSET = (3.858, 0.929)


@pytest.fixture
def carrier():
    return CarrierConfig()


@pytest.fixture
def wavelength(carrier):
    return carrier.wavelength


def reference_trajectories(kind="circular", duration=10.0, rate=100.0):
    rx = generate_trajectory(
        TrajectorySpec(kind=kind, radius=0.3, length=2 * math.pi * 0.3, duration=duration, sample_rate=rate)
    )
    tx = generate_trajectory(
        TrajectorySpec(kind="stationary", start=Pose(0, *TX_OFFSET), duration=duration, sample_rate=rate)
    )
    return rx, tx


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def quiet():
    return NoiseConfig.off()


@pytest.fixture
def default_cfo():
    return CfoModel(delta_f=10.0, c1=10000.0, c2=200.0)
