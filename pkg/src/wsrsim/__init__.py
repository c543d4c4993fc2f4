"""Simulated WiFi CSI and Bartlett relative-bearing estimation for mobile robots."""

__version__ = "0.1.0"

from .channel import CarrierConfig, CfoModel, NoiseConfig, cancel_cfo, cfo_phase, ideal_csi, perturbed_csi_pair
from .estimator import AngleGrid, AoaProfile, bartlett_profile, extract_peaks
from .exchange import CsiPacket, CsiPair, pair_packets, run_exchange
from .trajectory import Pose, TrajectorySpec, generate_trajectory, ground_truth_bearing

__all__ = [
    "AngleGrid",
    "AoaProfile",
    "CarrierConfig",
    "CfoModel",
    "CsiPacket",
    "CsiPair",
    "NoiseConfig",
    "Pose",
    "TrajectorySpec",
    "bartlett_profile",
    "cancel_cfo",
    "cfo_phase",
    "extract_peaks",
    "generate_trajectory",
    "ground_truth_bearing",
    "ideal_csi",
    "pair_packets",
    "perturbed_csi_pair",
    "run_exchange",
]
