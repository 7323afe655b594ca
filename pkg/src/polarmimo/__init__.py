"""Polar subcodes and joint list decoding for polar-coded MIMO links."""

from .channel import ChannelRealization, TransmitFrame, modulate, sample_channel, transmit
from .construction import (
    GlobalCodeSpec,
    ReliabilityProfile,
    allocate_rates,
    construct_crc_code,
    construct_subcode,
    estimate_reliability,
    set_dfs_a,
)
from .crc import Crc
from .detectors import SicFrontEnd, mmse_filter, qr_decompose
from .estimators import JointListDecoder, SubcodeConstructor
from .joint import MetricConfig, joint_decode, path_metric
from .polar import CodeSpec, encode, polar_transform, scl_decode_segment
from .sim import SimConfig, SimResult, paper_preset, run_sweep

__version__ = "0.1.0"

__all__ = [
    "ChannelRealization", "TransmitFrame", "modulate", "sample_channel", "transmit",
    "GlobalCodeSpec", "ReliabilityProfile", "allocate_rates", "construct_crc_code",
    "construct_subcode", "estimate_reliability", "set_dfs_a", "Crc", "SicFrontEnd",
    "mmse_filter", "qr_decompose", "JointListDecoder", "SubcodeConstructor",
    "MetricConfig", "joint_decode", "path_metric", "CodeSpec", "encode",
    "polar_transform", "scl_decode_segment", "SimConfig", "SimResult",
    "paper_preset", "run_sweep",
]
