"""scikit-learn style wrappers around construction and joint decoding.

``SubcodeConstructor.fit`` learns a code from Monte-Carlo reliabilities;
``JointListDecoder.predict`` maps received frames to information bits.
Both follow the estimator conventions (constructor stores parameters
verbatim, fitted attributes end in ``_``) so they work with ``clone`` and
``get_params``/``set_params``.
"""

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from ._validation import check_random_state
from .channel import ChannelRealization
from .construction import (
    GlobalCodeSpec,
    construct_crc_code,
    construct_subcode,
    estimate_reliability,
)
from .crc import Crc
from .joint import MetricConfig, joint_decode

__all__ = ["SubcodeConstructor", "JointListDecoder"]


def _check_fitted(est, attr):
    if not hasattr(est, attr):
        raise NotFittedError(f"{type(est).__name__} is not fitted yet; call fit first")


class SubcodeConstructor(BaseEstimator):
    """Build a polar subcode (or CRC baseline code) for a MIMO link.

    Parameters
    ----------
    n_tx, n_rx, m, n_slots : int
        Antennas, bits per symbol and time slots per frame.
    detector : {"vblast", "mmse"}
    snr_db : float
        Design SNR for reliability estimation.
    k : int
        Total dimension.
    construction : {"dfs", "crc"}
    n_dfs_a, n_dfs_b : int
    dimension_distribution : tuple of int, optional
    reliability_trials : int
    random_state : int, Generator or None
    """

    def __init__(self, n_tx=4, n_rx=4, m=2, n_slots=32, detector="vblast", snr_db=6.0,
                 k=128, construction="dfs", n_dfs_a=8, n_dfs_b=24,
                 dimension_distribution=None, reliability_trials=10_000, random_state=None):
        self.n_tx = n_tx
        self.n_rx = n_rx
        self.m = m
        self.n_slots = n_slots
        self.detector = detector
        self.snr_db = snr_db
        self.k = k
        self.construction = construction
        self.n_dfs_a = n_dfs_a
        self.n_dfs_b = n_dfs_b
        self.dimension_distribution = dimension_distribution
        self.reliability_trials = reliability_trials
        self.random_state = random_state

    def fit(self, X=None, y=None):
        """Estimate reliabilities and construct the code.  ``X`` is ignored."""
        if self.construction not in ("dfs", "crc"):
            raise ValueError(f"unknown construction {self.construction!r}")
        if self.n_rx < self.n_tx:
            raise ValueError("need n_rx >= n_tx")
        rng = check_random_state(self.random_state)
        self.profile_ = estimate_reliability(self, self.reliability_trials, rng)
        if self.construction == "dfs":
            self.code_spec_ = construct_subcode(
                self.profile_, self.k, self.n_dfs_a, self.n_dfs_b, rng,
                self.dimension_distribution,
            )
        else:
            self.code_spec_ = construct_crc_code(self.profile_, self.k, self.dimension_distribution)
        self.dimension_distribution_ = self.code_spec_.dimension_distribution
        return self

    def transform(self, X):
        """Encode rows of information bits into ``(frames, n_tx, m * n_slots)``."""
        _check_fitted(self, "code_spec_")
        return self.code_spec_.encode(np.atleast_2d(X))


class JointListDecoder(BaseEstimator):
    """Joint SIC + list decoder for a fixed code.

    Parameters
    ----------
    code_spec : GlobalCodeSpec or str
        The code, or its text form.
    detector : {"vblast", "mmse"}
    metric : {"exact", "approx"}
    list_size : int
    selection : {"best_score", "crc"}
    crc_poly, crc_len : int
        Used when ``selection="crc"``.
    """

    def __init__(self, code_spec=None, detector="vblast", metric="exact", list_size=32,
                 selection="best_score", crc_poly=0x1021, crc_len=16):
        self.code_spec = code_spec
        self.detector = detector
        self.metric = metric
        self.list_size = list_size
        self.selection = selection
        self.crc_poly = crc_poly
        self.crc_len = crc_len

    def fit(self, X=None, y=None):
        """Validate parameters.  Nothing is learned from data."""
        spec = self.code_spec
        if spec is None:
            raise ValueError("code_spec is required")
        if isinstance(spec, str):
            spec = GlobalCodeSpec.from_text(spec)
        crc = Crc(self.crc_poly, self.crc_len) if self.selection == "crc" else None
        self.spec_ = spec
        self.metric_config_ = MetricConfig(
            self.detector, self.metric, self.list_size, self.selection, crc
        )
        return self

    def decode(self, y, channel):
        """Full :class:`~polarmimo.joint.JointDecodeResult` for one frame."""
        _check_fitted(self, "metric_config_")
        return joint_decode(y, channel, self.spec_, self.metric_config_)

    def predict(self, Y, channels):
        """Decode a stack of frames.

        Parameters
        ----------
        Y : array, shape (frames, N, n_rx) or (N, n_rx)
        channels : ChannelRealization or sequence of them

        Returns
        -------
        array of uint8, shape (frames, k) (or (k,) for a single frame)
        """
        _check_fitted(self, "metric_config_")
        Y = np.asarray(Y)
        single = Y.ndim == 2
        if isinstance(channels, ChannelRealization):
            channels = [channels]
        Y = Y[None] if single else Y
        if len(channels) != len(Y):
            raise ValueError("need one channel realization per frame")
        out = np.stack([self.decode(y, ch).info for y, ch in zip(Y, channels)])
        return out[0] if single else out
