"""Fast-fading Rayleigh MIMO channel with BPSK/QPSK mapping."""

from dataclasses import dataclass

import numpy as np

from ._validation import check_bits

__all__ = [
    "ChannelRealization",
    "TransmitFrame",
    "modulate",
    "demodulate_hard",
    "symbol_amplitude",
    "snr_db_to_n0",
    "sample_channel",
    "transmit",
]

_SQRT_HALF = np.sqrt(0.5)


def symbol_amplitude(m):
    """Per-dimension amplitude of a unit-energy BPSK (m=1) or QPSK (m=2) point."""
    if m == 1:
        return 1.0
    if m == 2:
        return _SQRT_HALF
    raise ValueError(f"unsupported bits per symbol: {m}")


def modulate(bits, m=2):
    """Map the last axis of ``bits`` to unit-energy symbols.

    BPSK sends ``1 - 2b``.  QPSK takes consecutive pairs ``(b_I, b_Q)`` and
    sends ``((1 - 2 b_I) + 1j (1 - 2 b_Q)) / sqrt(2)``.
    """
    b = check_bits(bits, "bits")
    amp = symbol_amplitude(m)
    if b.shape[-1] % m:
        raise ValueError("number of bits is not a multiple of bits per symbol")
    s = 1.0 - 2.0 * b
    if m == 1:
        return s.astype(np.complex128)
    pairs = s.reshape(b.shape[:-1] + (-1, 2))
    return amp * (pairs[..., 0] + 1j * pairs[..., 1])


def demodulate_hard(symbols, m=2):
    """Sign demapper, the inverse of :func:`modulate` on constellation points."""
    z = np.asarray(symbols)
    if m == 1:
        return (z.real < 0).astype(np.uint8)
    symbol_amplitude(m)
    out = np.stack([z.real < 0, z.imag < 0], axis=-1)
    return out.reshape(z.shape[:-1] + (-1,)).astype(np.uint8)


def snr_db_to_n0(snr_db):
    """Noise variance per complex receive dimension, ``N0 = 1 / SNR``."""
    return 10.0 ** (-np.asarray(snr_db, dtype=float) / 10.0)


@dataclass
class ChannelRealization:
    """Per-slot channel matrices ``(N, n_rx, n_tx)`` and noise level ``n0``."""

    matrices: np.ndarray
    n0: float

    def __post_init__(self):
        self.matrices = np.asarray(self.matrices, dtype=np.complex128)
        if self.matrices.ndim != 3:
            raise ValueError("matrices must have shape (slots, n_rx, n_tx)")
        n_slots, n_rx, n_tx = self.matrices.shape
        if n_slots < 1 or n_tx < 1 or n_rx < n_tx:
            raise ValueError("need at least one slot and n_rx >= n_tx >= 1")
        if not self.n0 > 0:
            raise ValueError("n0 must be positive")

    @property
    def n_slots(self):
        return self.matrices.shape[0]

    @property
    def n_rx(self):
        return self.matrices.shape[1]

    @property
    def n_tx(self):
        return self.matrices.shape[2]

    @property
    def snr_linear(self):
        return 1.0 / self.n0


@dataclass
class TransmitFrame:
    """Information bits, per-antenna codewords and their symbols.

    ``coded`` and ``symbols`` are indexed by physical antenna: row ``j - 1``
    belongs to antenna ``j``.
    """

    info: np.ndarray
    coded: np.ndarray
    symbols: np.ndarray


def sample_channel(rng, n_slots, n_rx, n_tx, n0=1.0):
    """Draw i.i.d. CN(0, 1) channel matrices for every slot."""
    if min(n_slots, n_rx, n_tx) < 1:
        raise ValueError("dimensions must be positive")
    shape = (n_slots, n_rx, n_tx)
    h = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    return ChannelRealization(h * _SQRT_HALF, n0)


def transmit(symbols, chan, rng):
    """Return ``y_i = H_i x_i + noise`` stacked as ``(N, n_rx)``.

    ``symbols`` is ``(n_tx, N)``, one row per antenna.
    """
    x = np.asarray(symbols, dtype=np.complex128)
    if x.shape != (chan.n_tx, chan.n_slots):
        raise ValueError(
            f"symbols must have shape {(chan.n_tx, chan.n_slots)}, got {x.shape}"
        )
    y = np.einsum("irt,ti->ir", chan.matrices, x)
    shape = y.shape
    sigma = np.sqrt(chan.n0 / 2.0)
    return y + sigma * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))
