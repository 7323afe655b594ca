"""Joint SIC detection and list decoding with one path metric for all antennas.

Antennas are processed from ``n_tx`` down to 1.  Every path owns its
interference-cancelled residuals, so the soft input for the next antenna
is computed per path, and a single list of ``L`` paths competes on the
accumulated score across antenna boundaries.

Score bookkeeping per antenna ``j`` and path:

* ``e_j`` -- the min-sum SCL penalty sum (correlation discrepancy),
* ``a_j = 1/2 sum |soft|`` and ``b_j = 1/2 sum |out|^2``, where ``out`` is
  the layer output (V-BLAST residual component or MMSE filter output).

With soft values scaled as in :func:`~polarmimo.detectors.bit_soft_values`,
``sum_j (e_j + a_j - b_j)`` differs from ``-1/2 sum_i ||R_i x_i - y~_i||^2``
(V-BLAST) or from ``-1/2 sum |z - g x|^2`` (MMSE) by a constant.  The
approximate variant ranks paths by ``sum_j e_j`` only.
"""

from dataclasses import dataclass, field

import numpy as np

from ._validation import check_bits
from .channel import modulate
from .crc import Crc
from .detectors import SicFrontEnd, bit_soft_values
from .polar import correlation_discrepancy, polar_transform, scl_decode_segment

__all__ = [
    "MetricConfig",
    "MetricTerms",
    "DecoderPath",
    "JointDecodeResult",
    "joint_decode",
    "metric_terms_vblast",
    "metric_terms_mmse",
    "candidate_terms",
    "path_metric",
    "resolve_cross_constraint",
]


@dataclass
class MetricConfig:
    """Receiver settings.

    Parameters
    ----------
    detector : {"vblast", "mmse"}
    variant : {"exact", "approx"}
    list_size : int
    selection : {"best_score", "crc"}
        ``"crc"`` returns the best path whose information bits pass ``crc``.
    crc : Crc, optional
    """

    detector: str = "vblast"
    variant: str = "exact"
    list_size: int = 32
    selection: str = "best_score"
    crc: Crc = None

    def __post_init__(self):
        if self.detector not in ("vblast", "mmse"):
            raise ValueError(f"unknown detector {self.detector!r}")
        if self.variant not in ("exact", "approx"):
            raise ValueError(f"unknown metric variant {self.variant!r}")
        if self.list_size < 1:
            raise ValueError("list_size must be >= 1")
        if self.selection not in ("best_score", "crc"):
            raise ValueError(f"unknown selection {self.selection!r}")
        if self.selection == "crc" and self.crc is None:
            self.crc = Crc()


@dataclass
class MetricTerms:
    """Per-antenna metric components, indexed by physical antenna - 1."""

    e: np.ndarray
    a: np.ndarray
    b: np.ndarray

    def total(self, variant="exact"):
        """Sum over antennas (last axis) of ``e`` or ``e + a - b``."""
        if variant == "approx":
            return np.sum(self.e, axis=-1)
        return np.sum(self.e + self.a - self.b, axis=-1)


@dataclass
class DecoderPath:
    """One surviving hypothesis.

    ``u`` is the global input vector in decoding order, ``symbols`` the
    decided symbols per physical antenna and ``residuals`` the per-slot
    observations with every decoded antenna cancelled except the last one
    (``antenna_cursor``).
    """

    score: float
    u: np.ndarray
    symbols: np.ndarray
    residuals: np.ndarray
    antenna_cursor: int
    terms: MetricTerms


@dataclass
class JointDecodeResult:
    info: np.ndarray
    u: np.ndarray
    codewords: np.ndarray
    score: float
    rank: int
    crc_ok: bool = None
    terms: MetricTerms = None
    paths: list = field(default_factory=list, repr=False)

    def diagnostics(self):
        """Plain-type summary: selected rank, CRC outcome, per-antenna terms."""
        return {
            "rank": int(self.rank),
            "crc_ok": None if self.crc_ok is None else bool(self.crc_ok),
            "score": float(self.score),
            "segment_scores": [float(v) for v in self.terms.e],
            "a_terms": [float(v) for v in self.terms.a],
            "b_terms": [float(v) for v in self.terms.b],
        }


def resolve_cross_constraint(u, sources, n_decided=None):
    """Parity of ``u`` over ``sources``; every source must already be decided."""
    sources = list(sources)
    if not sources:
        return 0
    u = np.asarray(u)
    limit = u.shape[-1] if n_decided is None else n_decided
    if max(sources) >= limit:
        raise ValueError("constraint refers to an undecided symbol")
    parity = np.bitwise_xor.reduce(u[..., sources], axis=-1)
    return int(parity) if parity.ndim == 0 else parity


def _bits_per_symbol(spec, n_slots):
    m, rem = divmod(spec.length, n_slots)
    if rem or m not in (1, 2):
        raise ValueError("code length must be 1 or 2 bits per slot")
    return m


def joint_decode(y, chan, spec, cfg, return_paths=False):
    """Decode one frame.

    Parameters
    ----------
    y : array, shape (N, n_rx)
    chan : ChannelRealization
    spec : GlobalCodeSpec
    cfg : MetricConfig
    return_paths : bool
        Keep every final survivor in ``result.paths``.

    Returns
    -------
    JointDecodeResult
    """
    y = np.asarray(y, dtype=np.complex128)
    if y.shape != (chan.n_slots, chan.n_rx):
        raise ValueError(f"y must have shape {(chan.n_slots, chan.n_rx)}")
    if spec.n_antennas != chan.n_tx:
        raise ValueError("code and channel disagree on the number of antennas")
    m = _bits_per_symbol(spec, chan.n_slots)
    nt, length, n_slots = chan.n_tx, spec.length, chan.n_slots
    exact = cfg.variant == "exact"

    fe = SicFrontEnd(cfg.detector, chan.matrices, y, chan.n0)
    residual = fe.initial[None]
    scores = np.zeros(1)
    u = np.zeros((1, spec.total_length), dtype=np.uint8)
    sym = np.zeros((1, nt, n_slots), dtype=np.complex128)
    e_t, a_t, b_t = (np.zeros((1, nt)) for _ in range(3))

    for b in range(nt):
        col = nt - 1 - b
        lo = b * length
        if b:
            residual = fe.cancel(residual, col + 1, sym[:, col + 1, :])
        s_i, s_q, out = fe.statistics(residual, col)
        soft = bit_soft_values(s_i, s_q, m)
        if exact:
            a_t[:, col] = 0.5 * np.abs(soft).sum(axis=1)
            b_t[:, col] = 0.5 * (np.abs(out) ** 2).sum(axis=1)
            # known before the segment starts, so it also steers pruning
            # inside this antenna's segment
            scores = scores + a_t[:, col] - b_t[:, col]

        ext = spec.cross_bits(b, u[:, :lo])

        res = scl_decode_segment(soft, spec.block_spec(b), cfg.list_size, scores, ext)
        par = res.origin
        u = u[par]
        u[:, lo:lo + length] = res.u
        sym = sym[par]
        sym[:, col, :] = modulate(res.codewords, m)
        residual = residual[par]
        e_t, a_t, b_t = e_t[par], a_t[par], b_t[par]
        e_t[:, col] = res.scores - scores[par]
        scores = res.scores

    info = u[:, spec.info_positions]
    pick, crc_ok = 0, None
    if cfg.selection == "crc":
        passed = cfg.crc.check(info)
        hits = np.flatnonzero(passed)
        crc_ok = bool(hits.size)
        pick = int(hits[0]) if hits.size else 0

    blocks = u.reshape(len(u), nt, length)
    cw = polar_transform(blocks[pick])[::-1]
    result = JointDecodeResult(
        info=info[pick],
        u=u[pick],
        codewords=cw,
        score=float(scores[pick]),
        rank=pick,
        crc_ok=crc_ok,
        terms=MetricTerms(e_t[pick], a_t[pick], b_t[pick]),
    )
    if return_paths:
        result.paths = [
            DecoderPath(
                float(scores[k]), u[k], sym[k], residual[k], 1,
                MetricTerms(e_t[k], a_t[k], b_t[k]),
            )
            for k in range(len(scores))
        ]
    return result


def _layer_terms(soft, out, codeword):
    e = float(correlation_discrepancy(codeword, soft))
    a = 0.5 * float(np.abs(soft).sum())
    b = 0.5 * float((np.abs(out) ** 2).sum())
    return e, a, b


def metric_terms_vblast(residual, factors, codeword, antenna, m=2):
    """``(e, a, b)`` for antenna ``antenna`` (1-based) under V-BLAST.

    ``residual`` is ``Q^H y`` per slot with every antenna above ``antenna``
    already cancelled; ``codeword`` is that antenna's decided codeword.
    """
    col = antenna - 1
    out = residual[..., col]
    g = np.where(factors.deficient[..., col], 0.0, factors.diag[..., col])
    soft = bit_soft_values(g * out.real, g * out.imag, m)
    return MetricTerms(*(np.array([v]) for v in _layer_terms(soft, out, check_bits(codeword))))


def metric_terms_mmse(residual, filt, codeword, antenna, m=2):
    """MMSE counterpart of :func:`metric_terms_vblast`; ``residual`` is
    ``y`` with the antennas above ``antenna`` cancelled."""
    col = antenna - 1
    out = np.einsum("...ir,...ir->...i", filt.w_h[..., col, :], residual)
    g = filt.gains[..., col]
    soft = bit_soft_values(g * out.real, g * out.imag, m)
    return MetricTerms(*(np.array([v]) for v in _layer_terms(soft, out, check_bits(codeword))))


def candidate_terms(codewords, y, chan, detector, m=2):
    """Metric terms of complete candidates, evaluated from scratch.

    ``codewords`` is ``(..., n_tx, length)`` with row ``j - 1`` for antenna
    ``j``; a stack of candidates is evaluated in one pass.
    """
    codewords = check_bits(codewords, "codewords")
    nt = chan.n_tx
    fe = SicFrontEnd(detector, chan.matrices, y, chan.n0)
    x = modulate(codewords, m)
    residual = fe.initial
    lead = codewords.shape[:-2]
    e, a, b = (np.zeros(lead + (nt,)) for _ in range(3))
    for col in range(nt - 1, -1, -1):
        if col < nt - 1:
            residual = fe.cancel(residual, col + 1, x[..., col + 1, :])
        s_i, s_q, out = fe.statistics(residual, col)
        soft = bit_soft_values(s_i, s_q, m)
        e[..., col] = correlation_discrepancy(codewords[..., col, :], soft)
        a[..., col] = 0.5 * np.abs(soft).sum(axis=-1)
        b[..., col] = 0.5 * (np.abs(out) ** 2).sum(axis=-1)
    return MetricTerms(e, a, b)


def path_metric(codewords, y, chan, detector, variant="exact", m=2):
    """``P(X)`` of complete candidates (or its approximation)."""
    return candidate_terms(codewords, y, chan, detector, m).total(variant)
